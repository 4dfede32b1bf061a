//! Scores a predicted depth map against ground truth with the zero-shot
//! depth metrics and the boundary metrics.

use softedge::metrics::{absrel_delta1, dbe, depth_edges, edge_pr};
use softedge::{BinaryMask, DepthConvention, ScalarMap};

fn main() -> softedge::Result<()> {
    let (w, h) = (64, 64);
    let gt = ScalarMap::from_fn(w, h, DepthConvention::MetricDepth, |x, y| if x > 30 && y > 20 { 2.0 } else { 6.0 })?;
    // Affine in the truth with a boundary one pixel off, as a relative-depth network might produce.
    let pred = ScalarMap::from_fn(w, h, DepthConvention::Unitless, |x, y| if x > 31 && y > 20 { 0.1 } else { 0.5 })?;

    let valid = BinaryMask::full(w, h);
    let (absrel, delta1) = absrel_delta1(&pred, &gt, &valid, true)?;
    println!("aligned absrel {absrel:.2}%, delta1 {delta1:.1}%");

    let (pe, ge) = (depth_edges(&pred, 0.1), depth_edges(&gt, 0.1));
    let (acc, comp) = dbe(&pe, &ge, 10.0)?;
    println!("dbe accuracy {acc:.3} px, completeness {comp:.3} px");
    for tol in [0.0, 1.0, 2.0] {
        let (ep, er) = edge_pr(&pe, &ge, tol)?;
        println!("tolerance {tol}: edge precision {ep:.1}%, recall {er:.1}%");
    }
    Ok(())
}
