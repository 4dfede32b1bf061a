//! Builds a few depth-refinement training pairs from a synthetic matte and
//! prints what the curation step sampled for each of them.

use softedge::curation::{make_depth_training_pair, DepthPairParams};
use softedge::mapio::write_manifest;
use softedge::{DepthConvention, ScalarMap};

fn main() -> softedge::Result<()> {
    let (w, h) = (96, 64);
    let alpha = ScalarMap::from_fn(w, h, DepthConvention::Unitless, |x, y| {
        let r = ((x as f64 - 48.0).powi(2) + (y as f64 - 32.0).powi(2)).sqrt();
        ((22.0 - r) / 6.0).clamp(0.0, 1.0)
    })?;
    // Inverse depth: the foreground is nearer, so larger.
    let fg = ScalarMap::from_fn(w, h, DepthConvention::InverseDepth, |x, _| 0.8 + 0.002 * x as f64)?;
    let bg = ScalarMap::filled(w, h, 0.25, DepthConvention::InverseDepth)?;

    for seed in 0..4 {
        let pair = make_depth_training_pair(&alpha, &fg, &bg, &DepthPairParams::new(2.0, seed))?;
        let p = &pair.manifest.params;
        println!(
            "seed {seed}: threshold {:.3}, blur sigma {:.2}, {} label pixels, {} boundary pixels",
            p["alpha_th"],
            p["sigma_blur"],
            pair.m_gt.count(),
            pair.m_soft.count()
        );
        println!("  {}", write_manifest(&pair.manifest)?);
    }
    Ok(())
}
