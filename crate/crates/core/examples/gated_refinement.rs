//! Refines a blurred depth map near a soft boundary with the oracle gate and
//! compares boundary error before and after.

use softedge::curation::{make_depth_training_pair, DepthPairParams};
use softedge::metrics::{rmse, RmseScale};
use softedge::refine::{gated_residual, oracle_gate_and_residual, refinement_region};
use softedge::{DepthConvention, ScalarMap};

fn main() -> softedge::Result<()> {
    let (w, h) = (80, 60);
    let alpha = ScalarMap::from_fn(w, h, DepthConvention::Unitless, |x, _| ((x as f64 - 36.0) / 8.0).clamp(0.0, 1.0))?;
    let fg = ScalarMap::filled(w, h, 1.0, DepthConvention::InverseDepth)?;
    let bg = ScalarMap::filled(w, h, 0.3, DepthConvention::InverseDepth)?;
    let pair = make_depth_training_pair(&alpha, &fg, &bg, &DepthPairParams::new(1.5, 11))?;

    let (gate, residual) = oracle_gate_and_residual(&alpha, &pair.d_gt, 0.02, 0.98)?;
    let refined = gated_residual(&pair.d_in, &residual, &gate)?;
    let region = refinement_region(&gate, 1.0);

    let before = rmse(&pair.d_in, &pair.d_gt, Some(&region), RmseScale::Unit)?;
    let after = rmse(&refined, &pair.d_gt, Some(&region), RmseScale::Unit)?;
    println!("{} pixels refined", region.count());
    println!("boundary rmse {before:.4} -> {after:.4}");
    Ok(())
}
