use softedge::curation::Rng;
use softedge::losses::{evaluate_loss, loss_gradient, LossKind, LossParams};
use softedge::{BinaryMask, DepthConvention, ScalarMap};

fn main() -> softedge::Result<()> {
    let (w, h) = (32, 32);
    let mut rng = Rng::new(5);
    let gt = ScalarMap::from_fn(w, h, DepthConvention::Unitless, |x, y| if x + y > 32 { 1.0 } else { 0.2 })?;
    let pred = ScalarMap::from_fn(w, h, DepthConvention::Unitless, |x, y| gt.get(x, y) + rng.uniform(-0.1, 0.1))?;
    let params = LossParams {
        mask: Some(BinaryMask::from_fn(w, h, |x, y| (x + y).abs_diff(32) < 4)),
        ..LossParams::default()
    };

    for kind in LossKind::ALL {
        let value = evaluate_loss(kind, &pred, &gt, &params)?;
        let grad = loss_gradient(kind, &pred, &gt, &params)?;
        let norm = grad.data().iter().map(|g| g * g).sum::<f64>().sqrt();

        // One gradient step should lower the loss.
        let step = 0.01 / norm.max(1e-12);
        let moved = ScalarMap::from_fn(w, h, DepthConvention::Unitless, |x, y| pred.get(x, y) - step * grad.get(x, y))?;
        let next = evaluate_loss(kind, &moved, &gt, &params)?;
        println!("{kind:?}: {value:.5} -> {next:.5} (|grad| {norm:.4})");
    }
    Ok(())
}
