//! Renders a small sideways camera move by reprojecting a textured plane
//! with a box in front of it.

use softedge::warp::{reproject_warp, SplatConfig};
use softedge::{CameraIntrinsics, DepthConvention, ImageRgb, RigidPose, ScalarMap};

fn main() -> softedge::Result<()> {
    let (w, h) = (96, 72);
    let in_box = |x: usize, y: usize| (36..60).contains(&x) && (24..48).contains(&y);
    let img = ImageRgb::from_fn(w, h, |x, y| {
        if in_box(x, y) { [0.9, 0.8, 0.1] } else { [0.1 + 0.008 * x as f64, 0.2, 0.1 + 0.01 * y as f64] }
    })?;
    let depth = ScalarMap::from_fn(w, h, DepthConvention::MetricDepth, |x, y| if in_box(x, y) { 2.0 } else { 5.0 })?;
    let k = CameraIntrinsics::new(80.0, 80.0, 48.0, 36.0)?;

    for tx in [0.0, 0.05, 0.1, 0.2] {
        let pose = RigidPose::from_translation([-tx, 0.0, 0.0])?;
        let out = reproject_warp(&img, &depth, &k, &pose, &k, &SplatConfig::default())?;
        println!("baseline {tx:.2}: {} of {} pixels covered", out.coverage.count(), w * h);
    }
    Ok(())
}
