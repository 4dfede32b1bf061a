//! Left view plus inverse depth in, right view and a red-cyan anaglyph out.
//! Writes PPM files into the system temp directory.

use std::fs;

use softedge::mapio::{write_pgm_mask, write_ppm};
use softedge::paintfuse::anaglyph;
use softedge::pipeline::{stereo_pipeline, DisparityModel, StereoOptions};
use softedge::{DepthConvention, ImageRgb, ScalarMap};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (w, h) = (128, 96);
    let near = |x: usize, y: usize| (x as f64 - 64.0).hypot(y as f64 - 48.0) < 24.0;
    let left = ImageRgb::from_fn(w, h, |x, y| {
        if near(x, y) {
            [0.85, 0.4, 0.2]
        } else {
            let check = ((x / 8) + (y / 8)) % 2 == 0;
            if check { [0.2, 0.3, 0.5] } else { [0.6, 0.65, 0.7] }
        }
    })?;
    let depth = ScalarMap::from_fn(w, h, DepthConvention::InverseDepth, |x, y| if near(x, y) { 1.0 } else { 0.2 })?;

    let out = stereo_pipeline(&left, &depth, &StereoOptions::new(DisparityModel::InverseScale { scale: 8.0 }))?;
    let holes = w * h - out.coverage.count();
    println!("{holes} disoccluded pixels filled by the painter");

    let dir = std::env::temp_dir().join("softedge-stereo");
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("left.ppm"), write_ppm(&left))?;
    fs::write(dir.join("right.ppm"), write_ppm(&out.right))?;
    fs::write(dir.join("coverage.pgm"), write_pgm_mask(&out.coverage))?;
    fs::write(dir.join("anaglyph.ppm"), write_ppm(&anaglyph(&left, &out.right)?))?;
    println!("wrote {}", dir.display());
    Ok(())
}
