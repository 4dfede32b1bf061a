//! Forward warping by bilinear splatting.
//!
//! Every warp here scatters source pixels to (sub-pixel) target positions and
//! resolves collisions with a two-pass soft z-test: pass one finds the highest
//! priority (inverse depth, nearer is larger) reaching each target pixel, pass
//! two accumulates only the splats within a relative `z_epsilon` of it. Pixels
//! whose accepted weight does not exceed `coverage_min` are left black and
//! reported as holes in the coverage mask.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imagecore::{
    ensure_same_dims, BinaryMask, CameraIntrinsics, DepthConvention, FlowField, ImageRgb,
    RigidPose, ScalarMap,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SplatConfig {
    pub z_epsilon: f64,
    pub coverage_min: f64,
    /// Source rows per parallel tile. `None` processes the image as one tile.
    /// Results are bitwise reproducible for a fixed value.
    pub tile_rows: Option<usize>,
}

impl Default for SplatConfig {
    fn default() -> Self {
        SplatConfig {
            z_epsilon: 1e-3,
            coverage_min: 0.25,
            tile_rows: None,
        }
    }
}

impl SplatConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.z_epsilon >= 0.0 && self.z_epsilon.is_finite()) {
            return Err(Error::param("z_epsilon", "must be finite and non-negative"));
        }
        if !(self.coverage_min > 0.0 && self.coverage_min <= 1.0) {
            return Err(Error::param("coverage_min", "must lie in (0, 1]"));
        }
        if self.tile_rows == Some(0) {
            return Err(Error::param("tile_rows", "must be positive"));
        }
        Ok(())
    }
}

/// A warped image and the pixels that received enough splat weight.
#[derive(Debug, Clone, PartialEq)]
pub struct Warped {
    pub image: ImageRgb,
    pub coverage: BinaryMask,
}

/// Where one source pixel lands and with which priority.
#[derive(Clone, Copy)]
struct Splat {
    tx: f64,
    ty: f64,
    priority: f64,
}

/// In-bounds bilinear footprint of a target position, zero-weight taps dropped.
fn footprint(tx: f64, ty: f64, w: usize, h: usize) -> impl Iterator<Item = (usize, f64)> {
    let x0 = tx.floor();
    let y0 = ty.floor();
    let fx = tx - x0;
    let fy = ty - y0;
    let (x0, y0) = (x0 as i64, y0 as i64);
    [
        (x0, y0, (1.0 - fx) * (1.0 - fy)),
        (x0 + 1, y0, fx * (1.0 - fy)),
        (x0, y0 + 1, (1.0 - fx) * fy),
        (x0 + 1, y0 + 1, fx * fy),
    ]
    .into_iter()
    .filter_map(move |(x, y, wgt)| {
        (wgt != 0.0 && x >= 0 && y >= 0 && x < w as i64 && y < h as i64)
            .then(|| (y as usize * w + x as usize, wgt))
    })
}

fn tiles(h: usize, cfg: &SplatConfig) -> Vec<std::ops::Range<usize>> {
    let rows = cfg.tile_rows.unwrap_or(h).max(1);
    (0..h).step_by(rows).map(|s| s..(s + rows).min(h)).collect()
}

/// Core splatter. `place` maps a source pixel to its splat (or `None` to drop
/// it); `prioritized` selects the two-pass occlusion test over a plain
/// weighted average.
fn splat<F>(img: &ImageRgb, prioritized: bool, cfg: &SplatConfig, place: F) -> Result<Warped>
where
    F: Fn(usize, usize) -> Option<Splat> + Sync,
{
    cfg.validate()?;
    let (w, h) = (img.width(), img.height());
    let n = w * h;
    let tiles = tiles(h, cfg);

    let max_prio = if prioritized {
        let partial: Vec<Vec<f64>> = tiles
            .par_iter()
            .map(|rows| {
                let mut best = vec![f64::NEG_INFINITY; n];
                for y in rows.clone() {
                    for x in 0..w {
                        if let Some(s) = place(x, y) {
                            for (t, _) in footprint(s.tx, s.ty, w, h) {
                                best[t] = best[t].max(s.priority);
                            }
                        }
                    }
                }
                best
            })
            .collect();
        let mut best = vec![f64::NEG_INFINITY; n];
        for p in &partial {
            for (b, v) in best.iter_mut().zip(p) {
                *b = b.max(*v);
            }
        }
        Some(best)
    } else {
        None
    };

    let accept = |t: usize, prio: f64| match &max_prio {
        Some(best) => prio >= (1.0 - cfg.z_epsilon) * best[t],
        None => true,
    };
    let partial: Vec<(Vec<f64>, Vec<f64>)> = tiles
        .par_iter()
        .map(|rows| {
            let mut color = vec![0.0; n * 3];
            let mut weight = vec![0.0; n];
            for y in rows.clone() {
                for x in 0..w {
                    let Some(s) = place(x, y) else { continue };
                    let c = img.pixel(x, y);
                    for (t, wgt) in footprint(s.tx, s.ty, w, h) {
                        if accept(t, s.priority) {
                            weight[t] += wgt;
                            for k in 0..3 {
                                color[t * 3 + k] += wgt * c[k];
                            }
                        }
                    }
                }
            }
            (color, weight)
        })
        .collect();
    let mut parts = partial.into_iter();
    let (mut color, mut weight) = parts.next().unwrap_or_else(|| (vec![0.0; n * 3], vec![0.0; n]));
    for (c, wt) in parts {
        color.iter_mut().zip(&c).for_each(|(a, b)| *a += b);
        weight.iter_mut().zip(&wt).for_each(|(a, b)| *a += b);
    }

    let mut coverage = BinaryMask::empty(w, h);
    let mut data = vec![0.0; n * 3];
    for t in 0..n {
        if weight[t] > cfg.coverage_min {
            coverage.set(t % w, t / w, true);
            for k in 0..3 {
                data[t * 3 + k] = (color[t * 3 + k] / weight[t]).clamp(0.0, 1.0);
            }
        }
    }
    Ok(Warped {
        image: ImageRgb::from_vec_unchecked(w, h, data),
        coverage,
    })
}

/// `fB / d` for metric depth. Inverse depth should be scaled directly with
/// [`inverse_depth_to_disparity`].
pub fn depth_to_disparity(d: &ScalarMap, f_b: f64) -> Result<ScalarMap> {
    d.require(DepthConvention::MetricDepth)?;
    if !(f_b > 0.0 && f_b.is_finite()) {
        return Err(Error::param("fB", "focal length times baseline must be positive"));
    }
    if let Some(i) = d.data().iter().position(|v| *v <= 0.0) {
        return Err(Error::InvalidValue(format!(
            "depth {} at index {i} is not positive",
            d.data()[i]
        )));
    }
    Ok(d.map_unchecked(DepthConvention::Unitless, |v| f_b / v))
}

/// Disparity proportional to inverse depth: `scale · d`.
pub fn inverse_depth_to_disparity(d: &ScalarMap, scale: f64) -> Result<ScalarMap> {
    d.require(DepthConvention::InverseDepth)?;
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::param("scale", "must be finite and non-negative"));
    }
    Ok(d.map_unchecked(DepthConvention::Unitless, |v| scale * v))
}

/// Renders the right view of a stereo pair: source `(x, y)` lands on
/// `(x − disparity, y)`. `zbuf` is the per-pixel priority, larger is nearer.
pub fn forward_warp_disparity(
    img: &ImageRgb,
    disparity: &ScalarMap,
    zbuf: &ScalarMap,
    cfg: &SplatConfig,
) -> Result<Warped> {
    let dims = (img.width(), img.height());
    ensure_same_dims("forward_warp_disparity", dims, disparity.dims())?;
    ensure_same_dims("forward_warp_disparity", dims, zbuf.dims())?;
    splat(img, true, cfg, |x, y| {
        Some(Splat {
            tx: x as f64 - disparity.get(x, y),
            ty: y as f64,
            priority: zbuf.get(x, y),
        })
    })
}

/// Source `(x, y)` lands on `(x, y) + flow(x, y)`. Without a priority map all
/// contributions are averaged.
pub fn forward_warp_flow(
    img: &ImageRgb,
    flow: &FlowField,
    priority: Option<&ScalarMap>,
    cfg: &SplatConfig,
) -> Result<Warped> {
    let dims = (img.width(), img.height());
    ensure_same_dims("forward_warp_flow", dims, flow.dims())?;
    if let Some(p) = priority {
        ensure_same_dims("forward_warp_flow priority", dims, p.dims())?;
    }
    splat(img, priority.is_some(), cfg, |x, y| {
        let (u, v) = flow.get(x, y);
        Some(Splat {
            tx: x as f64 + u,
            ty: y as f64 + v,
            priority: priority.map_or(0.0, |p| p.get(x, y)),
        })
    })
}

/// Rounds coordinates that are integers up to projection round-off.
fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < 1e-9 {
        r
    } else {
        v
    }
}

/// Point-cloud render: unproject with `k`, move by `pose`, project with
/// `k_out`. Points at or behind the new camera plane are dropped.
pub fn reproject_warp(
    img: &ImageRgb,
    depth: &ScalarMap,
    k: &CameraIntrinsics,
    pose: &RigidPose,
    k_out: &CameraIntrinsics,
    cfg: &SplatConfig,
) -> Result<Warped> {
    ensure_same_dims("reproject_warp", (img.width(), img.height()), depth.dims())?;
    depth.require(DepthConvention::MetricDepth)?;
    if let Some(i) = depth.data().iter().position(|v| *v <= 0.0) {
        return Err(Error::InvalidValue(format!(
            "depth {} at index {i} is not positive",
            depth.data()[i]
        )));
    }
    splat(img, true, cfg, |x, y| {
        let p = k.unproject(x as f64, y as f64) * depth.get(x, y);
        let q = pose.transform(&p);
        if q.z <= 0.0 {
            return None;
        }
        let (u, v) = k_out.project(&q);
        Some(Splat {
            tx: snap(u),
            ty: snap(v),
            priority: 1.0 / q.z,
        })
    })
}
