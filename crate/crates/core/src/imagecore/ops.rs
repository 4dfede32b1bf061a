use rayon::prelude::*;

use super::{ensure_same_dims, BinaryMask, DepthConvention, ScalarMap};
use crate::error::{Error, Result};

const SOBEL_X: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];
const SOBEL_Y: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Sobel responses `(gx, gy)` of a row-major plane with replicated borders.
pub(crate) fn sobel_gradients(data: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    if w == 0 || h == 0 {
        return (gx, gy);
    }
    gx.par_chunks_mut(w)
        .zip(gy.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, (rx, ry))| {
            let up = clamp_index(y as isize - 1, h) * w;
            let mid = y * w;
            let down = clamp_index(y as isize + 1, h) * w;
            for x in 0..w {
                let l = clamp_index(x as isize - 1, w);
                let r = clamp_index(x as isize + 1, w);
                let at = |row: usize, col: usize| data[row + col];
                let sx = (at(up, r) + 2.0 * at(mid, r) + at(down, r)) - (at(up, l) + 2.0 * at(mid, l) + at(down, l));
                let sy = (at(down, l) + 2.0 * at(down, x) + at(down, r)) - (at(up, l) + 2.0 * at(up, x) + at(up, r));
                rx[x] = sx;
                ry[x] = sy;
            }
        });
    (gx, gy)
}

/// Adjoint of [`sobel_gradients`]: maps upstream sensitivities of `(gx, gy)`
/// back onto the input plane.
pub(crate) fn sobel_gradients_adjoint(bar_x: &[f64], bar_y: &[f64], w: usize, h: usize) -> Vec<f64> {
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let bx = bar_x[y * w + x];
            let by = bar_y[y * w + x];
            if bx == 0.0 && by == 0.0 {
                continue;
            }
            for ky in 0..3 {
                let yy = clamp_index(y as isize + ky as isize - 1, h);
                for kx in 0..3 {
                    let xx = clamp_index(x as isize + kx as isize - 1, w);
                    out[yy * w + xx] += SOBEL_X[ky][kx] * bx + SOBEL_Y[ky][kx] * by;
                }
            }
        }
    }
    out
}

/// Sobel gradient magnitude `sqrt(gx² + gy²)` with replicated borders.
pub fn sobel_edges(d: &ScalarMap) -> ScalarMap {
    let (gx, gy) = sobel_gradients(d.data(), d.width(), d.height());
    let data = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    ScalarMap::from_vec_unchecked(d.width(), d.height(), data, DepthConvention::Unitless)
}

/// Normalized 1-D Gaussian taps with radius `ceil(3σ)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::param("sigma", format!("must be positive, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    Ok(taps)
}

/// Weighted mean of a window of normalized taps, written as the centre value
/// plus weighted deviations from it: a uniform window returns its value
/// exactly, and the result never leaves the window's range.
#[inline]
fn window_mean(taps: &[f64], centre: f64, mut sample: impl FnMut(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    let mut lo = centre;
    let mut hi = centre;
    for (i, t) in taps.iter().enumerate() {
        let v = sample(i);
        lo = lo.min(v);
        hi = hi.max(v);
        acc += t * (v - centre);
    }
    (centre + acc).clamp(lo, hi)
}

/// Separable correlation with replicated borders, rows in parallel.
pub(crate) fn separable_filter(data: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let r = (taps.len() / 2) as isize;
    let mut tmp = vec![0.0; w * h];
    if w == 0 || h == 0 {
        return tmp;
    }
    tmp.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let src = &data[y * w..(y + 1) * w];
        for (x, out) in row.iter_mut().enumerate() {
            *out = window_mean(taps, src[x], |i| src[clamp_index(x as isize + i as isize - r, w)]);
        }
    });
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            *o = window_mean(taps, tmp[y * w + x], |i| {
                tmp[clamp_index(y as isize + i as isize - r, h) * w + x]
            });
        }
    });
    out
}

/// Gaussian blur with replicated borders. Keeps the input's convention.
pub fn gaussian_blur(m: &ScalarMap, sigma: f64) -> Result<ScalarMap> {
    let taps = gaussian_kernel(sigma)?;
    let data = separable_filter(m.data(), m.width(), m.height(), &taps);
    Ok(ScalarMap::from_vec_unchecked(
        m.width(),
        m.height(),
        data,
        m.convention(),
    ))
}

/// `{p | α(p) > alpha_th}`.
pub fn threshold_above(alpha: &ScalarMap, alpha_th: f64) -> BinaryMask {
    let data = alpha.data().iter().map(|a| *a > alpha_th).collect();
    BinaryMask::new(alpha.width(), alpha.height(), data).expect("shape preserved")
}

/// `{p | alpha_min < α(p) < alpha_max}`.
pub fn threshold_band(alpha: &ScalarMap, alpha_min: f64, alpha_max: f64) -> Result<BinaryMask> {
    if !(alpha_min < alpha_max) {
        return Err(Error::param(
            "alpha band",
            format!("alpha_min {alpha_min} must be below alpha_max {alpha_max}"),
        ));
    }
    let data = alpha
        .data()
        .iter()
        .map(|a| alpha_min < *a && *a < alpha_max)
        .collect();
    Ok(BinaryMask::new(alpha.width(), alpha.height(), data).expect("shape preserved"))
}

/// Least-squares scale and shift mapping a prediction onto a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub scale: f64,
    pub shift: f64,
    /// `scale · pred + shift` over the whole map (unitless: may be negative).
    pub aligned: ScalarMap,
}

/// Closed-form minimizer of `Σ_valid (s·pred + t − gt)²`.
pub fn scale_shift_align(pred: &ScalarMap, gt: &ScalarMap, valid: &BinaryMask) -> Result<Alignment> {
    ensure_same_dims("scale_shift_align", pred.dims(), gt.dims())?;
    ensure_same_dims("scale_shift_align", pred.dims(), valid.dims())?;
    let idx: Vec<usize> = (0..valid.data().len()).filter(|&i| valid.data()[i]).collect();
    if idx.len() < 2 {
        return Err(Error::DegenerateFit("fewer than two valid pixels"));
    }
    let p = pred.data();
    let g = gt.data();
    let first = p[idx[0]];
    if idx.iter().all(|&i| p[i] == first) {
        return Err(Error::DegenerateFit("prediction is constant over the valid set"));
    }
    let n = idx.len() as f64;
    let mean_p = idx.iter().map(|&i| p[i]).sum::<f64>() / n;
    let mean_g = idx.iter().map(|&i| g[i]).sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for &i in &idx {
        let dp = p[i] - mean_p;
        sxy += dp * (g[i] - mean_g);
        sxx += dp * dp;
    }
    if !(sxx > 0.0) {
        return Err(Error::DegenerateFit("prediction variance vanishes"));
    }
    let scale = sxy / sxx;
    let shift = mean_g - scale * mean_p;
    let aligned = pred.map_unchecked(DepthConvention::Unitless, |v| scale * v + shift);
    if aligned.data().iter().any(|v| !v.is_finite()) {
        return Err(Error::DegenerateFit("alignment overflowed"));
    }
    Ok(Alignment {
        scale,
        shift,
        aligned,
    })
}

/// Exact minimum and maximum of `m` over the set bits of `mask`.
pub fn minmax_over_mask(m: &ScalarMap, mask: &BinaryMask) -> Result<(f64, f64)> {
    ensure_same_dims("minmax_over_mask", m.dims(), mask.dims())?;
    m.data()
        .iter()
        .zip(mask.data())
        .filter(|(_, b)| **b)
        .map(|(v, _)| *v)
        .fold(None, |acc: Option<(f64, f64)>, v| match acc {
            None => Some((v, v)),
            Some((lo, hi)) => Some((lo.min(v), hi.max(v))),
        })
        .ok_or(Error::EmptySelection("mask has no set pixels"))
}
