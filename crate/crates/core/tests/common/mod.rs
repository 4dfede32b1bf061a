//! Fixture generators and naive reference implementations shared by the
//! integration tests. The references are written for clarity, directly from
//! the textbook definitions, and never call the library routine they check.

#![allow(dead_code)]

use softedge::curation::Rng;
use softedge::{BinaryMask, DepthConvention, ImageRgb, ScalarMap};

pub fn rand_map(rng: &mut Rng, w: usize, h: usize, lo: f64, hi: f64, conv: DepthConvention) -> ScalarMap {
    let data = (0..w * h).map(|_| rng.uniform(lo, hi)).collect();
    ScalarMap::new(w, h, data, conv).unwrap()
}

pub fn rand_unit(rng: &mut Rng, w: usize, h: usize) -> ScalarMap {
    rand_map(rng, w, h, 0.0, 1.0, DepthConvention::Unitless)
}

pub fn rand_image(rng: &mut Rng, w: usize, h: usize) -> ImageRgb {
    let data = (0..w * h * 3).map(|_| rng.next_f64()).collect();
    ImageRgb::new(w, h, data).unwrap()
}

pub fn rand_mask(rng: &mut Rng, w: usize, h: usize, p: f64) -> BinaryMask {
    BinaryMask::from_fn(w, h, |_, _| rng.next_f64() < p)
}

pub fn rand_dims(rng: &mut Rng, lo: usize, hi: usize) -> (usize, usize) {
    let pick = |rng: &mut Rng| lo + (rng.next_u64() % (hi - lo + 1) as u64) as usize;
    (pick(rng), pick(rng))
}

/// Procedural soft matte: a disc with a wavy rim and a linear falloff.
pub fn disc_matte(rng: &mut Rng, w: usize, h: usize) -> ScalarMap {
    let (wf, hf) = (w as f64, h as f64);
    let cx = rng.uniform(0.35 * wf, 0.65 * wf);
    let cy = rng.uniform(0.35 * hf, 0.65 * hf);
    let r0 = rng.uniform(0.15, 0.3) * wf.min(hf);
    let soft = rng.uniform(1.0, 6.0);
    let phase = rng.uniform(0.0, 6.0);
    ScalarMap::from_fn(w, h, DepthConvention::Unitless, |x, y| {
        let (dx, dy) = (x as f64 - cx, y as f64 - cy);
        let rim = r0 + 1.5 * (5.0 * dy.atan2(dx) + phase).sin();
        ((rim + soft / 2.0 - dx.hypot(dy)) / soft).clamp(0.0, 1.0)
    })
    .unwrap()
}

pub fn luma(img: &ImageRgb) -> Vec<f64> {
    img.data()
        .chunks_exact(3)
        .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
        .collect()
}

pub fn naive_mse(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]).powi(2);
    }
    s / a.len() as f64
}

pub fn naive_psnr(a: &ImageRgb, b: &ImageRgb) -> f64 {
    let mse = naive_mse(a.data(), b.data());
    if mse == 0.0 {
        99.0
    } else {
        (-10.0 * mse.log10()).min(99.0)
    }
}

pub fn naive_rmse_255(a: &ImageRgb, b: &ImageRgb, mask: Option<&BinaryMask>) -> f64 {
    let (w, h) = (a.width(), a.height());
    let mut s = 0.0;
    let mut n = 0usize;
    for y in 0..h {
        for x in 0..w {
            if mask.is_some_and(|m| !m.get(x, y)) {
                continue;
            }
            let (p, q) = (a.pixel(x, y), b.pixel(x, y));
            for c in 0..3 {
                s += (p[c] - q[c]).powi(2);
                n += 1;
            }
        }
    }
    255.0 * (s / n as f64).sqrt()
}

/// Mean SSIM over all 11×11 windows, each evaluated with explicit 2-D
/// Gaussian weights (σ = 1.5).
pub fn naive_ssim(a: &ImageRgb, b: &ImageRgb) -> f64 {
    let (w, h) = (a.width(), a.height());
    let (la, lb) = (luma(a), luma(b));
    let g: Vec<f64> = (0..11).map(|i| (-((i as f64 - 5.0).powi(2)) / 4.5).exp()).collect();
    let gs: f64 = g.iter().sum();
    let (c1, c2) = (1e-4, 9e-4);
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=h - 11 {
        for x0 in 0..=w - 11 {
            let (mut ma, mut mb, mut aa, mut bb, mut ab) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for j in 0..11 {
                for i in 0..11 {
                    let k = g[i] * g[j] / (gs * gs);
                    let p = la[(y0 + j) * w + x0 + i];
                    let q = lb[(y0 + j) * w + x0 + i];
                    ma += k * p;
                    mb += k * q;
                    aa += k * p * p;
                    bb += k * q * q;
                    ab += k * p * q;
                }
            }
            let (va, vb, cov) = (aa - ma * ma, bb - mb * mb, ab - ma * mb);
            total += (2.0 * ma * mb + c1) * (2.0 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
            count += 1;
        }
    }
    total / count as f64
}

/// Sobel magnitude with replicated borders, kernels written out in full.
pub fn naive_sobel(m: &ScalarMap) -> Vec<f64> {
    let (w, h) = m.dims();
    let at = |x: i64, y: i64| m.get(x.clamp(0, w as i64 - 1) as usize, y.clamp(0, h as i64 - 1) as usize);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let gx = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            out.push((gx * gx + gy * gy).sqrt());
        }
    }
    out
}

pub fn naive_edges(m: &ScalarMap, rel: f64) -> BinaryMask {
    let s = naive_sobel(m);
    let max = s.iter().cloned().fold(0.0, f64::max);
    let (w, h) = m.dims();
    BinaryMask::from_fn(w, h, |x, y| max > 0.0 && s[y * w + x] > rel * max)
}

/// Distance from `(x, y)` to the nearest set pixel, by exhaustive search.
pub fn brute_distance(mask: &BinaryMask, x: usize, y: usize) -> f64 {
    let mut best = f64::INFINITY;
    for (qx, qy) in mask.iter_set() {
        let dx = qx as f64 - x as f64;
        let dy = qy as f64 - y as f64;
        best = best.min((dx * dx + dy * dy).sqrt());
    }
    best
}

pub fn naive_dbe(pred: &BinaryMask, gt: &BinaryMask, cap: f64) -> (f64, f64) {
    let one = |from: &BinaryMask, to: &BinaryMask| {
        if from.none_set() {
            return cap;
        }
        let mut s = 0.0;
        for (x, y) in from.iter_set() {
            s += brute_distance(to, x, y).min(cap);
        }
        s / from.count() as f64
    };
    (one(pred, gt), one(gt, pred))
}

pub fn naive_edge_pr(pred: &BinaryMask, gt: &BinaryMask, tol: f64) -> (f64, f64) {
    let one = |from: &BinaryMask, to: &BinaryMask| {
        if from.none_set() {
            return 0.0;
        }
        let hits = from.iter_set().filter(|&(x, y)| brute_distance(to, x, y) <= tol).count();
        100.0 * hits as f64 / from.count() as f64
    };
    (one(pred, gt), one(gt, pred))
}

/// Right view by integer disparity, resolved per target pixel: collect every
/// source landing there, keep those within `eps` of the nearest, average.
pub fn brute_integer_warp(img: &ImageRgb, disp: &[i64], prio: &[f64], eps: f64) -> (ImageRgb, BinaryMask) {
    let (w, h) = (img.width(), img.height());
    let mut out = vec![0.0; w * h * 3];
    let mut cov = BinaryMask::empty(w, h);
    for ty in 0..h {
        for tx in 0..w {
            let sources: Vec<usize> = (0..w)
                .filter(|&sx| sx as i64 - disp[ty * w + sx] == tx as i64)
                .collect();
            let Some(best) = sources.iter().map(|&sx| prio[ty * w + sx]).reduce(f64::max) else {
                continue;
            };
            let kept: Vec<usize> = sources
                .into_iter()
                .filter(|&sx| prio[ty * w + sx] >= (1.0 - eps) * best)
                .collect();
            cov.set(tx, ty, true);
            for c in 0..3 {
                let mut s = 0.0;
                for &sx in &kept {
                    s += img.pixel(sx, ty)[c];
                }
                out[(ty * w + tx) * 3 + c] = (s / kept.len() as f64).clamp(0.0, 1.0);
            }
        }
    }
    (ImageRgb::new(w, h, out).unwrap(), cov)
}

/// Pixels whose square window of radius `r` is not uniform in `m`.
pub fn nonuniform_windows(m: &BinaryMask, r: usize) -> BinaryMask {
    let (w, h) = m.dims();
    BinaryMask::from_fn(w, h, |x, y| {
        let v = m.get(x, y);
        let (x0, x1) = (x.saturating_sub(r), (x + r).min(w - 1));
        let (y0, y1) = (y.saturating_sub(r), (y + r).min(h - 1));
        (y0..=y1).any(|yy| (x0..=x1).any(|xx| m.get(xx, yy) != v))
    })
}
