//! Evaluation metrics: pixel fidelity, zero-shot depth accuracy, depth
//! boundary quality and a stereo edge-overlap score.

use std::collections::BTreeMap;

use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};
use crate::imagecore::{
    ensure_same_dims, gaussian_kernel, scale_shift_align, sobel_edges, BinaryMask, ImageRgb,
    Planar, ScalarMap,
};

/// Reported for identical images instead of infinity.
pub const PSNR_CAP_DB: f64 = 99.0;

fn same_shape<P: Planar>(a: &P, b: &P, context: &'static str) -> Result<()> {
    ensure_same_dims(context, a.dims(), b.dims())?;
    if a.channels() != b.channels() {
        return Err(Error::Length {
            expected: a.values().len(),
            actual: b.values().len(),
        });
    }
    Ok(())
}

/// `10·log10(1 / MSE)` on `[0, 1]` data, capped at [`PSNR_CAP_DB`].
pub fn psnr(a: &ImageRgb, b: &ImageRgb) -> Result<f64> {
    same_shape(a, b, "psnr")?;
    let n = a.data().len() as f64;
    let mse = a.data().iter().zip(b.data()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok((10.0 * (1.0 / mse).log10()).min(PSNR_CAP_DB))
}

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
const SSIM_C1: f64 = 0.01 * 0.01;
const SSIM_C2: f64 = 0.03 * 0.03;

/// Valid-mode separable correlation with an odd-length kernel.
fn valid_filter(data: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (wo, ho) = (w + 1 - k, h + 1 - k);
    let mut tmp = vec![0.0; wo * h];
    for y in 0..h {
        for x in 0..wo {
            tmp[y * wo + x] = taps.iter().enumerate().map(|(i, t)| t * data[y * w + x + i]).sum();
        }
    }
    let mut out = vec![0.0; wo * ho];
    for y in 0..ho {
        for x in 0..wo {
            out[y * wo + x] = taps.iter().enumerate().map(|(i, t)| t * tmp[(y + i) * wo + x]).sum();
        }
    }
    out
}

/// Mean SSIM of the BT.601 luma planes over all fully inside 11×11 windows.
pub fn ssim(a: &ImageRgb, b: &ImageRgb) -> Result<f64> {
    same_shape(a, b, "ssim")?;
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::param(
            "image",
            format!("ssim needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"),
        ));
    }
    let taps = gaussian_kernel(SSIM_SIGMA)?;
    debug_assert_eq!(taps.len(), SSIM_WINDOW);
    let la = a.luma();
    let lb = b.luma();
    let (pa, pb) = (la.data(), lb.data());
    let prod = |f: &dyn Fn(usize) -> f64| (0..w * h).map(f).collect::<Vec<f64>>();
    let mu_a = valid_filter(pa, w, h, &taps);
    let mu_b = valid_filter(pb, w, h, &taps);
    let aa = valid_filter(&prod(&|i| pa[i] * pa[i]), w, h, &taps);
    let bb = valid_filter(&prod(&|i| pb[i] * pb[i]), w, h, &taps);
    let ab = valid_filter(&prod(&|i| pa[i] * pb[i]), w, h, &taps);
    let total: f64 = (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            let va = aa[i] - ma * ma;
            let vb = bb[i] - mb * mb;
            let cov = ab[i] - ma * mb;
            ((2.0 * ma * mb + SSIM_C1) * (2.0 * cov + SSIM_C2))
                / ((ma * ma + mb * mb + SSIM_C1) * (va + vb + SSIM_C2))
        })
        .sum();
    Ok(total / mu_a.len() as f64)
}

/// Value scale RMSE is reported in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RmseScale {
    Unit,
    /// Multiplied by 255, the convention of 8-bit image benchmarks.
    #[default]
    EightBit,
}

impl RmseScale {
    pub fn factor(self) -> f64 {
        match self {
            RmseScale::Unit => 1.0,
            RmseScale::EightBit => 255.0,
        }
    }
}

/// Root mean squared difference over all elements of the (masked) pixels.
pub fn rmse<P: Planar>(a: &P, b: &P, mask: Option<&BinaryMask>, scale: RmseScale) -> Result<f64> {
    same_shape(a, b, "rmse")?;
    let c = a.channels();
    let (sum, count) = match mask {
        None => (
            a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>(),
            a.values().len(),
        ),
        Some(mask) => {
            ensure_same_dims("rmse mask", a.dims(), mask.dims())?;
            if mask.none_set() {
                return Err(Error::EmptySelection("rmse mask"));
            }
            let sum = a
                .values()
                .chunks_exact(c)
                .zip(b.values().chunks_exact(c))
                .zip(mask.data())
                .filter(|(_, m)| **m)
                .flat_map(|((p, q), _)| p.iter().zip(q).map(|(x, y)| (x - y) * (x - y)))
                .sum::<f64>();
            (sum, mask.count() * c)
        }
    };
    if count == 0 {
        return Ok(0.0);
    }
    Ok(scale.factor() * (sum / count as f64).sqrt())
}

/// Lower bound applied to predictions before relative errors.
pub const DEPTH_FLOOR: f64 = 1e-6;

/// `(AbsRel, δ1)` in percent over valid pixels, optionally after
/// least-squares scale-and-shift alignment of `pred` to `gt`.
pub fn absrel_delta1(pred: &ScalarMap, gt: &ScalarMap, valid: &BinaryMask, align: bool) -> Result<(f64, f64)> {
    ensure_same_dims("absrel_delta1", pred.dims(), gt.dims())?;
    ensure_same_dims("absrel_delta1", pred.dims(), valid.dims())?;
    if valid.none_set() {
        return Err(Error::EmptySelection("absrel_delta1 valid mask"));
    }
    if let Some((_, g)) = gt.data().iter().zip(valid.data()).find(|(g, v)| **v && **g <= 0.0) {
        return Err(Error::InvalidValue(format!("ground-truth depth {g} is not positive")));
    }
    let aligned;
    let p = if align {
        aligned = scale_shift_align(pred, gt, valid)?.aligned;
        aligned.data()
    } else {
        pred.data()
    };
    let mut rel = 0.0;
    let mut inliers = 0usize;
    let mut n = 0usize;
    for ((pv, g), v) in p.iter().zip(gt.data()).zip(valid.data()) {
        if !*v {
            continue;
        }
        let q = pv.max(DEPTH_FLOOR);
        rel += (q - g).abs() / g;
        if (q / g).max(g / q) < 1.25 {
            inliers += 1;
        }
        n += 1;
    }
    Ok((100.0 * rel / n as f64, 100.0 * inliers as f64 / n as f64))
}

/// Pixels whose Sobel magnitude exceeds `rel_threshold` times the maximum.
pub fn depth_edges(d: &ScalarMap, rel_threshold: f64) -> BinaryMask {
    let e = sobel_edges(d);
    let max = e.data().iter().fold(0.0f64, |m, v| m.max(*v));
    if max == 0.0 {
        return BinaryMask::empty(d.width(), d.height());
    }
    let t = rel_threshold * max;
    BinaryMask::from_fn(d.width(), d.height(), |x, y| e.get(x, y) > t)
}

/// One-dimensional squared distance transform of Felzenszwalb and
/// Huttenlocher (lower envelope of parabolas).
fn dt_1d(f: &[f64], out: &mut [f64]) {
    let n = f.len();
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k = 0usize;
    let first = match f.iter().position(|x| x.is_finite()) {
        Some(q) => q,
        None => {
            out.iter_mut().for_each(|o| *o = f64::INFINITY);
            return;
        }
    };
    v[0] = first;
    z[0] = f64::NEG_INFINITY;
    z[1] = f64::INFINITY;
    for q in first + 1..n {
        if !f[q].is_finite() {
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            if s <= z[k] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Exact Euclidean distance from every pixel to the nearest set pixel;
/// infinite everywhere when the mask is empty.
pub fn distance_transform(mask: &BinaryMask) -> Vec<f64> {
    let (w, h) = mask.dims();
    let mut grid: Vec<f64> = mask
        .data()
        .iter()
        .map(|b| if *b { 0.0 } else { f64::INFINITY })
        .collect();
    let mut col = vec![0.0; h];
    let mut col_out = vec![0.0; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = grid[y * w + x];
        }
        dt_1d(&col, &mut col_out);
        for y in 0..h {
            grid[y * w + x] = col_out[y];
        }
    }
    let mut row_out = vec![0.0; w];
    for y in 0..h {
        dt_1d(&grid[y * w..(y + 1) * w], &mut row_out);
        grid[y * w..(y + 1) * w].copy_from_slice(&row_out);
    }
    grid.iter().map(|d| d.sqrt()).collect()
}

fn mean_capped_distance(from: &BinaryMask, to: &BinaryMask, cap: f64) -> f64 {
    if from.none_set() {
        return cap;
    }
    let dist = distance_transform(to);
    let total: f64 = from
        .data()
        .iter()
        .zip(&dist)
        .filter(|(b, _)| **b)
        .map(|(_, d)| d.min(cap))
        .sum();
    total / from.count() as f64
}

pub const DBE_CAP: f64 = 10.0;

/// `(DBE_acc, DBE_comp)` in pixels: mean capped distance from predicted to
/// ground-truth edges and back. An empty side scores the cap.
pub fn dbe(pred_edges: &BinaryMask, gt_edges: &BinaryMask, cap: f64) -> Result<(f64, f64)> {
    ensure_same_dims("dbe", pred_edges.dims(), gt_edges.dims())?;
    if !(cap > 0.0) {
        return Err(Error::param("cap", "must be positive"));
    }
    Ok((
        mean_capped_distance(pred_edges, gt_edges, cap),
        mean_capped_distance(gt_edges, pred_edges, cap),
    ))
}

fn fraction_within(from: &BinaryMask, to: &BinaryMask, tol: f64) -> f64 {
    if from.none_set() {
        return 0.0;
    }
    let dist = distance_transform(to);
    let hits = from
        .data()
        .iter()
        .zip(&dist)
        .filter(|(b, d)| **b && **d <= tol)
        .count();
    100.0 * hits as f64 / from.count() as f64
}

/// `(EP, ER)` in percent with a pixel tolerance.
pub fn edge_pr(pred_edges: &BinaryMask, gt_edges: &BinaryMask, tol: f64) -> Result<(f64, f64)> {
    ensure_same_dims("edge_pr", pred_edges.dims(), gt_edges.dims())?;
    if !(tol >= 0.0) {
        return Err(Error::param("tol", "must be non-negative"));
    }
    Ok((
        fraction_within(pred_edges, gt_edges, tol),
        fraction_within(gt_edges, pred_edges, tol),
    ))
}

pub const EDGE_REL_THRESHOLD: f64 = 0.1;

/// Edge-IoU stand-in for the SIoU stereo score: IoU of the dilated luma
/// Sobel edge maps. Two edgeless images score 1.
pub fn siou_standin(gen: &ImageRgb, gt: &ImageRgb, dilate: usize) -> Result<f64> {
    same_shape(gen, gt, "siou_standin")?;
    let a = depth_edges(&gen.luma(), EDGE_REL_THRESHOLD).dilate(dilate);
    let b = depth_edges(&gt.luma(), EDGE_REL_THRESHOLD).dilate(dilate);
    let union = a.or(&b)?.count();
    if union == 0 {
        return Ok(1.0);
    }
    Ok(a.and(&b)?.count() as f64 / union as f64)
}

/// Flat JSON evaluation report: metric values at the top level plus
/// `params` and `inputs` (path to content hash) objects.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    pub metrics: BTreeMap<String, f64>,
    pub params: BTreeMap<String, f64>,
    pub inputs: BTreeMap<String, String>,
}

impl Report {
    pub fn metric(&mut self, name: &str, value: f64) -> &mut Self {
        self.metrics.insert(name.to_owned(), value);
        self
    }

    pub fn param(&mut self, name: &str, value: f64) -> &mut Self {
        self.params.insert(name.to_owned(), value);
        self
    }

    pub fn input(&mut self, path: &str, hash: &str) -> &mut Self {
        self.inputs.insert(path.to_owned(), hash.to_owned());
        self
    }

    pub fn to_json(&self) -> Result<String> {
        let number = |k: &str, v: f64| {
            Number::from_f64(v)
                .map(Value::Number)
                .ok_or_else(|| Error::InvalidValue(format!("report value `{k}` is not finite")))
        };
        let mut obj = Map::new();
        for (k, v) in &self.metrics {
            obj.insert(k.clone(), number(k, *v)?);
        }
        let mut params = Map::new();
        for (k, v) in &self.params {
            params.insert(k.clone(), number(k, *v)?);
        }
        obj.insert("params".into(), Value::Object(params));
        obj.insert(
            "inputs".into(),
            Value::Object(
                self.inputs
                    .iter()
                    .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                    .collect(),
            ),
        );
        Ok(serde_json::to_string_pretty(&Value::Object(obj)).expect("JSON values always serialize"))
    }
}
