//! Training objectives with analytic gradients.
//!
//! The depth losses ([`l1_loss`], [`gradient_loss`], [`laplacian_loss`] and
//! their sums [`matting_loss`], [`stage1_loss`], [`stage2_loss`]) are written
//! as compositions of linear operators and absolute values, so
//! [`loss_gradient`] can return exact adjoints. At `|x| = 0` the subgradient
//! `0` is used.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imagecore::{
    ensure_same_dims, sobel_gradients, sobel_gradients_adjoint, BinaryMask, DepthConvention,
    ImageRgb, Planar, ScalarMap,
};

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

fn same_shape<P: Planar>(pred: &P, gt: &P) -> Result<()> {
    ensure_same_dims("loss", pred.dims(), gt.dims())?;
    if pred.channels() != gt.channels() {
        return Err(Error::Length {
            expected: pred.values().len(),
            actual: gt.values().len(),
        });
    }
    Ok(())
}

fn mean_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len() as f64
}

/// Mean absolute difference over all elements, or over the elements of the
/// masked pixels (every channel) when a mask is given.
pub fn l1_loss<P: Planar>(pred: &P, gt: &P, mask: Option<&BinaryMask>) -> Result<f64> {
    same_shape(pred, gt)?;
    let Some(mask) = mask else {
        return Ok(mean_abs_diff(pred.values(), gt.values()));
    };
    ensure_same_dims("l1_loss mask", pred.dims(), mask.dims())?;
    if mask.none_set() {
        return Err(Error::EmptySelection("l1_loss mask"));
    }
    let c = pred.channels();
    let sum: f64 = pred
        .values()
        .chunks_exact(c)
        .zip(gt.values().chunks_exact(c))
        .zip(mask.data())
        .filter(|(_, m)| **m)
        .flat_map(|((p, g), _)| p.iter().zip(g).map(|(a, b)| (a - b).abs()))
        .sum();
    Ok(sum / (mask.count() * c) as f64)
}

/// `(1/N) Σ |Δgx| + |Δgy|` over the Sobel responses of both maps.
pub fn gradient_loss(pred: &ScalarMap, gt: &ScalarMap) -> Result<f64> {
    ensure_same_dims("gradient_loss", pred.dims(), gt.dims())?;
    let (w, h) = pred.dims();
    if w * h == 0 {
        return Ok(0.0);
    }
    let (px, py) = sobel_gradients(pred.data(), w, h);
    let (gx, gy) = sobel_gradients(gt.data(), w, h);
    let sum: f64 = (0..w * h)
        .map(|i| (px[i] - gx[i]).abs() + (py[i] - gy[i]).abs())
        .sum();
    Ok(sum / (w * h) as f64)
}

fn gradient_loss_grad(pred: &ScalarMap, gt: &ScalarMap) -> Vec<f64> {
    let (w, h) = pred.dims();
    let n = (w * h) as f64;
    let (px, py) = sobel_gradients(pred.data(), w, h);
    let (gx, gy) = sobel_gradients(gt.data(), w, h);
    let bx: Vec<f64> = px.iter().zip(&gx).map(|(a, b)| sign(a - b) / n).collect();
    let by: Vec<f64> = py.iter().zip(&gy).map(|(a, b)| sign(a - b) / n).collect();
    sobel_gradients_adjoint(&bx, &by, w, h)
}

/// A 1-D linear operator stored row by row.
struct Sparse1d {
    n_in: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

const BINOMIAL5: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

impl Sparse1d {
    /// 5-tap binomial blur with replicated borders, keeping even samples.
    fn reduce(n: usize) -> Self {
        let rows = (0..n.div_ceil(2))
            .map(|i| {
                BINOMIAL5
                    .iter()
                    .enumerate()
                    .map(|(k, t)| ((2 * i + k).saturating_sub(2).min(n - 1), *t))
                    .collect()
            })
            .collect();
        Sparse1d { n_in: n, rows }
    }

    /// Inverse of [`Sparse1d::reduce`]'s subsampling: zero insertion followed
    /// by the binomial blur scaled by two, with replicated coarse borders.
    fn expand(n_coarse: usize, n: usize) -> Self {
        let c = |i: isize| i.clamp(0, n_coarse as isize - 1) as usize;
        let rows = (0..n)
            .map(|x| {
                let i = (x / 2) as isize;
                if x % 2 == 0 {
                    vec![(c(i - 1), 0.125), (c(i), 0.75), (c(i + 1), 0.125)]
                } else {
                    vec![(c(i), 0.5), (c(i + 1), 0.5)]
                }
            })
            .collect();
        Sparse1d { n_in: n_coarse, rows }
    }

    fn n_out(&self) -> usize {
        self.rows.len()
    }
}

/// Applies `ox` along rows and `oy` along columns of a `w × h` plane.
fn apply2(data: &[f64], w: usize, h: usize, ox: &Sparse1d, oy: &Sparse1d) -> Vec<f64> {
    debug_assert_eq!((ox.n_in, oy.n_in), (w, h));
    let wo = ox.n_out();
    let mut tmp = vec![0.0; wo * h];
    for y in 0..h {
        for (x, row) in ox.rows.iter().enumerate() {
            tmp[y * wo + x] = row.iter().map(|(j, t)| t * data[y * w + j]).sum();
        }
    }
    let mut out = vec![0.0; wo * oy.n_out()];
    for (y, row) in oy.rows.iter().enumerate() {
        for x in 0..wo {
            out[y * wo + x] = row.iter().map(|(j, t)| t * tmp[j * wo + x]).sum();
        }
    }
    out
}

/// Transpose of [`apply2`].
fn apply2_adjoint(bar: &[f64], ox: &Sparse1d, oy: &Sparse1d) -> Vec<f64> {
    let (wo, ho) = (ox.n_out(), oy.n_out());
    let (w, h) = (ox.n_in, oy.n_in);
    let mut tmp = vec![0.0; wo * h];
    for y in 0..ho {
        for (j, t) in &oy.rows[y] {
            for x in 0..wo {
                tmp[j * wo + x] += t * bar[y * wo + x];
            }
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for (x, row) in ox.rows.iter().enumerate() {
            for (j, t) in row {
                out[y * w + j] += t * tmp[y * wo + x];
            }
        }
    }
    out
}

/// Level operators of a Laplacian pyramid over a `w × h` plane.
struct Pyramid {
    dims: Vec<(usize, usize)>,
    reduce: Vec<(Sparse1d, Sparse1d)>,
    expand: Vec<(Sparse1d, Sparse1d)>,
}

impl Pyramid {
    fn new(w: usize, h: usize, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::param("levels", "must be at least 1"));
        }
        let need = 1usize << (levels - 1);
        if w < need || h < need {
            return Err(Error::param(
                "levels",
                format!("{levels} levels need both dimensions >= {need}, got {w}x{h}"),
            ));
        }
        let mut dims = vec![(w, h)];
        let mut reduce = Vec::new();
        let mut expand = Vec::new();
        for _ in 1..levels {
            let (pw, ph) = *dims.last().unwrap();
            let (cw, ch) = (pw.div_ceil(2), ph.div_ceil(2));
            reduce.push((Sparse1d::reduce(pw), Sparse1d::reduce(ph)));
            expand.push((Sparse1d::expand(cw, pw), Sparse1d::expand(ch, ph)));
            dims.push((cw, ch));
        }
        Ok(Pyramid {
            dims,
            reduce,
            expand,
        })
    }

    fn levels(&self) -> usize {
        self.dims.len()
    }

    /// Bands `1..levels`: `G[l−1] − expand(G[l])`, then the coarsest `G`.
    fn bands(&self, data: &[f64]) -> Vec<Vec<f64>> {
        let mut gauss = vec![data.to_vec()];
        for (l, (rx, ry)) in self.reduce.iter().enumerate() {
            let (w, h) = self.dims[l];
            let next = apply2(&gauss[l], w, h, rx, ry);
            gauss.push(next);
        }
        let mut bands = Vec::with_capacity(self.levels());
        for (l, (ex, ey)) in self.expand.iter().enumerate() {
            let (cw, ch) = self.dims[l + 1];
            let up = apply2(&gauss[l + 1], cw, ch, ex, ey);
            bands.push(gauss[l].iter().zip(&up).map(|(a, b)| a - b).collect());
        }
        bands.push(gauss.pop().unwrap());
        bands
    }

    /// Maps per-band sensitivities back onto the finest level.
    fn bands_adjoint(&self, bars: &[Vec<f64>]) -> Vec<f64> {
        let n = self.levels();
        let mut bar_g: Vec<Vec<f64>> = bars.to_vec();
        for l in 0..n - 1 {
            let (ex, ey) = &self.expand[l];
            let back = apply2_adjoint(&bars[l], ex, ey);
            bar_g[l + 1].iter_mut().zip(&back).for_each(|(a, b)| *a -= b);
        }
        for l in (0..n - 1).rev() {
            let (rx, ry) = &self.reduce[l];
            let back = apply2_adjoint(&bar_g[l + 1], rx, ry);
            bar_g[l].iter_mut().zip(&back).for_each(|(a, b)| *a += b);
        }
        bar_g.swap_remove(0)
    }
}

fn band_weight(l: usize) -> f64 {
    (1u64 << l) as f64
}

/// `Σ_{l=1..levels} 2^{l−1} · L1(band_l(pred), band_l(gt))` over a Laplacian
/// pyramid whose last band is the coarsest Gaussian level.
pub fn laplacian_loss(pred: &ScalarMap, gt: &ScalarMap, levels: usize) -> Result<f64> {
    ensure_same_dims("laplacian_loss", pred.dims(), gt.dims())?;
    let pyr = Pyramid::new(pred.width(), pred.height(), levels)?;
    let bp = pyr.bands(pred.data());
    let bg = pyr.bands(gt.data());
    Ok(bp
        .iter()
        .zip(&bg)
        .enumerate()
        .map(|(l, (a, b))| band_weight(l) * mean_abs_diff(a, b))
        .sum())
}

fn laplacian_loss_grad(pred: &ScalarMap, gt: &ScalarMap, levels: usize) -> Result<Vec<f64>> {
    let pyr = Pyramid::new(pred.width(), pred.height(), levels)?;
    let bp = pyr.bands(pred.data());
    let bg = pyr.bands(gt.data());
    let bars: Vec<Vec<f64>> = bp
        .iter()
        .zip(&bg)
        .enumerate()
        .map(|(l, (a, b))| {
            let k = band_weight(l) / a.len() as f64;
            a.iter().zip(b).map(|(x, y)| k * sign(x - y)).collect()
        })
        .collect();
    Ok(pyr.bands_adjoint(&bars))
}

pub const DEFAULT_LAPLACIAN_LEVELS: usize = 5;

/// `L1 + Laplacian + gradient`, unit weights.
pub fn matting_loss(pred: &ScalarMap, gt: &ScalarMap) -> Result<f64> {
    matting_loss_with_levels(pred, gt, DEFAULT_LAPLACIAN_LEVELS)
}

pub fn matting_loss_with_levels(pred: &ScalarMap, gt: &ScalarMap, levels: usize) -> Result<f64> {
    Ok(l1_loss(pred, gt, None)? + laplacian_loss(pred, gt, levels)? + gradient_loss(pred, gt)?)
}

fn l1_grad(pred: &[f64], gt: &[f64]) -> Vec<f64> {
    let n = pred.len() as f64;
    pred.iter().zip(gt).map(|(a, b)| sign(a - b) / n).collect()
}

fn matting_grad(pred: &ScalarMap, gt: &ScalarMap, levels: usize) -> Result<Vec<f64>> {
    let mut g = l1_grad(pred.data(), gt.data());
    let lap = laplacian_loss_grad(pred, gt, levels)?;
    let grad = gradient_loss_grad(pred, gt);
    for ((a, b), c) in g.iter_mut().zip(&lap).zip(&grad) {
        *a += b + c;
    }
    Ok(g)
}

/// How the masked matting term of [`stage1_loss`] is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskNormalization {
    /// Mean over all pixels of the mask-multiplied maps.
    #[default]
    AllPixels,
    /// Same term rescaled by `N / |M|`, a mean over masked pixels only.
    MaskedPixels,
}

impl FromStr for MaskNormalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" | "all-pixels" => Ok(MaskNormalization::AllPixels),
            "masked" | "masked-pixels" => Ok(MaskNormalization::MaskedPixels),
            other => Err(Error::param("normalization", format!("unknown mode `{other}`"))),
        }
    }
}

fn masked(m: &ScalarMap, mask: &BinaryMask) -> ScalarMap {
    let data = m
        .data()
        .iter()
        .zip(mask.data())
        .map(|(v, b)| if *b { *v } else { 0.0 })
        .collect();
    ScalarMap::from_vec_unchecked(m.width(), m.height(), data, DepthConvention::Unitless)
}

fn mask_scale(mask: &BinaryMask, norm: MaskNormalization) -> f64 {
    match norm {
        MaskNormalization::AllPixels => 1.0,
        MaskNormalization::MaskedPixels if mask.none_set() => 0.0,
        MaskNormalization::MaskedPixels => mask.data().len() as f64 / mask.count() as f64,
    }
}

/// `L1(d̂, d_gt) + L_α(d̂ ⊙ M, d_gt ⊙ M)`.
pub fn stage1_loss(d_hat: &ScalarMap, d_gt: &ScalarMap, m_soft: &BinaryMask) -> Result<f64> {
    stage1_loss_with(d_hat, d_gt, m_soft, MaskNormalization::AllPixels, DEFAULT_LAPLACIAN_LEVELS)
}

pub fn stage1_loss_with(
    d_hat: &ScalarMap,
    d_gt: &ScalarMap,
    m_soft: &BinaryMask,
    norm: MaskNormalization,
    levels: usize,
) -> Result<f64> {
    ensure_same_dims("stage1_loss", d_hat.dims(), d_gt.dims())?;
    ensure_same_dims("stage1_loss", d_hat.dims(), m_soft.dims())?;
    let global = l1_loss(d_hat, d_gt, None)?;
    let local = matting_loss_with_levels(&masked(d_hat, m_soft), &masked(d_gt, m_soft), levels)?;
    Ok(global + mask_scale(m_soft, norm) * local)
}

/// `L_α(d̂, d_gt)`.
pub fn stage2_loss(d_hat: &ScalarMap, d_gt: &ScalarMap) -> Result<f64> {
    matting_loss(d_hat, d_gt)
}

pub const DEFAULT_PERCEPTUAL_LAMBDA: f64 = 0.1;

/// `L1(pred, gt) + λ · perceptual`, with the perceptual distance computed
/// elsewhere.
pub fn color_fuse_loss(pred: &ImageRgb, gt: &ImageRgb, perceptual: f64, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "must be finite and non-negative"));
    }
    if !(perceptual >= 0.0 && perceptual.is_finite()) {
        return Err(Error::param("perceptual", "must be finite and non-negative"));
    }
    Ok(l1_loss(pred, gt, None)? + lambda * perceptual)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    L1,
    Gradient,
    Laplacian,
    Matting,
    Stage1,
    Stage2,
}

impl LossKind {
    pub const ALL: [LossKind; 6] = [
        LossKind::L1,
        LossKind::Gradient,
        LossKind::Laplacian,
        LossKind::Matting,
        LossKind::Stage1,
        LossKind::Stage2,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::L1 => "l1",
            LossKind::Gradient => "gradient",
            LossKind::Laplacian => "laplacian",
            LossKind::Matting => "matting",
            LossKind::Stage1 => "stage1",
            LossKind::Stage2 => "stage2",
        }
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::UnknownLoss(s.to_owned()))
    }
}

/// Extra inputs for [`evaluate_loss`] and [`loss_gradient`].
#[derive(Debug, Clone, PartialEq)]
pub struct LossParams {
    pub levels: usize,
    /// Restricts `l1`; required by `stage1` as its soft mask.
    pub mask: Option<BinaryMask>,
    pub normalization: MaskNormalization,
}

impl Default for LossParams {
    fn default() -> Self {
        LossParams {
            levels: DEFAULT_LAPLACIAN_LEVELS,
            mask: None,
            normalization: MaskNormalization::AllPixels,
        }
    }
}

fn stage1_mask(params: &LossParams) -> Result<&BinaryMask> {
    params
        .mask
        .as_ref()
        .ok_or_else(|| Error::param("mask", "stage1 needs the soft-boundary mask"))
}

pub fn evaluate_loss(kind: LossKind, pred: &ScalarMap, gt: &ScalarMap, params: &LossParams) -> Result<f64> {
    match kind {
        LossKind::L1 => l1_loss(pred, gt, params.mask.as_ref()),
        LossKind::Gradient => gradient_loss(pred, gt),
        LossKind::Laplacian => laplacian_loss(pred, gt, params.levels),
        LossKind::Matting | LossKind::Stage2 => matting_loss_with_levels(pred, gt, params.levels),
        LossKind::Stage1 => {
            stage1_loss_with(pred, gt, stage1_mask(params)?, params.normalization, params.levels)
        }
    }
}

/// `∂loss/∂pred`, same layout as `pred`.
pub fn loss_gradient(kind: LossKind, pred: &ScalarMap, gt: &ScalarMap, params: &LossParams) -> Result<ScalarMap> {
    ensure_same_dims("loss_gradient", pred.dims(), gt.dims())?;
    let g = match kind {
        LossKind::L1 => match &params.mask {
            None => l1_grad(pred.data(), gt.data()),
            Some(mask) => {
                ensure_same_dims("loss_gradient mask", pred.dims(), mask.dims())?;
                if mask.none_set() {
                    return Err(Error::EmptySelection("l1_loss mask"));
                }
                let n = mask.count() as f64;
                pred.data()
                    .iter()
                    .zip(gt.data())
                    .zip(mask.data())
                    .map(|((a, b), m)| if *m { sign(a - b) / n } else { 0.0 })
                    .collect()
            }
        },
        LossKind::Gradient => gradient_loss_grad(pred, gt),
        LossKind::Laplacian => laplacian_loss_grad(pred, gt, params.levels)?,
        LossKind::Matting | LossKind::Stage2 => matting_grad(pred, gt, params.levels)?,
        LossKind::Stage1 => {
            let mask = stage1_mask(params)?;
            ensure_same_dims("loss_gradient mask", pred.dims(), mask.dims())?;
            let scale = mask_scale(mask, params.normalization);
            let local = matting_grad(&masked(pred, mask), &masked(gt, mask), params.levels)?;
            l1_grad(pred.data(), gt.data())
                .into_iter()
                .zip(local)
                .zip(mask.data())
                .map(|((a, b), m)| if *m { a + scale * b } else { a })
                .collect()
        }
    };
    Ok(ScalarMap::from_vec_unchecked(pred.width(), pred.height(), g, DepthConvention::Unitless))
}
