//! Training-data curation from matting data.
//!
//! Two pipelines live here. [`make_depth_training_pair`] composites a matted
//! foreground's depth over a background depth map twice: once with a low alpha
//! threshold and a sharp mask (the label) and once with a random higher
//! threshold and a blurred mask (the degraded input). [`make_view_training_sequence`]
//! moves the matted foreground by a random translation over a real multi-view
//! background sequence, producing ground-truth views, composed flows and
//! forward-warped inputs.
//!
//! All randomness comes from [`Rng`] (SplitMix64), so a seed fully determines
//! a sample on every platform.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::imagecore::{
    ensure_same_dims, gaussian_blur, minmax_over_mask, threshold_above, threshold_band,
    BinaryMask, DepthConvention, FlowField, ImageRgb, ScalarMap,
};
use crate::mapio::{SampleKind, SampleManifest};
use crate::warp::{forward_warp_flow, SplatConfig};

/// SplitMix64. Uniform reals use the top 53 bits of each draw.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rng {
    state: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Blend `w·a + (1−w)·b`. Equal layers pass through unchanged.
#[inline]
pub(crate) fn blend(w: f64, a: f64, b: f64) -> f64 {
    if a == b {
        a
    } else {
        w * a + (1.0 - w) * b
    }
}

pub(crate) fn check_unit_interval(m: &ScalarMap, what: &str) -> Result<()> {
    match m.data().iter().position(|v| !(0.0..=1.0).contains(v)) {
        Some(i) => Err(Error::InvalidValue(format!(
            "{what} value {} at index {i} is outside [0, 1]",
            m.data()[i]
        ))),
        None => Ok(()),
    }
}

/// `α·fg + (1−α)·bg` per pixel and channel.
pub fn alpha_composite(fg: &ImageRgb, bg: &ImageRgb, alpha: &ScalarMap) -> Result<ImageRgb> {
    ensure_same_dims("alpha_composite", (fg.width(), fg.height()), (bg.width(), bg.height()))?;
    ensure_same_dims("alpha_composite", (fg.width(), fg.height()), alpha.dims())?;
    check_unit_interval(alpha, "alpha")?;
    let data = fg
        .data()
        .chunks_exact(3)
        .zip(bg.data().chunks_exact(3))
        .zip(alpha.data())
        .flat_map(|((f, b), a)| [blend(*a, f[0], b[0]), blend(*a, f[1], b[1]), blend(*a, f[2], b[2])])
        .collect();
    Ok(ImageRgb::from_vec_unchecked(fg.width(), fg.height(), data))
}

/// Composite over pure green, the backdrop used before running a depth
/// model on an isolated foreground.
pub fn green_composite(fg: &ImageRgb, alpha: &ScalarMap) -> Result<ImageRgb> {
    let green = ImageRgb::filled(fg.width(), fg.height(), [0.0, 1.0, 0.0])?;
    alpha_composite(fg, &green, alpha)
}

/// Foreground depth restricted to the mask, zero elsewhere.
pub fn masked_foreground_depth(d_fg_raw: &ScalarMap, mask: &BinaryMask) -> Result<ScalarMap> {
    ensure_same_dims("masked_foreground_depth", d_fg_raw.dims(), mask.dims())?;
    let data = d_fg_raw
        .data()
        .iter()
        .zip(mask.data())
        .map(|(v, m)| if *m { *v } else { 0.0 })
        .collect();
    Ok(ScalarMap::from_vec_unchecked(
        d_fg_raw.width(),
        d_fg_raw.height(),
        data,
        d_fg_raw.convention(),
    ))
}

/// Result of [`resample_fg_depth_range`], with the draws that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeResample {
    pub depth: ScalarMap,
    pub d_min: f64,
    pub draws: (f64, f64),
    pub lo: f64,
    pub hi: f64,
}

/// Remaps the masked foreground depth onto a random sub-range of
/// `[d_min, d_max]`, where `d_min` is the nearest background depth under the
/// mask. Inverse depth: the foreground always ends up in front.
pub fn resample_fg_depth_range(
    d_fg: &ScalarMap,
    d_bg: &ScalarMap,
    mask: &BinaryMask,
    d_max: f64,
    rng: &mut Rng,
) -> Result<RangeResample> {
    ensure_same_dims("resample_fg_depth_range", d_fg.dims(), d_bg.dims())?;
    ensure_same_dims("resample_fg_depth_range", d_fg.dims(), mask.dims())?;
    d_bg.require(DepthConvention::InverseDepth)?;
    let (_, d_min) = minmax_over_mask(d_bg, mask)?;
    if !(d_max > d_min) || !d_max.is_finite() {
        return Err(Error::InvalidRange { lo: d_min, hi: d_max });
    }
    let (fmin, fmax) = minmax_over_mask(d_fg, mask)?;
    let a = rng.uniform(d_min, d_max);
    let b = rng.uniform(d_min, d_max);
    let (lo, hi) = (a.min(b), a.max(b));
    let span = fmax - fmin;
    let data = d_fg
        .data()
        .iter()
        .zip(mask.data())
        .map(|(v, m)| {
            if !*m {
                0.0
            } else if span == 0.0 {
                0.5 * (lo + hi)
            } else {
                let t = (v - fmin) / span;
                ((1.0 - t) * lo + t * hi).clamp(lo, hi)
            }
        })
        .collect();
    Ok(RangeResample {
        depth: ScalarMap::from_vec_unchecked(
            d_fg.width(),
            d_fg.height(),
            data,
            DepthConvention::InverseDepth,
        ),
        d_min,
        draws: (a, b),
        lo,
        hi,
    })
}

/// `w·d_fg + (1−w)·d_bg`; `weights` generalizes the binary alpha mask.
pub fn depth_composite(d_fg: &ScalarMap, d_bg: &ScalarMap, weights: &ScalarMap) -> Result<ScalarMap> {
    ensure_same_dims("depth_composite", d_fg.dims(), d_bg.dims())?;
    ensure_same_dims("depth_composite", d_fg.dims(), weights.dims())?;
    check_unit_interval(weights, "composite weight")?;
    let data = d_fg
        .data()
        .iter()
        .zip(d_bg.data())
        .zip(weights.data())
        .map(|((f, b), w)| blend(*w, *f, *b))
        .collect();
    ScalarMap::new(d_fg.width(), d_fg.height(), data, d_bg.convention())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthPairParams {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub d_max: f64,
    pub sigma_lo: f64,
    pub sigma_hi: f64,
    pub seed: u64,
}

impl DepthPairParams {
    pub fn new(d_max: f64, seed: u64) -> Self {
        DepthPairParams {
            alpha_min: 0.02,
            alpha_max: 0.98,
            d_max,
            sigma_lo: 0.5,
            sigma_hi: 3.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0 <= self.alpha_min && self.alpha_min < self.alpha_max && self.alpha_max <= 1.0) {
            return Err(Error::param(
                "alpha band",
                "need 0 <= alpha_min < alpha_max <= 1",
            ));
        }
        if !(self.d_max > 0.0) || !self.d_max.is_finite() {
            return Err(Error::param("d_max", "must be positive"));
        }
        if !(0.0 < self.sigma_lo && self.sigma_lo <= self.sigma_hi) || !self.sigma_hi.is_finite() {
            return Err(Error::param("sigma", "need 0 < sigma_lo <= sigma_hi"));
        }
        Ok(())
    }
}

/// One depth-refinement training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthTrainingPair {
    pub d_in: ScalarMap,
    pub d_gt: ScalarMap,
    pub m_soft: BinaryMask,
    /// Label mask, `α > alpha_min`.
    pub m_gt: BinaryMask,
    /// Input mask before blurring, `α > alpha_th`.
    pub m_in: BinaryMask,
    /// Blurred input mask used as composite weights.
    pub w_in: ScalarMap,
    pub manifest: SampleManifest,
}

pub fn make_depth_training_pair(
    alpha: &ScalarMap,
    d_fg_raw: &ScalarMap,
    d_bg: &ScalarMap,
    params: &DepthPairParams,
) -> Result<DepthTrainingPair> {
    params.validate()?;
    check_unit_interval(alpha, "alpha")?;
    ensure_same_dims("make_depth_training_pair", alpha.dims(), d_fg_raw.dims())?;
    ensure_same_dims("make_depth_training_pair", alpha.dims(), d_bg.dims())?;
    d_fg_raw.require(DepthConvention::InverseDepth)?;
    d_bg.require(DepthConvention::InverseDepth)?;

    let mut rng = Rng::new(params.seed);

    let m_gt = threshold_above(alpha, params.alpha_min);
    let d_fg = masked_foreground_depth(d_fg_raw, &m_gt)?;
    let range = resample_fg_depth_range(&d_fg, d_bg, &m_gt, params.d_max, &mut rng)?;
    let d_gt = depth_composite(&range.depth, d_bg, &m_gt.to_map())?;

    let alpha_th = rng.uniform(params.alpha_min, params.alpha_max);
    let sigma = rng.uniform(params.sigma_lo, params.sigma_hi);
    let m_in = threshold_above(alpha, alpha_th);
    let blurred = gaussian_blur(&m_in.to_map(), sigma)?;
    let w_in = blurred.map_unchecked(DepthConvention::Unitless, |v| v.clamp(0.0, 1.0));
    let d_in = depth_composite(&range.depth, d_bg, &w_in)?;

    let m_soft = threshold_band(alpha, params.alpha_min, params.alpha_max)?;

    let manifest = SampleManifest::new(
        format!("depth_pair_{:016x}", params.seed),
        SampleKind::DepthPair,
        params.seed,
    )
    .with_path("d_in", "d_in.pfm")
    .with_path("d_gt", "d_gt.pfm")
    .with_path("m_soft", "m_soft.pgm")
    .with_param("alpha_min", params.alpha_min)
    .with_param("alpha_max", params.alpha_max)
    .with_param("alpha_th", alpha_th)
    .with_param("sigma_blur", sigma)
    .with_param("sigma_lo", params.sigma_lo)
    .with_param("sigma_hi", params.sigma_hi)
    .with_param("d_max", params.d_max)
    .with_param("d_min", range.d_min)
    .with_param("depth_draw_a", range.draws.0)
    .with_param("depth_draw_b", range.draws.1)
    .with_param("depth_lo", range.lo)
    .with_param("depth_hi", range.hi);

    Ok(DepthTrainingPair {
        d_in,
        d_gt,
        m_soft,
        m_gt,
        m_in,
        w_in,
        manifest,
    })
}

/// Per-pixel select: foreground flow under the mask, background elsewhere.
pub fn flow_composite(f_fg: &FlowField, f_bg: &FlowField, mask: &BinaryMask) -> Result<FlowField> {
    ensure_same_dims("flow_composite", f_fg.dims(), f_bg.dims())?;
    ensure_same_dims("flow_composite", f_fg.dims(), mask.dims())?;
    let data = f_fg
        .data()
        .chunks_exact(2)
        .zip(f_bg.data().chunks_exact(2))
        .zip(mask.data())
        .flat_map(|((f, b), m)| if *m { [f[0], f[1]] } else { [b[0], b[1]] })
        .collect();
    FlowField::new(f_fg.width(), f_fg.height(), data)
}

/// Bilinear sample of a `channels`-interleaved plane; zero outside.
fn sample_zero_padded(data: &[f64], w: usize, h: usize, channels: usize, sx: f64, sy: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    let x0 = sx.floor();
    let y0 = sy.floor();
    let tx = sx - x0;
    let ty = sy - y0;
    let taps = [
        (0, 0, (1.0 - tx) * (1.0 - ty)),
        (1, 0, tx * (1.0 - ty)),
        (0, 1, (1.0 - tx) * ty),
        (1, 1, tx * ty),
    ];
    for (dx, dy, wgt) in taps {
        if wgt == 0.0 {
            continue;
        }
        let xx = x0 as i64 + dx;
        let yy = y0 as i64 + dy;
        if xx < 0 || yy < 0 || xx >= w as i64 || yy >= h as i64 {
            continue;
        }
        let base = (yy as usize * w + xx as usize) * channels;
        for (c, o) in out.iter_mut().enumerate() {
            *o += wgt * data[base + c];
        }
    }
}

/// Shifts content by `(u, v)` pixels: `out(x, y) = img(x − u, y − v)`,
/// bilinear, zero outside the source.
pub fn translate_image(img: &ImageRgb, u: f64, v: f64) -> ImageRgb {
    let (w, h) = (img.width(), img.height());
    let mut data = vec![0.0; w * h * 3];
    let mut px = [0.0; 3];
    for y in 0..h {
        for x in 0..w {
            sample_zero_padded(img.data(), w, h, 3, x as f64 - u, y as f64 - v, &mut px);
            for c in 0..3 {
                data[(y * w + x) * 3 + c] = px[c].clamp(0.0, 1.0);
            }
        }
    }
    ImageRgb::from_vec_unchecked(w, h, data)
}

/// Scalar counterpart of [`translate_image`]; keeps the input's convention.
pub fn translate_map(m: &ScalarMap, u: f64, v: f64) -> ScalarMap {
    let (w, h) = m.dims();
    let mut data = vec![0.0; w * h];
    let mut px = [0.0; 1];
    for y in 0..h {
        for x in 0..w {
            sample_zero_padded(m.data(), w, h, 1, x as f64 - u, y as f64 - v, &mut px);
            data[y * w + x] = px[0];
        }
    }
    if m.convention() != DepthConvention::Unitless {
        data.iter_mut().for_each(|d| *d = d.max(0.0));
    }
    ScalarMap::from_vec_unchecked(w, h, data, m.convention())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewSequenceParams {
    /// Bound on each component of the sampled foreground translation.
    pub displacement_max: f64,
    pub frames: usize,
    /// Threshold of the mask that selects foreground flow.
    pub alpha_th: f64,
    pub seed: u64,
}

impl ViewSequenceParams {
    pub fn new(displacement_max: f64, frames: usize, seed: u64) -> Self {
        ViewSequenceParams {
            displacement_max,
            frames,
            alpha_th: 0.02,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewFrame {
    pub flow: FlowField,
    pub gt: ImageRgb,
    pub warped: ImageRgb,
    pub coverage: BinaryMask,
    pub displacement: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewSequence {
    /// Foreground over the first background frame.
    pub source: ImageRgb,
    pub frames: Vec<ViewFrame>,
    pub manifest: SampleManifest,
}

/// Deterministic core of [`make_view_training_sequence`] for a known
/// translation `(u, v)` of the last frame; frame `k` moves by `k/(K−1)` of it.
pub fn synthesize_view_frames(
    fg: &ImageRgb,
    alpha: &ScalarMap,
    bg_frames: &[ImageRgb],
    bg_flows: &[FlowField],
    displacement: (f64, f64),
    alpha_th: f64,
) -> Result<(ImageRgb, Vec<ViewFrame>)> {
    let k_count = bg_frames.len();
    if k_count == 0 || bg_flows.len() != k_count {
        return Err(Error::Shape {
            context: "view sequence frame/flow count",
            left: (k_count, 1),
            right: (bg_flows.len(), 1),
        });
    }
    let dims = (fg.width(), fg.height());
    ensure_same_dims("view sequence alpha", dims, alpha.dims())?;
    for (f, flow) in bg_frames.iter().zip(bg_flows) {
        ensure_same_dims("view sequence frame", dims, (f.width(), f.height()))?;
        ensure_same_dims("view sequence flow", dims, flow.dims())?;
    }
    check_unit_interval(alpha, "alpha")?;

    let m_alpha = threshold_above(alpha, alpha_th);
    let source = alpha_composite(fg, &bg_frames[0], alpha)?;
    let cfg = SplatConfig::default();
    let mut frames = Vec::with_capacity(k_count);
    for (k, (bg, bg_flow)) in bg_frames.iter().zip(bg_flows).enumerate() {
        let t = if k_count > 1 {
            k as f64 / (k_count - 1) as f64
        } else {
            0.0
        };
        let (uk, vk) = (t * displacement.0, t * displacement.1);
        let fg_flow = FlowField::uniform(dims.0, dims.1, uk, vk)?;
        let flow = flow_composite(&fg_flow, bg_flow, &m_alpha)?;
        let moved_alpha = translate_map(alpha, uk, vk);
        let gt = alpha_composite(&translate_image(fg, uk, vk), bg, &moved_alpha.map_unchecked(
            DepthConvention::Unitless,
            |a| a.clamp(0.0, 1.0),
        ))?;
        let warped = forward_warp_flow(&source, &flow, None, &cfg)?;
        frames.push(ViewFrame {
            flow,
            gt,
            warped: warped.image,
            coverage: warped.coverage,
            displacement: (uk, vk),
        });
    }
    Ok((source, frames))
}

/// Builds one view-synthesis training tuple. `bg_flows[k]` maps background
/// frame 0 to frame `k`.
pub fn make_view_training_sequence(
    fg: &ImageRgb,
    alpha: &ScalarMap,
    bg_frames: &[ImageRgb],
    bg_flows: &[FlowField],
    params: &ViewSequenceParams,
) -> Result<ViewSequence> {
    if params.frames != bg_frames.len() || params.frames != bg_flows.len() {
        return Err(Error::Shape {
            context: "view sequence frame count",
            left: (params.frames, 1),
            right: (bg_frames.len(), bg_flows.len()),
        });
    }
    if !(params.displacement_max >= 0.0) || !params.displacement_max.is_finite() {
        return Err(Error::param("displacement_max", "must be finite and non-negative"));
    }
    let mut rng = Rng::new(params.seed);
    let d = params.displacement_max;
    let u = rng.uniform(-d, d);
    let v = rng.uniform(-d, d);
    let (source, frames) = synthesize_view_frames(fg, alpha, bg_frames, bg_flows, (u, v), params.alpha_th)?;

    let mut paths = BTreeMap::new();
    paths.insert("source".to_owned(), "source.ppm".to_owned());
    for k in 0..frames.len() {
        paths.insert(format!("flow_{k}"), format!("flow_{k}.flo"));
        paths.insert(format!("gt_{k}"), format!("gt_{k}.ppm"));
        paths.insert(format!("warped_{k}"), format!("warped_{k}.ppm"));
        paths.insert(format!("mask_{k}"), format!("mask_{k}.pgm"));
    }
    let mut manifest = SampleManifest::new(
        format!("view_sequence_{:016x}", params.seed),
        SampleKind::ViewSequence,
        params.seed,
    )
    .with_param("u", u)
    .with_param("v", v)
    .with_param("displacement_max", d)
    .with_param("frames", frames.len() as f64)
    .with_param("alpha_th", params.alpha_th);
    manifest.paths = paths;
    Ok(ViewSequence {
        source,
        frames,
        manifest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inv(w: usize, h: usize, data: Vec<f64>) -> ScalarMap {
        ScalarMap::new(w, h, data, DepthConvention::InverseDepth).unwrap()
    }

    fn unit(w: usize, h: usize, data: Vec<f64>) -> ScalarMap {
        ScalarMap::new(w, h, data, DepthConvention::Unitless).unwrap()
    }

    #[test]
    fn splitmix_reference_stream() {
        // Reference values of the published SplitMix64 generator.
        let mut r = Rng::new(1234567);
        let got: Vec<u64> = (0..5).map(|_| r.next_u64()).collect();
        assert_eq!(
            got,
            [
                6457827717110365317,
                3203168211198807973,
                9817491932198370423,
                4593380528125082431,
                16408922859458223821
            ]
        );
    }

    #[test]
    fn composite_endpoints() {
        let fg = ImageRgb::filled(2, 2, [0.9, 0.2, 0.4]).unwrap();
        let bg = ImageRgb::filled(2, 2, [0.1, 0.7, 0.3]).unwrap();
        let ones = unit(2, 2, vec![1.0; 4]);
        let zeros = unit(2, 2, vec![0.0; 4]);
        assert_eq!(alpha_composite(&fg, &bg, &ones).unwrap(), fg);
        assert_eq!(alpha_composite(&fg, &bg, &zeros).unwrap(), bg);
        let w = ImageRgb::filled(1, 1, [1.0; 3]).unwrap();
        let b = ImageRgb::filled(1, 1, [0.0; 3]).unwrap();
        let out = alpha_composite(&w, &b, &unit(1, 1, vec![0.25])).unwrap();
        assert_eq!(out.data(), &[0.25; 3]);
        assert!(alpha_composite(&fg, &bg, &unit(1, 1, vec![0.5])).is_err());
    }

    #[test]
    fn masked_depth() {
        let raw = inv(2, 1, vec![3.0, 5.0]);
        let mask = BinaryMask::new(2, 1, vec![true, false]).unwrap();
        assert_eq!(masked_foreground_depth(&raw, &mask).unwrap().data(), &[3.0, 0.0]);
        assert_eq!(masked_foreground_depth(&raw, &BinaryMask::full(2, 1)).unwrap(), raw);
        assert!(masked_foreground_depth(&raw, &BinaryMask::empty(2, 1))
            .unwrap()
            .data()
            .iter()
            .all(|v| *v == 0.0));
    }

    #[test]
    fn resample_seed_42_replay() {
        // SplitMix64(42): first two uniforms 0.7415648787718233, 0.1599103928769201,
        // mapped onto [1, 10) give 7.67408390894641 and 2.439193535892281.
        let d_fg = inv(3, 1, vec![0.2, 0.5, 0.9]);
        let d_bg = inv(3, 1, vec![1.0; 3]);
        let mask = BinaryMask::full(3, 1);
        let r = resample_fg_depth_range(&d_fg, &d_bg, &mask, 10.0, &mut Rng::new(42)).unwrap();
        assert_eq!(r.d_min, 1.0);
        assert_eq!(r.draws, (7.67408390894641, 2.439193535892281));
        assert_eq!((r.lo, r.hi), (2.439193535892281, 7.67408390894641));
        let (lo, hi) = minmax_over_mask(&r.depth, &mask).unwrap();
        assert_eq!((lo, hi), (r.lo, r.hi));
    }

    #[test]
    fn resample_constant_and_dmin_rule() {
        let d_fg = inv(3, 1, vec![0.4, 0.4, 0.0]);
        let d_bg = inv(3, 1, vec![7.0, 2.0, 100.0]);
        let mask = BinaryMask::new(3, 1, vec![true, true, false]).unwrap();
        let r = resample_fg_depth_range(&d_fg, &d_bg, &mask, 20.0, &mut Rng::new(1)).unwrap();
        assert_eq!(r.d_min, 7.0);
        let mid = 0.5 * (r.lo + r.hi);
        assert_eq!(r.depth.data(), &[mid, mid, 0.0]);
        assert!(matches!(
            resample_fg_depth_range(&d_fg, &d_bg, &mask, 7.0, &mut Rng::new(1)),
            Err(Error::InvalidRange { .. })
        ));
        assert!(matches!(
            resample_fg_depth_range(&d_fg, &d_bg, &BinaryMask::empty(3, 1), 20.0, &mut Rng::new(1)),
            Err(Error::EmptySelection(_))
        ));
    }

    #[test]
    fn depth_composite_cases() {
        let f = inv(2, 1, vec![4.0, 9.0]);
        let b = inv(2, 1, vec![2.0, 1.0]);
        let binary = unit(2, 1, vec![1.0, 0.0]);
        assert_eq!(depth_composite(&f, &b, &binary).unwrap().data(), &[4.0, 1.0]);
        assert_eq!(depth_composite(&f, &b, &unit(2, 1, vec![0.5, 0.0])).unwrap().data(), &[3.0, 1.0]);
        assert_eq!(depth_composite(&f, &b, &unit(2, 1, vec![0.0; 2])).unwrap(), b);
        assert!(matches!(
            depth_composite(&f, &b, &unit(2, 1, vec![1.5, 0.0])),
            Err(Error::InvalidValue(_))
        ));
    }

    #[test]
    fn flow_select() {
        let f = FlowField::uniform(2, 1, 2.0, 0.0).unwrap();
        let b = FlowField::uniform(2, 1, 0.0, 3.0).unwrap();
        let mask = BinaryMask::new(2, 1, vec![true, false]).unwrap();
        assert_eq!(flow_composite(&f, &b, &mask).unwrap().data(), &[2.0, 0.0, 0.0, 3.0]);
        assert_eq!(flow_composite(&f, &b, &BinaryMask::full(2, 1)).unwrap(), f);
        assert_eq!(flow_composite(&f, &b, &BinaryMask::empty(2, 1)).unwrap(), b);
    }

    fn disc_matte(n: usize) -> ScalarMap {
        let c = (n as f64 - 1.0) / 2.0;
        ScalarMap::from_fn(n, n, DepthConvention::Unitless, |x, y| {
            let r = ((x as f64 - c).powi(2) + (y as f64 - c).powi(2)).sqrt();
            (1.0 - (r - n as f64 / 5.0) / 3.0).clamp(0.0, 1.0)
        })
        .unwrap()
    }

    #[test]
    fn depth_pair_binary_matte_has_empty_soft_band() {
        let alpha = ScalarMap::from_fn(8, 8, DepthConvention::Unitless, |x, _| if x >= 4 { 1.0 } else { 0.0 }).unwrap();
        let fg = inv(8, 8, vec![0.5; 64]);
        let bg = inv(8, 8, vec![1.0; 64]);
        let pair = make_depth_training_pair(&alpha, &fg, &bg, &DepthPairParams::new(5.0, 3)).unwrap();
        assert!(pair.m_soft.none_set());
        // binary matte: both masks coincide, so only the blur band differs
        assert_eq!(pair.m_in, pair.m_gt);
        for y in 0..8 {
            for x in [0usize, 7] {
                assert_eq!(pair.d_in.get(x, y), pair.d_gt.get(x, y));
            }
        }
    }

    #[test]
    fn depth_pair_missing_foreground_when_threshold_exceeds_matte() {
        // every alpha value sits at 0.03, just above alpha_min, so any
        // alpha_th draw above 0.03 removes the foreground from the input
        let alpha = ScalarMap::from_fn(4, 4, DepthConvention::Unitless, |x, y| {
            if (1..3).contains(&x) && (1..3).contains(&y) { 0.03 } else { 0.0 }
        })
        .unwrap();
        let fg = inv(4, 4, vec![0.2; 16]);
        let bg = inv(4, 4, vec![1.0; 16]);
        let seed = (0..).find(|s| {
            let mut r = Rng::new(*s);
            r.next_f64();
            r.next_f64();
            r.uniform(0.02, 0.98) > 0.03
        }).unwrap();
        let pair = make_depth_training_pair(&alpha, &fg, &bg, &DepthPairParams::new(5.0, seed)).unwrap();
        assert!(pair.m_in.none_set());
        assert_eq!(pair.d_in, bg);
        assert!(pair.m_gt.count() == 4);
        assert!(pair.d_gt.get(1, 1) >= 1.0);
    }

    #[test]
    fn depth_pair_is_deterministic() {
        let alpha = disc_matte(24);
        let fg = ScalarMap::from_fn(24, 24, DepthConvention::InverseDepth, |x, y| 0.1 + 0.01 * (x + y) as f64).unwrap();
        let bg = ScalarMap::from_fn(24, 24, DepthConvention::InverseDepth, |x, _| 0.5 + 0.02 * x as f64).unwrap();
        let p = DepthPairParams::new(4.0, 99);
        let a = make_depth_training_pair(&alpha, &fg, &bg, &p).unwrap();
        let b = make_depth_training_pair(&alpha, &fg, &bg, &p).unwrap();
        assert_eq!(a, b);
        let d_min = a.manifest.params["d_min"];
        for (v, m) in a.d_gt.data().iter().zip(a.m_gt.data()) {
            if *m {
                assert!(*v >= d_min);
            }
        }
    }

    #[test]
    fn view_sequence_without_motion() {
        let fg = ImageRgb::from_fn(6, 6, |x, y| [x as f64 / 5.0, y as f64 / 5.0, 0.5]).unwrap();
        let alpha = disc_matte(6);
        let bgs = vec![ImageRgb::filled(6, 6, [0.2, 0.3, 0.4]).unwrap(); 3];
        let flows = vec![FlowField::zeros(6, 6); 3];
        let (source, frames) = synthesize_view_frames(&fg, &alpha, &bgs, &flows, (0.0, 0.0), 0.02).unwrap();
        for f in &frames {
            assert_eq!(f.gt, source);
            assert_eq!(f.warped, f.gt);
            assert!(f.coverage.all_set());
        }
    }

    #[test]
    fn view_sequence_count_mismatch() {
        let fg = ImageRgb::filled(4, 4, [0.5; 3]).unwrap();
        let alpha = unit(4, 4, vec![1.0; 16]);
        let bgs = vec![fg.clone(); 2];
        let flows = vec![FlowField::zeros(4, 4)];
        let p = ViewSequenceParams::new(2.0, 2, 0);
        assert!(matches!(
            make_view_training_sequence(&fg, &alpha, &bgs, &flows, &p),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn integer_translation_is_exact() {
        let img = ImageRgb::from_fn(5, 3, |x, y| [x as f64 / 4.0, y as f64 / 2.0, 0.25]).unwrap();
        let t = translate_image(&img, 2.0, 1.0);
        for y in 0..3 {
            for x in 0..5 {
                let expect = if x >= 2 && y >= 1 { img.pixel(x - 2, y - 1) } else { [0.0; 3] };
                assert_eq!(t.pixel(x, y), expect);
            }
        }
    }
}
