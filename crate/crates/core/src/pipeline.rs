//! Monocular-to-stereo conversion, end to end.
//!
//! [`stereo_pipeline`] runs the stages in order: optional gated-residual
//! refinement of the depth, depth to disparity, forward warping to the right
//! view, hole filling and color fusion. The painter and fuser stages can be
//! replaced by precomputed images from external models.

use crate::error::{Error, Result};
use crate::imagecore::{ensure_same_dims, BinaryMask, DepthConvention, ImageRgb, ScalarMap};
use crate::paintfuse::{masked_color_fuse, pushpull_inpaint};
use crate::refine::gated_residual;
use crate::warp::{depth_to_disparity, forward_warp_disparity, inverse_depth_to_disparity, SplatConfig};

/// How depth becomes horizontal disparity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DisparityModel {
    /// Metric depth: `disparity = fB / d`.
    Metric { f_b: f64 },
    /// Inverse depth: `disparity = scale · d`.
    InverseScale { scale: f64 },
}

#[derive(Debug, Clone)]
pub struct StereoOptions {
    pub disparity: DisparityModel,
    /// Gate and residual maps for refinement; refinement is skipped without them.
    pub refine: Option<(ScalarMap, ScalarMap)>,
    /// Replaces the push-pull painter.
    pub inpainted: Option<ImageRgb>,
    /// Replaces the feathered fuser.
    pub fused: Option<ImageRgb>,
    pub splat: SplatConfig,
    pub feather_sigma: f64,
}

impl StereoOptions {
    pub fn new(disparity: DisparityModel) -> Self {
        StereoOptions {
            disparity,
            refine: None,
            inpainted: None,
            fused: None,
            splat: SplatConfig::default(),
            feather_sigma: 1.0,
        }
    }
}

/// Every intermediate of a pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoOutput {
    pub depth: ScalarMap,
    pub disparity: ScalarMap,
    pub warped: ImageRgb,
    pub coverage: BinaryMask,
    pub inpainted: ImageRgb,
    pub right: ImageRgb,
}

fn check_override(img: &ImageRgb, left: &ImageRgb, stage: &'static str) -> Result<()> {
    ensure_same_dims("stage override", (left.width(), left.height()), (img.width(), img.height()))
        .map_err(|e| e.in_stage(stage))
}

pub fn stereo_pipeline(left: &ImageRgb, depth: &ScalarMap, opts: &StereoOptions) -> Result<StereoOutput> {
    ensure_same_dims("stereo_pipeline", (left.width(), left.height()), depth.dims())
        .map_err(|e| e.in_stage("input"))?;

    let depth = match &opts.refine {
        Some((gate, residual)) => gated_residual(depth, residual, gate).map_err(|e| e.in_stage("refine"))?,
        None => depth.clone(),
    };

    let (disparity, zbuf) = match opts.disparity {
        DisparityModel::Metric { f_b } => {
            let disp = depth_to_disparity(&depth, f_b).map_err(|e| e.in_stage("disparity"))?;
            let z = depth.map_unchecked(DepthConvention::Unitless, |d| 1.0 / d);
            (disp, z)
        }
        DisparityModel::InverseScale { scale } => {
            let disp = inverse_depth_to_disparity(&depth, scale).map_err(|e| e.in_stage("disparity"))?;
            (disp, depth.clone())
        }
    };

    let warped = forward_warp_disparity(left, &disparity, &zbuf, &opts.splat).map_err(|e| e.in_stage("warp"))?;

    let inpainted = match &opts.inpainted {
        Some(img) => {
            check_override(img, left, "inpaint")?;
            img.clone()
        }
        None => pushpull_inpaint(&warped.image, &warped.coverage).map_err(|e| e.in_stage("inpaint"))?,
    };

    let right = match &opts.fused {
        Some(img) => {
            check_override(img, left, "fuse")?;
            img.clone()
        }
        None => masked_color_fuse(&warped.image, &inpainted, &warped.coverage, opts.feather_sigma)
            .map_err(|e| e.in_stage("fuse"))?,
    };

    Ok(StereoOutput {
        depth,
        disparity,
        warped: warped.image,
        coverage: warped.coverage,
        inpainted,
        right,
    })
}

/// Shorthand for the stage an error came from, if any.
pub fn failed_stage(e: &Error) -> Option<&'static str> {
    match e {
        Error::Stage { stage, .. } => Some(stage),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene() -> (ImageRgb, ScalarMap) {
        let left = ImageRgb::from_fn(12, 8, |x, y| [x as f64 / 12.0, y as f64 / 8.0, 0.5]).unwrap();
        let depth = ScalarMap::from_fn(12, 8, DepthConvention::InverseDepth, |x, _| if x > 5 { 2.0 } else { 1.0 }).unwrap();
        (left, depth)
    }

    #[test]
    fn zero_parallax_is_identity() {
        let (left, depth) = scene();
        let out = stereo_pipeline(&left, &depth, &StereoOptions::new(DisparityModel::InverseScale { scale: 0.0 })).unwrap();
        assert_eq!(out.warped, left);
        assert!(out.coverage.all_set());
        assert_eq!(out.right, left);
    }

    #[test]
    fn holes_are_filled() {
        let (left, depth) = scene();
        let out = stereo_pipeline(&left, &depth, &StereoOptions::new(DisparityModel::InverseScale { scale: 1.5 })).unwrap();
        assert!(!out.coverage.all_set());
        for (x, y) in out.coverage.iter_set() {
            assert_eq!(out.inpainted.pixel(x, y), out.warped.pixel(x, y));
        }
    }

    #[test]
    fn errors_name_their_stage() {
        let (left, depth) = scene();
        let opts = StereoOptions::new(DisparityModel::Metric { f_b: 3.0 });
        let err = stereo_pipeline(&left, &depth, &opts).unwrap_err();
        assert_eq!(failed_stage(&err), Some("disparity"));
        let mut opts = StereoOptions::new(DisparityModel::InverseScale { scale: 1.0 });
        opts.refine = Some((ScalarMap::filled(12, 8, 2.0, DepthConvention::Unitless).unwrap(), depth.clone()));
        assert_eq!(failed_stage(&stereo_pipeline(&left, &depth, &opts).unwrap_err()), Some("refine"));
    }
}
