//! Raster types shared by every stage, plus the low-level pixel operators
//! (Sobel, Gaussian blur, alpha thresholds, least-squares alignment).
//!
//! All rasters are row-major. Constructors check the invariants of each type,
//! so a value that exists is always well formed: lengths match the declared
//! shape, values are finite, colors are in `[0, 1]`, depth maps are
//! non-negative.

mod ops;

pub use ops::*;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};

/// How the values of a [`ScalarMap`] are to be read.
///
/// Curation and refinement work on inverse depth (larger is nearer, like the
/// output of relative monocular depth models). Reprojection and
/// depth-to-disparity conversion need metric depth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DepthConvention {
    InverseDepth,
    MetricDepth,
    Unitless,
}

impl DepthConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            DepthConvention::InverseDepth => "inverse_depth",
            DepthConvention::MetricDepth => "metric_depth",
            DepthConvention::Unitless => "unitless",
        }
    }

    fn is_depth(self) -> bool {
        !matches!(self, DepthConvention::Unitless)
    }
}

impl std::str::FromStr for DepthConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse_depth" | "inverse" => Ok(DepthConvention::InverseDepth),
            "metric_depth" | "metric" => Ok(DepthConvention::MetricDepth),
            "unitless" => Ok(DepthConvention::Unitless),
            other => Err(Error::param(
                "convention",
                format!("unknown depth convention `{other}`"),
            )),
        }
    }
}

/// Read-only view shared by every raster so metrics and losses can accept
/// either images or scalar maps.
pub trait Planar {
    fn dims(&self) -> (usize, usize);
    fn channels(&self) -> usize;
    fn values(&self) -> &[f64];
}

pub(crate) fn ensure_same_dims(
    context: &'static str,
    left: (usize, usize),
    right: (usize, usize),
) -> Result<()> {
    if left != right {
        return Err(Error::Shape {
            context,
            left,
            right,
        });
    }
    Ok(())
}

fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::Length { expected, actual });
    }
    Ok(())
}

/// Interleaved RGB image with channels in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRgb {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl ImageRgb {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_len(width * height * 3, data.len())?;
        if let Some(i) = data
            .iter()
            .position(|v| !v.is_finite() || *v < 0.0 || *v > 1.0)
        {
            return Err(Error::InvalidValue(format!(
                "color sample {} at index {i} is outside [0, 1]",
                data[i]
            )));
        }
        Ok(ImageRgb {
            width,
            height,
            data,
        })
    }

    pub(crate) fn from_vec_unchecked(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height * 3);
        debug_assert!(data.iter().all(|v| (0.0..=1.0).contains(v)));
        ImageRgb {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: usize, height: usize, rgb: [f64; 3]) -> Result<Self> {
        let data = (0..width * height).flat_map(|_| rgb).collect();
        Self::new(width, height, data)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f64; 3],
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// BT.601 luma.
    pub fn luma(&self) -> ScalarMap {
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2])
            .collect();
        ScalarMap::from_vec_unchecked(self.width, self.height, data, DepthConvention::Unitless)
    }
}

impl Planar for ImageRgb {
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
    fn channels(&self) -> usize {
        3
    }
    fn values(&self) -> &[f64] {
        &self.data
    }
}

/// Single-channel real field tagged with its [`DepthConvention`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarMap {
    width: usize,
    height: usize,
    data: Vec<f64>,
    convention: DepthConvention,
}

impl ScalarMap {
    pub fn new(
        width: usize,
        height: usize,
        data: Vec<f64>,
        convention: DepthConvention,
    ) -> Result<Self> {
        check_len(width * height, data.len())?;
        Self::validate(&data, convention)?;
        Ok(ScalarMap {
            width,
            height,
            data,
            convention,
        })
    }

    fn validate(data: &[f64], convention: DepthConvention) -> Result<()> {
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "non-finite value {} at index {i}",
                data[i]
            )));
        }
        if convention.is_depth() {
            if let Some(i) = data.iter().position(|v| *v < 0.0) {
                return Err(Error::InvalidValue(format!(
                    "negative {} value {} at index {i}",
                    convention.as_str(),
                    data[i]
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn from_vec_unchecked(
        width: usize,
        height: usize,
        data: Vec<f64>,
        convention: DepthConvention,
    ) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(Self::validate(&data, convention).is_ok());
        ScalarMap {
            width,
            height,
            data,
            convention,
        }
    }

    pub fn filled(
        width: usize,
        height: usize,
        value: f64,
        convention: DepthConvention,
    ) -> Result<Self> {
        Self::new(width, height, vec![value; width * height], convention)
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        convention: DepthConvention,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data, convention)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn convention(&self) -> DepthConvention {
        self.convention
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Re-tags the map, re-checking the sign invariant.
    pub fn with_convention(self, convention: DepthConvention) -> Result<Self> {
        Self::validate(&self.data, convention)?;
        Ok(ScalarMap { convention, ..self })
    }

    pub fn require(&self, convention: DepthConvention) -> Result<()> {
        if self.convention != convention {
            return Err(Error::Convention {
                expected: convention,
                actual: self.convention,
            });
        }
        Ok(())
    }

    pub(crate) fn map_unchecked(&self, convention: DepthConvention, f: impl Fn(f64) -> f64) -> Self {
        let data = self.data.iter().map(|&v| f(v)).collect();
        Self::from_vec_unchecked(self.width, self.height, data, convention)
    }
}

impl Planar for ScalarMap {
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
    fn channels(&self) -> usize {
        1
    }
    fn values(&self) -> &[f64] {
        &self.data
    }
}

/// Per-pixel displacement `(u, v)` in pixels, interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl FlowField {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_len(width * height * 2, data.len())?;
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "non-finite flow component at index {i}"
            )));
        }
        Ok(FlowField {
            width,
            height,
            data,
        })
    }

    pub fn uniform(width: usize, height: usize, u: f64, v: f64) -> Result<Self> {
        let data = (0..width * height).flat_map(|_| [u, v]).collect();
        Self::new(width, height, data)
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        FlowField {
            width,
            height,
            data: vec![0.0; width * height * 2],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        let i = (y * self.width + x) * 2;
        (self.data[i], self.data[i + 1])
    }
}

/// Per-pixel membership set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: usize,
    height: usize,
    data: Vec<bool>,
}

impl BinaryMask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_len(width * height, data.len())?;
        Ok(BinaryMask {
            width,
            height,
            data,
        })
    }

    pub fn full(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            data: vec![true; width * height],
        }
    }

    pub fn empty(width: usize, height: usize) -> Self {
        BinaryMask {
            width,
            height,
            data: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        BinaryMask {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[bool] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> bool {
        self.data[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.data[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|b| **b).count()
    }

    pub fn none_set(&self) -> bool {
        !self.data.iter().any(|b| *b)
    }

    pub fn all_set(&self) -> bool {
        self.data.iter().all(|b| *b)
    }

    /// Coordinates of set bits in row-major order.
    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.data
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| (i % w, i / w))
    }

    fn zip_with(&self, other: &BinaryMask, f: impl Fn(bool, bool) -> bool) -> Result<BinaryMask> {
        ensure_same_dims("mask combination", self.dims(), other.dims())?;
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| f(*a, *b))
            .collect();
        Ok(BinaryMask {
            width: self.width,
            height: self.height,
            data,
        })
    }

    pub fn and(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn or(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn xor(&self, other: &BinaryMask) -> Result<BinaryMask> {
        self.zip_with(other, |a, b| a != b)
    }

    pub fn not(&self) -> BinaryMask {
        BinaryMask {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|b| !b).collect(),
        }
    }

    /// Square (Chebyshev) dilation by `radius` pixels.
    pub fn dilate(&self, radius: usize) -> BinaryMask {
        if radius == 0 {
            return self.clone();
        }
        let (w, h) = self.dims();
        let r = radius as isize;
        let mut rows = vec![false; w * h];
        for y in 0..h {
            for x in 0..w {
                let lo = (x as isize - r).max(0) as usize;
                let hi = (x as isize + r).min(w as isize - 1) as usize;
                rows[y * w + x] = (lo..=hi).any(|xx| self.data[y * w + xx]);
            }
        }
        let mut out = vec![false; w * h];
        for y in 0..h {
            let lo = (y as isize - r).max(0) as usize;
            let hi = (y as isize + r).min(h as isize - 1) as usize;
            for x in 0..w {
                out[y * w + x] = (lo..=hi).any(|yy| rows[yy * w + x]);
            }
        }
        BinaryMask {
            width: w,
            height: h,
            data: out,
        }
    }

    /// The mask as a unitless 0/1 map.
    pub fn to_map(&self) -> ScalarMap {
        let data = self.data.iter().map(|b| if *b { 1.0 } else { 0.0 }).collect();
        ScalarMap::from_vec_unchecked(self.width, self.height, data, DepthConvention::Unitless)
    }
}

/// Pinhole intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0 && fx.is_finite() && fy.is_finite()) {
            return Err(Error::param("intrinsics", "focal lengths must be positive"));
        }
        if !(cx.is_finite() && cy.is_finite()) {
            return Err(Error::param("intrinsics", "principal point must be finite"));
        }
        Ok(CameraIntrinsics { fx, fy, cx, cy })
    }

    /// Ray through pixel `(x, y)` scaled to unit z.
    pub fn unproject(&self, x: f64, y: f64) -> Vector3<f64> {
        Vector3::new((x - self.cx) / self.fx, (y - self.cy) / self.fy, 1.0)
    }

    pub fn project(&self, p: &Vector3<f64>) -> (f64, f64) {
        (
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
        )
    }
}

/// Rigid transform from source-camera to target-camera coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidPose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl RigidPose {
    const TOLERANCE: f64 = 1e-9;

    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let gram = rotation.transpose() * rotation;
        let off = (gram - Matrix3::identity()).abs().max();
        if !off.is_finite() || off > Self::TOLERANCE {
            return Err(Error::param("rotation", "matrix is not orthonormal"));
        }
        if (rotation.determinant() - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::param("rotation", "determinant is not +1"));
        }
        if !translation.iter().all(|v| v.is_finite()) {
            return Err(Error::param("translation", "must be finite"));
        }
        Ok(RigidPose {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        RigidPose {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(t: [f64; 3]) -> Result<Self> {
        Self::new(Matrix3::identity(), Vector3::from(t))
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == Matrix3::identity() && self.translation == Vector3::zeros()
    }

    pub fn transform(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constructors_enforce_invariants() {
        assert!(ImageRgb::new(1, 1, vec![0.0, 0.5, 1.0]).is_ok());
        assert!(ImageRgb::new(1, 1, vec![0.0, 0.5, 1.1]).is_err());
        assert!(ImageRgb::new(2, 1, vec![0.0; 3]).is_err());
        assert!(ScalarMap::new(2, 1, vec![-1.0, 1.0], DepthConvention::Unitless).is_ok());
        assert!(ScalarMap::new(2, 1, vec![-1.0, 1.0], DepthConvention::InverseDepth).is_err());
        assert!(ScalarMap::new(1, 1, vec![f64::NAN], DepthConvention::Unitless).is_err());
        assert!(FlowField::new(1, 1, vec![0.0, f64::INFINITY]).is_err());
        assert!(BinaryMask::new(2, 2, vec![true; 3]).is_err());
        assert!(CameraIntrinsics::new(0.0, 1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn pose_validation() {
        let rot = nalgebra::Rotation3::from_euler_angles(0.1, -0.2, 0.3).into_inner();
        assert!(RigidPose::new(rot, Vector3::new(1.0, 2.0, 3.0)).is_ok());
        let reflect = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, -1.0));
        assert!(RigidPose::new(reflect, Vector3::zeros()).is_err());
        assert!(RigidPose::new(rot * 1.01, Vector3::zeros()).is_err());
    }

    #[test]
    fn mask_dilation() {
        let mut m = BinaryMask::empty(5, 5);
        m.set(2, 2, true);
        let d = m.dilate(1);
        assert_eq!(d.count(), 9);
        assert!(d.get(1, 1) && d.get(3, 3) && !d.get(0, 0));
    }
}
