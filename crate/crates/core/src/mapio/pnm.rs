use super::header::{payload_len, HeaderCursor};
use crate::error::FormatError;
use crate::imagecore::{BinaryMask, DepthConvention, ImageRgb, ScalarMap};

/// A decoded binary PNM file.
#[derive(Debug, Clone, PartialEq)]
pub enum PnmImage {
    /// P6
    Rgb(ImageRgb),
    /// P5, read as a unitless map in `[0, 1]`
    Gray(ScalarMap),
}

/// Decodes P5/P6 with maxval 255. Samples map to reals by `v / 255`.
pub fn read_pnm(bytes: &[u8]) -> Result<PnmImage, FormatError> {
    let channels = match bytes.get(..2) {
        Some(b"P6") => 3,
        Some(b"P5") => 1,
        other => {
            return Err(FormatError::BadMagic {
                offset: 0,
                found: String::from_utf8_lossy(other.unwrap_or(bytes)).into_owned(),
            })
        }
    };
    let mut cur = HeaderCursor::new(bytes, 2, true);
    let width = cur.dimension("width")?;
    let height = cur.dimension("height")?;
    let (offset, text) = cur.token("maxval")?;
    let maxval: u64 = text.parse().map_err(|_| FormatError::BadHeader {
        offset,
        reason: format!("maxval `{text}` is not an integer"),
    })?;
    if maxval != 255 {
        return Err(FormatError::UnsupportedMaxval { offset, maxval });
    }
    let start = cur.end_of_header()?;
    let expected = payload_len(start, &[width, height, channels], 1)?;
    let available = bytes.len() - start;
    if available < expected {
        return Err(FormatError::TruncatedPayload {
            offset: start,
            expected,
            actual: available,
        });
    }
    let data: Vec<f64> = bytes[start..start + expected]
        .iter()
        .map(|b| f64::from(*b) / 255.0)
        .collect();
    Ok(if channels == 3 {
        PnmImage::Rgb(ImageRgb::from_vec_unchecked(width, height, data))
    } else {
        PnmImage::Gray(ScalarMap::from_vec_unchecked(
            width,
            height,
            data,
            DepthConvention::Unitless,
        ))
    })
}

fn quantize(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

pub fn write_ppm(img: &ImageRgb) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|v| quantize(*v)));
    out
}

/// Writes a scalar map as P5; values are quantized by `round(v·255)` and
/// clamped to `[0, 255]`.
pub fn write_pgm(map: &ScalarMap) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", map.width(), map.height()).into_bytes();
    out.extend(map.data().iter().map(|v| quantize(*v)));
    out
}

pub fn write_pgm_mask(mask: &BinaryMask) -> Vec<u8> {
    write_pgm(&mask.to_map())
}

/// Reads back a mask written by [`write_pgm_mask`] (or any gray image): bits
/// are set where the sample is at least one half.
pub fn mask_from_gray(map: &ScalarMap) -> BinaryMask {
    BinaryMask::from_fn(map.width(), map.height(), |x, y| map.get(x, y) >= 0.5)
}
