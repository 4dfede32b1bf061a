use super::header::{payload_len, HeaderCursor};
use crate::error::{Error, FormatError};
use crate::imagecore::{DepthConvention, ScalarMap};

/// Byte order of the float payload. PFM encodes it in the sign of the scale
/// field: negative means little-endian.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endianness {
    Little,
    Big,
}

/// Decodes a grayscale `Pf` file. Rows are stored bottom-to-top on disk and
/// returned top-to-bottom. The map is tagged unitless; callers re-tag it with
/// [`ScalarMap::with_convention`].
pub fn read_pfm(bytes: &[u8]) -> Result<ScalarMap, FormatError> {
    read_pfm_with_endianness(bytes).map(|(m, _)| m)
}

/// [`read_pfm`], also reporting the byte order the file was stored in.
pub fn read_pfm_with_endianness(bytes: &[u8]) -> Result<(ScalarMap, Endianness), FormatError> {
    match bytes.get(..2) {
        Some(b"Pf") => {}
        Some(b"PF") => {
            return Err(FormatError::UnsupportedChannel {
                offset: 0,
                found: "PF (three-channel)".into(),
            })
        }
        other => {
            return Err(FormatError::BadMagic {
                offset: 0,
                found: String::from_utf8_lossy(other.unwrap_or(bytes)).into_owned(),
            })
        }
    }
    let mut cur = HeaderCursor::new(bytes, 2, false);
    let width = cur.dimension("width")?;
    let height = cur.dimension("height")?;
    let (offset, text) = cur.token("scale")?;
    let scale: f64 = text
        .parse()
        .ok()
        .filter(|s: &f64| s.is_finite() && *s != 0.0)
        .ok_or_else(|| FormatError::BadHeader {
            offset,
            reason: format!("scale `{text}` must be a finite non-zero number"),
        })?;
    let endian = if scale < 0.0 {
        Endianness::Little
    } else {
        Endianness::Big
    };
    let start = cur.end_of_header()?;
    let expected = payload_len(start, &[width, height], 4)?;
    let available = bytes.len() - start;
    if available < expected {
        return Err(FormatError::TruncatedPayload {
            offset: start,
            expected,
            actual: available,
        });
    }
    let mut data = vec![0.0; width * height];
    for (disk_row, chunk) in bytes[start..start + expected]
        .chunks_exact(width * 4)
        .enumerate()
    {
        let y = height - 1 - disk_row;
        for (x, word) in chunk.chunks_exact(4).enumerate() {
            let raw = [word[0], word[1], word[2], word[3]];
            let v = match endian {
                Endianness::Little => f32::from_le_bytes(raw),
                Endianness::Big => f32::from_be_bytes(raw),
            };
            if !v.is_finite() {
                return Err(FormatError::NonFinite {
                    offset: start + (disk_row * width + x) * 4,
                });
            }
            data[y * width + x] = f64::from(v);
        }
    }
    Ok((
        ScalarMap::from_vec_unchecked(width, height, data, DepthConvention::Unitless),
        endian,
    ))
}

/// Encodes a map as `Pf` with header `Pf\n{w} {h}\n{±1.0}\n`.
///
/// Values are narrowed to `f32`; a value that overflows to infinity is
/// rejected.
pub fn write_pfm(map: &ScalarMap, endian: Endianness) -> Result<Vec<u8>, Error> {
    let scale = match endian {
        Endianness::Little => "-1.0",
        Endianness::Big => "1.0",
    };
    let (w, h) = map.dims();
    let mut out = format!("Pf\n{w} {h}\n{scale}\n").into_bytes();
    out.reserve(w * h * 4);
    for y in (0..h).rev() {
        for x in 0..w {
            let v = map.get(x, y) as f32;
            if !v.is_finite() {
                return Err(Error::InvalidValue(format!(
                    "value {} at ({x}, {y}) is not representable as a finite f32",
                    map.get(x, y)
                )));
            }
            out.extend(match endian {
                Endianness::Little => v.to_le_bytes(),
                Endianness::Big => v.to_be_bytes(),
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_one_roundtrip() {
        let m = ScalarMap::new(2, 1, vec![0.5, 2.0], DepthConvention::Unitless).unwrap();
        for endian in [Endianness::Little, Endianness::Big] {
            let bytes = write_pfm(&m, endian).unwrap();
            assert_eq!(read_pfm(&bytes).unwrap(), m);
            assert_eq!(write_pfm(&read_pfm(&bytes).unwrap(), endian).unwrap(), bytes);
        }
    }

    #[test]
    fn negative_scale_is_little_endian() {
        let mut bytes = b"Pf\n1 1\n-1.0\n".to_vec();
        bytes.extend(3.5f32.to_le_bytes());
        assert_eq!(read_pfm(&bytes).unwrap().data(), &[3.5]);
        let mut be = b"Pf\n1 1\n1.0\n".to_vec();
        be.extend(3.5f32.to_be_bytes());
        assert_eq!(read_pfm(&be).unwrap().data(), &[3.5]);
    }

    #[test]
    fn rows_are_bottom_to_top() {
        let mut bytes = b"Pf\n1 2\n-1.0\n".to_vec();
        bytes.extend(1.0f32.to_le_bytes());
        bytes.extend(2.0f32.to_le_bytes());
        let m = read_pfm(&bytes).unwrap();
        assert_eq!(m.get(0, 0), 2.0);
        assert_eq!(m.get(0, 1), 1.0);
    }

    #[test]
    fn color_header_rejected() {
        let mut bytes = b"PF\n1 1\n-1.0\n".to_vec();
        bytes.extend([0u8; 12]);
        assert!(matches!(
            read_pfm(&bytes),
            Err(FormatError::UnsupportedChannel { .. })
        ));
    }

    #[test]
    fn non_finite_rejected_both_ways() {
        let mut bytes = b"Pf\n1 1\n-1.0\n".to_vec();
        bytes.extend(f32::NAN.to_le_bytes());
        assert!(matches!(
            read_pfm(&bytes),
            Err(FormatError::NonFinite { offset: 12 })
        ));
        let big = ScalarMap::new(1, 1, vec![1e300], DepthConvention::Unitless).unwrap();
        assert!(matches!(
            write_pfm(&big, Endianness::Little),
            Err(Error::InvalidValue(_))
        ));
    }
}
