use crate::error::{Error, FormatError};
use crate::imagecore::FlowField;

/// Middlebury tag, the float whose little-endian bytes spell `PIEH`.
pub const FLO_MAGIC: f32 = 202021.25;

const HEADER_LEN: usize = 12;

fn le_word(bytes: &[u8], at: usize) -> [u8; 4] {
    [bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]]
}

/// Decodes a `.flo` file: magic, `i32` width and height, then interleaved
/// `(u, v)` float32 values, top-to-bottom, all little-endian.
pub fn read_flo(bytes: &[u8]) -> Result<FlowField, FormatError> {
    if bytes.len() < HEADER_LEN {
        return Err(FormatError::TruncatedPayload {
            offset: 0,
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    let magic = f32::from_le_bytes(le_word(bytes, 0));
    if magic != FLO_MAGIC {
        return Err(FormatError::BadMagic {
            offset: 0,
            found: format!("{magic}"),
        });
    }
    let dim = |at: usize, what: &str| -> Result<usize, FormatError> {
        let v = i32::from_le_bytes(le_word(bytes, at));
        if v <= 0 {
            return Err(FormatError::BadHeader {
                offset: at,
                reason: format!("{what} {v} is not positive"),
            });
        }
        Ok(v as usize)
    };
    let width = dim(4, "width")?;
    let height = dim(8, "height")?;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| FormatError::BadHeader {
            offset: 4,
            reason: "declared dimensions overflow".into(),
        })?;
    let actual = bytes.len() - HEADER_LEN;
    if actual != expected {
        return Err(FormatError::TruncatedPayload {
            offset: HEADER_LEN,
            expected,
            actual,
        });
    }
    let mut data = Vec::with_capacity(width * height * 2);
    for (i, word) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(le_word(word, 0));
        if !v.is_finite() {
            return Err(FormatError::NonFinite {
                offset: HEADER_LEN + 4 * i,
            });
        }
        data.push(f64::from(v));
    }
    Ok(FlowField::new(width, height, data).expect("validated above"))
}

pub fn write_flo(flow: &FlowField) -> Result<Vec<u8>, Error> {
    let (w, h) = flow.dims();
    let dims = |n: usize| {
        i32::try_from(n).map_err(|_| Error::InvalidValue(format!("dimension {n} exceeds i32")))
    };
    let mut out = Vec::with_capacity(HEADER_LEN + w * h * 8);
    out.extend(FLO_MAGIC.to_le_bytes());
    out.extend(dims(w)?.to_le_bytes());
    out.extend(dims(h)?.to_le_bytes());
    for (i, v) in flow.data().iter().enumerate() {
        let f = *v as f32;
        if !f.is_finite() {
            return Err(Error::InvalidValue(format!(
                "flow component {v} at index {i} is not representable as a finite f32"
            )));
        }
        out.extend(f.to_le_bytes());
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magic_spells_pieh() {
        assert_eq!(&FLO_MAGIC.to_le_bytes(), b"PIEH");
    }

    #[test]
    fn single_vector_roundtrip() {
        let flow = FlowField::new(1, 1, vec![3.5, -2.0]).unwrap();
        let bytes = write_flo(&flow).unwrap();
        assert_eq!(bytes.len(), 20);
        assert_eq!(read_flo(&bytes).unwrap(), flow);
    }

    #[test]
    fn zero_flow_payload() {
        let bytes = write_flo(&FlowField::zeros(3, 2)).unwrap();
        assert!(bytes[12..].iter().all(|b| *b == 0));
        assert_eq!(read_flo(&bytes).unwrap(), FlowField::zeros(3, 2));
    }

    #[test]
    fn wrong_magic_and_sizes() {
        let mut bytes = write_flo(&FlowField::zeros(1, 1)).unwrap();
        bytes[..4].copy_from_slice(&202021.0f32.to_le_bytes());
        assert!(matches!(read_flo(&bytes), Err(FormatError::BadMagic { .. })));

        let good = write_flo(&FlowField::zeros(2, 2)).unwrap();
        assert!(matches!(
            read_flo(&good[..good.len() - 1]),
            Err(FormatError::TruncatedPayload { .. })
        ));
        let mut long = good.clone();
        long.push(0);
        assert!(matches!(
            read_flo(&long),
            Err(FormatError::TruncatedPayload { .. })
        ));
    }
}
