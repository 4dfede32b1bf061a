use crate::error::FormatError;

/// Cursor over an ASCII header made of whitespace-separated tokens.
pub(crate) struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pub(crate) pos: usize,
    allow_comments: bool,
}

impl<'a> HeaderCursor<'a> {
    pub(crate) fn new(bytes: &'a [u8], pos: usize, allow_comments: bool) -> Self {
        HeaderCursor {
            bytes,
            pos,
            allow_comments,
        }
    }

    fn skip_separators(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if self.allow_comments && b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                break;
            }
        }
    }

    pub(crate) fn token(&mut self, what: &str) -> Result<(usize, &'a str), FormatError> {
        self.skip_separators();
        let start = self.pos;
        while self.pos < self.bytes.len() && !self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(FormatError::BadHeader {
                offset: start,
                reason: format!("missing {what}"),
            });
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).map_err(|_| {
            FormatError::BadHeader {
                offset: start,
                reason: format!("{what} is not ASCII"),
            }
        })?;
        Ok((start, text))
    }

    pub(crate) fn dimension(&mut self, what: &str) -> Result<usize, FormatError> {
        let (offset, text) = self.token(what)?;
        match text.parse::<usize>() {
            Ok(v) if v > 0 && text.bytes().all(|b| b.is_ascii_digit()) => Ok(v),
            _ => Err(FormatError::BadHeader {
                offset,
                reason: format!("{what} `{text}` is not a positive integer"),
            }),
        }
    }

    /// Consumes the single whitespace byte that terminates the header.
    pub(crate) fn end_of_header(&mut self) -> Result<usize, FormatError> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(self.pos + 1),
            _ => Err(FormatError::BadHeader {
                offset: self.pos,
                reason: "header must end with a single whitespace byte".into(),
            }),
        }
    }
}

pub(crate) fn payload_len(
    offset: usize,
    dims: &[usize],
    bytes_per_item: usize,
) -> Result<usize, FormatError> {
    dims.iter()
        .try_fold(bytes_per_item, |acc, d| acc.checked_mul(*d))
        .ok_or_else(|| FormatError::BadHeader {
            offset,
            reason: "declared dimensions overflow".into(),
        })
}
