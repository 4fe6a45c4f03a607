//! Netpbm graymap (P2 ASCII / P5 binary) reader and P5 writer.

use super::image::{quantize_sample, BitDepth, Image};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("PGM parse error at byte {offset}: {message}")]
pub struct PgmError {
    pub offset: usize,
    pub message: String,
}

impl PgmError {
    fn new(offset: usize, message: impl Into<String>) -> Self {
        Self {
            offset,
            message: message.into(),
        }
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b.is_ascii_whitespace() {
                self.pos += 1;
            } else if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    /// Reads an unsigned decimal token, returning it with the offset where it starts.
    fn read_uint(&mut self, what: &str) -> Result<(u64, usize), PgmError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        let mut value: u64 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(b - b'0')))
                .ok_or_else(|| PgmError::new(start, format!("{what} does not fit in 64 bits")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(match self.bytes.get(start) {
                None => PgmError::new(start, format!("unexpected end of data, expected {what}")),
                Some(_) => PgmError::new(start, format!("expected {what} as a decimal integer")),
            });
        }
        if let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_whitespace() && b != b'#' {
                return Err(PgmError::new(self.pos, format!("unexpected byte 0x{b:02x} after {what}")));
            }
        }
        Ok((value, start))
    }
}

/// Decodes a P2 or P5 graymap with maxval 255 or 65535 into normalized intensities.
pub fn load_pgm(bytes: &[u8]) -> Result<Image, PgmError> {
    let ascii = match bytes.get(..2) {
        Some(b"P2") => true,
        Some(b"P5") => false,
        _ => return Err(PgmError::new(0, "missing magic number, expected P2 or P5")),
    };
    let mut cur = Cursor { bytes, pos: 2 };
    if let Some(&b) = bytes.get(2) {
        if !b.is_ascii_whitespace() && b != b'#' {
            return Err(PgmError::new(2, "magic number must be followed by whitespace"));
        }
    }

    let (width, w_at) = cur.read_uint("width")?;
    let (height, h_at) = cur.read_uint("height")?;
    let (maxval, m_at) = cur.read_uint("maxval")?;
    if width == 0 {
        return Err(PgmError::new(w_at, "width must be at least 1"));
    }
    if height == 0 {
        return Err(PgmError::new(h_at, "height must be at least 1"));
    }
    let depth = match maxval {
        255 => BitDepth::Eight,
        65535 => BitDepth::Sixteen,
        other => {
            return Err(PgmError::new(
                m_at,
                format!("unsupported maxval {other}, expected 255 or 65535"),
            ))
        }
    };
    let count = usize::try_from(width)
        .ok()
        .zip(usize::try_from(height).ok())
        .and_then(|(w, h)| w.checked_mul(h))
        .ok_or_else(|| PgmError::new(w_at, "image dimensions overflow"))?;
    let (width, height) = (width as usize, height as usize);
    let scale = maxval as f64;

    let mut data = Vec::with_capacity(count.min(1 << 24));
    if ascii {
        for i in 0..count {
            let (v, at) = cur.read_uint("pixel value").map_err(|e| {
                if e.offset >= bytes.len() {
                    PgmError::new(e.offset, format!("pixel data ends after {i} of {count} samples"))
                } else {
                    e
                }
            })?;
            if v > maxval {
                return Err(PgmError::new(at, format!("sample {v} exceeds maxval {maxval}")));
            }
            data.push(v as f64 / scale);
        }
        cur.skip_whitespace_and_comments();
        if cur.pos < bytes.len() {
            return Err(PgmError::new(cur.pos, format!("unexpected data after {count} samples")));
        }
    } else {
        // Exactly one whitespace byte separates maxval from the raster.
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(PgmError::new(cur.pos, "expected single whitespace before pixel data")),
        }
        let sample_bytes = if depth == BitDepth::Eight { 1 } else { 2 };
        let payload = &bytes[cur.pos..];
        let expected = count
            .checked_mul(sample_bytes)
            .ok_or_else(|| PgmError::new(w_at, "image dimensions overflow"))?;
        if payload.len() != expected {
            let offset = cur.pos + payload.len().min(expected);
            return Err(PgmError::new(
                offset,
                format!("pixel payload holds {} bytes, expected {expected}", payload.len()),
            ));
        }
        match depth {
            BitDepth::Eight => data.extend(payload.iter().map(|&b| b as f64 / scale)),
            BitDepth::Sixteen => data.extend(
                payload
                    .chunks_exact(2)
                    .map(|c| u16::from_be_bytes([c[0], c[1]]) as f64 / scale),
            ),
        }
    }

    let img = Image::new(width, height, data)
        .map_err(|e| PgmError::new(0, e.to_string()))?;
    Ok(img.with_source_bit_depth(depth))
}

/// Encodes an image as binary P5; intensity `v` is written as `round(v * maxval)`.
pub fn save_pgm(img: &Image, depth: BitDepth) -> Vec<u8> {
    let header = format!("P5\n{} {}\n{}\n", img.width(), img.height(), depth.maxval());
    let sample_bytes = if depth == BitDepth::Eight { 1 } else { 2 };
    let mut out = Vec::with_capacity(header.len() + img.len() * sample_bytes);
    out.extend_from_slice(header.as_bytes());
    for &v in img.data() {
        let q = quantize_sample(v, depth);
        match depth {
            BitDepth::Eight => out.push(q as u8),
            BitDepth::Sixteen => out.extend_from_slice(&(q as u16).to_be_bytes()),
        }
    }
    out
}
