//! Binary PNM (P5 grayscale, P6 RGB) at 8 or 16 bits per channel.
//!
//! Header fields are separated by whitespace and may carry `#` comments;
//! exactly one whitespace byte follows the maxval before the raster. 16-bit
//! samples are big-endian. Encoding writes `P5\n<w> <h>\n<maxval>\n` and
//! quantizes with round-half-up.

use slhe_core::{ColorImage, Image, ImagePlane};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PnmError {
    #[error("not a binary PNM: bad magic")]
    BadMagic,
    #[error("malformed header: {0}")]
    Header(&'static str),
    #[error("invalid dimensions {0}x{1}")]
    Dimensions(i64, i64),
    #[error("unsupported maxval {0} (only 255 and 65535)")]
    UnsupportedDepth(i64),
    #[error("raster truncated: need {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("unsupported encode maxval {0}")]
    EncodeDepth(u32),
}

/// A decoded image plus the depth it was stored at.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub image: Image,
    pub maxval: u16,
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn integer(&mut self, what: &'static str) -> Result<i64, PnmError> {
        self.skip_space_and_comments();
        let start = self.pos;
        if self.bytes.get(self.pos) == Some(&b'-') {
            self.pos += 1;
        }
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(PnmError::Header(what))
    }
}

pub fn decode_pnm(bytes: &[u8]) -> Result<Decoded, PnmError> {
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(PnmError::BadMagic),
    };
    if !bytes.get(2).is_some_and(|b| b.is_ascii_whitespace() || *b == b'#') {
        return Err(PnmError::BadMagic);
    }
    let mut cur = Cursor { bytes, pos: 2 };
    let width = cur.integer("width")?;
    let height = cur.integer("height")?;
    if width <= 0 || height <= 0 {
        return Err(PnmError::Dimensions(width, height));
    }
    let maxval = cur.integer("maxval")?;
    let maxval: u16 = match maxval {
        255 | 65535 => maxval as u16,
        other => return Err(PnmError::UnsupportedDepth(other)),
    };
    if !bytes.get(cur.pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(PnmError::Header("missing separator after maxval"));
    }
    let raster = &bytes[cur.pos + 1..];

    let (w, h) = (width as usize, height as usize);
    let bps = if maxval == 255 { 1 } else { 2 };
    let expected = w
        .checked_mul(h)
        .and_then(|n| n.checked_mul(channels * bps))
        .ok_or(PnmError::Dimensions(width, height))?;
    if raster.len() < expected {
        return Err(PnmError::Truncated {
            expected,
            found: raster.len(),
        });
    }
    let scale = f64::from(maxval);
    let samples: Vec<f64> = if bps == 1 {
        raster[..expected].iter().map(|&b| f64::from(b) / scale).collect()
    } else {
        raster[..expected]
            .chunks_exact(2)
            .map(|c| f64::from(u16::from_be_bytes([c[0], c[1]])) / scale)
            .collect()
    };

    // In-range by construction, so the validating constructors cannot fail.
    let image = if channels == 1 {
        Image::Gray(ImagePlane::new(w, h, samples).expect("valid plane"))
    } else {
        let pixels = samples.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Image::Color(ColorImage::new(w, h, pixels, maxval).expect("valid color image"))
    };
    Ok(Decoded { image, maxval })
}

#[inline]
fn quantize(sample: f64, maxval: u16) -> u16 {
    let m = f64::from(maxval);
    (sample * m + 0.5).floor().clamp(0.0, m) as u16
}

pub fn encode_pnm(image: &Image, maxval: u16) -> Result<Vec<u8>, PnmError> {
    if maxval != 255 && maxval != 65535 {
        return Err(PnmError::EncodeDepth(u32::from(maxval)));
    }
    let (magic, (w, h)) = match image {
        Image::Gray(p) => ("P5", p.dims()),
        Image::Color(c) => ("P6", c.dims()),
    };
    let mut out = format!("{magic}\n{w} {h}\n{maxval}\n").into_bytes();
    let mut push = |s: f64| {
        let q = quantize(s, maxval);
        if maxval == 255 {
            out.push(q as u8);
        } else {
            out.extend_from_slice(&q.to_be_bytes());
        }
    };
    match image {
        Image::Gray(p) => p.samples().iter().for_each(|&s| push(s)),
        Image::Color(c) => c.pixels().iter().flatten().for_each(|&s| push(s)),
    }
    Ok(out)
}
