//! Binary PGM (P5) rendering of CCGRAMs.

use std::path::Path;

use crate::augment::{mask_cells, MaskRecord};
use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const MASK_GRAY: u8 = 128;

/// Min–max maps `image` to 0..=255, row 0 at the top. Cells flagged in
/// `overlay` are drawn at [`MASK_GRAY`]. A constant image renders black.
pub fn render_pgm(image: &Matrix, overlay: Option<&[bool]>) -> Result<Vec<u8>> {
    let (rows, cols) = image.shape();
    if image.is_empty() {
        return Err(Error::Empty("image to plot"));
    }
    if let Some(m) = overlay {
        if m.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "mask overlay",
                expected: rows * cols,
                actual: m.len(),
            });
        }
    }
    if image.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("image to plot"));
    }
    let (lo, hi) = image
        .as_slice()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let mut out = format!("P5\n{cols} {rows}\n255\n").into_bytes();
    out.reserve(rows * cols);
    for (i, &v) in image.as_slice().iter().enumerate() {
        let px = if overlay.is_some_and(|m| m[i]) {
            MASK_GRAY
        } else if span > 0.0 {
            ((v - lo) / span * 255.0).round().clamp(0.0, 255.0) as u8
        } else {
            0
        };
        out.push(px);
    }
    Ok(out)
}

/// Renders with the cells covered by `masks` overlaid.
pub fn render_pgm_masked(image: &Matrix, masks: &[MaskRecord]) -> Result<Vec<u8>> {
    let cells = mask_cells(masks, image.rows(), image.cols());
    render_pgm(image, Some(&cells))
}

/// Inserts a `# comment` line after the magic of a rendered PGM.
pub fn with_comment(pgm: Vec<u8>, comment: &str) -> Vec<u8> {
    let mut out = b"P5\n# ".to_vec();
    out.extend_from_slice(comment.replace('\n', " ").as_bytes());
    out.push(b'\n');
    out.extend_from_slice(&pgm[3..]);
    out
}

pub fn write_pgm(path: &Path, image: &Matrix, overlay: Option<&[bool]>) -> Result<()> {
    crate::datasets::atomic_write(path, &render_pgm(image, overlay)?)
}

/// Splits a P5 file into `(width, height, pixels)`.
pub fn parse_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u8>)> {
    let bad = || Error::InvalidConfig("not a binary PGM".into());
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if bytes.get(pos) == Some(&b'#') {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad());
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad())?);
    }
    if fields[0] != "P5" || fields[3] != "255" {
        return Err(bad());
    }
    let w: usize = fields[1].parse().map_err(|_| bad())?;
    let h: usize = fields[2].parse().map_err(|_| bad())?;
    let pixels = bytes.get(pos + 1..).ok_or_else(bad)?;
    if pixels.len() != w * h {
        return Err(Error::TruncatedPayload {
            expected: w * h,
            found: pixels.len(),
        });
    }
    Ok((w, h, pixels.to_vec()))
}
