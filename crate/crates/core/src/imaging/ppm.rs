//! Netpbm color images: binary `P6` and ASCII `P3`.
//!
//! Channels are stored as `value / maxval` on read and quantized with
//! round-half-up to 8 bits (`floor(v * 255 + 0.5)`) on write.

use std::io::{Read, Write};
use std::path::Path;

use super::RgbImage;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PpmFormat {
    Binary,
    Ascii,
}

pub fn quantize(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5).floor() as u8
}

pub fn encode_ppm(img: &RgbImage, format: PpmFormat) -> Vec<u8> {
    let magic = match format {
        PpmFormat::Binary => "P6",
        PpmFormat::Ascii => "P3",
    };
    let mut out = format!("{magic}\n{} {}\n255\n", img.width, img.height).into_bytes();
    match format {
        PpmFormat::Binary => {
            for px in &img.pixels {
                out.extend(px.iter().map(|&c| quantize(c)));
            }
        }
        PpmFormat::Ascii => {
            for row in img.pixels.chunks(img.width.max(1)) {
                let line: Vec<String> = row
                    .iter()
                    .flat_map(|px| px.iter().map(|&c| quantize(c).to_string()))
                    .collect();
                out.extend(line.join(" ").into_bytes());
                out.push(b'\n');
            }
        }
    }
    out
}

pub fn write_ppm(path: &Path, img: &RgbImage, format: PpmFormat) -> Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(&encode_ppm(img, format))?;
    Ok(())
}

pub fn read_ppm(path: &Path) -> Result<RgbImage> {
    let mut buf = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut buf)?;
    decode_ppm(&buf)
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.data.len() {
            match self.data[self.pos] {
                b'#' => {
                    while self.pos < self.data.len() && self.data[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn token(&mut self) -> Result<&str> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.data.len() && !self.data[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::Ppm("unexpected end of data".into()));
        }
        std::str::from_utf8(&self.data[start..self.pos])
            .map_err(|_| Error::Ppm("non-ASCII header".into()))
    }

    fn number(&mut self, what: &str) -> Result<usize> {
        let tok = self.token()?;
        tok.parse()
            .map_err(|_| Error::Ppm(format!("bad {what} '{tok}'")))
    }
}

pub fn decode_ppm(data: &[u8]) -> Result<RgbImage> {
    let mut cur = Cursor { data, pos: 0 };
    let magic = cur.token()?.to_string();
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if !(1..=65535).contains(&maxval) {
        return Err(Error::Ppm(format!("maxval {maxval} out of range")));
    }
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(3))
        .ok_or_else(|| Error::Ppm("image dimensions overflow".into()))?;
    let scale = maxval as f64;
    let samples: Vec<usize> = match magic.as_str() {
        "P6" => {
            // exactly one whitespace byte separates the header from the raster
            cur.pos += 1;
            let bytes_per = if maxval < 256 { 1 } else { 2 };
            let raster = data
                .get(cur.pos..cur.pos + count * bytes_per)
                .ok_or_else(|| Error::Ppm("truncated raster".into()))?;
            if bytes_per == 1 {
                raster.iter().map(|&b| b as usize).collect()
            } else {
                raster
                    .chunks_exact(2)
                    .map(|c| (c[0] as usize) << 8 | c[1] as usize)
                    .collect()
            }
        }
        "P3" => (0..count)
            .map(|_| cur.number("sample"))
            .collect::<Result<_>>()?,
        other => return Err(Error::Ppm(format!("unsupported magic '{other}'"))),
    };
    if let Some(&s) = samples.iter().find(|&&s| s > maxval) {
        return Err(Error::Ppm(format!("sample {s} exceeds maxval {maxval}")));
    }
    let pixels = samples
        .chunks_exact(3)
        .map(|c| {
            [
                c[0] as f64 / scale,
                c[1] as f64 / scale,
                c[2] as f64 / scale,
            ]
        })
        .collect();
    RgbImage::new(width, height, pixels)
}
