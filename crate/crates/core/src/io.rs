//! Image and kernel files.
//!
//! Images: 8/16-bit PNG (gray, gray+alpha, RGB, RGBA, palette; alpha is
//! dropped) and PFM (`Pf` gray or `PF` RGB, 32-bit float, either byte order
//! on read, little-endian on write). Integer formats map to `[0, 1]`; PFM
//! values pass through unchanged.
//!
//! Kernels: ASCII text, a header line `H W` followed by `H` lines of `W`
//! whitespace-separated decimal numbers. The writer emits 9 significant
//! digits.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::{luminance, Image};
use crate::kernel::Kernel;

/// One or three same-sized channels.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    pub channels: Vec<Image>,
}

impl Raster {
    pub fn gray(img: Image) -> Self {
        Self {
            channels: vec![img],
        }
    }

    pub fn rgb(r: Image, g: Image, b: Image) -> Self {
        Self {
            channels: vec![r, g, b],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.channels[0].dims()
    }

    pub fn is_color(&self) -> bool {
        self.channels.len() == 3
    }

    /// The single channel, or Rec. 601 luminance of a color raster.
    pub fn to_luminance(&self) -> Image {
        match self.channels.as_slice() {
            [g] => g.clone(),
            [r, g, b] => luminance(r, g, b),
            _ => unreachable!("rasters hold one or three channels"),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ImageReadOptions {
    /// Decode integer formats from sRGB to linear.
    pub srgb: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BitDepth {
    Eight,
    Sixteen,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ImageWriteOptions {
    /// PNG sample depth; ignored for PFM.
    pub depth: BitDepth,
    /// Encode integer formats from linear to sRGB.
    pub srgb: bool,
}

impl Default for ImageWriteOptions {
    fn default() -> Self {
        Self {
            depth: BitDepth::Eight,
            srgb: false,
        }
    }
}

fn srgb_to_linear(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

fn linear_to_srgb(v: f64) -> f64 {
    if v <= 0.0031308 {
        12.92 * v
    } else {
        1.055 * v.powf(1.0 / 2.4) - 0.055
    }
}

/// `floor(v * max + 0.5)` after clamping to `[0, 1]`.
pub fn quantize(v: f64, max: u32) -> u32 {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    (v * max as f64 + 0.5).floor() as u32
}

fn corrupt(path: &Path, reason: impl Into<String>) -> Error {
    Error::CorruptFile {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

pub fn read_image(path: impl AsRef<Path>, opts: &ImageReadOptions) -> Result<Raster> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    if bytes.starts_with(b"\x89PNG\r\n\x1a\n") {
        decode_png(path, &bytes, opts)
    } else if bytes.starts_with(b"PF") || bytes.starts_with(b"Pf") {
        decode_pfm(path, &bytes)
    } else {
        Err(Error::UnsupportedFormat(format!(
            "{}: not a PNG or PFM file",
            path.display()
        )))
    }
}

pub fn write_image(path: impl AsRef<Path>, img: &Raster, opts: &ImageWriteOptions) -> Result<()> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("png") => encode_png(path, img, opts),
        Some("pfm") => encode_pfm(path, img),
        _ => Err(Error::UnsupportedFormat(format!(
            "{}: output extension must be .png or .pfm",
            path.display()
        ))),
    }
}

fn decode_png(path: &Path, bytes: &[u8], opts: &ImageReadOptions) -> Result<Raster> {
    let mut decoder = png::Decoder::new(std::io::Cursor::new(bytes));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| corrupt(path, e.to_string()))?;
    let mut buf = vec![
        0;
        reader
            .output_buffer_size()
            .ok_or_else(|| corrupt(path, "image too large"))?
    ];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| corrupt(path, e.to_string()))?;
    let (w, h) = (info.width as usize, info.height as usize);
    let samples = info.color_type.samples();
    let (max, sample): (f64, Box<dyn Fn(usize) -> u32>) = match info.bit_depth {
        png::BitDepth::Sixteen => (
            65535.0,
            Box::new(|i: usize| u16::from_be_bytes([buf[2 * i], buf[2 * i + 1]]) as u32),
        ),
        png::BitDepth::Eight => (255.0, Box::new(|i: usize| buf[i] as u32)),
        d => return Err(Error::UnsupportedFormat(format!("PNG bit depth {d:?}"))),
    };
    let color_channels = match info.color_type {
        png::ColorType::Grayscale | png::ColorType::GrayscaleAlpha => 1,
        png::ColorType::Rgb | png::ColorType::Rgba => 3,
        other => {
            return Err(Error::UnsupportedFormat(format!(
                "PNG color type {other:?}"
            )))
        }
    };
    let decode = |v: u32| {
        let x = v as f64 / max;
        if opts.srgb {
            srgb_to_linear(x)
        } else {
            x
        }
    };
    let channels = (0..color_channels)
        .map(|c| Image::from_fn(w, h, |x, y| decode(sample((y * w + x) * samples + c))))
        .collect();
    Ok(Raster { channels })
}

fn encode_png(path: &Path, img: &Raster, opts: &ImageWriteOptions) -> Result<()> {
    let (w, h) = img.dims();
    let file = fs::File::create(path)?;
    let mut encoder = png::Encoder::new(BufWriter::new(file), w as u32, h as u32);
    encoder.set_color(if img.is_color() {
        png::ColorType::Rgb
    } else {
        png::ColorType::Grayscale
    });
    let (depth, max) = match opts.depth {
        BitDepth::Eight => (png::BitDepth::Eight, 255),
        BitDepth::Sixteen => (png::BitDepth::Sixteen, 65535),
    };
    encoder.set_depth(depth);
    let encode = |v: f64| {
        quantize(
            if opts.srgb {
                linear_to_srgb(v.clamp(0.0, 1.0))
            } else {
                v
            },
            max,
        )
    };
    let mut data = Vec::with_capacity(w * h * img.channels.len() * 2);
    for y in 0..h {
        for x in 0..w {
            for c in &img.channels {
                let q = encode(c.get(x, y));
                match opts.depth {
                    BitDepth::Eight => data.push(q as u8),
                    BitDepth::Sixteen => data.extend_from_slice(&(q as u16).to_be_bytes()),
                }
            }
        }
    }
    let mut writer = encoder
        .write_header()
        .map_err(|e| corrupt(path, e.to_string()))?;
    writer
        .write_image_data(&data)
        .map_err(|e| corrupt(path, e.to_string()))?;
    writer.finish().map_err(|e| corrupt(path, e.to_string()))?;
    Ok(())
}

/// Splits off the next whitespace-delimited header token.
fn header_token<'a>(path: &Path, bytes: &'a [u8], pos: &mut usize) -> Result<&'a str> {
    while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    let start = *pos;
    while *pos < bytes.len() && !bytes[*pos].is_ascii_whitespace() {
        *pos += 1;
    }
    if start == *pos {
        return Err(corrupt(path, "truncated PFM header"));
    }
    std::str::from_utf8(&bytes[start..*pos]).map_err(|_| corrupt(path, "non-ASCII PFM header"))
}

fn decode_pfm(path: &Path, bytes: &[u8]) -> Result<Raster> {
    let mut pos = 0;
    let magic = header_token(path, bytes, &mut pos)?;
    let nch = match magic {
        "Pf" => 1,
        "PF" => 3,
        _ => return Err(corrupt(path, format!("bad PFM magic {magic:?}"))),
    };
    let parse_dim = |s: &str| s.parse::<usize>().ok().filter(|&d| d > 0);
    let w = parse_dim(header_token(path, bytes, &mut pos)?)
        .ok_or_else(|| corrupt(path, "bad width"))?;
    let h = parse_dim(header_token(path, bytes, &mut pos)?)
        .ok_or_else(|| corrupt(path, "bad height"))?;
    let scale: f64 = header_token(path, bytes, &mut pos)?
        .parse()
        .map_err(|_| corrupt(path, "bad scale"))?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(corrupt(path, "bad scale"));
    }
    // Exactly one whitespace byte separates the header from the raster.
    pos += 1;
    let little = scale < 0.0;
    let need = w * h * nch * 4;
    let raster = bytes
        .get(pos..pos + need)
        .ok_or_else(|| corrupt(path, "truncated PFM raster"))?;
    let read = |i: usize| {
        let b = [
            raster[4 * i],
            raster[4 * i + 1],
            raster[4 * i + 2],
            raster[4 * i + 3],
        ];
        if little {
            f32::from_le_bytes(b)
        } else {
            f32::from_be_bytes(b)
        }
    };
    // Rows are stored bottom to top.
    let channels = (0..nch)
        .map(|c| Image::from_fn(w, h, |x, y| read(((h - 1 - y) * w + x) * nch + c) as f64))
        .collect();
    Ok(Raster { channels })
}

fn encode_pfm(path: &Path, img: &Raster) -> Result<()> {
    let (w, h) = img.dims();
    let magic = if img.is_color() { "PF" } else { "Pf" };
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "{magic}\n{w} {h}\n-1.0\n")?;
    for y in (0..h).rev() {
        for x in 0..w {
            for c in &img.channels {
                out.write_all(&(c.get(x, y) as f32).to_le_bytes())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct KernelReadOptions {
    /// Clamp negative weights to zero and rescale to unit sum.
    pub normalize: bool,
    /// Accept negative weights as-is.
    pub allow_raw: bool,
}

pub fn parse_kernel(text: &str, opts: &KernelReadOptions) -> Result<Kernel> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(Error::ParseError {
        line: 1,
        reason: "empty kernel file".into(),
    })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::ParseError {
            line: hline + 1,
            reason: format!("bad header: {e}"),
        })?;
    let [h, w] = dims[..] else {
        return Err(Error::ParseError {
            line: hline + 1,
            reason: "header must be `H W`".into(),
        });
    };
    let mut weights = Vec::with_capacity(w * h);
    let mut rows = 0;
    for (ln, line) in lines {
        let row: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::ParseError {
                line: ln + 1,
                reason: e.to_string(),
            })?;
        if row.len() != w {
            return Err(Error::ParseError {
                line: ln + 1,
                reason: format!("expected {w} values, found {}", row.len()),
            });
        }
        weights.extend(row);
        rows += 1;
    }
    if rows != h {
        return Err(Error::ParseError {
            line: hline + 1,
            reason: format!("expected {h} rows, found {rows}"),
        });
    }
    if opts.normalize {
        let clamped = weights.into_iter().map(|v| v.max(0.0)).collect();
        Kernel::new(w, h, clamped)?.normalized()
    } else if opts.allow_raw {
        Kernel::new_raw(w, h, weights)
    } else {
        Kernel::new(w, h, weights)
    }
}

pub fn read_kernel(path: impl AsRef<Path>, opts: &KernelReadOptions) -> Result<Kernel> {
    parse_kernel(&fs::read_to_string(path)?, opts)
}

pub fn format_kernel(k: &Kernel) -> String {
    let mut s = format!("{} {}\n", k.height(), k.width());
    for y in 0..k.height() {
        let row: Vec<String> = (0..k.width())
            .map(|x| format!("{:.8e}", k.get(x, y)))
            .collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn write_kernel(path: impl AsRef<Path>, k: &Kernel) -> Result<()> {
    fs::write(path, format_kernel(k))?;
    Ok(())
}
