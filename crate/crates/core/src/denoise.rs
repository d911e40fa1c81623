//! Denoising applied before non-blind deconvolution.
//!
//! The pipeline does not depend on a particular denoiser. Three kinds are
//! offered: a built-in sliding-window DCT hard-threshold filter, a
//! passthrough, and an externally produced image loaded from disk.

use std::path::PathBuf;
use std::sync::OnceLock;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::{read_image, ImageReadOptions, Raster};

const PATCH: usize = 8;
/// Coefficients below `THRESHOLD_SIGMAS * sigma` are zeroed.
pub const THRESHOLD_SIGMAS: f64 = 3.0;

#[derive(Clone, Debug, PartialEq)]
pub enum DenoiserKind {
    /// Sliding 8x8 orthonormal DCT, hard threshold at `3 sigma`, uniform
    /// aggregation over all overlapping patches (periodic borders).
    Builtin,
    Identity,
    /// A pre-denoised image produced by any external tool.
    External {
        path: PathBuf,
        options: ImageReadOptions,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenoiserSpec {
    pub kind: DenoiserKind,
    /// Noise level handed to the denoiser; the pipeline's `sigma` when `None`.
    pub strength: Option<f64>,
}

impl DenoiserSpec {
    pub fn builtin() -> Self {
        Self {
            kind: DenoiserKind::Builtin,
            strength: None,
        }
    }

    pub fn identity() -> Self {
        Self {
            kind: DenoiserKind::Identity,
            strength: None,
        }
    }

    pub fn external(path: impl Into<PathBuf>, options: ImageReadOptions) -> Self {
        Self {
            kind: DenoiserKind::External {
                path: path.into(),
                options,
            },
            strength: None,
        }
    }

    fn effective_sigma(&self, sigma: f64) -> Result<f64> {
        let s = self.strength.unwrap_or(sigma);
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "denoiser strength must be >= 0, got {s}"
            )));
        }
        Ok(s)
    }
}

/// Orthonormal 8-point DCT-II matrix, `C[k][n]`.
fn dct_matrix() -> &'static [[f64; PATCH]; PATCH] {
    static M: OnceLock<[[f64; PATCH]; PATCH]> = OnceLock::new();
    M.get_or_init(|| {
        let mut m = [[0.0; PATCH]; PATCH];
        let n = PATCH as f64;
        for (k, row) in m.iter_mut().enumerate() {
            let scale = if k == 0 {
                (1.0 / n).sqrt()
            } else {
                (2.0 / n).sqrt()
            };
            for (i, c) in row.iter_mut().enumerate() {
                *c = scale
                    * (std::f64::consts::PI * (2.0 * i as f64 + 1.0) * k as f64 / (2.0 * n)).cos();
            }
        }
        m
    })
}

type Block = [[f64; PATCH]; PATCH];

/// `C B C^T`.
fn dct2(b: &Block, c: &Block) -> Block {
    let mut tmp = [[0.0; PATCH]; PATCH];
    for r in 0..PATCH {
        for k in 0..PATCH {
            tmp[r][k] = (0..PATCH).map(|i| b[r][i] * c[k][i]).sum();
        }
    }
    let mut out = [[0.0; PATCH]; PATCH];
    for k in 0..PATCH {
        for col in 0..PATCH {
            out[k][col] = (0..PATCH).map(|r| c[k][r] * tmp[r][col]).sum();
        }
    }
    out
}

/// `C^T B C`.
fn idct2(b: &Block, c: &Block) -> Block {
    let mut tmp = [[0.0; PATCH]; PATCH];
    for r in 0..PATCH {
        for i in 0..PATCH {
            tmp[r][i] = (0..PATCH).map(|k| b[r][k] * c[k][i]).sum();
        }
    }
    let mut out = [[0.0; PATCH]; PATCH];
    for i in 0..PATCH {
        for col in 0..PATCH {
            out[i][col] = (0..PATCH).map(|k| c[k][i] * tmp[k][col]).sum();
        }
    }
    out
}

/// Built-in transform-threshold denoiser. The DC coefficient of every patch
/// is kept, so the image mean is preserved.
pub fn dct_denoise(img: &Image, sigma: f64) -> Image {
    let (w, h) = img.dims();
    if sigma == 0.0 {
        return img.clone();
    }
    let c = dct_matrix();
    let threshold = THRESHOLD_SIGMAS * sigma;

    // One strip of PATCH rows per patch row; summed afterwards in a fixed
    // order so the result does not depend on the thread count.
    let strips: Vec<Vec<f64>> = (0..h)
        .into_par_iter()
        .map(|y0| {
            let mut strip = vec![0.0; PATCH * w];
            let mut block = [[0.0; PATCH]; PATCH];
            for x0 in 0..w {
                for (dy, row) in block.iter_mut().enumerate() {
                    let y = (y0 + dy) % h;
                    for (dx, v) in row.iter_mut().enumerate() {
                        *v = img.get((x0 + dx) % w, y);
                    }
                }
                let mut coeffs = dct2(&block, c);
                for (k, row) in coeffs.iter_mut().enumerate() {
                    for (l, v) in row.iter_mut().enumerate() {
                        if (k, l) != (0, 0) && v.abs() < threshold {
                            *v = 0.0;
                        }
                    }
                }
                let rec = idct2(&coeffs, c);
                for (dy, row) in rec.iter().enumerate() {
                    for (dx, v) in row.iter().enumerate() {
                        strip[dy * w + (x0 + dx) % w] += v;
                    }
                }
            }
            strip
        })
        .collect();

    let mut acc = vec![0.0; w * h];
    for (y0, strip) in strips.iter().enumerate() {
        for dy in 0..PATCH {
            let y = (y0 + dy) % h;
            let dst = &mut acc[y * w..(y + 1) * w];
            for (d, s) in dst.iter_mut().zip(&strip[dy * w..(dy + 1) * w]) {
                *d += s;
            }
        }
    }
    let norm = 1.0 / (PATCH * PATCH) as f64;
    Image::from_vec(w, h, acc.into_iter().map(|v| v * norm).collect())
}

fn check_size(expected: &Image, got: &Image) -> Result<()> {
    if expected.dims() != got.dims() {
        return Err(Error::SizeMismatch {
            expected_w: expected.width(),
            expected_h: expected.height(),
            got_w: got.width(),
            got_h: got.height(),
        });
    }
    Ok(())
}

/// Denoises a single-channel image. An external color file is reduced to
/// luminance.
pub fn denoise(img: &Image, sigma: f64, spec: &DenoiserSpec) -> Result<Image> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "sigma must be >= 0, got {sigma}"
        )));
    }
    let strength = spec.effective_sigma(sigma)?;
    match &spec.kind {
        DenoiserKind::Identity => Ok(img.clone()),
        DenoiserKind::Builtin => Ok(dct_denoise(img, strength)),
        DenoiserKind::External { path, options } => {
            let ext = read_image(path, options)?.to_luminance();
            check_size(img, &ext)?;
            Ok(ext)
        }
    }
}

/// Denoises every channel of a raster. An external file must match the
/// size and channel count of the input.
pub fn denoise_raster(img: &Raster, sigma: f64, spec: &DenoiserSpec) -> Result<Raster> {
    match &spec.kind {
        DenoiserKind::External { path, options } => {
            let ext = read_image(path, options)?;
            check_size(&img.channels[0], &ext.channels[0])?;
            if ext.channels.len() != img.channels.len() {
                return Err(Error::InvalidConfig(format!(
                    "external denoised image has {} channels, input has {}",
                    ext.channels.len(),
                    img.channels.len()
                )));
            }
            Ok(ext)
        }
        _ => {
            let channels = img
                .channels
                .iter()
                .map(|c| denoise(c, sigma, spec))
                .collect::<Result<_>>()?;
            Ok(Raster { channels })
        }
    }
}
