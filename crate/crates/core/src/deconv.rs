//! Non-blind deconvolution with a low-weight l1 gradient prior, and the
//! denoise-then-deconvolve restoration pipeline.
//!
//! `argmin_u |u * k - v|^2 + lambda_tv |grad u|_1` is solved by
//! half-quadratic splitting in the normalization of fast hyper-Laplacian
//! deconvolution: for each relative weight `b` on the ladder
//! `beta0, beta0 * growth, ...` (while `b <= beta_max`) the auxiliary field
//! is `w = shrink(grad u, 1 / b)` and the u-step minimizes
//! `|u * k - v|^2 + (b lambda_tv / 2) |grad u - w|^2` in closed form.

use rayon::prelude::*;

use crate::denoise::{denoise, denoise_raster, DenoiserSpec};
use crate::error::{Error, Result};
use crate::image::{edge_taper, gradient, GradientField, Image};
use crate::io::Raster;
use crate::kernel::Kernel;
use crate::spectral::USolver;

/// Frequencies with `|F(k)|^2` at or below this are left untouched by the
/// unregularized inverse filter.
pub const INVERSE_FILTER_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeconvConfig {
    /// Weight of the l1 gradient prior.
    pub lambda_tv: f64,
    pub beta0: f64,
    pub beta_growth: f64,
    pub beta_max: f64,
    /// Process each channel of a color raster separately. Otherwise only
    /// the luminance is restored and its correction is added to every
    /// channel.
    pub per_channel: bool,
    /// Taper borders once before deconvolving.
    pub taper: bool,
}

impl DeconvConfig {
    pub fn new(lambda_tv: f64) -> Self {
        Self {
            lambda_tv,
            beta0: 1.0,
            beta_growth: 2.0 * std::f64::consts::SQRT_2,
            beta_max: 256.0,
            per_channel: true,
            taper: true,
        }
    }

    /// CLI default `max(1e-4, sigma / 10)`.
    pub fn default_lambda_tv(sigma: f64) -> f64 {
        (sigma / 10.0).max(1e-4)
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda_tv >= 0.0
            && self.lambda_tv.is_finite()
            && self.beta0 > 0.0
            && self.beta_growth > 1.0
            && self.beta_max > self.beta0
            && self.beta_max.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "deconvolution config {self:?}"
            )))
        }
    }

    pub fn beta_schedule(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::successors(Some(self.beta0), move |b| Some(b * self.beta_growth))
            .take_while(move |&b| b <= self.beta_max)
    }
}

impl Default for DeconvConfig {
    fn default() -> Self {
        Self::new(1e-4)
    }
}

/// Isotropic soft shrinkage: each gradient vector is shortened by
/// `threshold`, or zeroed if shorter.
pub fn shrink_gradients(grad: &GradientField, threshold: f64) -> GradientField {
    let mut out = grad.clone();
    for i in 0..grad.dx.len() {
        let m = grad.magnitude_sq(i).sqrt();
        let scale = if m > threshold {
            (m - threshold) / m
        } else {
            0.0
        };
        out.dx.data_mut()[i] *= scale;
        out.dy.data_mut()[i] *= scale;
    }
    out
}

/// Restores `v` given a normalized kernel; the result is clamped to `[0, 1]`.
///
/// With `lambda_tv = 0` the objective reduces to the data term and the
/// least-squares inverse filter is returned directly.
pub fn deconvolve_l1grad(v: &Image, k: &Kernel, cfg: &DeconvConfig) -> Result<Image> {
    cfg.validate()?;
    let solver = USolver::new(v, k)?;
    if cfg.lambda_tv == 0.0 {
        return Ok(solver
            .inverse_filter(v, INVERSE_FILTER_FLOOR)
            .clamp(0.0, 1.0));
    }
    let mut u = v.clone();
    for b in cfg.beta_schedule() {
        let w = shrink_gradients(&gradient(&u), 1.0 / b);
        u = solver.solve(&w, 0.5 * b * cfg.lambda_tv)?;
    }
    Ok(u.clamp(0.0, 1.0))
}

fn restore_channel(v: &Image, k: &Kernel, dcfg: &DeconvConfig) -> Result<Image> {
    let side = k.width().max(k.height());
    let input = if dcfg.taper && side > 1 && side < v.width().min(v.height()) {
        edge_taper(v, side)?
    } else {
        v.clone()
    };
    deconvolve_l1grad(&input, k, dcfg)
}

/// Denoise, taper, then deconvolve a single channel.
pub fn deblur_pipeline(
    v: &Image,
    k: &Kernel,
    sigma: f64,
    dcfg: &DeconvConfig,
    dspec: &DenoiserSpec,
) -> Result<Image> {
    let denoised = denoise(v, sigma, dspec)?;
    restore_channel(&denoised, k, dcfg)
}

/// Color-aware pipeline: every channel is denoised and deconvolved with the
/// shared kernel. Output shape and channel count match the input.
pub fn deblur_raster(
    v: &Raster,
    k: &Kernel,
    sigma: f64,
    dcfg: &DeconvConfig,
    dspec: &DenoiserSpec,
) -> Result<Raster> {
    let denoised = denoise_raster(v, sigma, dspec)?;
    if dcfg.per_channel || !denoised.is_color() {
        let channels = denoised
            .channels
            .par_iter()
            .map(|c| restore_channel(c, k, dcfg))
            .collect::<Result<_>>()?;
        return Ok(Raster { channels });
    }
    let lum = denoised.to_luminance();
    let restored = restore_channel(&lum, k, dcfg)?;
    let correction = restored.zip_map(&lum, |a, b| a - b);
    let channels = denoised
        .channels
        .iter()
        .map(|c| c.zip_map(&correction, |a, d| (a + d).clamp(0.0, 1.0)))
        .collect();
    Ok(Raster { channels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::CounterRng;

    #[test]
    fn ladder_defaults() {
        let betas: Vec<f64> = DeconvConfig::new(0.01).beta_schedule().collect();
        assert_eq!(betas.len(), 6);
        assert!((betas[5] - 181.019).abs() < 1e-2);
    }

    #[test]
    fn shrink_matches_closed_form() {
        let rng = CounterRng::new(5);
        let dx = Image::from_fn(8, 8, |x, y| rng.uniform((y * 8 + x) as u64) - 0.5);
        let dy = Image::from_fn(8, 8, |x, y| rng.uniform((100 + y * 8 + x) as u64) - 0.5);
        let g = GradientField::new(dx, dy);
        let out = shrink_gradients(&g, 0.2);
        for i in 0..64 {
            let m = g.magnitude_sq(i).sqrt();
            let expect = (m - 0.2).max(0.0);
            assert!((out.magnitude_sq(i).sqrt() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_without_prior_is_identity() {
        let rng = CounterRng::new(1);
        let v = Image::from_fn(16, 12, |x, y| rng.uniform((y * 16 + x) as u64));
        let mut cfg = DeconvConfig::new(0.0);
        cfg.taper = false;
        let u = deconvolve_l1grad(&v, &Kernel::delta(3, 3).unwrap(), &cfg).unwrap();
        for (a, b) in u.data().iter().zip(v.data()) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn pipeline_identity_denoiser_matches_deconvolution() {
        let rng = CounterRng::new(2);
        let v = Image::from_fn(32, 32, |x, y| rng.uniform((y * 32 + x) as u64));
        let k = Kernel::boxed(3, 3).unwrap();
        let mut cfg = DeconvConfig::new(1e-3);
        cfg.taper = false;
        let a = deblur_pipeline(&v, &k, 0.0, &cfg, &DenoiserSpec::identity()).unwrap();
        let b = deconvolve_l1grad(&v, &k, &cfg).unwrap();
        assert_eq!(a, b);
        cfg.taper = true;
        let c = deblur_pipeline(&v, &k, 0.0, &cfg, &DenoiserSpec::identity()).unwrap();
        let d = deconvolve_l1grad(&edge_taper(&v, 3).unwrap(), &k, &cfg).unwrap();
        assert_eq!(c, d);
    }

    #[test]
    fn raster_keeps_shape() {
        let r = Raster::rgb(
            Image::filled(20, 10, 0.2),
            Image::filled(20, 10, 0.5),
            Image::filled(20, 10, 0.7),
        );
        let out = deblur_raster(
            &r,
            &Kernel::boxed(3, 3).unwrap(),
            0.01,
            &DeconvConfig::default(),
            &DenoiserSpec::builtin(),
        )
        .unwrap();
        assert_eq!(out.channels.len(), 3);
        assert_eq!(out.dims(), (20, 10));
        let mut gray = DeconvConfig::default();
        gray.per_channel = false;
        let out = deblur_raster(
            &r,
            &Kernel::boxed(3, 3).unwrap(),
            0.01,
            &gray,
            &DenoiserSpec::identity(),
        )
        .unwrap();
        assert_eq!(out.channels.len(), 3);
        assert_eq!(out.dims(), (20, 10));
    }
}
