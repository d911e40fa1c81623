//! Coarse-to-fine blind kernel estimation.
//!
//! Each level downsamples the observation, tapers its borders, and runs a
//! fixed number of alternation rounds between sharp prediction and kernel
//! estimation. The predicted image and the kernel are upsampled to warm-start
//! the next, finer level.

use crate::error::{Error, Result};
use crate::image::{bicubic_resize, edge_taper, Image};
use crate::kernel::Kernel;
use crate::kernel_solve::{estimate_kernel, KernelSolveConfig};
use crate::sharp::{predict_sharp, SharpPredictConfig};
use crate::spectral::circular_convolve;

/// Parameters of a blind estimation run.
#[derive(Clone, Debug, PartialEq)]
pub struct BlindConfig {
    /// l0 floor. Defaults to `0.5 sigma`, but never below [`BlindConfig::LAMBDA_MIN_FLOOR`].
    pub lambda_min: f64,
    /// Kernel gradient weight, `200 sigma` by default.
    pub gamma: f64,
    /// Kernel l1 weight.
    pub alpha: f64,
    /// Starting l0 weight at every level.
    pub lambda0: f64,
    pub lambda_decay: f64,
    pub iterations_per_level: usize,
    /// Inner growth factor and start/stop values for the sharp prediction.
    pub kappa: f64,
    pub beta_u0: f64,
    pub beta_u_max: f64,
    /// Kernel continuation ladder.
    pub beta_k0: f64,
    pub beta_k_growth: f64,
    pub beta_k_max: f64,
}

impl BlindConfig {
    /// Smallest admissible `lambda_min`; noiseless inputs use this.
    pub const LAMBDA_MIN_FLOOR: f64 = 1e-4;
    /// Lower bound of the per-level starting weight.
    pub const LAMBDA0_FLOOR: f64 = 4e-3;

    /// Defaults derived from the noise standard deviation `sigma`.
    pub fn for_noise(sigma: f64) -> Self {
        let lambda_min = (0.5 * sigma).max(Self::LAMBDA_MIN_FLOOR);
        let sharp = SharpPredictConfig::pyramid(lambda_min, lambda_min);
        let kernel = KernelSolveConfig::for_noise(sigma, (3, 3));
        Self {
            lambda_min,
            gamma: kernel.gamma,
            alpha: kernel.alpha,
            lambda0: Self::default_lambda0(lambda_min),
            lambda_decay: sharp.lambda_decay,
            iterations_per_level: 2,
            kappa: sharp.kappa,
            beta_u0: sharp.beta_u0,
            beta_u_max: sharp.beta_u_max,
            beta_k0: kernel.beta_k0,
            beta_k_growth: kernel.beta_k_growth,
            beta_k_max: kernel.beta_k_max,
        }
    }

    pub fn default_lambda0(lambda_min: f64) -> f64 {
        (10.0 * lambda_min).max(Self::LAMBDA0_FLOOR)
    }

    /// Overrides `lambda_min` and re-derives the default starting weight.
    pub fn with_lambda_min(mut self, lambda_min: f64) -> Self {
        self.lambda_min = lambda_min;
        self.lambda0 = Self::default_lambda0(lambda_min);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations_per_level == 0 {
            return Err(Error::InvalidConfig(
                "iterations_per_level must be >= 1".into(),
            ));
        }
        self.sharp_config(self.lambda0).validate()?;
        self.kernel_config((3, 3), None).validate()
    }

    pub fn sharp_config(&self, lambda: f64) -> SharpPredictConfig {
        SharpPredictConfig {
            lambda,
            lambda_min: self.lambda_min,
            kappa: self.kappa,
            beta_u0: self.beta_u0,
            beta_u_max: self.beta_u_max,
            lambda_decay: self.lambda_decay,
        }
    }

    pub fn kernel_config(
        &self,
        support: (usize, usize),
        initial: Option<Kernel>,
    ) -> KernelSolveConfig {
        KernelSolveConfig {
            alpha: self.alpha,
            gamma: self.gamma,
            beta_k0: self.beta_k0,
            beta_k_growth: self.beta_k_growth,
            beta_k_max: self.beta_k_max,
            support,
            initial,
        }
    }
}

/// One pyramid level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Level {
    pub image_w: usize,
    pub image_h: usize,
    pub kernel_w: usize,
    pub kernel_h: usize,
    pub lambda: f64,
    pub gamma: f64,
}

/// Coarse-to-fine list of levels.
#[derive(Clone, Debug, PartialEq)]
pub struct PyramidSchedule {
    pub levels: Vec<Level>,
    pub upscale_factor: usize,
    pub iterations_per_level: usize,
}

/// Smallest odd integer `>= x`.
fn odd_ceil(x: f64) -> usize {
    let c = x.ceil() as usize;
    if c % 2 == 1 {
        c
    } else {
        c + 1
    }
}

/// Builds the level list by halving the kernel's longer side (rounding up to
/// odd) until it reaches 3; image sizes follow the same ratio.
pub fn build_schedule(
    image_size: (usize, usize),
    kernel_size: (usize, usize),
    cfg: &BlindConfig,
) -> Result<PyramidSchedule> {
    let (w, h) = image_size;
    let (kw, kh) = kernel_size;
    if kw % 2 == 0 || kh % 2 == 0 {
        return Err(Error::KernelSizeEven {
            width: kw,
            height: kh,
        });
    }
    if kw < 3 || kh < 3 || 4 * kw > w || 4 * kh > h {
        return Err(Error::KernelTooLarge {
            kernel_w: kw,
            kernel_h: kh,
            image_w: w,
            image_h: h,
        });
    }
    let longest = kw.max(kh);
    let mut sides = vec![longest];
    while *sides.last().unwrap() > 3 {
        let next = odd_ceil(*sides.last().unwrap() as f64 / 2.0);
        sides.push(next);
    }
    sides.reverse();

    let levels = sides
        .iter()
        .map(|&s| {
            if s == longest {
                return Level {
                    image_w: w,
                    image_h: h,
                    kernel_w: kw,
                    kernel_h: kh,
                    lambda: cfg.lambda0,
                    gamma: cfg.gamma,
                };
            }
            let ratio = s as f64 / longest as f64;
            let side = |k: usize| odd_ceil(k as f64 * ratio).clamp(3, s);
            Level {
                image_w: ((w as f64 * ratio).round() as usize).max(1),
                image_h: ((h as f64 * ratio).round() as usize).max(1),
                kernel_w: side(kw),
                kernel_h: side(kh),
                lambda: cfg.lambda0,
                gamma: cfg.gamma,
            }
        })
        .collect();
    Ok(PyramidSchedule {
        levels,
        upscale_factor: 2,
        iterations_per_level: cfg.iterations_per_level,
    })
}

/// Progress report emitted after every alternation round.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Progress {
    pub level: usize,
    pub round: usize,
    /// Mean squared residual `|u * k - v|^2 / N` on the tapered level image.
    pub energy: f64,
}

/// Output of [`blind_estimate`].
#[derive(Clone, Debug)]
pub struct BlindEstimate {
    pub kernel: Kernel,
    /// Last sharp prediction at full resolution.
    pub sharp: Image,
}

/// Runs the coarse-to-fine estimation on a single-channel observation.
pub fn blind_estimate(
    v: &Image,
    kernel_size: (usize, usize),
    cfg: &BlindConfig,
) -> Result<BlindEstimate> {
    blind_estimate_observed(v, kernel_size, cfg, |_| {})
}

/// [`blind_estimate`] with a progress callback.
pub fn blind_estimate_observed(
    v: &Image,
    kernel_size: (usize, usize),
    cfg: &BlindConfig,
    mut on_progress: impl FnMut(Progress),
) -> Result<BlindEstimate> {
    cfg.validate()?;
    if !v.is_finite() {
        return Err(Error::DegenerateInput(
            "observation contains non-finite values".into(),
        ));
    }
    if v.max() - v.min() < 1e-12 {
        return Err(Error::DegenerateInput("observation is constant".into()));
    }
    let schedule = build_schedule(v.dims(), kernel_size, cfg)?;

    let mut u: Option<Image> = None;
    let mut k: Option<Kernel> = None;
    for (li, level) in schedule.levels.iter().enumerate() {
        let v_level = if (level.image_w, level.image_h) == v.dims() {
            v.clone()
        } else {
            bicubic_resize(v, level.image_w, level.image_h)
        };
        let v_level = edge_taper(&v_level, level.kernel_w.max(level.kernel_h))?;
        let mut u_level = u
            .take()
            .map(|prev| bicubic_resize(&prev, level.image_w, level.image_h));
        let mut k_level = match k.take() {
            None => Kernel::delta(level.kernel_w, level.kernel_h)?,
            Some(prev) => prev.resized(level.kernel_w, level.kernel_h)?,
        };

        let mut sharp_cfg = cfg.sharp_config(level.lambda);
        for round in 0..schedule.iterations_per_level {
            let predicted = predict_sharp(&v_level, &k_level, &sharp_cfg, u_level.as_ref())?;
            let kcfg = cfg.kernel_config((level.kernel_w, level.kernel_h), Some(k_level));
            k_level = estimate_kernel(&predicted, &v_level, &kcfg)?;
            let residual = circular_convolve(&predicted, &k_level)?;
            let energy = residual.zip_map(&v_level, |a, b| (a - b) * (a - b)).mean();
            on_progress(Progress {
                level: li,
                round,
                energy,
            });
            u_level = Some(predicted);
            sharp_cfg = sharp_cfg.decayed();
        }
        u = u_level;
        k = Some(k_level);
    }
    Ok(BlindEstimate {
        kernel: k.expect("schedule has at least one level"),
        sharp: u.expect("at least one round"),
    })
}
