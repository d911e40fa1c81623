//! Sharp image prediction under an l0 gradient prior.
//!
//! Minimizes `|u * k - v|^2 + lambda |grad u|_0` by half-quadratic splitting.
//! An auxiliary field `g` takes the hard-thresholded gradients of `u`, then
//! `u` is re-solved in closed form against `g`; the coupling weight `beta_u`
//! grows geometrically until it passes `beta_u_max`.

use crate::error::{Error, Result};
use crate::image::{gradient, GradientField, Image};
use crate::kernel::Kernel;
use crate::spectral::USolver;

/// Hyperparameters of one sharp prediction step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SharpPredictConfig {
    /// Current l0 weight.
    pub lambda: f64,
    /// Floor reached by [`SharpPredictConfig::decayed`].
    pub lambda_min: f64,
    /// Growth factor of `beta_u` per inner iteration.
    pub kappa: f64,
    pub beta_u0: f64,
    /// Inner loop stops once `beta_u` exceeds this value.
    pub beta_u_max: f64,
    /// `lambda` is divided by this after each outer prediction step.
    pub lambda_decay: f64,
}

impl SharpPredictConfig {
    pub const DEFAULT_DECAY: f64 = 1.1;

    /// Standalone profile: `kappa = 2`, `beta_u0 = 2 lambda`,
    /// `beta_u_max = 1e5 lambda`.
    pub fn standalone(lambda: f64, lambda_min: f64) -> Self {
        Self {
            lambda,
            lambda_min,
            kappa: 2.0,
            beta_u0: 2.0 * lambda,
            beta_u_max: 1e5 * lambda,
            lambda_decay: Self::DEFAULT_DECAY,
        }
    }

    /// Warm-started profile used inside the coarse-to-fine driver:
    /// `kappa = 5`, `beta_u0 = 0.05`, `beta_u_max = 10`.
    pub fn pyramid(lambda: f64, lambda_min: f64) -> Self {
        Self {
            lambda,
            lambda_min,
            kappa: 5.0,
            beta_u0: 0.05,
            beta_u_max: 10.0,
            lambda_decay: Self::DEFAULT_DECAY,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.lambda_min > 0.0
            && self.lambda >= self.lambda_min
            && self.kappa > 1.0
            && self.beta_u0 > 0.0
            && self.beta_u0 < self.beta_u_max
            && self.lambda_decay >= 1.0
            && [
                self.lambda,
                self.lambda_min,
                self.kappa,
                self.beta_u0,
                self.beta_u_max,
                self.lambda_decay,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "sharp prediction config {self:?}"
            )))
        }
    }

    /// Same profile with `lambda <- max(lambda / decay, lambda_min)`.
    pub fn decayed(&self) -> Self {
        Self {
            lambda: (self.lambda / self.lambda_decay).max(self.lambda_min),
            ..*self
        }
    }

    /// The `beta_u` values visited by the inner loop.
    pub fn beta_schedule(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::successors(Some(self.beta_u0), move |b| Some(b * self.kappa))
            .take_while(move |&b| b <= self.beta_u_max)
    }
}

/// Closed-form g-step: keeps a gradient vector only if its squared magnitude
/// reaches `lambda / beta_u`, zeroing both components otherwise.
pub fn hard_threshold_gradients(grad: &GradientField, lambda: f64, beta_u: f64) -> GradientField {
    let threshold = lambda / beta_u;
    let mut out = grad.clone();
    for i in 0..grad.dx.len() {
        if grad.magnitude_sq(i) < threshold {
            out.dx.data_mut()[i] = 0.0;
            out.dy.data_mut()[i] = 0.0;
        }
    }
    out
}

/// Runs the inner half-quadratic splitting loop and returns the last `u`.
///
/// `u` starts from `warm_start` when given, otherwise from `v`.
pub fn predict_sharp(
    v: &Image,
    k: &Kernel,
    cfg: &SharpPredictConfig,
    warm_start: Option<&Image>,
) -> Result<Image> {
    cfg.validate()?;
    let solver = USolver::new(v, k)?;
    let mut u = match warm_start {
        Some(w) => {
            if w.dims() != v.dims() {
                return Err(Error::SizeMismatch {
                    expected_w: v.width(),
                    expected_h: v.height(),
                    got_w: w.width(),
                    got_h: w.height(),
                });
            }
            w.clone()
        }
        None => v.clone(),
    };
    for beta in cfg.beta_schedule() {
        let g = hard_threshold_gradients(&gradient(&u), cfg.lambda, beta);
        u = solver.solve(&g, beta)?;
    }
    Ok(u)
}
