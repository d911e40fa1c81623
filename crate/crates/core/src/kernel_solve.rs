//! Kernel estimation with l1 sparsity, gradient smoothness, non-negativity
//! and a rectangular support constraint:
//!
//! `argmin_k |u * k - v|^2 + alpha |k|_1 + gamma |grad k|^2`,
//! subject to `k >= 0` and `supp(k)` inside the support rectangle.
//!
//! The problem is split with an auxiliary `h`: an unconstrained quadratic
//! h-step solved by spectral division on the full grid, then a k-step that
//! soft-thresholds `h` by `alpha / beta_k` and clamps it to the support.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::kernel::Kernel;
use crate::spectral::{extract_centered, HSolver};

/// Hyperparameters of one kernel estimation step.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelSolveConfig {
    /// l1 weight.
    pub alpha: f64,
    /// Weight of the squared kernel gradient.
    pub gamma: f64,
    pub beta_k0: f64,
    pub beta_k_growth: f64,
    /// The continuation stops once `beta_k` reaches this value.
    pub beta_k_max: f64,
    /// Odd `(width, height)` of the support rectangle.
    pub support: (usize, usize),
    /// Starting kernel; a centered delta when `None`. Resized to `support`
    /// if its size differs.
    pub initial: Option<Kernel>,
}

impl KernelSolveConfig {
    pub const DEFAULT_ALPHA: f64 = 0.5;

    /// Blind-run defaults for noise level `sigma`: `alpha = 0.5`,
    /// `gamma = 200 sigma`, `beta_k = 1, 2, 4, ...` up to `1e3`.
    pub fn for_noise(sigma: f64, support: (usize, usize)) -> Self {
        Self {
            alpha: Self::DEFAULT_ALPHA,
            gamma: 200.0 * sigma,
            beta_k0: 1.0,
            beta_k_growth: 2.0,
            beta_k_max: 1e3,
            support,
            initial: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (w, h) = self.support;
        if w % 2 == 0 || h % 2 == 0 || w == 0 || h == 0 {
            return Err(Error::KernelSizeEven {
                width: w,
                height: h,
            });
        }
        let ok = self.alpha >= 0.0
            && self.gamma >= 0.0
            && self.beta_k0 > 0.0
            && self.beta_k_growth > 1.0
            && self.beta_k_max > self.beta_k0
            && [
                self.alpha,
                self.gamma,
                self.beta_k0,
                self.beta_k_growth,
                self.beta_k_max,
            ]
            .iter()
            .all(|v| v.is_finite());
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "kernel solve config alpha={} gamma={} beta_k0={} growth={} beta_k_max={}",
                self.alpha, self.gamma, self.beta_k0, self.beta_k_growth, self.beta_k_max
            )))
        }
    }

    /// The `beta_k` values visited, stopping before `beta_k_max` is reached.
    pub fn beta_schedule(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::successors(Some(self.beta_k0), move |b| Some(b * self.beta_k_growth))
            .take_while(move |&b| b < self.beta_k_max)
    }

    fn initial_kernel(&self) -> Result<Kernel> {
        let (w, h) = self.support;
        match &self.initial {
            None => Kernel::delta(w, h),
            Some(k) if k.dims() == (w, h) => Ok(k.clone()),
            Some(k) => k.resized(w, h),
        }
    }
}

/// Closed-form k-step on an embedded grid `h` (origin at `(0, 0)`):
/// `max(h - alpha / beta_k, 0)` inside the centered support, zero outside.
/// The result is not normalized.
pub fn project_kernel(
    h: &Image,
    alpha: f64,
    beta_k: f64,
    support: (usize, usize),
) -> Result<Kernel> {
    if !(beta_k > 0.0) {
        return Err(Error::NonPositiveWeight {
            name: "beta_k",
            value: beta_k,
        });
    }
    let shrink = alpha / beta_k;
    let window = extract_centered(h, support.0, support.1)?;
    let weights = window.into_iter().map(|v| (v - shrink).max(0.0)).collect();
    Kernel::new(support.0, support.1, weights)
}

/// Runs the `beta_k` continuation from the configured initial kernel and
/// returns the normalized result.
pub fn estimate_kernel(u: &Image, v: &Image, cfg: &KernelSolveConfig) -> Result<Kernel> {
    estimate_kernel_traced(u, v, cfg, |_, _, _| {})
}

/// [`estimate_kernel`] with a callback invoked after every k-step with the
/// iteration index, the `beta_k` used and the (unnormalized) kernel.
pub fn estimate_kernel_traced(
    u: &Image,
    v: &Image,
    cfg: &KernelSolveConfig,
    mut on_iter: impl FnMut(usize, f64, &Kernel),
) -> Result<Kernel> {
    cfg.validate()?;
    if u.dims() != v.dims() {
        return Err(Error::SizeMismatch {
            expected_w: v.width(),
            expected_h: v.height(),
            got_w: u.width(),
            got_h: u.height(),
        });
    }
    let (sw, sh) = cfg.support;
    if sw > u.width() || sh > u.height() {
        return Err(Error::SupportOutOfBounds {
            support_w: sw,
            support_h: sh,
            grid_w: u.width(),
            grid_h: u.height(),
        });
    }
    let solver = HSolver::new(u, v);
    let mut k = cfg.initial_kernel()?;
    for (iter, beta) in cfg.beta_schedule().enumerate() {
        let h = solver.solve(&k, beta, cfg.gamma)?;
        k = project_kernel(&h, cfg.alpha, beta, cfg.support)?;
        on_iter(iter, beta, &k);
    }
    k.normalized()
}
