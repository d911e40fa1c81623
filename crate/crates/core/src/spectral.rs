//! Frequency-domain machinery: 2-D DFTs, circular convolution, and the two
//! closed-form quadratic solvers used by the splitting schemes.
//!
//! Transform convention: the forward DFT is unnormalized,
//! `X(f) = sum_x x(x) exp(-2 pi i <f, x / N>)`, and the inverse carries the
//! `1 / (W H)` factor. Under this convention Parseval reads
//! `sum |X|^2 = W H sum |x|^2`.
//!
//! Kernels are embedded on the image grid with their center at pixel `(0, 0)`
//! and the four quadrants wrapped around, so convolution does not translate
//! the image.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::image::{GradientField, Image};
use crate::kernel::Kernel;

/// Complex coefficients of a 2-D DFT, row-major like [`Image`].
#[derive(Clone, Debug)]
pub struct Spectrum {
    pub width: usize,
    pub height: usize,
    pub coeffs: Vec<Complex64>,
}

impl Spectrum {
    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Forward and inverse 2-D transform plans for one grid size.
///
/// Plans are immutable after construction and may be shared between threads.
#[derive(Clone)]
pub struct Fft2d {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2d {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn transform(
        &self,
        data: &mut Vec<Complex64>,
        rows: &Arc<dyn Fft<f64>>,
        cols: &Arc<dyn Fft<f64>>,
    ) {
        let (w, h) = (self.width, self.height);
        rows.process(data);
        let mut t = transpose(data, w, h);
        cols.process(&mut t);
        *data = transpose(&t, h, w);
    }

    pub fn forward(&self, img: &Image) -> Spectrum {
        assert_eq!(img.dims(), self.dims(), "plan/image size mismatch");
        let mut data: Vec<Complex64> = img.data().iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, &self.row_fwd, &self.col_fwd);
        Spectrum {
            width: self.width,
            height: self.height,
            coeffs: data,
        }
    }

    /// Scaled inverse transform; the imaginary residue is discarded.
    pub fn inverse(&self, spec: &Spectrum) -> Image {
        self.inverse_coeffs(spec.coeffs.clone())
    }

    fn inverse_coeffs(&self, mut data: Vec<Complex64>) -> Image {
        assert_eq!(data.len(), self.width * self.height);
        self.transform(&mut data, &self.row_inv, &self.col_inv);
        let scale = 1.0 / (self.width * self.height) as f64;
        Image::from_vec(
            self.width,
            self.height,
            data.iter().map(|c| c.re * scale).collect(),
        )
    }
}

fn transpose(src: &[Complex64], w: usize, h: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); w * h];
    for y in 0..h {
        for x in 0..w {
            out[x * h + y] = src[y * w + x];
        }
    }
    out
}

fn check_fits(k: &Kernel, width: usize, height: usize) -> Result<()> {
    if k.width() > width || k.height() > height {
        return Err(Error::KernelTooLarge {
            kernel_w: k.width(),
            kernel_h: k.height(),
            image_w: width,
            image_h: height,
        });
    }
    Ok(())
}

/// Places the kernel on a `width x height` grid with its center at `(0, 0)`.
pub fn embed_kernel(k: &Kernel, width: usize, height: usize) -> Result<Image> {
    check_fits(k, width, height)?;
    let (rx, ry) = k.radius();
    let mut out = Image::zeros(width, height);
    for y in 0..k.height() {
        for x in 0..k.width() {
            let gx = (x as isize - rx as isize).rem_euclid(width as isize) as usize;
            let gy = (y as isize - ry as isize).rem_euclid(height as isize) as usize;
            let cell = out.get(gx, gy) + k.get(x, y);
            out.set(gx, gy, cell);
        }
    }
    Ok(out)
}

/// Reads the centered `width x height` window of an embedded (origin at
/// `(0, 0)`) grid back into kernel layout, without any clamping.
pub fn extract_centered(grid: &Image, width: usize, height: usize) -> Result<Vec<f64>> {
    if width > grid.width() || height > grid.height() || width % 2 == 0 || height % 2 == 0 {
        return Err(Error::SupportOutOfBounds {
            support_w: width,
            support_h: height,
            grid_w: grid.width(),
            grid_h: grid.height(),
        });
    }
    let (rx, ry) = ((width / 2) as isize, (height / 2) as isize);
    let mut out = Vec::with_capacity(width * height);
    for oy in -ry..=ry {
        for ox in -rx..=rx {
            out.push(grid.get_wrapped(ox, oy));
        }
    }
    Ok(out)
}

/// Transfer functions of the periodic forward differences,
/// `exp(2 pi i f / N) - 1` along each axis.
pub fn difference_spectra(width: usize, height: usize) -> (Vec<Complex64>, Vec<Complex64>) {
    let tau = 2.0 * std::f64::consts::PI;
    let ex: Vec<Complex64> = (0..width)
        .map(|f| Complex64::from_polar(1.0, tau * f as f64 / width as f64) - 1.0)
        .collect();
    let ey: Vec<Complex64> = (0..height)
        .map(|f| Complex64::from_polar(1.0, tau * f as f64 / height as f64) - 1.0)
        .collect();
    let mut dx = Vec::with_capacity(width * height);
    let mut dy = Vec::with_capacity(width * height);
    for fy in 0..height {
        for fx in 0..width {
            dx.push(ex[fx]);
            dy.push(ey[fy]);
        }
    }
    (dx, dy)
}

/// `|F(dx)|^2 + |F(dy)|^2` per frequency (the periodic Laplacian symbol).
pub fn gradient_power(width: usize, height: usize) -> Vec<f64> {
    let (dx, dy) = difference_spectra(width, height);
    dx.iter()
        .zip(&dy)
        .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
        .collect()
}

/// Periodic convolution `(img * k)(x) = sum_j k(j) img(x - j)`.
pub fn circular_convolve(img: &Image, k: &Kernel) -> Result<Image> {
    let (w, h) = img.dims();
    let fft = Fft2d::new(w, h);
    let kf = fft.forward(&embed_kernel(k, w, h)?);
    let mut f = fft.forward(img);
    for (a, b) in f.coeffs.iter_mut().zip(&kf.coeffs) {
        *a *= b;
    }
    Ok(fft.inverse(&f))
}

/// Precomputed state for repeated `u`-step solves against one `(v, k)` pair:
///
/// `argmin_u |u * k - v|^2 + beta |grad u - g|^2`.
pub struct USolver {
    fft: Fft2d,
    kernel_spec: Vec<Complex64>,
    // conj(F(k)) F(v)
    data_term: Vec<Complex64>,
    kernel_power: Vec<f64>,
    dx: Vec<Complex64>,
    dy: Vec<Complex64>,
    grad_power: Vec<f64>,
}

impl USolver {
    pub fn new(v: &Image, k: &Kernel) -> Result<Self> {
        let (w, h) = v.dims();
        let fft = Fft2d::new(w, h);
        let kernel_spec = fft.forward(&embed_kernel(k, w, h)?).coeffs;
        let fv = fft.forward(v).coeffs;
        let data_term = kernel_spec
            .iter()
            .zip(&fv)
            .map(|(k, v)| k.conj() * v)
            .collect();
        let kernel_power = kernel_spec.iter().map(|k| k.norm_sqr()).collect();
        let (dx, dy) = difference_spectra(w, h);
        let grad_power = dx
            .iter()
            .zip(&dy)
            .map(|(a, b)| a.norm_sqr() + b.norm_sqr())
            .collect();
        Ok(Self {
            fft,
            kernel_spec,
            data_term,
            kernel_power,
            dx,
            dy,
            grad_power,
        })
    }

    pub fn solve(&self, g: &GradientField, beta: f64) -> Result<Image> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::NonPositiveWeight {
                name: "beta_u",
                value: beta,
            });
        }
        assert_eq!(g.dims(), self.fft.dims(), "gradient field size mismatch");
        let gx = self.fft.forward(&g.dx).coeffs;
        let gy = self.fft.forward(&g.dy).coeffs;
        let coeffs = (0..gx.len())
            .map(|i| {
                let num = self.data_term[i]
                    + beta * (self.dx[i].conj() * gx[i] + self.dy[i].conj() * gy[i]);
                num / (self.kernel_power[i] + beta * self.grad_power[i])
            })
            .collect();
        Ok(self.fft.inverse_coeffs(coeffs))
    }

    /// Least-squares inverse filter `argmin_u |u * k - v|^2`. Frequencies
    /// where `|F(k)|^2 <= floor` are taken from `fallback` instead.
    pub fn inverse_filter(&self, fallback: &Image, floor: f64) -> Image {
        let fb = self.fft.forward(fallback).coeffs;
        let coeffs = (0..fb.len())
            .map(|i| {
                if self.kernel_power[i] > floor {
                    self.data_term[i] / self.kernel_power[i]
                } else {
                    fb[i]
                }
            })
            .collect();
        self.fft.inverse_coeffs(coeffs)
    }

    /// Transfer function of the kernel on the image grid.
    pub fn kernel_spectrum(&self) -> &[Complex64] {
        &self.kernel_spec
    }
}

/// Closed-form minimizer of `|u * k - v|^2 + beta_u |grad u - g|^2` under
/// periodic boundary conditions.
pub fn solve_u_quadratic(v: &Image, k: &Kernel, g: &GradientField, beta_u: f64) -> Result<Image> {
    if !(beta_u > 0.0) || !beta_u.is_finite() {
        return Err(Error::NonPositiveWeight {
            name: "beta_u",
            value: beta_u,
        });
    }
    USolver::new(v, k)?.solve(g, beta_u)
}

/// Precomputed state for repeated `h`-step solves against one `(u, v)` pair:
///
/// `argmin_h |u * h - v|^2 + beta_k |k_prev - h|^2 + gamma |grad h|^2`.
pub struct HSolver {
    fft: Fft2d,
    // conj(F(u)) F(v)
    data_term: Vec<Complex64>,
    image_power: Vec<f64>,
    grad_power: Vec<f64>,
}

impl HSolver {
    pub fn new(u: &Image, v: &Image) -> Self {
        assert_eq!(u.dims(), v.dims(), "u and v differ in size");
        let (w, h) = u.dims();
        let fft = Fft2d::new(w, h);
        let fu = fft.forward(u).coeffs;
        let fv = fft.forward(v).coeffs;
        let data_term = fu.iter().zip(&fv).map(|(a, b)| a.conj() * b).collect();
        let image_power = fu.iter().map(|c| c.norm_sqr()).collect();
        Self {
            fft,
            data_term,
            image_power,
            grad_power: gradient_power(w, h),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.fft.dims()
    }

    /// Returns `h` on the full grid with its origin at pixel `(0, 0)`.
    pub fn solve(&self, k_prev: &Kernel, beta_k: f64, gamma: f64) -> Result<Image> {
        if beta_k < 0.0 || gamma < 0.0 || !beta_k.is_finite() || !gamma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "beta_k = {beta_k} and gamma = {gamma} must be non-negative"
            )));
        }
        let (w, h) = self.fft.dims();
        let fk = self.fft.forward(&embed_kernel(k_prev, w, h)?).coeffs;
        let mut coeffs = Vec::with_capacity(fk.len());
        for i in 0..fk.len() {
            let denom = self.image_power[i] + beta_k + gamma * self.grad_power[i];
            if !(denom > 0.0) {
                return Err(Error::DegenerateDenominator {
                    fx: i % w,
                    fy: i / w,
                });
            }
            coeffs.push((self.data_term[i] + beta_k * fk[i]) / denom);
        }
        Ok(self.fft.inverse_coeffs(coeffs))
    }
}

/// Closed-form `h`-step; see [`HSolver`]. The result lives on the full image
/// grid with its origin at `(0, 0)`; cropping to the kernel support is the
/// caller's job.
pub fn solve_h_quadratic(
    u: &Image,
    v: &Image,
    k_prev: &Kernel,
    beta_k: f64,
    gamma: f64,
) -> Result<Image> {
    HSolver::new(u, v).solve(k_prev, beta_k, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::gradient;
    use crate::rng::CounterRng;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let rng = CounterRng::new(seed);
        Image::from_fn(w, h, |x, y| rng.uniform((y * w + x) as u64))
    }

    fn random_kernel(w: usize, h: usize, seed: u64) -> Kernel {
        let rng = CounterRng::new(seed);
        let raw: Vec<f64> = (0..w * h).map(|i| rng.uniform(i as u64)).collect();
        Kernel::new(w, h, raw).unwrap().normalized().unwrap()
    }

    fn direct_convolve(img: &Image, k: &Kernel) -> Image {
        let (rx, ry) = k.radius();
        let (rx, ry) = (rx as isize, ry as isize);
        Image::from_fn(img.width(), img.height(), |x, y| {
            let mut acc = 0.0;
            for oy in -ry..=ry {
                for ox in -rx..=rx {
                    acc += k.at_offset(ox, oy) * img.get_wrapped(x as isize - ox, y as isize - oy);
                }
            }
            acc
        })
    }

    #[test]
    fn round_trip_and_parseval() {
        let img = random_image(12, 10, 1);
        let fft = Fft2d::new(12, 10);
        let spec = fft.forward(&img);
        let back = fft.inverse(&spec);
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        let n = 120.0;
        assert!((spec.energy() - n * img.energy()).abs() < 1e-9 * spec.energy());
    }

    #[test]
    fn delta_convolution_is_identity() {
        let img = random_image(9, 7, 2);
        let out = circular_convolve(&img, &Kernel::delta(3, 5).unwrap()).unwrap();
        for (a, b) in img.data().iter().zip(out.data()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_is_preserved() {
        let img = Image::filled(16, 16, 0.42);
        let out = circular_convolve(&img, &random_kernel(5, 3, 4)).unwrap();
        assert!(out.data().iter().all(|v| (v - 0.42).abs() < 1e-14));
    }

    #[test]
    fn convolution_matches_direct_sum() {
        for seed in 0..5 {
            let img = random_image(8, 8, seed);
            let k = random_kernel(3, 3, seed + 50);
            let fast = circular_convolve(&img, &k).unwrap();
            let slow = direct_convolve(&img, &k);
            for (a, b) in fast.data().iter().zip(slow.data()) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn convolution_is_linear() {
        let a = random_image(10, 10, 1);
        let b = random_image(10, 10, 2);
        let k = random_kernel(3, 5, 3);
        let combo = a.zip_map(&b, |x, y| 2.0 * x - 0.5 * y);
        let lhs = circular_convolve(&combo, &k).unwrap();
        let ca = circular_convolve(&a, &k).unwrap();
        let cb = circular_convolve(&b, &k).unwrap();
        let rhs = ca.zip_map(&cb, |x, y| 2.0 * x - 0.5 * y);
        for (p, q) in lhs.data().iter().zip(rhs.data()) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn oversize_kernel_rejected() {
        let img = random_image(4, 4, 0);
        assert!(matches!(
            circular_convolve(&img, &Kernel::delta(5, 3).unwrap()),
            Err(Error::KernelTooLarge { .. })
        ));
    }

    #[test]
    fn u_step_is_identity_for_consistent_data() {
        let v = random_image(10, 8, 3);
        let g = gradient(&v);
        for beta in [1e-3, 1.0, 1e4] {
            let u = solve_u_quadratic(&v, &Kernel::delta(3, 3).unwrap(), &g, beta).unwrap();
            for (a, b) in u.data().iter().zip(v.data()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn u_step_large_beta_tracks_gradient_target() {
        let v = random_image(16, 16, 4);
        let w = random_image(16, 16, 5);
        let g = gradient(&w);
        let u = solve_u_quadratic(&v, &Kernel::delta(1, 1).unwrap(), &g, 1e6).unwrap();
        let err = gradient(&u).sub(&g).energy().sqrt();
        assert!(err <= 1e-3 * g.energy().sqrt(), "{err}");
        assert!((u.mean() - v.mean()).abs() < 1e-9);
    }

    #[test]
    fn u_step_rejects_non_positive_beta() {
        let v = random_image(8, 8, 0);
        let g = gradient(&v);
        let k = Kernel::delta(1, 1).unwrap();
        assert!(matches!(
            solve_u_quadratic(&v, &k, &g, 0.0),
            Err(Error::NonPositiveWeight { .. })
        ));
    }

    #[test]
    fn h_step_large_beta_returns_previous_kernel() {
        let u = random_image(16, 16, 6);
        let v = random_image(16, 16, 7);
        let k = random_kernel(5, 5, 8);
        let h = solve_h_quadratic(&u, &v, &k, 1e6, 0.0).unwrap();
        let emb = embed_kernel(&k, 16, 16).unwrap();
        for (a, b) in h.data().iter().zip(emb.data()) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn h_step_recovers_exact_kernel() {
        let u = random_image(16, 16, 9);
        let k = random_kernel(5, 3, 10);
        let v = circular_convolve(&u, &k).unwrap();
        let h = solve_h_quadratic(&u, &v, &Kernel::delta(1, 1).unwrap(), 0.0, 0.0).unwrap();
        let emb = embed_kernel(&k, 16, 16).unwrap();
        for (a, b) in h.data().iter().zip(emb.data()) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn h_step_degenerate_denominator() {
        let u = Image::filled(8, 8, 1.0);
        let err = solve_h_quadratic(&u, &u, &Kernel::delta(1, 1).unwrap(), 0.0, 0.0).unwrap_err();
        assert!(matches!(err, Error::DegenerateDenominator { .. }));
    }

    #[test]
    fn embed_and_extract_round_trip() {
        let k = random_kernel(5, 3, 12);
        let grid = embed_kernel(&k, 9, 9).unwrap();
        assert_eq!(extract_centered(&grid, 5, 3).unwrap(), k.weights());
    }
}
