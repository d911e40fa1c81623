//! Shared helpers: random data and dense matrix oracles built straight from
//! the spatial definitions (no FFT involved).
#![allow(dead_code)]

use deblur::image::Image;
use deblur::kernel::Kernel;
use deblur::rng::CounterRng;
use nalgebra::{DMatrix, DVector};

pub fn random_image(w: usize, h: usize, seed: u64) -> Image {
    let rng = CounterRng::new(seed);
    Image::from_fn(w, h, |x, y| rng.uniform((y * w + x) as u64))
}

pub fn random_kernel(w: usize, h: usize, seed: u64) -> Kernel {
    let rng = CounterRng::new(seed);
    let weights = (0..w * h).map(|i| 0.05 + rng.uniform(i as u64)).collect();
    Kernel::new(w, h, weights).unwrap().normalized().unwrap()
}

pub fn to_vector(img: &Image) -> DVector<f64> {
    DVector::from_column_slice(img.data())
}

pub fn from_vector(v: &DVector<f64>, w: usize, h: usize) -> Image {
    Image::from_vec(w, h, v.iter().copied().collect())
}

fn idx(x: isize, y: isize, w: usize, h: usize) -> usize {
    let xi = x.rem_euclid(w as isize) as usize;
    let yi = y.rem_euclid(h as isize) as usize;
    yi * w + xi
}

/// `out(p) = sum_o k(o) u(p - o)`, offsets relative to the kernel center.
pub fn kernel_conv_matrix(k: &Kernel, w: usize, h: usize) -> DMatrix<f64> {
    let n = w * h;
    let (rx, ry) = k.radius();
    let mut m = DMatrix::zeros(n, n);
    for py in 0..h as isize {
        for px in 0..w as isize {
            let row = idx(px, py, w, h);
            for oy in -(ry as isize)..=ry as isize {
                for ox in -(rx as isize)..=rx as isize {
                    m[(row, idx(px - ox, py - oy, w, h))] += k.at_offset(ox, oy);
                }
            }
        }
    }
    m
}

/// `out(p) = sum_q u(q) h(p - q)`: the convolution `u * h` as a linear map
/// of the full-grid `h` (origin at pixel 0).
pub fn image_conv_matrix(u: &Image) -> DMatrix<f64> {
    let (w, h) = u.dims();
    let n = w * h;
    let mut m = DMatrix::zeros(n, n);
    for py in 0..h as isize {
        for px in 0..w as isize {
            for qy in 0..h as isize {
                for qx in 0..w as isize {
                    m[(idx(px, py, w, h), idx(px - qx, py - qy, w, h))] += u.get(qx as usize, qy as usize);
                }
            }
        }
    }
    m
}

/// Periodic forward differences.
pub fn difference_matrices(w: usize, h: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = w * h;
    let mut dx = DMatrix::zeros(n, n);
    let mut dy = DMatrix::zeros(n, n);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let i = idx(x, y, w, h);
            dx[(i, idx(x + 1, y, w, h))] += 1.0;
            dx[(i, i)] -= 1.0;
            dy[(i, idx(x, y + 1, w, h))] += 1.0;
            dy[(i, i)] -= 1.0;
        }
    }
    (dx, dy)
}

/// Full-grid embedding of a kernel with its center at pixel 0.
pub fn embedded(k: &Kernel, w: usize, h: usize) -> DVector<f64> {
    let (rx, ry) = k.radius();
    let mut e = DVector::zeros(w * h);
    for oy in -(ry as isize)..=ry as isize {
        for ox in -(rx as isize)..=rx as isize {
            e[idx(ox, oy, w, h)] += k.at_offset(ox, oy);
        }
    }
    e
}

/// Normal-equation solution of `|k * u - v|^2 + beta |D u - g|^2`.
pub fn dense_u_solve(v: &Image, k: &Kernel, gx: &Image, gy: &Image, beta: f64) -> Image {
    let (w, h) = v.dims();
    let kmat = kernel_conv_matrix(k, w, h);
    let (dx, dy) = difference_matrices(w, h);
    let lhs = kmat.transpose() * &kmat + (dx.transpose() * &dx + dy.transpose() * &dy) * beta;
    let rhs = kmat.transpose() * to_vector(v) + (dx.transpose() * to_vector(gx) + dy.transpose() * to_vector(gy)) * beta;
    from_vector(&lhs.lu().solve(&rhs).expect("normal matrix is invertible"), w, h)
}

/// Normal-equation solution of `|u * h - v|^2 + beta |k_prev - h|^2 + gamma |D h|^2`.
pub fn dense_h_solve(u: &Image, v: &Image, k_prev: &Kernel, beta: f64, gamma: f64) -> Image {
    let (w, h) = u.dims();
    let umat = image_conv_matrix(u);
    let (dx, dy) = difference_matrices(w, h);
    let n = w * h;
    let lhs = umat.transpose() * &umat
        + DMatrix::identity(n, n) * beta
        + (dx.transpose() * &dx + dy.transpose() * &dy) * gamma;
    let rhs = umat.transpose() * to_vector(v) + embedded(k_prev, w, h) * beta;
    from_vector(&lhs.lu().solve(&rhs).expect("normal matrix is invertible"), w, h)
}

/// `|a - b| / |b|` in the Euclidean norm.
pub fn relative_error(a: &Image, b: &Image) -> f64 {
    let num: f64 = a.data().iter().zip(b.data()).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.data().iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

/// Scalar grid-search minimizer of `f` over `[lo, hi]` with spacing `step`.
pub fn grid_argmin(lo: f64, hi: f64, step: f64, f: impl Fn(f64) -> f64) -> f64 {
    let n = ((hi - lo) / step).ceil() as usize;
    let mut best = (f64::INFINITY, lo);
    for i in 0..=n {
        let x = lo + i as f64 * step;
        let fx = f(x);
        if fx < best.0 {
            best = (fx, x);
        }
    }
    best.1
}
