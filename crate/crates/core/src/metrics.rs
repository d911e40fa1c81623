//! Evaluation protocols: shift-registered kernel RMSE, registered and cropped
//! PSNR, and synthetic degradation of a sharp image.

use std::fmt;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::kernel::Kernel;
use crate::rng::CounterRng;
use crate::spectral::circular_convolve;

/// PSNR reported for a perfect match.
pub const PSNR_CAP_DB: f64 = 99.0;

/// Integer translation found by an exhaustive registration search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Registration {
    pub shift: (isize, isize),
    pub score: f64,
}

/// Registered RMSE between an estimated and a ground-truth kernel.
///
/// Both kernels are zero-padded to their common odd bounding size
/// `W x H`. The estimate is translated by every integer shift `s` in
/// `[-r, r]^2`, `r` the larger half-width of the common grid, and
/// `sqrt(sum_c (est(c - s) - gt(c))^2 / (W H))` is minimized. The sum runs
/// over the grid extended by `r` on each side, so translated mass is never
/// dropped. Ties resolve to the smallest `|s|`, then lexicographically.
pub fn kernel_rmse_registered(k_est: &Kernel, k_gt: &Kernel) -> (f64, Registration) {
    let w = k_est.width().max(k_gt.width());
    let h = k_est.height().max(k_gt.height());
    let (rx, ry) = ((w / 2) as isize, (h / 2) as isize);
    let r = rx.max(ry);
    let cells = (w * h) as f64;

    let mut best: Option<(f64, (isize, isize))> = None;
    for sy in -r..=r {
        for sx in -r..=r {
            let mut sse = 0.0;
            for oy in -(ry + r)..=(ry + r) {
                for ox in -(rx + r)..=(rx + r) {
                    let d = k_est.at_offset(ox - sx, oy - sy) - k_gt.at_offset(ox, oy);
                    sse += d * d;
                }
            }
            let rmse = (sse / cells).sqrt();
            let better = match best {
                None => true,
                Some((b, s)) => {
                    rmse < b
                        || (rmse == b
                            && (sx.abs() + sy.abs(), (sy, sx))
                                < (s.0.abs() + s.1.abs(), (s.1, s.0)))
                }
            };
            if better {
                best = Some((rmse, (sx, sy)));
            }
        }
    }
    let (rmse, shift) = best.expect("search window is non-empty");
    (rmse, Registration { shift, score: rmse })
}

/// Registered RMSE of the centered delta against `k_gt`: the reference an
/// estimator has to beat.
pub fn delta_baseline_rmse(k_gt: &Kernel) -> f64 {
    kernel_rmse_registered(&Kernel::delta(1, 1).unwrap(), k_gt).0
}

/// Peak signal-to-noise ratio for peak 1.0, capped at [`PSNR_CAP_DB`].
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse <= 0.0 {
        PSNR_CAP_DB
    } else {
        (-10.0 * mse.log10()).min(PSNR_CAP_DB)
    }
}

/// PSNR over the interior left after removing `crop` pixels from every side,
/// maximized over integer shifts of the estimate within `[-crop, crop]^2`.
pub fn psnr_registered(u_est: &Image, u_gt: &Image, crop: usize) -> Result<(f64, Registration)> {
    if u_est.dims() != u_gt.dims() {
        return Err(Error::SizeMismatch {
            expected_w: u_gt.width(),
            expected_h: u_gt.height(),
            got_w: u_est.width(),
            got_h: u_est.height(),
        });
    }
    let (w, h) = u_gt.dims();
    if 2 * crop >= w || 2 * crop >= h {
        return Err(Error::EmptyInterior {
            crop,
            width: w,
            height: h,
        });
    }
    let c = crop as isize;
    let n = ((w - 2 * crop) * (h - 2 * crop)) as f64;
    let mut best: Option<(f64, (isize, isize))> = None;
    for sy in -c..=c {
        for sx in -c..=c {
            let mut sse = 0.0;
            for y in crop..h - crop {
                for x in crop..w - crop {
                    let e = u_est.get((x as isize - sx) as usize, (y as isize - sy) as usize);
                    let d = e - u_gt.get(x, y);
                    sse += d * d;
                }
            }
            let mse = sse / n;
            let better = match best {
                None => true,
                Some((b, s)) => {
                    mse < b || (mse == b && sx.abs() + sy.abs() < s.0.abs() + s.1.abs())
                }
            };
            if better {
                best = Some((mse, (sx, sy)));
            }
        }
    }
    let (mse, shift) = best.expect("search window is non-empty");
    let psnr = psnr_from_mse(mse);
    Ok((psnr, Registration { shift, score: psnr }))
}

/// Additive white Gaussian noise description.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseModel {
    /// Standard deviation as a fraction of the dynamic range.
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "noise sigma must be >= 0, got {sigma}"
            )));
        }
        Ok(Self { sigma, seed })
    }

    /// Noise realization for an image of the given size; pixel `i` in
    /// row-major order receives Gaussian draw `i` of the seed's stream.
    pub fn realization(&self, width: usize, height: usize) -> Image {
        let rng = CounterRng::new(self.seed);
        let data = (0..width * height)
            .map(|i| self.sigma * rng.gaussian(i as u64))
            .collect();
        Image::from_vec(width, height, data)
    }
}

/// `circular_convolve(u, k)` plus seeded Gaussian noise. Values are not
/// clamped.
pub fn synthesize_blurry(u: &Image, k: &Kernel, noise: &NoiseModel) -> Result<Image> {
    let blurred = circular_convolve(u, k)?;
    if noise.sigma == 0.0 {
        return Ok(blurred);
    }
    let n = noise.realization(u.width(), u.height());
    Ok(blurred.zip_map(&n, |a, b| a + b))
}

/// One evaluation record; serializes to the CSV schema
/// `method,sigma,rmse,psnr_db,shift_x,shift_y,runtime_ms`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricRow {
    pub method: String,
    pub sigma: Option<f64>,
    pub rmse: Option<f64>,
    pub psnr_db: Option<f64>,
    pub shift: Option<(isize, isize)>,
    pub runtime_ms: Option<f64>,
}

impl MetricRow {
    pub const HEADER: &'static str = "method,sigma,rmse,psnr_db,shift_x,shift_y,runtime_ms";
}

impl fmt::Display for MetricRow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn opt(v: Option<f64>) -> String {
            v.map(|x| format!("{x}")).unwrap_or_default()
        }
        let (sx, sy) = match self.shift {
            Some((x, y)) => (x.to_string(), y.to_string()),
            None => (String::new(), String::new()),
        };
        write!(
            f,
            "{},{},{},{},{},{},{}",
            self.method,
            opt(self.sigma),
            opt(self.rmse),
            opt(self.psnr_db),
            sx,
            sy,
            opt(self.runtime_ms)
        )
    }
}
