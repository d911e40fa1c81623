//! Blur kernels: small non-negative filters on an odd-sided support rectangle.

use crate::error::{Error, Result};
use crate::image::{bicubic_resize, Image};

/// Non-negative filter on an odd `width x height` support, centered at
/// `(width / 2, height / 2)`.
///
/// Estimation routines return normalized kernels (weights sum to 1);
/// intermediate results such as [`crate::kernel_solve::project_kernel`]
/// output may carry any non-negative mass.
#[derive(Clone, Debug, PartialEq)]
pub struct Kernel {
    width: usize,
    height: usize,
    weights: Vec<f64>,
}

impl Kernel {
    /// Validates odd sides, finite non-negative weights and matching length.
    pub fn new(width: usize, height: usize, weights: Vec<f64>) -> Result<Self> {
        Self::check_sides(width, height)?;
        if weights.len() != width * height {
            return Err(Error::InvariantViolation(format!(
                "{} weights for a {width}x{height} kernel",
                weights.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !w.is_finite() || **w < 0.0) {
            return Err(Error::InvariantViolation(format!(
                "invalid kernel weight {w}"
            )));
        }
        Ok(Self {
            width,
            height,
            weights,
        })
    }

    /// Like [`Kernel::new`] but permits negative weights. Used for raw
    /// kernel files and for solver intermediates.
    pub fn new_raw(width: usize, height: usize, weights: Vec<f64>) -> Result<Self> {
        Self::check_sides(width, height)?;
        if weights.len() != width * height {
            return Err(Error::InvariantViolation(format!(
                "{} weights for a {width}x{height} kernel",
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::InvariantViolation("non-finite kernel weight".into()));
        }
        Ok(Self {
            width,
            height,
            weights,
        })
    }

    fn check_sides(width: usize, height: usize) -> Result<()> {
        if width == 0 || height == 0 || width % 2 == 0 || height % 2 == 0 {
            return Err(Error::KernelSizeEven { width, height });
        }
        Ok(())
    }

    /// Centered unit impulse.
    pub fn delta(width: usize, height: usize) -> Result<Self> {
        Self::check_sides(width, height)?;
        let mut weights = vec![0.0; width * height];
        weights[(height / 2) * width + width / 2] = 1.0;
        Ok(Self {
            width,
            height,
            weights,
        })
    }

    /// Uniform box of the given odd size.
    pub fn boxed(width: usize, height: usize) -> Result<Self> {
        Self::check_sides(width, height)?;
        let n = (width * height) as f64;
        Ok(Self {
            width,
            height,
            weights: vec![1.0 / n; width * height],
        })
    }

    pub fn from_image(img: &Image) -> Result<Self> {
        Self::new(img.width(), img.height(), img.data().to_vec())
    }

    pub fn to_image(&self) -> Image {
        Image::from_vec(self.width, self.height, self.weights.clone())
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    /// Half-widths `(rx, ry)` of the support.
    #[inline]
    pub fn radius(&self) -> (usize, usize) {
        (self.width / 2, self.height / 2)
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.weights[y * self.width + x]
    }

    /// Weight at offset `(ox, oy)` from the center; zero outside the support.
    #[inline]
    pub fn at_offset(&self, ox: isize, oy: isize) -> f64 {
        let (rx, ry) = self.radius();
        let x = ox + rx as isize;
        let y = oy + ry as isize;
        if x < 0 || y < 0 || x >= self.width as isize || y >= self.height as isize {
            0.0
        } else {
            self.weights[y as usize * self.width + x as usize]
        }
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_non_negative(&self) -> bool {
        self.weights.iter().all(|&w| w >= 0.0)
    }

    /// Rescales to unit sum. Fails with [`Error::AllZeroKernel`] when the
    /// kernel carries no mass.
    pub fn normalized(&self) -> Result<Kernel> {
        let s = self.sum();
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::AllZeroKernel);
        }
        Ok(Kernel {
            width: self.width,
            height: self.height,
            weights: self.weights.iter().map(|w| w / s).collect(),
        })
    }

    /// Zero-pads (or crops) symmetrically to a new odd size, keeping the
    /// center fixed.
    pub fn padded_to(&self, width: usize, height: usize) -> Result<Kernel> {
        Self::check_sides(width, height)?;
        let (rx, ry) = ((width / 2) as isize, (height / 2) as isize);
        let mut weights = Vec::with_capacity(width * height);
        for oy in -ry..=ry {
            for ox in -rx..=rx {
                weights.push(self.at_offset(ox, oy));
            }
        }
        Ok(Kernel {
            width,
            height,
            weights,
        })
    }

    /// Bicubic resampling to a new odd size, followed by clamping negative
    /// lobes to zero and renormalizing.
    pub fn resized(&self, width: usize, height: usize) -> Result<Kernel> {
        Self::check_sides(width, height)?;
        let up = bicubic_resize(&self.to_image(), width, height);
        let weights = up.data().iter().map(|&w| w.max(0.0)).collect();
        Kernel {
            width,
            height,
            weights,
        }
        .normalized()
    }

    /// Center of mass in offsets from the kernel center.
    pub fn centroid(&self) -> (f64, f64) {
        let (rx, ry) = self.radius();
        let s = self.sum();
        let mut cx = 0.0;
        let mut cy = 0.0;
        for y in 0..self.height {
            for x in 0..self.width {
                let w = self.get(x, y);
                cx += w * (x as f64 - rx as f64);
                cy += w * (y as f64 - ry as f64);
            }
        }
        (cx / s, cy / s)
    }
}
