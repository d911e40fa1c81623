//! Single-channel image storage, periodic difference operators, bicubic
//! resampling and border tapering.
//!
//! Every image is a row-major grid of `f64` intensities with nominal range
//! `[0, 1]`. Difference operators use forward differences with periodic wrap,
//! which is the convention the FFT solvers in [`crate::spectral`]
//! diagonalize exactly.

use crate::error::{Error, Result};

/// Row-major grid of scalar intensities.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image from row-major data.
    ///
    /// Panics if `data.len() != width * height` or either side is zero.
    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Self {
        assert!(width > 0 && height > 0, "image sides must be non-zero");
        assert_eq!(
            data.len(),
            width * height,
            "data length must equal width * height"
        );
        Self {
            width,
            height,
            data,
        }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::from_vec(width, height, vec![value; width * height])
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::from_vec(width, height, data)
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

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    /// Reads a pixel with periodic wrap of both coordinates.
    #[inline]
    pub fn get_wrapped(&self, x: isize, y: isize) -> f64 {
        let xw = x.rem_euclid(self.width as isize) as usize;
        let yw = y.rem_euclid(self.height as isize) as usize;
        self.data[yw * self.width + xw]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Image {
        Image::from_vec(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    /// Pixelwise combination of two same-sized images.
    pub fn zip_map(&self, other: &Image, f: impl Fn(f64, f64) -> f64) -> Image {
        assert_eq!(self.dims(), other.dims(), "image dimensions differ");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Image::from_vec(self.width, self.height, data)
    }

    pub fn dot(&self, other: &Image) -> f64 {
        assert_eq!(self.dims(), other.dims(), "image dimensions differ");
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn clamp(&self, lo: f64, hi: f64) -> Image {
        self.map(|v| v.clamp(lo, hi))
    }

    /// Sum of squared pixel values.
    pub fn energy(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }

    /// Translates the image by `(dx, dy)` with periodic wrap.
    pub fn roll(&self, dx: isize, dy: isize) -> Image {
        Image::from_fn(self.width, self.height, |x, y| {
            self.get_wrapped(x as isize - dx, y as isize - dy)
        })
    }
}

/// Per-pixel horizontal and vertical differences.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientField {
    pub dx: Image,
    pub dy: Image,
}

impl GradientField {
    pub fn new(dx: Image, dy: Image) -> Self {
        assert_eq!(dx.dims(), dy.dims(), "gradient components differ in size");
        Self { dx, dy }
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::new(Image::zeros(width, height), Image::zeros(width, height))
    }

    pub fn width(&self) -> usize {
        self.dx.width()
    }

    pub fn height(&self) -> usize {
        self.dx.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dx.dims()
    }

    pub fn dot(&self, other: &GradientField) -> f64 {
        self.dx.dot(&other.dx) + self.dy.dot(&other.dy)
    }

    /// Squared magnitude `dx² + dy²` at pixel index `i`.
    #[inline]
    pub fn magnitude_sq(&self, i: usize) -> f64 {
        let a = self.dx.data()[i];
        let b = self.dy.data()[i];
        a * a + b * b
    }

    /// Number of pixels whose gradient vector is not exactly zero.
    pub fn count_nonzero(&self) -> usize {
        (0..self.dx.len())
            .filter(|&i| self.magnitude_sq(i) != 0.0)
            .count()
    }

    /// Isotropic total variation, the sum of per-pixel gradient magnitudes.
    pub fn total_variation(&self) -> f64 {
        (0..self.dx.len())
            .map(|i| self.magnitude_sq(i).sqrt())
            .sum()
    }

    pub fn sub(&self, other: &GradientField) -> GradientField {
        GradientField::new(
            self.dx.zip_map(&other.dx, |a, b| a - b),
            self.dy.zip_map(&other.dy, |a, b| a - b),
        )
    }

    pub fn energy(&self) -> f64 {
        self.dx.energy() + self.dy.energy()
    }
}

/// Periodic forward differences: `dx(x, y) = img(x+1, y) - img(x, y)`.
pub fn gradient(img: &Image) -> GradientField {
    let (w, h) = img.dims();
    let src = img.data();
    let mut dx = vec![0.0; w * h];
    let mut dy = vec![0.0; w * h];
    for y in 0..h {
        let row = y * w;
        let next_row = ((y + 1) % h) * w;
        for x in 0..w {
            let here = src[row + x];
            dx[row + x] = src[row + (x + 1) % w] - here;
            dy[row + x] = src[next_row + x] - here;
        }
    }
    GradientField::new(Image::from_vec(w, h, dx), Image::from_vec(w, h, dy))
}

/// Backward-difference divergence, the negative adjoint of [`gradient`].
///
/// For all `a`, `b`: `<gradient(a), b> = <a, -divergence(b)>`.
pub fn divergence(field: &GradientField) -> Image {
    let (w, h) = field.dims();
    let bx = field.dx.data();
    let by = field.dy.data();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let row = y * w;
        let prev_row = ((y + h - 1) % h) * w;
        for x in 0..w {
            let prev_x = (x + w - 1) % w;
            out[row + x] = (bx[row + x] - bx[row + prev_x]) + (by[row + x] - by[prev_row + x]);
        }
    }
    Image::from_vec(w, h, out)
}

/// Catmull-Rom cubic (a = -0.5).
#[inline]
pub(crate) fn cubic(t: f64) -> f64 {
    const A: f64 = -0.5;
    let t = t.abs();
    if t <= 1.0 {
        ((A + 2.0) * t - (A + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        ((A * t - 5.0 * A) * t + 8.0 * A) * t - 4.0 * A
    } else {
        0.0
    }
}

/// Taps and weights for one output sample of a 1-D resample.
struct Taps {
    start: isize,
    weights: Vec<f64>,
}

/// Pixel-center aligned tap tables. Downscaling stretches the cubic by the
/// inverse scale so the filter band-limits before decimation.
fn resample_taps(n_in: usize, n_out: usize) -> Vec<Taps> {
    let scale = n_out as f64 / n_in as f64;
    let stretch = if scale < 1.0 { 1.0 / scale } else { 1.0 };
    let radius = 2.0 * stretch;
    (0..n_out)
        .map(|i| {
            let center = (i as f64 + 0.5) / scale - 0.5;
            let start = (center - radius).floor() as isize + 1;
            let end = (center + radius).ceil() as isize - 1;
            let weights = (start..=end)
                .map(|j| cubic((center - j as f64) / stretch))
                .collect();
            Taps { start, weights }
        })
        .collect()
}

fn resample_line(src: &[f64], taps: &Taps, out_anchor: usize) -> f64 {
    let n = src.len() as isize;
    // Accumulate deviations from an anchor sample so constant input is
    // reproduced exactly regardless of how the weights round.
    let anchor = src[out_anchor];
    let mut acc = 0.0;
    let mut norm = 0.0;
    for (k, &w) in taps.weights.iter().enumerate() {
        let j = (taps.start + k as isize).clamp(0, n - 1) as usize;
        acc += w * (src[j] - anchor);
        norm += w;
    }
    anchor + acc / norm
}

fn anchor_index(taps: &Taps, n_in: usize) -> usize {
    // Index of the largest-weight tap.
    let (k, _) = taps
        .weights
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (k, &w)| {
            if w > best.1 {
                (k, w)
            } else {
                best
            }
        });
    (taps.start + k as isize).clamp(0, n_in as isize - 1) as usize
}

/// Separable Catmull-Rom resampling with pixel-center alignment and
/// clamp-to-edge borders.
pub fn bicubic_resize(img: &Image, target_w: usize, target_h: usize) -> Image {
    assert!(
        target_w >= 1 && target_h >= 1,
        "target dimensions must be >= 1"
    );
    let (w, h) = img.dims();
    if (w, h) == (target_w, target_h) {
        return img.clone();
    }

    let x_taps = resample_taps(w, target_w);
    let x_anchor: Vec<usize> = x_taps.iter().map(|t| anchor_index(t, w)).collect();
    let mut horiz = vec![0.0; target_w * h];
    for y in 0..h {
        let row = &img.data()[y * w..(y + 1) * w];
        for (i, taps) in x_taps.iter().enumerate() {
            horiz[y * target_w + i] = resample_line(row, taps, x_anchor[i]);
        }
    }

    let y_taps = resample_taps(h, target_h);
    let y_anchor: Vec<usize> = y_taps.iter().map(|t| anchor_index(t, h)).collect();
    let mut out = vec![0.0; target_w * target_h];
    let mut column = vec![0.0; h];
    for x in 0..target_w {
        for (y, c) in column.iter_mut().enumerate() {
            *c = horiz[y * target_w + x];
        }
        for (j, taps) in y_taps.iter().enumerate() {
            out[j * target_w + x] = resample_line(&column, taps, y_anchor[j]);
        }
    }
    for v in &mut out {
        if !v.is_finite() {
            *v = 0.0;
        }
    }
    Image::from_vec(target_w, target_h, out)
}

/// Periodic box blur with an odd square window.
pub fn box_blur(img: &Image, size: usize) -> Image {
    assert!(size % 2 == 1, "box size must be odd");
    if size == 1 {
        return img.clone();
    }
    let r = (size / 2) as isize;
    let n = size as f64;
    let (w, h) = img.dims();
    let horiz = Image::from_fn(w, h, |x, y| {
        let anchor = img.get(x, y);
        let dev: f64 = (-r..=r)
            .map(|d| img.get_wrapped(x as isize + d, y as isize) - anchor)
            .sum();
        anchor + dev / n
    });
    Image::from_fn(w, h, |x, y| {
        let anchor = horiz.get(x, y);
        let dev: f64 = (-r..=r)
            .map(|d| horiz.get_wrapped(x as isize, y as isize + d) - anchor)
            .sum();
        anchor + dev / n
    })
}

/// Blend weight for a pixel at distance `d` from the nearest border.
fn taper_weight(d: usize, band: usize) -> f64 {
    if d >= band {
        1.0
    } else {
        0.5 - 0.5 * (std::f64::consts::PI * (d as f64 + 1.0) / (band as f64 + 1.0)).cos()
    }
}

/// Blends the border band of width `kernel_size` toward a periodic box-blurred
/// copy so the periodic extension of the image has no hard seams. Interior
/// pixels are returned bit-for-bit.
pub fn edge_taper(img: &Image, kernel_size: usize) -> Result<Image> {
    let (w, h) = img.dims();
    if kernel_size % 2 == 0 {
        return Err(Error::KernelSizeEven {
            width: kernel_size,
            height: kernel_size,
        });
    }
    if kernel_size >= w.min(h) {
        return Err(Error::KernelTooLarge {
            kernel_w: kernel_size,
            kernel_h: kernel_size,
            image_w: w,
            image_h: h,
        });
    }
    let blurred = box_blur(img, kernel_size);
    let wx: Vec<f64> = (0..w)
        .map(|x| taper_weight(x.min(w - 1 - x), kernel_size))
        .collect();
    let wy: Vec<f64> = (0..h)
        .map(|y| taper_weight(y.min(h - 1 - y), kernel_size))
        .collect();
    Ok(Image::from_fn(w, h, |x, y| {
        let weight = wx[x] * wy[y];
        let v = img.get(x, y);
        if weight == 1.0 {
            v
        } else {
            v + (1.0 - weight) * (blurred.get(x, y) - v)
        }
    }))
}

/// Rec. 601 luminance of an RGB triple of channels.
pub fn luminance(r: &Image, g: &Image, b: &Image) -> Image {
    assert_eq!(r.dims(), g.dims());
    assert_eq!(r.dims(), b.dims());
    let data = r
        .data()
        .iter()
        .zip(g.data())
        .zip(b.data())
        .map(|((&r, &g), &b)| 0.299 * r + 0.587 * g + 0.114 * b)
        .collect();
    Image::from_vec(r.width(), r.height(), data)
}
