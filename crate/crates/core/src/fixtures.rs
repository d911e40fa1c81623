//! Deterministic synthetic scenes and motion kernels for tests, examples and
//! the bundled fixture files. Everything is driven by [`CounterRng`], so a
//! `(size, seed)` pair always reproduces the same data.

use crate::image::Image;
use crate::kernel::Kernel;
use crate::rng::CounterRng;

/// Piecewise-smooth scene with rectangles, disks, thin strokes and a mild
/// background ramp. Intensities stay within `[0.05, 0.95]`.
pub fn textured_scene(width: usize, height: usize, seed: u64) -> Image {
    let rng = CounterRng::new(seed);
    let mut draw = 0u64;
    let mut next = || {
        draw += 1;
        rng.uniform(draw)
    };
    let (wf, hf) = (width as f64, height as f64);
    let gx = next() - 0.5;
    let gy = next() - 0.5;
    let base = 0.35 + 0.3 * next();
    let mut img = Image::from_fn(width, height, |x, y| {
        base + 0.2 * (gx * x as f64 / wf + gy * y as f64 / hf)
    });

    let area = (width * height) as f64;
    let shapes = ((area / 350.0) as usize).clamp(6, 400);
    for _ in 0..shapes {
        let kind = next();
        let value = 0.05 + 0.9 * next();
        let cx = next() * wf;
        let cy = next() * hf;
        let size = (0.03 + 0.17 * next()) * wf.min(hf);
        if kind < 0.4 {
            let aspect = 0.3 + 1.4 * next();
            let (hw, hh) = (size * aspect * 0.5, size / aspect * 0.5);
            for y in (cy - hh).max(0.0) as usize..((cy + hh).min(hf) as usize) {
                for x in (cx - hw).max(0.0) as usize..((cx + hw).min(wf) as usize) {
                    img.set(x, y, value);
                }
            }
        } else if kind < 0.7 {
            let r = size * 0.5;
            let r2 = r * r;
            for y in (cy - r).max(0.0) as usize..((cy + r).min(hf) as usize) {
                for x in (cx - r).max(0.0) as usize..((cx + r).min(wf) as usize) {
                    let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                    if dx * dx + dy * dy <= r2 {
                        img.set(x, y, value);
                    }
                }
            }
        } else {
            // Stroke: a 1-2 pixel wide segment at a random angle.
            let angle = next() * std::f64::consts::PI;
            let len = size * 1.5;
            let thick = if next() < 0.5 { 0.6 } else { 1.1 };
            let (ux, uy) = (angle.cos(), angle.sin());
            let steps = (len * 2.0) as usize + 1;
            for s in 0..steps {
                let t = s as f64 / steps as f64 - 0.5;
                let px = cx + t * len * ux;
                let py = cy + t * len * uy;
                let (x0, x1) = ((px - thick).floor() as isize, (px + thick).ceil() as isize);
                let (y0, y1) = ((py - thick).floor() as isize, (py + thick).ceil() as isize);
                for y in y0..=y1 {
                    for x in x0..=x1 {
                        if x < 0 || y < 0 || x >= width as isize || y >= height as isize {
                            continue;
                        }
                        let (dx, dy) = (x as f64 + 0.5 - px, y as f64 + 0.5 - py);
                        if dx * dx + dy * dy <= thick * thick {
                            img.set(x as usize, y as usize, value);
                        }
                    }
                }
            }
        }
    }
    img.clamp(0.05, 0.95)
}

/// [`textured_scene`] with per-pixel uniform grain of the given peak-to-peak
/// `amplitude`, clamped to `[0, 1]`. The grain carries energy at every
/// frequency, which flat regions alone do not.
pub fn grainy_scene(width: usize, height: usize, seed: u64, amplitude: f64) -> Image {
    let rng = CounterRng::new(seed).fork(1);
    let base = textured_scene(width, height, seed);
    Image::from_fn(width, height, |x, y| {
        let g = rng.uniform((y * width + x) as u64) - 0.5;
        (base.get(x, y) + amplitude * g).clamp(0.0, 1.0)
    })
}

fn splat(weights: &mut [f64], size: usize, px: f64, py: f64, mass: f64) {
    let (x0, y0) = (px.floor(), py.floor());
    let (fx, fy) = (px - x0, py - y0);
    for (dy, wy) in [(0.0, 1.0 - fy), (1.0, fy)] {
        for (dx, wx) in [(0.0, 1.0 - fx), (1.0, fx)] {
            let x = x0 + dx;
            let y = y0 + dy;
            if x >= 0.0 && y >= 0.0 && (x as usize) < size && (y as usize) < size {
                weights[y as usize * size + x as usize] += mass * wx * wy;
            }
        }
    }
}

/// Straight motion blur of length `size` through the center at `angle`
/// radians, rasterized with bilinear splatting.
pub fn line_kernel(size: usize, angle: f64) -> Kernel {
    assert!(size % 2 == 1, "kernel size must be odd");
    let c = (size / 2) as f64;
    let len = (size - 1) as f64;
    let steps = 8 * size;
    let mut w = vec![0.0; size * size];
    for s in 0..=steps {
        let t = s as f64 / steps as f64 - 0.5;
        splat(
            &mut w,
            size,
            c + t * len * angle.cos(),
            c + t * len * angle.sin(),
            1.0,
        );
    }
    Kernel::new(size, size, w).unwrap().normalized().unwrap()
}

/// Two equal impulses at offsets `(-1, 0)` and `(1, 1)` on a 5x5 support.
pub fn two_point_kernel() -> Kernel {
    let mut w = vec![0.0; 25];
    w[2 * 5 + 1] = 0.5;
    w[3 * 5 + 3] = 0.5;
    Kernel::new(5, 5, w).unwrap()
}

/// Camera-shake style kernel: a smooth random-walk trajectory with varying
/// speed, centered on its center of mass and confined to the support.
pub fn motion_kernel(size: usize, seed: u64) -> Kernel {
    assert!(
        size % 2 == 1 && size >= 3,
        "kernel size must be odd and >= 3"
    );
    let rng = CounterRng::new(seed);
    let n = 64 * size;
    let mut pts = Vec::with_capacity(n);
    let (mut x, mut y) = (0.0f64, 0.0f64);
    let heading = rng.uniform(0) * std::f64::consts::TAU;
    let (mut vx, mut vy) = (heading.cos(), heading.sin());
    for i in 0..n {
        let ax = rng.gaussian(2 * i as u64 + 10);
        let ay = rng.gaussian(2 * i as u64 + 11);
        vx = 0.97 * vx + 0.25 * ax;
        vy = 0.97 * vy + 0.25 * ay;
        let speed = (vx * vx + vy * vy).sqrt().max(1e-9);
        x += vx / speed;
        y += vy / speed;
        pts.push((x, y));
    }
    // Fit the trajectory into the support with one pixel of margin.
    let (mx, my) = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0, a.1 + p.1));
    let (mx, my) = (mx / n as f64, my / n as f64);
    let extent = pts
        .iter()
        .map(|p| (p.0 - mx).abs().max((p.1 - my).abs()))
        .fold(0.0, f64::max)
        .max(1e-9);
    let half = (size / 2) as f64 - 0.6;
    let scale = half / extent;
    let c = (size / 2) as f64;
    let mut w = vec![0.0; size * size];
    for (i, p) in pts.iter().enumerate() {
        // Dwell time varies along the path like a decelerating hand.
        let mass = 0.5 + rng.uniform(100_000 + i as u64);
        splat(
            &mut w,
            size,
            c + (p.0 - mx) * scale,
            c + (p.1 - my) * scale,
            mass,
        );
    }
    Kernel::new(size, size, w).unwrap().normalized().unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scenes_are_deterministic_and_in_range() {
        let a = textured_scene(64, 48, 5);
        assert_eq!(a, textured_scene(64, 48, 5));
        assert_ne!(a, textured_scene(64, 48, 6));
        assert!(a.min() >= 0.05 && a.max() <= 0.95);
        assert!(a.max() - a.min() > 0.3);
        let g = grainy_scene(64, 48, 5, 0.2);
        assert!(g.min() >= 0.0 && g.max() <= 1.0);
        assert!(g.zip_map(&a, |p, q| (p - q).abs()).max() <= 0.1 + 1e-12);
    }

    #[test]
    fn kernels_are_valid() {
        for size in [3, 7, 13] {
            let k = motion_kernel(size, size as u64);
            assert_eq!(k.dims(), (size, size));
            assert!((k.sum() - 1.0).abs() < 1e-12);
            assert!(k.is_non_negative());
            let (cx, cy) = k.centroid();
            assert!(cx.abs() < 1.0 && cy.abs() < 1.0);
        }
        let l = line_kernel(7, 0.0);
        assert!((l.at_offset(3, 0) - l.at_offset(-3, 0)).abs() < 1e-12);
        assert_eq!(l.at_offset(0, 1), 0.0);
    }
}
