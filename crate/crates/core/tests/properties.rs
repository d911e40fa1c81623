mod common;

use common::{random_image, random_kernel};
use deblur::image::{bicubic_resize, divergence, edge_taper, gradient, GradientField, Image};
use deblur::kernel::Kernel;
use deblur::metrics::kernel_rmse_registered;
use deblur::pyramid::{build_schedule, BlindConfig};
use deblur::spectral::circular_convolve;
use proptest::prelude::*;

fn close(a: &Image, b: &Image, tol: f64) -> bool {
    a.zip_map(b, |x, y| (x - y).abs()).max() <= tol
}

fn odd(lo: usize, hi: usize) -> impl Strategy<Value = usize> {
    (lo / 2..=hi / 2).prop_map(|h| 2 * h + 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn divergence_is_negative_adjoint(w in 1usize..=64, h in 1usize..=64, seed in any::<u64>()) {
        let u = random_image(w, h, seed);
        let p = GradientField::new(random_image(w, h, seed ^ 1), random_image(w, h, seed ^ 2));
        let lhs = gradient(&u).dot(&p);
        let rhs = -u.dot(&divergence(&p));
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()), "{lhs} vs {rhs}");
    }

    #[test]
    fn gradient_is_linear(w in 2usize..=32, h in 2usize..=32, seed in any::<u64>(), a in -3.0f64..3.0) {
        let u = random_image(w, h, seed);
        let v = random_image(w, h, seed.wrapping_add(7));
        let combo = u.zip_map(&v, |x, y| a * x + y);
        let g = gradient(&combo);
        let (gu, gv) = (gradient(&u), gradient(&v));
        let expect = GradientField::new(gu.dx.zip_map(&gv.dx, |x, y| a * x + y), gu.dy.zip_map(&gv.dy, |x, y| a * x + y));
        prop_assert!(g.sub(&expect).energy() <= 1e-20 * (1.0 + expect.energy()));
    }

    #[test]
    fn taper_keeps_interior_and_range(w in 12usize..=48, h in 12usize..=48, k in odd(1, 9), seed in any::<u64>()) {
        prop_assume!(k < w.min(h));
        let u = random_image(w, h, seed);
        let t = edge_taper(&u, k).unwrap();
        prop_assert_eq!(t.dims(), u.dims());
        prop_assert!(t.min() >= u.min() - 1e-12 && t.max() <= u.max() + 1e-12);
        for y in k..h - k {
            for x in k..w - k {
                prop_assert_eq!(t.get(x, y), u.get(x, y));
            }
        }
    }

    #[test]
    fn resize_keeps_constants(w in 1usize..=40, h in 1usize..=40, tw in 1usize..=40, th in 1usize..=40, c in 0.0f64..1.0) {
        let out = bicubic_resize(&Image::filled(w, h, c), tw, th);
        prop_assert_eq!(out.dims(), (tw, th));
        prop_assert!(close(&out, &Image::filled(tw, th, c), 1e-12));
    }

    #[test]
    fn convolution_is_bilinear(w in 8usize..=24, h in 8usize..=24, kw in odd(1, 7), kh in odd(1, 7), seed in any::<u64>(), a in -2.0f64..2.0) {
        let u = random_image(w, h, seed);
        let v = random_image(w, h, seed.wrapping_add(1));
        let k1 = random_kernel(kw, kh, seed.wrapping_add(2));
        let k2 = random_kernel(kw, kh, seed.wrapping_add(3));

        let lhs = circular_convolve(&u.zip_map(&v, |x, y| a * x + y), &k1).unwrap();
        let rhs = circular_convolve(&u, &k1).unwrap().zip_map(&circular_convolve(&v, &k1).unwrap(), |x, y| a * x + y);
        prop_assert!(close(&lhs, &rhs, 1e-10));

        // Raw kernels: the sum of two normalized kernels is not normalized.
        let summed: Vec<f64> = k1.weights().iter().zip(k2.weights()).map(|(x, y)| x + y).collect();
        let k12 = Kernel::new_raw(kw, kh, summed).unwrap();
        let lhs = circular_convolve(&u, &k12).unwrap();
        let rhs = circular_convolve(&u, &k1).unwrap().zip_map(&circular_convolve(&u, &k2).unwrap(), |x, y| x + y);
        prop_assert!(close(&lhs, &rhs, 1e-10));
    }

    #[test]
    fn kernel_resize_keeps_sum_and_sign(kw in odd(3, 31), kh in odd(3, 31), tw in odd(3, 31), th in odd(3, 31), seed in any::<u64>()) {
        let k = random_kernel(kw, kh, seed).resized(tw, th).unwrap();
        prop_assert_eq!(k.dims(), (tw, th));
        prop_assert!(k.is_non_negative());
        prop_assert!((k.sum() - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn registered_rmse_is_symmetric(aw in odd(1, 9), ah in odd(1, 9), bw in odd(1, 9), bh in odd(1, 9), seed in any::<u64>()) {
        let a = random_kernel(aw, ah, seed);
        let b = random_kernel(bw, bh, seed.wrapping_add(5));
        let (ab, _) = kernel_rmse_registered(&a, &b);
        let (ba, _) = kernel_rmse_registered(&b, &a);
        prop_assert!((ab - ba).abs() <= 1e-15, "{ab} vs {ba}");
        prop_assert!(kernel_rmse_registered(&a, &a).0 == 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn schedules_are_well_formed(kw in odd(3, 75), kh in odd(3, 75), extra_w in 0usize..200, extra_h in 0usize..200) {
        let (w, h) = (4 * kw + extra_w, 4 * kh + extra_h);
        let s = build_schedule((w, h), (kw, kh), &BlindConfig::for_noise(0.05)).unwrap();
        let last = s.levels.last().unwrap();
        prop_assert_eq!((last.image_w, last.image_h, last.kernel_w, last.kernel_h), (w, h, kw, kh));
        prop_assert_eq!(s.levels[0].kernel_w.max(s.levels[0].kernel_h), 3);
        for l in &s.levels {
            prop_assert!(l.kernel_w >= 3 && l.kernel_h >= 3);
            prop_assert!(l.kernel_w % 2 == 1 && l.kernel_h % 2 == 1);
        }
        for pair in s.levels.windows(2) {
            let (c, f) = (pair[0], pair[1]);
            prop_assert!(f.kernel_w.max(f.kernel_h) <= 2 * c.kernel_w.max(c.kernel_h));
            prop_assert!(f.image_w <= 2 * c.image_w + 1 && f.image_h <= 2 * c.image_h + 1);
            prop_assert!(f.image_w >= c.image_w && f.image_h >= c.image_h);
        }
    }
}
