//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Criterion 9 runs on a full benchmark directory when `DEBLUR_DATASET`
//! points at one; otherwise it exercises the same harness on a small
//! synthetic directory.

mod common;

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use common::*;
use deblur::cli::{eval_dataset, run_dataset};
use deblur::deconv::{deblur_pipeline, shrink_gradients, DeconvConfig};
use deblur::denoise::DenoiserSpec;
use deblur::fixtures::{motion_kernel, textured_scene};
use deblur::image::{GradientField, Image};
use deblur::io::{read_image, read_kernel, write_image, write_kernel, ImageReadOptions, ImageWriteOptions, KernelReadOptions, Raster};
use deblur::kernel::Kernel;
use deblur::kernel_solve::{estimate_kernel, estimate_kernel_traced, project_kernel, KernelSolveConfig};
use deblur::metrics::{delta_baseline_rmse, kernel_rmse_registered, psnr_registered, synthesize_blurry, NoiseModel};
use deblur::pyramid::{blind_estimate, blind_estimate_observed, BlindConfig};
use deblur::rng::CounterRng;
use deblur::sharp::hard_threshold_gradients;
use deblur::spectral::{solve_h_quadratic, solve_u_quadratic};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn fixture(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn random_field(w: usize, h: usize, seed: u64, scale: f64) -> GradientField {
    let rng = CounterRng::new(seed);
    let n = (w * h) as u64;
    GradientField::new(
        Image::from_fn(w, h, |x, y| scale * (rng.uniform((y * w + x) as u64) - 0.5)),
        Image::from_fn(w, h, |x, y| scale * (rng.uniform(n + (y * w + x) as u64) - 0.5)),
    )
}

fn oracle_equivalence() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let v = random_image(8, 8, seed);
        let k = random_kernel(3, 3, 100 + seed);
        let g = random_field(8, 8, 200 + seed, 0.4);
        let beta = 0.05 + 0.1 * seed as f64;
        let fast = solve_u_quadratic(&v, &k, &g, beta).map_err(|e| e.to_string())?;
        worst = worst.max(relative_error(&fast, &dense_u_solve(&v, &k, &g.dx, &g.dy, beta)));

        let u = random_image(8, 8, 300 + seed);
        let (beta, gamma) = (0.5 + seed as f64, 0.05 * seed as f64);
        let fast = solve_h_quadratic(&u, &v, &k, beta, gamma).map_err(|e| e.to_string())?;
        worst = worst.max(relative_error(&fast, &dense_h_solve(&u, &v, &k, beta, gamma)));
    }
    let secs = t.elapsed().as_secs_f64();
    check(worst < 1e-8 && secs < 5.0, format!("40 solves, worst relative error {worst:.2e}, {secs:.2} s"))
}

fn closed_form_steps() -> Outcome {
    let (w, h) = (100, 100);
    let grad = random_field(w, h, 7, 0.6);
    let (lambda, beta) = (0.02, 0.5);
    let out = hard_threshold_gradients(&grad, lambda, beta);
    let mut threshold_bad = 0;
    for i in 0..w * h {
        let (dx, dy) = (grad.dx.data()[i], grad.dy.data()[i]);
        let expect = if lambda <= beta * (dx * dx + dy * dy) { (dx, dy) } else { (0.0, 0.0) };
        threshold_bad += usize::from((out.dx.data()[i], out.dy.data()[i]) != expect);
    }

    let rng = CounterRng::new(9);
    let (alpha, beta_k) = (0.2, 2.0);
    let mut proj_worst: f64 = 0.0;
    for trial in 0..100u64 {
        let grid = Image::from_fn(15, 15, |x, y| rng.uniform(trial * 1000 + (y * 15 + x) as u64) - 0.4);
        let k = project_kernel(&grid, alpha, beta_k, (11, 11)).map_err(|e| e.to_string())?;
        for oy in -5..=5isize {
            for ox in -5..=5isize {
                let hv = grid.get_wrapped(ox, oy);
                let best = grid_argmin(0.0, hv.max(0.0) + 0.01, 1e-4, |c| beta_k * (c - hv).powi(2) + 2.0 * alpha * c);
                proj_worst = proj_worst.max((k.at_offset(ox, oy) - best).abs());
            }
        }
    }

    let rng = CounterRng::new(13);
    let d = Image::from_fn(w, h, |x, y| 2.0 * rng.uniform((y * w + x) as u64) - 1.0);
    let (b, lambda_tv) = (4.0, 0.3);
    let beta_w = b * lambda_tv / 2.0;
    let shrunk = shrink_gradients(&GradientField::new(d.clone(), Image::zeros(w, h)), 1.0 / b);
    let mut shrink_worst: f64 = 0.0;
    for i in 0..w * h {
        let di = d.data()[i];
        let best = grid_argmin(di.min(0.0) - 0.01, di.max(0.0) + 0.01, 1e-4, |c| beta_w * (c - di).powi(2) + lambda_tv * c.abs());
        shrink_worst = shrink_worst.max((shrunk.dx.data()[i] - best).abs());
    }
    check(
        threshold_bad == 0 && proj_worst <= 1e-4 && shrink_worst <= 1e-4,
        format!("threshold mismatches {threshold_bad}/10000, projection max dev {proj_worst:.1e} over 12100 cells, shrinkage max dev {shrink_worst:.1e} over 10000 cells"),
    )
}

fn kernel_valid(k: &Kernel, support: (usize, usize)) -> bool {
    k.dims() == support
        && k.width() % 2 == 1
        && k.height() % 2 == 1
        && k.weights().iter().all(|&w| w >= 0.0 && w.is_finite())
        && (k.sum() - 1.0).abs() <= 1e-9
}

fn kernel_invariants() -> Outcome {
    let rng = CounterRng::new(2024);
    let pick = |i: u64, choices: &[usize]| choices[(rng.bits(i) % choices.len() as u64) as usize];
    let mut bad = Vec::new();
    for run in 0..50u64 {
        let sigma = [0.0, 0.02, 0.05, 0.1][(run % 4) as usize];
        let kw = pick(10 * run, &[3, 5, 7, 9]);
        let kh = pick(10 * run + 1, &[3, 5, 7, 9]);
        let size = pick(10 * run + 2, &[5, 7, 9]);
        let u = textured_scene(64, 48, 1000 + run);
        let v = synthesize_blurry(&u, &motion_kernel(size, 2000 + run), &NoiseModel::new(sigma, run).unwrap()).unwrap();
        let k = if run % 2 == 0 {
            estimate_kernel(&u, &v, &KernelSolveConfig::for_noise(sigma, (kw, kh)))
        } else {
            blind_estimate(&v, (kw, kh), &BlindConfig::for_noise(sigma)).map(|e| e.kernel)
        };
        match k {
            Ok(k) if kernel_valid(&k, (kw, kh)) => {}
            Ok(_) => bad.push(format!("run {run}: invalid kernel")),
            Err(e) => bad.push(format!("run {run}: {e}")),
        }
    }
    check(bad.is_empty(), format!("50 runs (25 known-image, 25 blind), {} violations {bad:?}", bad.len()))
}

fn noise_robust_estimation() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let sizes = [7, 9, 11, 13, 7];
    let mut means = Vec::new();
    let mut slowest: f64 = 0.0;
    let mut ok = true;
    for sigma in [0.0, 0.05, 0.10] {
        let (mut rmse, mut base) = (0.0, 0.0);
        for (i, &size) in sizes.iter().enumerate() {
            let i = i as u64;
            let u = textured_scene(128, 128, 100 + i);
            let k = motion_kernel(size, 200 + i);
            let v = synthesize_blurry(&u, &k, &NoiseModel::new(sigma, 300 + i).unwrap()).unwrap();
            let t = Instant::now();
            let est = pool.install(|| blind_estimate(&v, k.dims(), &BlindConfig::for_noise(sigma))).map_err(|e| e.to_string())?;
            slowest = slowest.max(t.elapsed().as_secs_f64());
            rmse += kernel_rmse_registered(&est.kernel, &k).0;
            base += delta_baseline_rmse(&k);
        }
        let (rmse, base) = (rmse / 5.0, base / 5.0);
        ok &= rmse.is_finite() && rmse < base;
        means.push((sigma, rmse, base));
    }
    ok &= means[2].1 <= 2.0 * means[0].1 && slowest <= 60.0;
    let table: Vec<String> = means.iter().map(|(s, r, b)| format!("sigma {s}: {r:.4} (delta {b:.4})")).collect();
    check(ok, format!("{}; slowest single-threaded run {slowest:.2} s", table.join(", ")))
}

fn ablation_ordering() -> Outcome {
    let u = textured_scene(128, 128, 1);
    let k = motion_kernel(9, 2);
    let sigma = 0.1;
    let full = BlindConfig::for_noise(sigma);
    let no_alpha = BlindConfig { alpha: 0.0, ..full.clone() };
    let neither = BlindConfig { alpha: 0.0, gamma: 0.0, ..full.clone() };
    let mut ok = true;
    let mut rows = Vec::new();
    for seed in [7, 8, 9] {
        let v = synthesize_blurry(&u, &k, &NoiseModel::new(sigma, seed).unwrap()).unwrap();
        let mut r = [0.0; 3];
        for (slot, cfg) in r.iter_mut().zip([&full, &no_alpha, &neither]) {
            let est = blind_estimate(&v, (9, 9), cfg).map_err(|e| e.to_string())?;
            *slot = kernel_rmse_registered(&est.kernel, &k).0;
        }
        ok &= r[0] <= r[1] && r[1] <= r[2];
        rows.push(format!("seed {seed}: {:.5} <= {:.5} <= {:.5}", r[0], r[1], r[2]));
    }
    check(ok, rows.join(", "))
}

fn denoise_benefit() -> Outcome {
    let read = |name: &str| read_image(fixture(name), &ImageReadOptions::default()).unwrap().to_luminance();
    let (u, v) = (read("scene128.pfm"), read("blurry128_s05.pfm"));
    let k = read_kernel(fixture("motion9.txt"), &KernelReadOptions::default()).map_err(|e| e.to_string())?;
    let grid = [1e-3, 3e-3, 1e-2, 3e-2, 1e-1];
    let best = |spec: &DenoiserSpec| -> Result<(f64, f64), String> {
        let mut best = (f64::NEG_INFINITY, 0.0);
        for &lambda_tv in &grid {
            let out = deblur_pipeline(&v, &k, 0.05, &DeconvConfig::new(lambda_tv), spec).map_err(|e| e.to_string())?;
            let p = psnr_registered(&out, &u, 10).map_err(|e| e.to_string())?.0;
            if p > best.0 {
                best = (p, lambda_tv);
            }
        }
        Ok(best)
    };
    let (with, lw) = best(&DenoiserSpec::builtin())?;
    let (without, lo) = best(&DenoiserSpec::identity())?;
    check(
        with >= without,
        format!("builtin {with:.2} dB at lambda_tv {lw}, none {without:.2} dB at lambda_tv {lo}, gap {:+.2} dB", with - without),
    )
}

fn iteration_counts() -> Outcome {
    let u = textured_scene(96, 96, 2);
    let k = motion_kernel(11, 4);
    let v = synthesize_blurry(&u, &k, &NoiseModel::new(0.05, 5).unwrap()).unwrap();
    let mut steps = 0;
    estimate_kernel_traced(&u, &v, &KernelSolveConfig::for_noise(0.05, (11, 11)), |_, _, _| steps += 1).map_err(|e| e.to_string())?;
    let mut rounds: Vec<usize> = Vec::new();
    blind_estimate_observed(&v, (11, 11), &BlindConfig::for_noise(0.05), |p| {
        if rounds.len() <= p.level {
            rounds.resize(p.level + 1, 0);
        }
        rounds[p.level] += 1;
    })
    .map_err(|e| e.to_string())?;
    check(
        steps == 10 && !rounds.is_empty() && rounds.iter().all(|&r| r == 2),
        format!("{steps} h/k iterations, rounds per level {rounds:?}"),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<Vec<u8>, String> {
        let out = dir.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_deblur"))
            .args(["--seed", "5", "deblur", "--sigma", "0.05", "--kernel-size", "9", "--input"])
            .arg(fixture("blurry128_s05.pfm"))
            .arg("--output")
            .arg(&out)
            .output()
            .map_err(|e| e.to_string())?;
        if !status.status.success() {
            return Err(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        std::fs::read(out).map_err(|e| e.to_string())
    };
    let (a, b) = (run("a.pfm")?, run("b.pfm")?);
    check(a == b, format!("two runs, {} bytes each, identical: {}", a.len(), a == b))
}

fn dataset_harness() -> Outcome {
    if let Some(dir) = std::env::var_os("DEBLUR_DATASET") {
        let dir = Path::new(&dir);
        if !dir.join(deblur::cli::DATASET_METHOD).exists() {
            run_dataset(dir).map_err(|e| e.to_string())?;
        }
        let table = eval_dataset(dir).map_err(|e| e.to_string())?;
        println!("{table}");
        return Ok(format!("aggregated {}", dir.display()));
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let io = |e: std::io::Error| e.to_string();
    std::fs::create_dir_all(root.join("gt")).map_err(io)?;
    for (i, sigma) in [(0u64, 0.0), (5, 0.05)] {
        let sdir = root.join(format!("blurry/sigma_{i:02}"));
        std::fs::create_dir_all(&sdir).map_err(io)?;
        for n in 0..2u64 {
            let k = motion_kernel(7, 40 + n);
            write_kernel(root.join(format!("gt/im{n}.txt")), &k).map_err(|e| e.to_string())?;
            let v = synthesize_blurry(&textured_scene(96, 96, 50 + n), &k, &NoiseModel::new(sigma, n).unwrap()).unwrap();
            write_image(sdir.join(format!("im{n}.pfm")), &Raster::gray(v), &ImageWriteOptions::default()).map_err(|e| e.to_string())?;
        }
    }
    run_dataset(root).map_err(|e| e.to_string())?;
    let table = eval_dataset(root).map_err(|e| e.to_string())?;
    let lines: Vec<&str> = table.lines().collect();
    check(
        lines.len() == 3 && lines[0] == "method,sigma=0%,sigma=5%",
        format!("DEBLUR_DATASET not set; synthetic 2x2 layout gives {}", lines.join(" | ")),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("oracle equivalence", oracle_equivalence),
        ("closed-form steps", closed_form_steps),
        ("kernel invariants", kernel_invariants),
        ("noise-robust estimation", noise_robust_estimation),
        ("ablation ordering", ablation_ordering),
        ("denoise-then-deconvolve benefit", denoise_benefit),
        ("iteration counts", iteration_counts),
        ("determinism", determinism),
        ("dataset harness", dataset_harness),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of {} criteria failed", criteria.len());
        std::process::exit(1);
    }
}
