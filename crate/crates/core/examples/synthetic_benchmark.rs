//! Small-scale version of the noisy kernel-estimation benchmark: five
//! synthetic scenes, three noise levels, registered kernel RMSE per level.
//!
//! ```text
//! cargo run --release --example synthetic_benchmark
//! ```

use std::time::Instant;

use deblur::fixtures::{motion_kernel, textured_scene};
use deblur::metrics::{delta_baseline_rmse, kernel_rmse_registered, synthesize_blurry, NoiseModel};
use deblur::pyramid::{blind_estimate, BlindConfig};

fn main() -> deblur::error::Result<()> {
    let sizes = [7, 9, 11, 13, 7];
    println!("sigma,mean_rmse,delta_baseline,mean_ms");
    for sigma in [0.0, 0.05, 0.10] {
        let (mut rmse, mut base, mut ms) = (0.0, 0.0, 0.0);
        for (i, &size) in sizes.iter().enumerate() {
            let i = i as u64;
            let u = textured_scene(128, 128, 100 + i);
            let k = motion_kernel(size, 200 + i);
            let v = synthesize_blurry(&u, &k, &NoiseModel::new(sigma, 300 + i)?)?;
            let t = Instant::now();
            let est = blind_estimate(&v, k.dims(), &BlindConfig::for_noise(sigma))?;
            ms += t.elapsed().as_secs_f64() * 1e3;
            rmse += kernel_rmse_registered(&est.kernel, &k).0;
            base += delta_baseline_rmse(&k);
        }
        let n = sizes.len() as f64;
        println!("{sigma},{:.4},{:.4},{:.1}", rmse / n, base / n, ms / n);
    }
    Ok(())
}
