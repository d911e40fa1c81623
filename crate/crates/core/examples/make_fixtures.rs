//! Regenerates the files under `fixtures/`.
//!
//! ```text
//! cargo run --example make_fixtures -- crates/core/fixtures
//! ```

use std::path::PathBuf;

use deblur::fixtures::{motion_kernel, textured_scene};
use deblur::io::{write_image, write_kernel, ImageWriteOptions, Raster};
use deblur::metrics::{synthesize_blurry, NoiseModel};

fn main() -> deblur::error::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures".into()));
    std::fs::create_dir_all(&dir)?;

    let scene = textured_scene(128, 128, 1);
    let kernel = motion_kernel(9, 2);
    let opts = ImageWriteOptions::default();
    write_image(dir.join("scene128.pfm"), &Raster::gray(scene.clone()), &opts)?;
    write_kernel(dir.join("motion9.txt"), &kernel)?;
    for (name, sigma) in [("blurry128_s00.pfm", 0.0), ("blurry128_s05.pfm", 0.05)] {
        let v = synthesize_blurry(&scene, &kernel, &NoiseModel::new(sigma, 7)?)?;
        write_image(dir.join(name), &Raster::gray(v), &opts)?;
    }
    Ok(())
}
