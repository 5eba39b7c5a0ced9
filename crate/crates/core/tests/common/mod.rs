//! Synthetic image fixtures shared by the integration tests.
#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Gray background with Gaussian pixel noise; tumor images add a bright
/// Gaussian blob near the center.
pub fn blob_pixels(rng: &mut impl Rng, side: u32, with_blob: bool) -> Vec<u8> {
    let s = side as f64;
    let noise = Normal::new(0.0, 0.06).unwrap();
    let (cx, cy) = (
        s / 2.0 + rng.random_range(-s / 8.0..s / 8.0),
        s / 2.0 + rng.random_range(-s / 8.0..s / 8.0),
    );
    let sigma = s / 10.0;
    let amplitude = rng.random_range(0.4..0.55);
    let mut px = Vec::with_capacity((side * side) as usize);
    for r in 0..side {
        for c in 0..side {
            let mut v = 0.3 + noise.sample(rng);
            if with_blob {
                let d2 = (r as f64 - cy).powi(2) + (c as f64 - cx).powi(2);
                v += amplitude * (-d2 / (2.0 * sigma * sigma)).exp();
            }
            px.push((v.clamp(0.0, 1.0) * 255.0).round() as u8);
        }
    }
    px
}

pub fn write_png(path: &Path, side: u32, pixels: Vec<u8>) {
    image::GrayImage::from_raw(side, side, pixels)
        .expect("buffer size")
        .save(path)
        .expect("write png");
}

/// Writes `per_class` tumor images into `root/yes` and as many noise-only
/// images into `root/no`.
pub fn write_blob_dataset(root: &Path, per_class: usize, side: u32, seed: u64) -> (PathBuf, PathBuf) {
    let (yes, no) = (root.join("yes"), root.join("no"));
    fs::create_dir_all(&yes).unwrap();
    fs::create_dir_all(&no).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..per_class {
        write_png(&yes.join(format!("y{i:03}.png")), side, blob_pixels(&mut rng, side, true));
        write_png(&no.join(format!("n{i:03}.png")), side, blob_pixels(&mut rng, side, false));
    }
    (yes, no)
}

pub fn write_blob_image(path: &Path, side: u32, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    write_png(path, side, blob_pixels(&mut rng, side, true));
}
