#![allow(dead_code)]

use geohop_core::geodesy::{great_circle_distance, GeoCoord};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point on the sphere.
pub fn sphere_point(rng: &mut impl Rng) -> GeoCoord {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let lon: f64 = rng.gen_range(-180.0..180.0);
    GeoCoord::new(z.asin().to_degrees(), lon).unwrap()
}

/// Uniform pair whose distance lies in [lo, hi] km.
pub fn pair_in_range(rng: &mut impl Rng, lo: f64, hi: f64) -> (GeoCoord, GeoCoord) {
    loop {
        let (a, b) = (sphere_point(rng), sphere_point(rng));
        let d = great_circle_distance(a, b).value();
        if d >= lo && d <= hi {
            return (a, b);
        }
    }
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name)
}

pub const STUDY_BINS: [(f64, f64); 4] = [(500.0, 3000.0), (3000.0, 6000.0), (6000.0, 9000.0), (9000.0, 12000.0)];
