//! Seeded generators for band-limited test and initial-data fields.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::spectral::{leray_project, GridSpec, SpectralField};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mean-zero random field with Gaussian coefficients on `1 <= max_i |k_i| <= band`.
///
/// Coefficients are scaled so the field has unit grid L² norm before projection.
pub fn random_field(grid: GridSpec, band: i64, seed: u64, solenoidal: bool) -> SpectralField {
    let mut r = rng(seed);
    random_field_with(grid, band, &mut r, solenoidal, |_| 1.0)
}

/// Like [`random_field`], drawing from `r` and weighting each mode by `weight(|k|)`.
pub fn random_field_with(
    grid: GridSpec,
    band: i64,
    r: &mut ChaCha8Rng,
    solenoidal: bool,
    weight: impl Fn(f64) -> f64,
) -> SpectralField {
    assert!(band >= 1 && band < grid.n() as i64 / 2, "band {band} outside the grid");
    let mut f = SpectralField::zeros(grid);
    for k2 in -band..=band {
        for k1 in -band..=band {
            for k0 in -band..=band {
                let k = [k0, k1, k2];
                // one representative per ±k pair
                if k == [0, 0, 0] || !positive_half(k) {
                    continue;
                }
                let w = weight(((k0 * k0 + k1 * k1 + k2 * k2) as f64).sqrt());
                let v = [0, 1, 2].map(|_| {
                    let re: f64 = StandardNormal.sample(r);
                    let im: f64 = StandardNormal.sample(r);
                    Complex64::new(re, im) * w
                });
                f.set_mode_pair(k, v);
            }
        }
    }
    let l2 = f.l2_norm();
    if l2 > 0.0 {
        f.scale_mut(1.0 / l2);
    }
    if solenoidal {
        leray_project(&f)
    } else {
        f
    }
}

fn positive_half(k: [i64; 3]) -> bool {
    k[2] > 0 || (k[2] == 0 && (k[1] > 0 || (k[1] == 0 && k[0] > 0)))
}

/// `a sin(k·x)` for a wavevector `k` and a real polarization `a`.
pub fn sine_mode(grid: GridSpec, k: [i64; 3], a: [f64; 3]) -> SpectralField {
    let mut f = SpectralField::zeros(grid);
    // sin θ = (e^{iθ} - e^{-iθ}) / 2i
    let v = a.map(|x| Complex64::new(0.0, -0.5 * x));
    f.set_mode_pair(k, v);
    let sol = (k[0] as f64) * a[0] + (k[1] as f64) * a[1] + (k[2] as f64) * a[2] == 0.0;
    f.with_solenoidal_flag(sol)
}

/// Taylor-Green velocity `A(sin x cos y cos z, -cos x sin y cos z, 0)` and, for the
/// magnetic field, the same flow with the coordinate axes cycled.
pub fn taylor_green_pair(grid: GridSpec, amplitude: f64) -> (SpectralField, SpectralField) {
    let a = amplitude;
    let u = SpectralField::from_fn(grid, |x| {
        [a * x[0].sin() * x[1].cos() * x[2].cos(), -a * x[0].cos() * x[1].sin() * x[2].cos(), 0.0]
    });
    let b = SpectralField::from_fn(grid, |x| {
        [0.0, a * x[1].sin() * x[2].cos() * x[0].cos(), -a * x[1].cos() * x[2].sin() * x[0].cos()]
    });
    (leray_project(&u), leray_project(&b))
}
