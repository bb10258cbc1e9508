//! Seeded test-field suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::field::{GridSpec, ScalarField, SpaceTimeField, C64};
use crate::error::Result;

/// `exp(1 - 1/(1 - s²))` on `|s| < 1`, zero outside; equals 1 at `s = 0`.
pub fn compact_bump(s: f64) -> f64 {
    if s.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - s * s)).exp()
    }
}

/// Compactly supported smooth bump with a complex amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    /// Signed center (a radius on radial grids).
    pub center: f64,
    pub half_width: f64,
    pub amplitude: C64,
    /// Linear phase rate across the bump.
    pub chirp: f64,
}

impl BumpSpec {
    pub fn eval(&self, x: f64) -> C64 {
        let b = compact_bump((x - self.center) / self.half_width);
        if b == 0.0 {
            return C64::new(0.0, 0.0);
        }
        self.amplitude * C64::from_polar(b, self.chirp * (x - self.center))
    }

    pub fn sample(&self, grid: GridSpec) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.eval(x))
    }
}

/// `count` bumps with centers in `[0.2, 0.6] r_max` (random sign on the
/// line), half-widths in `[0.05, 0.2] r_max` and random complex phases.
pub fn compact_bump_suite(seed: u64, count: usize, grid: GridSpec) -> Vec<BumpSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let r = grid.r_max;
    (0..count)
        .map(|_| {
            let mut center = rng.gen_range(0.2..=0.6) * r;
            let half_width = rng.gen_range(0.05..=0.2) * r;
            if grid.is_radial() {
                center = center.max(half_width);
            } else if rng.gen_bool(0.5) {
                center = -center;
            }
            let phase = rng.gen_range(0.0..std::f64::consts::TAU);
            let chirp = rng.gen_range(-1.0..=1.0) / half_width;
            BumpSpec {
                center,
                half_width,
                amplitude: C64::from_polar(1.0, phase),
                chirp,
            }
        })
        .collect()
}

/// Bump times a two-frequency oscillation in time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeBump {
    pub bump: BumpSpec,
    pub omega: f64,
    /// Weight of the second, doubled frequency.
    pub overtone: f64,
}

impl SpaceTimeBump {
    pub fn eval(&self, t: f64, x: f64) -> C64 {
        let time = C64::from_polar(1.0, self.omega * t)
            + self.overtone * C64::from_polar(1.0, -2.0 * self.omega * t);
        self.bump.eval(x) * time
    }

    pub fn sample(&self, grid: GridSpec, t0: f64, t1: f64, num_times: usize) -> Result<SpaceTimeField> {
        SpaceTimeField::from_fn(grid, t0, t1, num_times, |t, x| self.eval(t, x))
    }
}

pub fn space_time_suite(seed: u64, count: usize, grid: GridSpec) -> Vec<SpaceTimeBump> {
    let bumps = compact_bump_suite(seed, count, grid);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_7157);
    bumps
        .into_iter()
        .map(|bump| SpaceTimeBump {
            bump,
            omega: rng.gen_range(0.5..=2.0),
            overtone: rng.gen_range(0.0..=0.5),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBump {
    pub center: f64,
    pub sigma: f64,
    pub amplitude: C64,
}

impl GaussianBump {
    pub fn eval(&self, x: f64) -> C64 {
        let z = (x - self.center) / self.sigma;
        self.amplitude * (-0.5 * z * z).exp()
    }
}

/// Gaussians with centers in `[-3, 3]`, widths in `[0.3, 1]` and random
/// complex amplitudes of modulus 1.
pub fn gaussian_bump_suite(seed: u64, count: usize) -> Vec<GaussianBump> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| GaussianBump {
            center: rng.gen_range(-3.0..=3.0),
            sigma: rng.gen_range(0.3..=1.0),
            amplitude: C64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU)),
        })
        .collect()
}
