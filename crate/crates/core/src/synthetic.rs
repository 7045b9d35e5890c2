//! Seeded two-tone benchmark series.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// `level + a1 sin(2 pi t / p1) + a2 sin(2 pi t / p2) + N(0, noise_sd)` for
/// `t = 0 .. len-1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub start_year: i32,
    pub len: usize,
    pub level: f64,
    pub amp1: f64,
    pub period1: f64,
    pub amp2: f64,
    pub period2: f64,
    pub noise_sd: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            start_year: 1871,
            len: 152,
            level: 850.0,
            amp1: 60.0,
            period1: 11.0,
            amp2: 40.0,
            period2: 3.6,
            noise_sd: 15.0,
            seed: 7,
        }
    }
}

impl SyntheticSpec {
    /// Noise-free part at index `t`.
    pub fn signal_at(&self, t: usize) -> f64 {
        use std::f64::consts::PI;
        let t = t as f64;
        self.level + self.amp1 * (2.0 * PI * t / self.period1).sin() + self.amp2 * (2.0 * PI * t / self.period2).sin()
    }

    pub fn generate(&self) -> Result<TimeSeries> {
        let normal = Normal::new(0.0, self.noise_sd)
            .map_err(|e| Error::Config(format!("noise_sd {}: {e}", self.noise_sd)))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let values = (0..self.len)
            .map(|t| self.signal_at(t) + normal.sample(&mut rng))
            .collect();
        TimeSeries::new(self.start_year, values)
    }
}

pub fn benchmark_series() -> TimeSeries {
    SyntheticSpec::default().generate().expect("default benchmark spec is valid")
}
