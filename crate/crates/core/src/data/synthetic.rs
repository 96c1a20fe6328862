//! Synthetic soil records with marginal means and ranges typical of
//! fine-grained highway subgrade soils.
//!
//! Generation, per row:
//! 1. composition (G, S, FC): Dirichlet draw with mean proportions
//!    (15.03, 30.74, 54.23) / 100, scaled to 100 and rounded to hundredths;
//!    FC takes the remainder so the three sum to 100. Draws outside
//!    G ≤ 82, 1 ≤ S ≤ 79.3, 3 ≤ FC ≤ 99 are redrawn.
//! 2. LL ~ Normal(38.02, 18.27) truncated to [0, 94].
//! 3. PI = LL·u, u ~ Uniform(0.3, 0.65), capped at 58.
//! 4. MDD ~ Normal(17.12, 2.69) truncated to [10, 22.52].
//! 5. OMC = 46 − 1.75·MDD + Normal(0, 3), truncated to [1.7, 37].
//! 6. CBR = [`surrogate_cbr`] + Normal(0, noise_sd), clipped to [0.5, 100].
//!
//! Truncation is by rejection. All values are rounded to two decimals.

use rand::Rng as _;
use rand_distr::{Distribution, Gamma, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, SoilSample};
use crate::error::{Error, Result};
use crate::rng::{self, Rng};

const COMPOSITION_MEANS: [f64; 3] = [15.03, 30.74, 54.23];
/// Dirichlet concentration (sum of the three shape parameters).
const COMPOSITION_CONCENTRATION: f64 = 5.0;
const PI_RATIO_RANGE: (f64, f64) = (0.3, 0.65);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub n_samples: usize,
    pub seed: u64,
    /// Standard deviation of the additive CBR noise, in CBR percent.
    pub noise_sd: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            n_samples: 382,
            seed: 1,
            noise_sd: 4.0,
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 10 {
            return Err(Error::param(format!(
                "n_samples must be at least 10, got {}",
                self.n_samples
            )));
        }
        if !(self.noise_sd >= 0.0 && self.noise_sd.is_finite()) {
            return Err(Error::param("noise_sd must be finite and non-negative"));
        }
        Ok(())
    }
}

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// Noise-free surrogate CBR for one feature vector, clipped to [1, 100].
pub fn surrogate_cbr(s: &SoilSample) -> f64 {
    let v = 2.0 + 0.55 * s.g + 0.18 * s.s + 3.0 * (s.mdd - 15.0).max(0.0)
        - 0.45 * s.omc
        - 0.12 * s.pi;
    v.clamp(1.0, 100.0)
}

fn truncated_normal(rng: &mut Rng, dist: &Normal<f64>, lo: f64, hi: f64) -> f64 {
    loop {
        let v = dist.sample(rng);
        if (lo..=hi).contains(&v) {
            return v;
        }
    }
}

struct Samplers {
    composition: [Gamma<f64>; 3],
    ll: Normal<f64>,
    mdd: Normal<f64>,
    omc_noise: Normal<f64>,
    cbr_noise: Normal<f64>,
}

impl Samplers {
    fn new(noise_sd: f64) -> Self {
        let total: f64 = COMPOSITION_MEANS.iter().sum();
        let gamma = |m: f64| Gamma::new(COMPOSITION_CONCENTRATION * m / total, 1.0).unwrap();
        Samplers {
            composition: COMPOSITION_MEANS.map(gamma),
            ll: Normal::new(38.02, 18.27).unwrap(),
            mdd: Normal::new(17.12, 2.69).unwrap(),
            omc_noise: Normal::new(0.0, 3.0).unwrap(),
            cbr_noise: Normal::new(0.0, noise_sd).unwrap(),
        }
    }

    /// Composition in hundredths of a percent, summing to 10000.
    fn composition(&self, rng: &mut Rng) -> (f64, f64, f64) {
        loop {
            let draws = self.composition.each_ref().map(|d| d.sample(rng));
            let sum: f64 = draws.iter().sum();
            if !(sum > 0.0) {
                continue;
            }
            let g = (draws[0] / sum * 10_000.0).round() as i64;
            let s = (draws[1] / sum * 10_000.0).round() as i64;
            let fc = 10_000 - g - s;
            if g <= 8_200 && (100..=7_930).contains(&s) && (300..=9_900).contains(&fc) {
                return (g as f64 / 100.0, s as f64 / 100.0, fc as f64 / 100.0);
            }
        }
    }

    fn sample(&self, rng: &mut Rng) -> SoilSample {
        let (g, s, fc) = self.composition(rng);
        let ll = round2(truncated_normal(rng, &self.ll, 0.0, 94.0));
        let u = rng.random_range(PI_RATIO_RANGE.0..PI_RATIO_RANGE.1);
        let pi = if ll == 0.0 {
            0.0
        } else {
            round2((ll * u).min(58.0)).min(ll)
        };
        let mdd = round2(truncated_normal(rng, &self.mdd, 10.0, 22.52));
        let omc = loop {
            let v = 46.0 - 1.75 * mdd + self.omc_noise.sample(rng);
            if (1.7..=37.0).contains(&v) {
                break round2(v);
            }
        };
        let mut row = SoilSample {
            g,
            s,
            fc,
            ll,
            pi,
            mdd,
            omc,
            cbr: None,
        };
        let cbr = surrogate_cbr(&row) + self.cbr_noise.sample(rng);
        row.cbr = Some(round2(cbr.clamp(0.5, 100.0)));
        row
    }
}

/// Draws `cfg.n_samples` rows; identical configs give identical datasets.
pub fn generate_synthetic(cfg: &GeneratorConfig) -> Result<Dataset> {
    cfg.validate()?;
    let samplers = Samplers::new(cfg.noise_sd);
    let mut rng = rng::rng(cfg.seed);
    let rows = (0..cfg.n_samples).map(|_| samplers.sample(&mut rng)).collect();
    Dataset::new(rows)
}
