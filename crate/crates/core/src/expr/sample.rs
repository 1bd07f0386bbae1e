//! Identity checking by evaluation at seeded random jet points.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{Base, Expr, ExprError, JetPoint, Symbol};

#[derive(Debug, Clone, PartialEq, Error)]
#[error("sample {sample} failed: {source}")]
pub struct SampleError {
    pub sample: usize,
    pub jet: Box<JetPoint>,
    #[source]
    pub source: ExprError,
}

/// Outcome of a sampled identity check.
#[derive(Debug, Clone, PartialEq)]
pub struct ZeroCheck {
    pub passed: bool,
    /// Largest `|value| / (1 + scale)` seen over all samples.
    pub worst: f64,
    /// First failing jet point and its value.
    pub witness: Option<(JetPoint, f64)>,
}

/// Sampling parameters; the defaults are 100 samples at `1e-9` relative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampler {
    pub samples: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for Sampler {
    fn default() -> Sampler {
        Sampler {
            samples: 100,
            tol: 1e-9,
            seed: 0,
        }
    }
}

impl Sampler {
    pub fn new(samples: usize, tol: f64, seed: u64) -> Sampler {
        assert!(samples >= 1 && tol > 0.0);
        Sampler { samples, tol, seed }
    }

    pub fn jet(&self, index: usize) -> JetPoint {
        random_jet(self.seed, index)
    }

    pub fn is_zero(&self, e: &Expr) -> Result<ZeroCheck, SampleError> {
        let mut check = ZeroCheck {
            passed: true,
            worst: 0.0,
            witness: None,
        };
        for i in 0..self.samples {
            let jet = self.jet(i);
            let mut scale = 0.0;
            let v = e.eval_scaled(&jet, &mut scale).map_err(|source| SampleError {
                sample: i,
                jet: Box::new(jet.clone()),
                source,
            })?;
            let rel = v.abs() / (1.0 + scale);
            if rel.is_nan() || rel > check.worst {
                check.worst = if rel.is_nan() { f64::INFINITY } else { rel };
            }
            if !(v.abs() <= self.tol * (1.0 + scale)) && check.witness.is_none() {
                check.passed = false;
                check.witness = Some((jet, v));
            }
        }
        Ok(check)
    }

    /// Convenience for callers that treat evaluation errors as failure.
    pub fn holds(&self, e: &Expr) -> bool {
        self.is_zero(e).map(|c| c.passed).unwrap_or(false)
    }
}

/// Uniform jet point: coordinates in `[-2, 2]`, `tau` in `[0.3, 1.5]`, `t` in
/// `[-3, 3]`. Each index gets its own stream so samples are independent of
/// evaluation order.
pub fn random_jet(seed: u64, index: usize) -> JetPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let tau = rng.random_range(0.3..=1.5);
    let t = rng.random_range(-3.0..=3.0);
    let mut j = JetPoint::new(tau, t);
    for s in Symbol::all() {
        if s.base() != Base::T {
            j.set(s, rng.random_range(-2.0..=2.0));
        }
    }
    j
}

pub fn is_zero(e: &Expr, samples: usize, tol: f64, seed: u64) -> Result<ZeroCheck, SampleError> {
    Sampler::new(samples, tol, seed).is_zero(e)
}
