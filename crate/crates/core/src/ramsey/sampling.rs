//! Random streams and the Poisson quantile used for common random numbers.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::ln_gamma;

/// Stream families. A generator is keyed by the master seed and runs on stream
/// `domain << 48 | index`, so replicas and sweep points never share draws.
pub const DOMAIN_SPREAD: u64 = 1;
pub const DOMAIN_SLOPE: u64 = 2;
const DOMAIN_DERIVE: u64 = 3;

pub fn replica_rng(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((domain << 48) | (index & ((1 << 48) - 1)));
    rng
}

/// Seed for the `index`-th point of a sweep driven by `seed`.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    replica_rng(seed, DOMAIN_DERIVE, index).next_u64()
}

/// Tabulated Poisson CDF, inverted by bisection. Inversion of a single uniform keeps
/// draws monotone in the mean, which couples the two arms of a slope estimate.
#[derive(Debug, Clone)]
pub struct PoissonTable {
    first: u64,
    cdf: Vec<f64>,
}

impl PoissonTable {
    pub fn new(lambda: f64) -> Self {
        assert!(
            lambda.is_finite() && lambda >= 0.0,
            "Poisson mean must be finite and non-negative"
        );
        if lambda == 0.0 {
            return Self {
                first: 0,
                cdf: vec![1.0],
            };
        }
        let spread = 40.0 * lambda.sqrt() + 50.0;
        let first = (lambda - spread).max(0.0).floor() as u64;
        let last = (lambda + spread).ceil() as u64;
        let mode = lambda.floor() as u64;
        let ln_pmf = |k: u64| k as f64 * lambda.ln() - lambda - ln_gamma(k as f64 + 1.0);
        let mut pmf = vec![0.0; (last - first + 1) as usize];
        let m = (mode - first) as usize;
        pmf[m] = ln_pmf(mode).exp();
        for i in m + 1..pmf.len() {
            let k = first + i as u64;
            pmf[i] = pmf[i - 1] * lambda / k as f64;
        }
        for i in (0..m).rev() {
            let k = first + i as u64 + 1;
            pmf[i] = pmf[i + 1] * k as f64 / lambda;
        }
        let total: f64 = pmf.iter().sum();
        let mut acc = 0.0;
        let cdf = pmf
            .iter()
            .map(|p| {
                acc += p / total;
                acc
            })
            .collect::<Vec<_>>();
        Self { first, cdf }
    }

    /// Smallest `k` with `P(X ≤ k) > u`, for `u ∈ [0, 1)`.
    pub fn quantile(&self, u: f64) -> u64 {
        let i = self.cdf.partition_point(|c| *c <= u);
        self.first + i.min(self.cdf.len() - 1) as u64
    }
}
