//! Monte-Carlo Ramsey phase estimation with photon-count readout.
//!
//! Each run draws a photon count from a Poisson law whose mean mixes the bright and
//! dark levels by the |0⟩ population, converts it to the ratio
//! `p_j = (n_j − n₁)/(n₀ − n₁)` and assigns the integer `s_j = ⌊p_j⌋ + 1` with
//! probability `p_j − ⌊p_j⌋`, `⌊p_j⌋` otherwise. The estimator `S` is the mean of
//! the `s_j` over N runs.
//!
//! Random streams follow [`sampling::replica_rng`]: replica `r` of the spread
//! ensemble and of the slope ensemble read from separate ChaCha8 streams keyed by
//! the model seed, so results do not depend on thread scheduling.

pub mod sampling;
mod sweeps;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, QfiError, Result};
use crate::oracle::par_map;
use sampling::{replica_rng, PoissonTable, DOMAIN_SLOPE, DOMAIN_SPREAD};

pub use sweeps::{
    alpha_sweep, crb_audit, noise_scaling, ramsey_fringe, AlphaPoint, AlphaSweep, CrbAudit,
    CrbPoint, Fringe, FringePoint, NoiseScaling,
};

/// `|⟨φ_α|ψ_θ(β)⟩|² = [1 + cos α cos θ − sin α sin θ cos β]/2` with
/// `|φ_α⟩ = cos(α/2)|0⟩ + sin(α/2)|−1⟩`.
pub fn ramsey_probability(theta: f64, beta: f64, alpha: f64) -> f64 {
    let p = 0.5 * (1.0 + alpha.cos() * theta.cos() - alpha.sin() * theta.sin() * beta.cos());
    p.clamp(0.0, 1.0)
}

/// `∂p/∂β = sin α sin θ sin β / 2`.
pub fn ramsey_slope(theta: f64, beta: f64, alpha: f64) -> f64 {
    0.5 * alpha.sin() * theta.sin() * beta.sin()
}

/// Single-run sensitivity `sqrt(p(1 − p))/|∂p/∂β|` in the basis `α`.
pub fn ramsey_sensitivity(theta: f64, beta: f64, alpha: f64) -> Result<f64> {
    let chi = ramsey_slope(theta, beta, alpha);
    if chi.abs() < 1e-12 {
        return Err(QfiError::ZeroSlope { chi });
    }
    let p = ramsey_probability(theta, beta, alpha);
    Ok((p * (1.0 - p)).sqrt() / chi.abs())
}

/// Whether the extra ratio noise is drawn once per replica (shared by its N runs)
/// or afresh for every run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseCorrelation {
    #[default]
    PerReplica,
    PerRun,
}

/// Photon statistics of the read-out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonModel {
    /// Mean counts per run from |0⟩.
    pub n0_mean: f64,
    /// Mean counts per run from |−1⟩.
    pub n1_mean: f64,
    /// Standard deviation of the zero-mean Gaussian added to the ratio `p_j`.
    pub extra_noise_sd: f64,
    #[serde(default)]
    pub noise_correlation: NoiseCorrelation,
    pub seed: u64,
}

impl Default for PhotonModel {
    /// 120 and 84 counts: 30 % fluorescence contrast.
    fn default() -> Self {
        Self {
            n0_mean: 120.0,
            n1_mean: 84.0,
            extra_noise_sd: 0.0,
            noise_correlation: NoiseCorrelation::PerReplica,
            seed: 1,
        }
    }
}

impl PhotonModel {
    /// High-contrast read-out: the ratio rarely leaves [0, 1], so each run is a
    /// Bernoulli trial with success probability p.
    pub fn ideal(seed: u64) -> Self {
        Self {
            n0_mean: 400.0,
            n1_mean: 4.0,
            extra_noise_sd: 0.0,
            noise_correlation: NoiseCorrelation::PerReplica,
            seed,
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        Self { seed, ..self }
    }

    pub fn with_noise(self, extra_noise_sd: f64) -> Self {
        Self {
            extra_noise_sd,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n1_mean.is_finite()
            && self.n0_mean.is_finite()
            && self.n0_mean > self.n1_mean
            && self.n1_mean > 0.0)
        {
            return Err(invalid(format!(
                "photon means must satisfy n0 > n1 > 0, got n0 = {}, n1 = {}",
                self.n0_mean, self.n1_mean
            )));
        }
        if !(self.extra_noise_sd.is_finite() && self.extra_noise_sd >= 0.0) {
            return Err(invalid(format!(
                "extra_noise_sd must be non-negative, got {}",
                self.extra_noise_sd
            )));
        }
        Ok(())
    }

    fn mean_counts(&self, p: f64) -> f64 {
        p * self.n0_mean + (1.0 - p) * self.n1_mean
    }

    fn ratio(&self, counts: u64) -> f64 {
        (counts as f64 - self.n1_mean) / (self.n0_mean - self.n1_mean)
    }
}

/// One read-out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonRun {
    pub counts: u64,
    pub ratio: f64,
    pub value: i64,
}

/// The two possible assigned values `(k, k + 1)` with their probabilities.
pub fn assignment_distribution(ratio: f64) -> [(i64, f64); 2] {
    let k = ratio.floor();
    let frac = ratio - k;
    [(k as i64, 1.0 - frac), (k as i64 + 1, frac)]
}

/// Assignment driven by an explicit uniform `u ∈ [0, 1)`.
pub fn assign_with_uniform(ratio: f64, u: f64) -> i64 {
    let k = ratio.floor();
    if u < ratio - k {
        k as i64 + 1
    } else {
        k as i64
    }
}

pub fn assign_value<R: Rng + ?Sized>(ratio: f64, rng: &mut R) -> i64 {
    assign_with_uniform(ratio, rng.random())
}

/// One run at population `p`. `offset` is the replica-level ratio shift; per-run
/// noise is drawn here when the model asks for it.
pub fn simulate_run<R: Rng + ?Sized>(
    p: f64,
    model: &PhotonModel,
    offset: f64,
    rng: &mut R,
) -> PhotonRun {
    let table = PoissonTable::new(model.mean_counts(p.clamp(0.0, 1.0)));
    run_with_table(&table, model, offset, rng)
}

fn run_with_table<R: Rng + ?Sized>(
    table: &PoissonTable,
    model: &PhotonModel,
    offset: f64,
    rng: &mut R,
) -> PhotonRun {
    let counts = table.quantile(rng.random());
    let mut ratio = model.ratio(counts) + offset;
    if model.noise_correlation == NoiseCorrelation::PerRun && model.extra_noise_sd > 0.0 {
        ratio += model.extra_noise_sd * rng.sample::<f64, _>(StandardNormal);
    }
    PhotonRun {
        counts,
        ratio,
        value: assign_value(ratio, rng),
    }
}

fn replica_offset(model: &PhotonModel, rng: &mut ChaCha8Rng) -> f64 {
    if model.noise_correlation == NoiseCorrelation::PerReplica && model.extra_noise_sd > 0.0 {
        model.extra_noise_sd * rng.sample::<f64, _>(StandardNormal)
    } else {
        0.0
    }
}

/// `S` for one replica of `runs` read-outs.
fn replica_mean(
    table: &PoissonTable,
    model: &PhotonModel,
    runs: usize,
    rng: &mut ChaCha8Rng,
) -> f64 {
    let offset = replica_offset(model, rng);
    let total: i64 = (0..runs)
        .map(|_| run_with_table(table, model, offset, rng).value)
        .sum();
    total as f64 / runs as f64
}

/// Ensemble sizes and the slope step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateSettings {
    /// Replicas M of the N-run experiment used for `S` and Δp.
    pub replicas: usize,
    /// Total runs spent on the paired slope estimate.
    pub chi_runs: u64,
    /// Half-width of the symmetric difference for χ (rad).
    pub dbeta: f64,
    /// Fringe sweeps averaged into one run's value.
    pub sweeps: usize,
}

impl Default for EstimateSettings {
    fn default() -> Self {
        Self {
            replicas: 200,
            chi_runs: 1_000_000,
            dbeta: 0.05,
            sweeps: 1,
        }
    }
}

impl EstimateSettings {
    pub fn validate(&self) -> Result<()> {
        if self.replicas < 200 {
            return Err(invalid(format!(
                "replicas must be at least 200, got {}",
                self.replicas
            )));
        }
        if self.sweeps == 0 {
            return Err(invalid("sweeps must be at least 1"));
        }
        if !(self.dbeta > 0.0 && self.dbeta <= 0.5) {
            return Err(invalid(format!(
                "dbeta must lie in (0, 0.5], got {}",
                self.dbeta
            )));
        }
        if self.chi_runs == 0 {
            return Err(invalid("chi_runs must be positive"));
        }
        Ok(())
    }
}

/// Mean and spread of `S` over the replica ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub n: usize,
    pub s_mean: f64,
    pub s_mean_stderr: f64,
    pub delta_p: f64,
    pub delta_p_stderr: f64,
}

/// Ensemble of `settings.replicas` experiments of `n` runs at population `p`.
pub fn spread(
    p: f64,
    n: usize,
    model: &PhotonModel,
    settings: &EstimateSettings,
) -> Result<Spread> {
    model.validate()?;
    settings.validate()?;
    if n == 0 {
        return Err(invalid("N must be at least 1"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid(format!("probability must lie in [0, 1], got {p}")));
    }
    let table = PoissonTable::new(model.mean_counts(p));
    let runs = n * settings.sweeps;
    let index: Vec<u64> = (0..settings.replicas as u64).collect();
    let values = par_map(&index, |&r| {
        let mut rng = replica_rng(model.seed, DOMAIN_SPREAD, r);
        replica_mean(&table, model, runs, &mut rng)
    });
    let (s_mean, delta_p) = crate::stats::mean_std(&values);
    Ok(Spread {
        n,
        s_mean,
        s_mean_stderr: delta_p / (values.len() as f64).sqrt(),
        delta_p,
        delta_p_stderr: crate::stats::std_standard_error(&values),
    })
}

/// Paired estimate of `∂⟨S⟩/∂β`: both arms reuse the same streams.
pub fn slope<F>(
    probability: &F,
    beta: f64,
    n: usize,
    model: &PhotonModel,
    settings: &EstimateSettings,
) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64 + Sync + ?Sized,
{
    model.validate()?;
    settings.validate()?;
    let runs = n * settings.sweeps;
    let pairs = (settings.chi_runs / runs as u64).max(50);
    let plus =
        PoissonTable::new(model.mean_counts(probability(beta + settings.dbeta).clamp(0.0, 1.0)));
    let minus =
        PoissonTable::new(model.mean_counts(probability(beta - settings.dbeta).clamp(0.0, 1.0)));
    let index: Vec<u64> = (0..pairs).collect();
    let diffs = par_map(&index, |&r| {
        let mut rng = replica_rng(model.seed, DOMAIN_SLOPE, r);
        let mut twin = rng.clone();
        replica_mean(&plus, model, runs, &mut rng) - replica_mean(&minus, model, runs, &mut twin)
    });
    let (mean, sd) = crate::stats::mean_std(&diffs);
    let width = 2.0 * settings.dbeta;
    Ok((mean / width, sd / (diffs.len() as f64).sqrt() / width))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimationResult {
    pub beta: f64,
    pub n: usize,
    pub replicas: usize,
    /// Exact population at β.
    pub probability: f64,
    pub s_mean: f64,
    pub s_mean_stderr: f64,
    pub delta_p: f64,
    pub delta_p_stderr: f64,
    /// Slope χ (per rad).
    pub chi: f64,
    pub chi_stderr: f64,
    pub delta_beta: f64,
    pub delta_beta_stderr: f64,
}

/// Estimate for an arbitrary population curve `β ↦ p(β)`.
pub fn estimate_curve<F>(
    probability: &F,
    beta: f64,
    n: usize,
    model: &PhotonModel,
    settings: &EstimateSettings,
) -> Result<EstimationResult>
where
    F: Fn(f64) -> f64 + Sync + ?Sized,
{
    let p = probability(beta);
    let sp = spread(p, n, model, settings)?;
    let (chi, chi_stderr) = slope(probability, beta, n, model, settings)?;
    if chi.abs() < 1e-6 {
        return Err(QfiError::ZeroSlope { chi });
    }
    let delta_beta = sp.delta_p / chi.abs();
    let rel =
        ((sp.delta_p_stderr / sp.delta_p.max(1e-300)).powi(2) + (chi_stderr / chi).powi(2)).sqrt();
    Ok(EstimationResult {
        beta,
        n,
        replicas: settings.replicas,
        probability: p,
        s_mean: sp.s_mean,
        s_mean_stderr: sp.s_mean_stderr,
        delta_p: sp.delta_p,
        delta_p_stderr: sp.delta_p_stderr,
        chi,
        chi_stderr,
        delta_beta,
        delta_beta_stderr: delta_beta * rel,
    })
}

/// Ramsey estimate at `(θ, β)` measured in the basis `α`.
pub fn estimate(
    theta: f64,
    beta: f64,
    alpha: f64,
    n: usize,
    model: &PhotonModel,
    settings: &EstimateSettings,
) -> Result<EstimationResult> {
    check_angle("theta", theta)?;
    check_angle("alpha", alpha)?;
    estimate_curve(
        &|b: f64| ramsey_probability(theta, b, alpha),
        beta,
        n,
        model,
        settings,
    )
}

pub(crate) fn check_angle(name: &str, v: f64) -> Result<()> {
    if (0.0..=std::f64::consts::PI).contains(&v) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in [0, π], got {v}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    #[test]
    fn probability_examples() {
        assert!((ramsey_probability(FRAC_PI_2, FRAC_PI_2, FRAC_PI_2) - 0.5).abs() < 1e-15);
        let c = (0.35f64).cos().powi(2);
        for beta in [0.0, 1.0, 2.5] {
            assert!((ramsey_probability(0.7, beta, 0.0) - c).abs() < 1e-15);
        }
        let h = 1e-5;
        let fd = (ramsey_probability(FRAC_PI_2, FRAC_PI_2 + h, FRAC_PI_2)
            - ramsey_probability(FRAC_PI_2, FRAC_PI_2 - h, FRAC_PI_2))
            / (2.0 * h);
        assert!((fd - 0.5).abs() < 1e-9);
        assert!((ramsey_slope(FRAC_PI_2, FRAC_PI_2, FRAC_PI_2) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn assignment_is_exact_in_expectation() {
        for k in -40..=40 {
            let r = k as f64 / 16.0;
            let d = assignment_distribution(r);
            let mean = d[0].0 as f64 * d[0].1 + d[1].0 as f64 * d[1].1;
            assert!((mean - r).abs() < 1e-15, "{r}: {d:?}");
            assert_eq!(d[1].0, d[0].0 + 1);
        }
        assert_eq!(assignment_distribution(1.0)[0], (1, 1.0));
        assert_eq!(assign_with_uniform(1.0, 0.999), 1);
        assert_eq!(assign_with_uniform(-0.2, 0.79), 0);
        assert_eq!(assign_with_uniform(-0.2, 0.81), -1);
    }

    #[test]
    fn negative_ratio_sampling() {
        let mut rng = replica_rng(3, DOMAIN_SPREAD, 0);
        let n = 1_000_000;
        let total: i64 = (0..n).map(|_| assign_value(-0.2, &mut rng)).sum();
        let mean = total as f64 / n as f64;
        let sigma = (0.16f64 / n as f64).sqrt();
        assert!((mean + 0.2).abs() < 3.0 * sigma, "{mean}");
    }

    #[test]
    fn photon_ratio_moments() {
        let model = PhotonModel::default();
        let mut rng = replica_rng(5, DOMAIN_SPREAD, 0);
        let runs: Vec<f64> = (0..200_000)
            .map(|_| simulate_run(0.5, &model, 0.0, &mut rng).ratio)
            .collect();
        let (mean, sd) = crate::stats::mean_std(&runs);
        assert!((mean - 0.5).abs() < 0.003, "{mean}");
        assert!((sd * sd - 102.0 / 1296.0).abs() < 0.002, "{}", sd * sd);
        let dark: Vec<f64> = (0..50_000)
            .map(|_| simulate_run(0.0, &model, 0.0, &mut rng).counts as f64)
            .collect();
        assert!((crate::stats::mean_std(&dark).0 - 84.0).abs() < 0.2);
    }

    #[test]
    fn ideal_model_is_shot_noise_limited() {
        let model = PhotonModel::ideal(11);
        let settings = EstimateSettings {
            replicas: 4000,
            ..Default::default()
        };
        for n in [1, 4, 9, 16] {
            let s = spread(0.3, n, &model, &settings).unwrap();
            let want = (0.21f64 / n as f64).sqrt();
            assert!(
                (s.delta_p - want).abs() / want < 0.05,
                "N={n}: {} vs {want}",
                s.delta_p
            );
        }
    }

    #[test]
    fn saturates_at_half_pi() {
        let r = estimate(
            FRAC_PI_2,
            FRAC_PI_2,
            FRAC_PI_2,
            1,
            &PhotonModel::ideal(2),
            &EstimateSettings::default(),
        )
        .unwrap();
        assert!((r.delta_beta - 1.0).abs() < 0.05, "{r:?}");
    }

    #[test]
    fn zero_slope_is_an_error() {
        let err = estimate(
            FRAC_PI_2,
            FRAC_PI_2,
            0.0,
            1,
            &PhotonModel::ideal(2),
            &EstimateSettings::default(),
        );
        assert!(matches!(err, Err(QfiError::ZeroSlope { .. })));
        assert!(estimate(
            PI + 0.1,
            1.0,
            1.0,
            1,
            &PhotonModel::ideal(2),
            &EstimateSettings::default()
        )
        .is_err());
    }

    #[test]
    fn repeatable_under_seed() {
        let s = EstimateSettings {
            chi_runs: 20_000,
            ..Default::default()
        };
        let a = estimate(1.0, 1.2, 1.4, 3, &PhotonModel::default().with_seed(9), &s).unwrap();
        let b = estimate(1.0, 1.2, 1.4, 3, &PhotonModel::default().with_seed(9), &s).unwrap();
        assert_eq!(a, b);
        let c = estimate(1.0, 1.2, 1.4, 3, &PhotonModel::default().with_seed(10), &s).unwrap();
        assert_ne!(a, c);
    }
}
