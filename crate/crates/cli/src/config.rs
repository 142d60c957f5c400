//! Experiment configuration: the TOML schema, defaults and resolution into the
//! typed inputs of the simulation routines.
//!
//! Every section field is optional. [`resolve`] fills the gaps with design
//! defaults, rejects fields the chosen kind does not read and returns both the
//! fully populated config (written back into the manifest) and the execution
//! [`Plan`].

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_PI_2, PI};

use qfi_core::models::{nuclear_larmor, SingleQubitParams, TwoQubitParams};
use qfi_core::protocol::{ModulationSpec, PulseMode, SingleQubitSettings, TwoQubitSettings};
use qfi_core::ramsey::{EstimateSettings, NoiseCorrelation, PhotonModel};
use qfi_core::units::mhz;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    Scan,
    Rabi,
    QfiSingle,
    QfiTwoQubit,
    RamseyFringe,
    NoiseScaling,
    CrbAudit,
    AlphaSweep,
}

impl Kind {
    pub fn name(self) -> &'static str {
        match self {
            Kind::Scan => "scan",
            Kind::Rabi => "rabi",
            Kind::QfiSingle => "qfi-single",
            Kind::QfiTwoQubit => "qfi-two-qubit",
            Kind::RamseyFringe => "ramsey-fringe",
            Kind::NoiseScaling => "noise-scaling",
            Kind::CrbAudit => "crb-audit",
            Kind::AlphaSweep => "alpha-sweep",
        }
    }

    /// Sections and fields this kind reads. `output` is accepted everywhere.
    fn schema(self) -> &'static [(&'static str, &'static [&'static str])] {
        const PULSES: (&str, &[&str]) = ("pulses", &["mode", "rabi", "detuning"]);
        const PHOTONS: (&str, &[&str]) = (
            "photons",
            &["n0_mean", "n1_mean", "extra_noise_sd", "noise_correlation"],
        );
        const ESTIMATOR: (&str, &[&str]) =
            ("estimator", &["replicas", "chi_runs", "dbeta", "sweeps"]);
        const PROTOCOL: &[&str] = &[
            "amplitude",
            "scan_points",
            "scan_tau_us",
            "trace_samples",
            "target_periods",
        ];
        match self {
            Kind::Scan => &[
                ("probe", &["gap", "theta", "beta"]),
                ("modulation", &["amplitude", "scan_tau_us"]),
                ("grid", &["omega"]),
            ],
            Kind::Rabi => &[
                ("probe", &["gap", "theta", "beta", "detuning"]),
                ("modulation", &["amplitude", "frequency"]),
                PULSES,
                ("grid", &["tau"]),
            ],
            Kind::QfiSingle => &[
                ("probe", &["gap", "beta", "detuning"]),
                ("modulation", PROTOCOL),
                PULSES,
                ("grid", &["theta"]),
            ],
            Kind::QfiTwoQubit => &[
                ("pair", &["gap", "a_par", "a_perp", "field_gauss", "phi"]),
                (
                    "multilevel",
                    &["target_ratio", "target_periods", "trace_samples", "measure"],
                ),
                ("grid", &["beta"]),
            ],
            Kind::RamseyFringe => &[
                ("ramsey", &["theta", "alpha", "detuning", "repetitions"]),
                PHOTONS,
                ESTIMATOR,
                ("grid", &["time"]),
            ],
            Kind::NoiseScaling => &[
                ("ramsey", &["theta", "beta", "alpha"]),
                PHOTONS,
                ESTIMATOR,
                ("grid", &["repetitions"]),
            ],
            Kind::CrbAudit => &[
                ("ramsey", &["measure_protocol"]),
                ("modulation", PROTOCOL),
                PULSES,
                PHOTONS,
                ESTIMATOR,
                ("grid", &["theta"]),
            ],
            Kind::AlphaSweep => &[
                ("ramsey", &["theta", "beta", "repetitions"]),
                PULSES,
                PHOTONS,
                ESTIMATOR,
                ("grid", &["alpha"]),
            ],
        }
    }

    /// The grid this kind sweeps, and whether it must be given explicitly.
    fn sweep(self) -> (&'static str, bool) {
        match self {
            Kind::Scan => ("omega", false),
            Kind::Rabi => ("tau", false),
            Kind::QfiSingle | Kind::CrbAudit => ("theta", true),
            Kind::QfiTwoQubit => ("beta", true),
            Kind::RamseyFringe => ("time", true),
            Kind::NoiseScaling => ("repetitions", true),
            Kind::AlphaSweep => ("alpha", true),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FreqUnit {
    #[serde(rename = "MHz")]
    Mhz,
    #[serde(rename = "rad/us")]
    RadPerUs,
}

/// A frequency with its unit spelled out; MHz values are cycles per µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frequency {
    pub value: f64,
    pub unit: FreqUnit,
}

impl Frequency {
    pub fn mhz(value: f64) -> Self {
        Self {
            value,
            unit: FreqUnit::Mhz,
        }
    }

    pub fn rad_per_us(&self) -> f64 {
        match self.unit {
            FreqUnit::Mhz => mhz(self.value),
            FreqUnit::RadPerUs => self.value,
        }
    }
}

/// Either an explicit list or `points` evenly spaced values from `start` to `stop`.
/// Frequency grids also carry a `unit`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<FreqUnit>,
}

impl Grid {
    pub fn linspace(start: f64, stop: f64, points: usize) -> Self {
        Self {
            start: Some(start),
            stop: Some(stop),
            points: Some(points),
            ..Self::default()
        }
    }

    pub fn list(values: Vec<f64>) -> Self {
        Self {
            values: Some(values),
            ..Self::default()
        }
    }

    pub fn in_unit(self, unit: FreqUnit) -> Self {
        Self {
            unit: Some(unit),
            ..self
        }
    }

    fn expand(&self, field: &str, frequency: bool) -> Result<Vec<f64>> {
        let err = |msg: String| CliError::config(field, msg);
        let raw = match (&self.values, self.start, self.stop, self.points) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(a), Some(b), Some(n)) => {
                if n == 0 {
                    return Err(err("grid needs at least one point".into()));
                }
                if n == 1 {
                    vec![a]
                } else {
                    let mut v: Vec<f64> = (0..n)
                        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
                        .collect();
                    v[n - 1] = b;
                    v
                }
            }
            _ => {
                return Err(err(
                    "grid must give either `values` or all of `start`, `stop` and `points`".into(),
                ))
            }
        };
        if raw.is_empty() {
            return Err(err("grid is empty".into()));
        }
        if let Some(x) = raw.iter().find(|x| !x.is_finite()) {
            return Err(err(format!("grid value {x} is not finite")));
        }
        match (frequency, self.unit) {
            (true, None) => Err(err(
                "frequency grid needs a `unit` (\"MHz\" or \"rad/us\")".into()
            )),
            (false, Some(_)) => Err(err("only frequency grids take a `unit`".into())),
            (true, Some(u)) => Ok(raw
                .into_iter()
                .map(|value| Frequency { value, unit: u }.rad_per_us())
                .collect()),
            (false, None) => Ok(raw),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for the artifacts; overrides the environment default.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
    /// File stem; the kind name when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stem: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<Frequency>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    /// Drive frequency of a single trace; the probe gap when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_points: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scan_tau_us: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_periods: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    Ideal,
    Finite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulsesConfig {
    pub mode: PulseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi: Option<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<Frequency>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap: Option<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_par: Option<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_perp: Option<Frequency>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field_gauss: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MultilevelConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_ratio: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_periods: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_samples: Option<usize>,
    /// `false` skips the simulated measurement and reports only exact values.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RamseyConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detuning: Option<Frequency>,
    /// Runs N averaged into one estimate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<usize>,
    /// Also measure F by parameter modulation at each θ.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure_protocol: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotonConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n0_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n1_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extra_noise_sd: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_correlation: Option<NoiseCorrelation>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replicas: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_runs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dbeta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Modulation frequencies of a resonance scan.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<Grid>,
    /// Modulation times (µs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<Grid>,
    /// Free-evolution times (µs).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub time: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Grid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Grid>,
    /// Repetition counts N; values must be positive integers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetitions: Option<Grid>,
}

impl GridConfig {
    fn get(&self, name: &str) -> Option<&Grid> {
        match name {
            "omega" => self.omega.as_ref(),
            "tau" => self.tau.as_ref(),
            "time" => self.time.as_ref(),
            "theta" => self.theta.as_ref(),
            "beta" => self.beta.as_ref(),
            "alpha" => self.alpha.as_ref(),
            "repetitions" => self.repetitions.as_ref(),
            _ => None,
        }
    }

    pub fn with(name: &str, grid: Grid) -> Self {
        let mut g = GridConfig::default();
        let slot = match name {
            "omega" => &mut g.omega,
            "tau" => &mut g.tau,
            "time" => &mut g.time,
            "theta" => &mut g.theta,
            "beta" => &mut g.beta,
            "alpha" => &mut g.alpha,
            _ => &mut g.repetitions,
        };
        *slot = Some(grid);
        g
    }
}

/// One experiment as written in a config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    /// Master seed of every random stream.
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probe: Option<ProbeConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub modulation: Option<ModulationConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulses: Option<PulsesConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<PairConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub multilevel: Option<MultilevelConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ramsey: Option<RamseyConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub photons: Option<PhotonConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimator: Option<EstimatorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
}

impl ExperimentConfig {
    pub fn new(kind: Kind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            output: None,
            probe: None,
            modulation: None,
            pulses: None,
            pair: None,
            multilevel: None,
            ramsey: None,
            photons: None,
            estimator: None,
            grid: None,
        }
    }

    pub fn stem(&self) -> String {
        self.output
            .as_ref()
            .and_then(|o| o.stem.clone())
            .unwrap_or_else(|| self.kind.name().to_string())
    }
}

/// Parses a TOML document. Errors name the offending field where possible.
pub fn parse_toml(text: &str) -> Result<ExperimentConfig> {
    toml::from_str(text).map_err(|e| {
        let message = e.message().trim().to_string();
        CliError::Config {
            field: field_in_message(&message),
            message,
        }
    })
}

/// Parses the `config` object of a manifest.
pub fn parse_json(value: &Value) -> Result<ExperimentConfig> {
    serde_json::from_value(value.clone()).map_err(|e| {
        let message = e.to_string();
        CliError::Config {
            field: field_in_message(&message),
            message,
        }
    })
}

fn field_in_message(message: &str) -> Option<String> {
    for marker in ["missing field `", "unknown field `"] {
        if let Some(i) = message.find(marker) {
            let rest = &message[i + marker.len()..];
            return rest.find('`').map(|j| rest[..j].to_string());
        }
    }
    None
}

/// Where a resolved parameter came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    ConfigFile,
    CommandLine,
    FromFigure,
    DesignDefault,
}

/// What to run, in internal units (rad/µs, µs, rad).
#[derive(Debug, Clone, PartialEq)]
pub enum Plan {
    Scan {
        params: SingleQubitParams,
        amplitude: f64,
        tau: f64,
        omegas: Vec<f64>,
    },
    Rabi {
        params: SingleQubitParams,
        spec: ModulationSpec,
        pulses: Option<PulseMode>,
    },
    QfiSingle {
        params: SingleQubitParams,
        settings: SingleQubitSettings,
        thetas: Vec<f64>,
    },
    QfiTwoQubit {
        params: TwoQubitParams,
        settings: TwoQubitSettings,
        betas: Vec<f64>,
        measure: bool,
    },
    RamseyFringe {
        theta: f64,
        alpha: f64,
        detuning: f64,
        times: Vec<f64>,
        repetitions: usize,
        model: PhotonModel,
        settings: EstimateSettings,
    },
    NoiseScaling {
        theta: f64,
        beta: f64,
        alpha: f64,
        repetitions: Vec<usize>,
        model: PhotonModel,
        settings: EstimateSettings,
    },
    CrbAudit {
        thetas: Vec<f64>,
        model: PhotonModel,
        settings: EstimateSettings,
        protocol: Option<SingleQubitSettings>,
    },
    AlphaSweep {
        theta: f64,
        beta: f64,
        alphas: Vec<f64>,
        repetitions: usize,
        model: PhotonModel,
        settings: EstimateSettings,
        pulses: PulseMode,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    /// The input with every parameter the kind reads filled in.
    pub config: ExperimentConfig,
    pub plan: Plan,
}

/// Checks the config against the kind's schema, fills defaults and validates the
/// physical inputs.
pub fn resolve(raw: &ExperimentConfig) -> Result<Resolved> {
    check_schema(raw)?;
    let kind = raw.kind;
    let mut out = ExperimentConfig::new(kind, raw.seed);
    out.output = raw.output.clone();

    let (sweep, required) = kind.sweep();
    let grid = match raw.grid.as_ref().and_then(|g| g.get(sweep)) {
        Some(g) => g.clone(),
        None if required => {
            return Err(CliError::config(
                format!("grid.{sweep}"),
                format!("kind {} needs a `grid.{sweep}` table", kind.name()),
            ))
        }
        None => default_grid(kind, raw)?,
    };
    let field = format!("grid.{sweep}");
    let values = grid.expand(&field, sweep == "omega")?;
    out.grid = Some(GridConfig::with(sweep, grid));

    let plan = match kind {
        Kind::Scan => {
            let (params, probe) = resolve_probe(raw.probe.as_ref(), kind);
            let m = raw.modulation.clone().unwrap_or_default();
            let resolved = ModulationConfig {
                amplitude: Some(m.amplitude.unwrap_or(0.1)),
                scan_tau_us: Some(m.scan_tau_us.unwrap_or(0.45)),
                ..ModulationConfig::default()
            };
            let plan = Plan::Scan {
                params,
                amplitude: resolved.amplitude.unwrap(),
                tau: resolved.scan_tau_us.unwrap(),
                omegas: values,
            };
            out.probe = Some(probe);
            out.modulation = Some(resolved);
            plan
        }
        Kind::Rabi => {
            let (params, probe) = resolve_probe(raw.probe.as_ref(), kind);
            let m = raw.modulation.clone().unwrap_or_default();
            let resolved = ModulationConfig {
                amplitude: Some(m.amplitude.unwrap_or(0.1)),
                frequency: Some(m.frequency.unwrap_or(probe.gap.unwrap())),
                ..ModulationConfig::default()
            };
            let spec = ModulationSpec {
                amplitude: resolved.amplitude.unwrap(),
                frequency: resolved.frequency.unwrap().rad_per_us(),
                tau_grid: values,
            };
            spec.validate()
                .map_err(|e| section_error("modulation", e))?;
            let (pulses, pulses_cfg) = resolve_pulses(raw.pulses.as_ref())?;
            out.pulses = pulses_cfg;
            out.probe = Some(probe);
            out.modulation = Some(resolved);
            Plan::Rabi {
                params,
                spec,
                pulses,
            }
        }
        Kind::QfiSingle => {
            let (params, probe) = resolve_probe(raw.probe.as_ref(), kind);
            let (pulses, pulses_cfg) = resolve_pulses(raw.pulses.as_ref())?;
            let (settings, m) = resolve_protocol(raw.modulation.as_ref(), pulses);
            check_angles("grid.theta", &values, true)?;
            out.probe = Some(probe);
            out.modulation = Some(m);
            out.pulses = pulses_cfg;
            Plan::QfiSingle {
                params,
                settings,
                thetas: values,
            }
        }
        Kind::QfiTwoQubit => {
            let p = raw.pair.clone().unwrap_or_default();
            let defaults = TwoQubitParams::default();
            let pair = PairConfig {
                gap: Some(p.gap.unwrap_or(Frequency::mhz(15.98))),
                a_par: Some(p.a_par.unwrap_or(Frequency::mhz(11.832))),
                a_perp: Some(p.a_perp.unwrap_or(Frequency::mhz(2.79))),
                field_gauss: Some(p.field_gauss.unwrap_or(504.0)),
                phi: Some(p.phi.unwrap_or(defaults.phi)),
            };
            let params = TwoQubitParams {
                gap: pair.gap.unwrap().rad_per_us(),
                beta: 0.0,
                phi: pair.phi.unwrap(),
                a_par: pair.a_par.unwrap().rad_per_us(),
                a_perp: pair.a_perp.unwrap().rad_per_us(),
                omega_c: nuclear_larmor(pair.field_gauss.unwrap()),
            };
            params.validate().map_err(|e| section_error("pair", e))?;
            let d = TwoQubitSettings::default();
            let m = raw.multilevel.clone().unwrap_or_default();
            let multilevel = MultilevelConfig {
                target_ratio: Some(m.target_ratio.unwrap_or(d.target_ratio)),
                target_periods: Some(m.target_periods.unwrap_or(d.target_periods)),
                trace_samples: Some(m.trace_samples.unwrap_or(d.trace_samples)),
                measure: Some(m.measure.unwrap_or(true)),
            };
            let settings = TwoQubitSettings {
                target_ratio: multilevel.target_ratio.unwrap(),
                target_periods: multilevel.target_periods.unwrap(),
                trace_samples: multilevel.trace_samples.unwrap(),
            };
            if !(settings.target_ratio > 0.0 && settings.target_ratio < 0.25) {
                return Err(CliError::config(
                    "multilevel.target_ratio",
                    format!(
                        "target_ratio must lie in (0, 0.25), got {}",
                        settings.target_ratio
                    ),
                ));
            }
            if values.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(CliError::config(
                    "grid.beta",
                    "beta grid must be strictly increasing",
                ));
            }
            out.pair = Some(pair);
            out.multilevel = Some(multilevel.clone());
            Plan::QfiTwoQubit {
                params,
                settings,
                betas: values,
                measure: multilevel.measure.unwrap(),
            }
        }
        Kind::RamseyFringe => {
            let r = raw.ramsey.clone().unwrap_or_default();
            let ramsey = RamseyConfig {
                theta: Some(r.theta.unwrap_or(PI / 3.0)),
                alpha: Some(r.alpha.unwrap_or(FRAC_PI_2)),
                detuning: Some(r.detuning.unwrap_or(Frequency::mhz(2.27))),
                repetitions: Some(r.repetitions.unwrap_or(9)),
                ..RamseyConfig::default()
            };
            let (model, settings) = resolve_readout(raw, &mut out)?;
            if values.iter().any(|t| *t < 0.0) {
                return Err(CliError::config(
                    "grid.time",
                    "free-evolution times must be non-negative",
                ));
            }
            check_repetitions("ramsey.repetitions", ramsey.repetitions.unwrap())?;
            out.ramsey = Some(ramsey.clone());
            Plan::RamseyFringe {
                theta: ramsey.theta.unwrap(),
                alpha: ramsey.alpha.unwrap(),
                detuning: ramsey.detuning.unwrap().rad_per_us(),
                times: values,
                repetitions: ramsey.repetitions.unwrap(),
                model,
                settings,
            }
        }
        Kind::NoiseScaling => {
            let r = raw.ramsey.clone().unwrap_or_default();
            let ramsey = RamseyConfig {
                theta: Some(r.theta.unwrap_or(PI / 3.0)),
                beta: Some(r.beta.unwrap_or(FRAC_PI_2)),
                alpha: Some(r.alpha.unwrap_or(FRAC_PI_2)),
                ..RamseyConfig::default()
            };
            let (model, settings) = resolve_readout(raw, &mut out)?;
            let repetitions = values
                .iter()
                .map(|&v| {
                    if v >= 1.0 && v.fract() == 0.0 {
                        Ok(v as usize)
                    } else {
                        Err(CliError::config(
                            "grid.repetitions",
                            format!("repetition counts must be positive integers, got {v}"),
                        ))
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            let mut distinct = repetitions.clone();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() < 5 || distinct[distinct.len() - 1] < 10 * distinct[0] {
                return Err(CliError::config(
                    "grid.repetitions",
                    "need at least 5 distinct repetition counts spanning a factor of 10",
                ));
            }
            out.ramsey = Some(ramsey.clone());
            Plan::NoiseScaling {
                theta: ramsey.theta.unwrap(),
                beta: ramsey.beta.unwrap(),
                alpha: ramsey.alpha.unwrap(),
                repetitions,
                model,
                settings,
            }
        }
        Kind::CrbAudit => {
            let r = raw.ramsey.clone().unwrap_or_default();
            let measure = r.measure_protocol.unwrap_or(false);
            let (pulses, pulses_cfg) = resolve_pulses(raw.pulses.as_ref())?;
            let protocol = if measure {
                let (settings, m) = resolve_protocol(raw.modulation.as_ref(), pulses);
                out.modulation = Some(m);
                out.pulses = pulses_cfg;
                Some(settings)
            } else {
                if raw.modulation.is_some() || raw.pulses.is_some() {
                    return Err(CliError::config(
                        "ramsey.measure_protocol",
                        "`modulation` and `pulses` only apply with ramsey.measure_protocol = true",
                    ));
                }
                None
            };
            let (model, settings) = resolve_readout(raw, &mut out)?;
            check_angles("grid.theta", &values, true)?;
            out.ramsey = Some(RamseyConfig {
                measure_protocol: Some(measure),
                ..RamseyConfig::default()
            });
            Plan::CrbAudit {
                thetas: values,
                model,
                settings,
                protocol,
            }
        }
        Kind::AlphaSweep => {
            let r = raw.ramsey.clone().unwrap_or_default();
            let ramsey = RamseyConfig {
                theta: Some(r.theta.unwrap_or(FRAC_PI_2)),
                beta: Some(r.beta.unwrap_or(FRAC_PI_2)),
                repetitions: Some(r.repetitions.unwrap_or(1)),
                ..RamseyConfig::default()
            };
            check_repetitions("ramsey.repetitions", ramsey.repetitions.unwrap())?;
            let (pulses, pulses_cfg) = resolve_pulses(raw.pulses.as_ref())?;
            let (model, settings) = resolve_readout(raw, &mut out)?;
            check_angles("grid.alpha", &values, false)?;
            out.ramsey = Some(ramsey.clone());
            out.pulses = pulses_cfg;
            Plan::AlphaSweep {
                theta: ramsey.theta.unwrap(),
                beta: ramsey.beta.unwrap(),
                alphas: values,
                repetitions: ramsey.repetitions.unwrap(),
                model,
                settings,
                pulses: pulses.unwrap_or_default(),
            }
        }
    };
    validate_plan(&plan)?;
    Ok(Resolved { config: out, plan })
}

fn default_grid(kind: Kind, raw: &ExperimentConfig) -> Result<Grid> {
    match kind {
        // 81 points over ±20 % of the gap, in the gap's own unit
        Kind::Scan => {
            let gap = raw
                .probe
                .as_ref()
                .and_then(|p| p.gap)
                .unwrap_or(Frequency::mhz(15.98));
            Ok(Grid::linspace(0.8 * gap.value, 1.2 * gap.value, 81).in_unit(gap.unit))
        }
        Kind::Rabi => Ok(Grid::linspace(0.0, 4.0, 81)),
        _ => unreachable!("only scan and rabi have default grids"),
    }
}

fn resolve_probe(raw: Option<&ProbeConfig>, kind: Kind) -> (SingleQubitParams, ProbeConfig) {
    let p = raw.cloned().unwrap_or_default();
    let fields = kind
        .schema()
        .iter()
        .find(|(s, _)| *s == "probe")
        .map(|(_, f)| *f)
        .unwrap_or(&[]);
    let uses = |f: &str| fields.contains(&f);
    let d = SingleQubitParams::default();
    let probe = ProbeConfig {
        gap: Some(p.gap.unwrap_or(Frequency::mhz(15.98))),
        theta: uses("theta").then(|| p.theta.unwrap_or(d.theta)),
        beta: Some(p.beta.unwrap_or(d.beta)),
        detuning: uses("detuning").then(|| p.detuning.unwrap_or(Frequency::mhz(5.025))),
    };
    let params = SingleQubitParams {
        gap: probe.gap.unwrap().rad_per_us(),
        theta: probe.theta.unwrap_or(d.theta),
        beta: probe.beta.unwrap(),
        detuning: probe.detuning.map(|f| f.rad_per_us()).unwrap_or(d.detuning),
        ..d
    };
    (params, probe)
}

fn resolve_protocol(
    raw: Option<&ModulationConfig>,
    pulses: Option<PulseMode>,
) -> (SingleQubitSettings, ModulationConfig) {
    let m = raw.cloned().unwrap_or_default();
    let d = SingleQubitSettings::default();
    let settings = SingleQubitSettings {
        amplitude: m.amplitude.unwrap_or(d.amplitude),
        scan_points: m.scan_points.unwrap_or(d.scan_points),
        scan_tau: m.scan_tau_us.unwrap_or(d.scan_tau),
        trace_samples: m.trace_samples.unwrap_or(d.trace_samples),
        target_periods: m.target_periods.unwrap_or(d.target_periods),
        pulses,
    };
    let cfg = ModulationConfig {
        amplitude: Some(settings.amplitude),
        frequency: None,
        scan_points: Some(settings.scan_points),
        scan_tau_us: Some(settings.scan_tau),
        trace_samples: Some(settings.trace_samples),
        target_periods: Some(settings.target_periods),
    };
    (settings, cfg)
}

fn resolve_pulses(raw: Option<&PulsesConfig>) -> Result<(Option<PulseMode>, Option<PulsesConfig>)> {
    let Some(p) = raw else {
        return Ok((None, None));
    };
    match p.mode {
        PulseKind::Ideal => {
            if p.rabi.is_some() || p.detuning.is_some() {
                return Err(CliError::config(
                    "pulses",
                    "ideal pulses take no `rabi` or `detuning`",
                ));
            }
            Ok((Some(PulseMode::Ideal), Some(p.clone())))
        }
        PulseKind::Finite => {
            let cfg = PulsesConfig {
                mode: PulseKind::Finite,
                rabi: Some(p.rabi.unwrap_or(Frequency::mhz(20.0))),
                detuning: Some(p.detuning.unwrap_or(Frequency::mhz(0.0))),
            };
            let rabi = cfg.rabi.unwrap().rad_per_us();
            let detuning = cfg.detuning.unwrap().rad_per_us();
            if !(rabi.is_finite() && rabi > 0.0) || !detuning.is_finite() {
                return Err(CliError::config(
                    "pulses.rabi",
                    "finite pulses need a positive Rabi frequency and a finite detuning",
                ));
            }
            Ok((Some(PulseMode::Finite { rabi, detuning }), Some(cfg)))
        }
    }
}

fn resolve_readout(
    raw: &ExperimentConfig,
    out: &mut ExperimentConfig,
) -> Result<(PhotonModel, EstimateSettings)> {
    let d = PhotonModel::default();
    let p = raw.photons.clone().unwrap_or_default();
    let photons = PhotonConfig {
        n0_mean: Some(p.n0_mean.unwrap_or(d.n0_mean)),
        n1_mean: Some(p.n1_mean.unwrap_or(d.n1_mean)),
        extra_noise_sd: Some(p.extra_noise_sd.unwrap_or(d.extra_noise_sd)),
        noise_correlation: Some(p.noise_correlation.unwrap_or(d.noise_correlation)),
    };
    let model = PhotonModel {
        n0_mean: photons.n0_mean.unwrap(),
        n1_mean: photons.n1_mean.unwrap(),
        extra_noise_sd: photons.extra_noise_sd.unwrap(),
        noise_correlation: photons.noise_correlation.unwrap(),
        seed: raw.seed,
    };
    model.validate().map_err(|e| section_error("photons", e))?;

    let d = EstimateSettings::default();
    let e = raw.estimator.clone().unwrap_or_default();
    let estimator = EstimatorConfig {
        replicas: Some(e.replicas.unwrap_or(d.replicas)),
        chi_runs: Some(e.chi_runs.unwrap_or(d.chi_runs)),
        dbeta: Some(e.dbeta.unwrap_or(d.dbeta)),
        sweeps: Some(e.sweeps.unwrap_or(d.sweeps)),
    };
    let settings = EstimateSettings {
        replicas: estimator.replicas.unwrap(),
        chi_runs: estimator.chi_runs.unwrap(),
        dbeta: estimator.dbeta.unwrap(),
        sweeps: estimator.sweeps.unwrap(),
    };
    settings
        .validate()
        .map_err(|e| section_error("estimator", e))?;
    out.photons = Some(photons);
    out.estimator = Some(estimator);
    Ok((model, settings))
}

fn check_angles(field: &str, values: &[f64], open_interval: bool) -> Result<()> {
    for &v in values {
        let ok = if open_interval {
            v > 0.0 && v < PI
        } else {
            (0.0..=PI).contains(&v)
        };
        if !ok {
            let range = if open_interval { "(0, π)" } else { "[0, π]" };
            return Err(CliError::config(
                field,
                format!("angle {v} lies outside {range}"),
            ));
        }
    }
    Ok(())
}

fn check_repetitions(field: &str, n: usize) -> Result<()> {
    if n == 0 {
        return Err(CliError::config(field, "repetitions must be at least 1"));
    }
    Ok(())
}

fn section_error(section: &str, e: qfi_core::QfiError) -> CliError {
    CliError::config(section, e.to_string())
}

/// Cheap consistency checks that would otherwise surface mid-run.
fn validate_plan(plan: &Plan) -> Result<()> {
    let probe = |p: &SingleQubitParams| p.validate().map_err(|e| section_error("probe", e));
    match plan {
        Plan::Scan {
            params,
            amplitude,
            tau,
            omegas,
        } => {
            probe(params)?;
            if !(*amplitude > 0.0 && *amplitude <= 0.2) {
                return Err(CliError::config(
                    "modulation.amplitude",
                    format!("amplitude must lie in (0, 0.2], got {amplitude}"),
                ));
            }
            if !(*tau > 0.0 && tau.is_finite()) {
                return Err(CliError::config(
                    "modulation.scan_tau_us",
                    "scan time must be positive",
                ));
            }
            if omegas.iter().any(|w| *w <= 0.0) {
                return Err(CliError::config(
                    "grid.omega",
                    "modulation frequencies must be positive",
                ));
            }
        }
        Plan::Rabi { params, .. } => probe(params)?,
        Plan::QfiSingle {
            params, settings, ..
        } => {
            probe(params)?;
            check_protocol(settings)?;
        }
        Plan::CrbAudit {
            protocol: Some(settings),
            ..
        } => check_protocol(settings)?,
        _ => {}
    }
    Ok(())
}

fn check_protocol(s: &SingleQubitSettings) -> Result<()> {
    if !(s.amplitude > 0.0 && s.amplitude <= 0.2) {
        return Err(CliError::config(
            "modulation.amplitude",
            format!("amplitude must lie in (0, 0.2], got {}", s.amplitude),
        ));
    }
    if s.scan_points < 5 {
        return Err(CliError::config(
            "modulation.scan_points",
            "scan needs at least 5 points",
        ));
    }
    if !(s.scan_tau > 0.0 && s.scan_tau.is_finite()) {
        return Err(CliError::config(
            "modulation.scan_tau_us",
            "scan time must be positive",
        ));
    }
    if s.trace_samples < qfi_core::protocol::MIN_SAMPLES {
        return Err(CliError::config(
            "modulation.trace_samples",
            format!(
                "trace needs at least {} samples",
                qfi_core::protocol::MIN_SAMPLES
            ),
        ));
    }
    if !(s.target_periods >= qfi_core::protocol::MIN_PERIODS) {
        return Err(CliError::config(
            "modulation.target_periods",
            format!(
                "trace must cover at least {} periods",
                qfi_core::protocol::MIN_PERIODS
            ),
        ));
    }
    Ok(())
}

fn check_schema(raw: &ExperimentConfig) -> Result<()> {
    let value = serde_json::to_value(raw).expect("config serialises");
    let schema = raw.kind.schema();
    let Value::Object(top) = value else {
        unreachable!("config serialises to an object")
    };
    for (section, body) in &top {
        if matches!(section.as_str(), "kind" | "seed" | "output") {
            continue;
        }
        let Some((_, fields)) = schema.iter().find(|(s, _)| s == section) else {
            return Err(CliError::config(
                section.clone(),
                format!(
                    "section `{section}` is not used by kind {}",
                    raw.kind.name()
                ),
            ));
        };
        if let Value::Object(entries) = body {
            for key in entries.keys() {
                if !fields.contains(&key.as_str()) {
                    return Err(CliError::config(
                        format!("{section}.{key}"),
                        format!("`{section}.{key}` is not used by kind {}", raw.kind.name()),
                    ));
                }
            }
        }
    }
    Ok(())
}

/// Origin of every resolved parameter, keyed `section.field` (plus `seed`).
/// Parameters present in `given` are labelled by `label`; the rest are design
/// defaults.
pub fn provenance(
    given: &ExperimentConfig,
    resolved: &ExperimentConfig,
    label: impl Fn(&str) -> Source,
) -> BTreeMap<String, Source> {
    let g = serde_json::to_value(given).expect("config serialises");
    let r = serde_json::to_value(resolved).expect("config serialises");
    let mut out = BTreeMap::new();
    let Value::Object(top) = r else {
        return out;
    };
    for (section, body) in top {
        match body {
            Value::Object(entries) if section != "output" => {
                for key in entries.keys() {
                    let name = format!("{section}.{key}");
                    let present = g.get(&section).and_then(|s| s.get(key)).is_some();
                    let source = if present {
                        label(&name)
                    } else {
                        Source::DesignDefault
                    };
                    out.insert(name, source);
                }
            }
            _ if section == "seed" => {
                let source = label(&section);
                out.insert(section, source);
            }
            _ => {}
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_names_the_missing_field() {
        let err = parse_toml("").unwrap_err();
        match err {
            CliError::Config { field, .. } => assert_eq!(field.as_deref(), Some("kind")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn frequency_units_convert() {
        let f = Frequency::mhz(1.0);
        assert!((f.rad_per_us() - 2.0 * PI).abs() < 1e-15);
        let g = Frequency {
            value: 3.0,
            unit: FreqUnit::RadPerUs,
        };
        assert_eq!(g.rad_per_us(), 3.0);
    }

    #[test]
    fn bare_number_frequency_is_rejected() {
        let text = "kind = \"scan\"\nseed = 1\n[probe]\ngap = 15.98\n";
        assert!(parse_toml(text).is_err());
    }

    #[test]
    fn linspace_grid_ends_exactly() {
        let g = Grid::linspace(0.1, 0.7, 7);
        let v = g.expand("grid.theta", false).unwrap();
        assert_eq!(v.len(), 7);
        assert_eq!(v[6], 0.7);
        assert!((v[3] - 0.4).abs() < 1e-15);
    }

    #[test]
    fn half_specified_grid_is_rejected() {
        let g = Grid {
            start: Some(0.0),
            points: Some(3),
            ..Grid::default()
        };
        assert!(g.expand("grid.theta", false).is_err());
    }

    #[test]
    fn frequency_grid_needs_unit() {
        let g = Grid::list(vec![15.0, 16.0]);
        assert!(g.expand("grid.omega", true).is_err());
        let v = g.in_unit(FreqUnit::Mhz).expand("grid.omega", true).unwrap();
        assert!((v[0] - mhz(15.0)).abs() < 1e-12);
    }

    #[test]
    fn unused_section_is_rejected() {
        let mut c = ExperimentConfig::new(Kind::Scan, 1);
        c.pair = Some(PairConfig::default());
        let err = resolve(&c).unwrap_err();
        assert!(err.to_string().contains("pair"), "{err}");
    }

    #[test]
    fn unused_field_is_rejected() {
        let mut c = ExperimentConfig::new(Kind::Scan, 1);
        c.probe = Some(ProbeConfig {
            detuning: Some(Frequency::mhz(1.0)),
            ..ProbeConfig::default()
        });
        let err = resolve(&c).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("probe.detuning"), "{err}");
    }

    #[test]
    fn required_grid_is_enforced() {
        let c = ExperimentConfig::new(Kind::QfiSingle, 1);
        match resolve(&c).unwrap_err() {
            CliError::Config { field, .. } => assert_eq!(field.as_deref(), Some("grid.theta")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn resolution_is_idempotent() {
        let mut c = ExperimentConfig::new(Kind::AlphaSweep, 4);
        c.grid = Some(GridConfig::with("alpha", Grid::linspace(0.5, 2.5, 5)));
        c.pulses = Some(PulsesConfig {
            mode: PulseKind::Finite,
            rabi: None,
            detuning: Some(Frequency::mhz(1.0)),
        });
        let once = resolve(&c).unwrap();
        let twice = resolve(&once.config).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn provenance_separates_given_from_default() {
        let mut c = ExperimentConfig::new(Kind::Scan, 1);
        c.probe = Some(ProbeConfig {
            theta: Some(1.0),
            ..ProbeConfig::default()
        });
        let r = resolve(&c).unwrap();
        let p = provenance(&c, &r.config, |_| Source::ConfigFile);
        assert_eq!(p["probe.theta"], Source::ConfigFile);
        assert_eq!(p["probe.gap"], Source::DesignDefault);
        assert_eq!(p["grid.omega"], Source::DesignDefault);
        assert_eq!(p["seed"], Source::ConfigFile);
    }

    #[test]
    fn invalid_physics_is_a_config_error() {
        let mut c = ExperimentConfig::new(Kind::NoiseScaling, 1);
        c.grid = Some(GridConfig::with("repetitions", Grid::list(vec![1.0, 2.5])));
        assert_eq!(resolve(&c).unwrap_err().exit_code(), 2);
        c.grid = Some(GridConfig::with(
            "repetitions",
            Grid::list(vec![1.0, 2.0, 4.0, 9.0, 16.0]),
        ));
        c.photons = Some(PhotonConfig {
            n0_mean: Some(50.0),
            n1_mean: Some(80.0),
            ..PhotonConfig::default()
        });
        assert_eq!(resolve(&c).unwrap_err().exit_code(), 2);
    }
}
