//! Preset experiments behind `qfi-lab reproduce`.
//!
//! Each preset lists the parameters taken from the published figure; every other
//! value is a design default and is labelled as such in the manifest.

use std::f64::consts::{FRAC_PI_2, PI};

use crate::config::{
    EstimatorConfig, ExperimentConfig, Frequency, Grid, GridConfig, Kind, ModulationConfig,
    MultilevelConfig, PairConfig, ProbeConfig, PulseKind, PulsesConfig, RamseyConfig,
};
use crate::error::{CliError, Result};

pub const FIGURES: [&str; 9] = ["2b", "2c", "2d", "3a", "3b", "3c", "3d", "4a", "4b"];

pub struct Preset {
    pub id: &'static str,
    pub description: &'static str,
    pub config: ExperimentConfig,
    /// `section.field` keys whose values come from the figure.
    pub from_figure: &'static [&'static str],
}

fn gap() -> Option<Frequency> {
    Some(Frequency::mhz(15.98))
}

/// θ = π/8 … 7π/8.
fn theta_grid() -> Grid {
    Grid::linspace(PI / 8.0, 7.0 * PI / 8.0, 7)
}

pub fn preset(id: &str, seed: u64) -> Result<Preset> {
    let id = FIGURES
        .iter()
        .copied()
        .find(|f| f.eq_ignore_ascii_case(id))
        .ok_or_else(|| CliError::UnknownFigure(id.to_string()))?;
    let mut c = ExperimentConfig::new(Kind::Scan, seed);
    let (description, from_figure): (&str, &[&str]) = match id {
        "2b" => {
            c.probe = Some(ProbeConfig {
                gap: gap(),
                theta: Some(PI / 3.0),
                ..ProbeConfig::default()
            });
            c.modulation = Some(ModulationConfig {
                amplitude: Some(0.1),
                scan_tau_us: Some(0.45),
                ..ModulationConfig::default()
            });
            (
                "survival against modulation frequency around the probe gap",
                &[
                    "probe.gap",
                    "probe.theta",
                    "modulation.amplitude",
                    "modulation.scan_tau_us",
                ],
            )
        }
        "2c" => {
            c.kind = Kind::Rabi;
            c.probe = Some(ProbeConfig {
                gap: gap(),
                theta: Some(PI / 3.0),
                detuning: Some(Frequency::mhz(5.025)),
                ..ProbeConfig::default()
            });
            c.modulation = Some(ModulationConfig {
                amplitude: Some(0.1),
                ..ModulationConfig::default()
            });
            c.pulses = Some(PulsesConfig {
                mode: PulseKind::Ideal,
                rabi: None,
                detuning: None,
            });
            c.grid = Some(GridConfig::with("tau", Grid::linspace(0.0, 4.0, 161)));
            (
                "resonant Rabi oscillation read out through the full pulse sequence",
                &[
                    "probe.gap",
                    "probe.theta",
                    "probe.detuning",
                    "modulation.amplitude",
                ],
            )
        }
        "2d" => {
            c.kind = Kind::QfiSingle;
            c.probe = Some(ProbeConfig {
                gap: gap(),
                detuning: Some(Frequency::mhz(5.025)),
                ..ProbeConfig::default()
            });
            c.modulation = Some(ModulationConfig {
                amplitude: Some(0.1),
                scan_tau_us: Some(0.45),
                ..ModulationConfig::default()
            });
            c.grid = Some(GridConfig::with("theta", theta_grid()));
            (
                "measured QFI across resource states against sin²θ",
                &[
                    "probe.gap",
                    "probe.detuning",
                    "modulation.amplitude",
                    "modulation.scan_tau_us",
                ],
            )
        }
        "3a" => {
            c.kind = Kind::RamseyFringe;
            c.ramsey = Some(RamseyConfig {
                theta: Some(PI / 3.0),
                alpha: Some(FRAC_PI_2),
                detuning: Some(Frequency::mhz(2.27)),
                repetitions: Some(9),
                ..RamseyConfig::default()
            });
            c.grid = Some(GridConfig::with("time", Grid::linspace(0.0, 0.8, 41)));
            (
                "Ramsey signal and its spread against free-evolution time",
                &[
                    "ramsey.theta",
                    "ramsey.alpha",
                    "ramsey.detuning",
                    "ramsey.repetitions",
                ],
            )
        }
        "3b" => {
            c.kind = Kind::NoiseScaling;
            c.ramsey = Some(RamseyConfig {
                theta: Some(PI / 3.0),
                beta: Some(FRAC_PI_2),
                alpha: Some(FRAC_PI_2),
                ..RamseyConfig::default()
            });
            c.estimator = Some(EstimatorConfig {
                replicas: Some(1000),
                ..EstimatorConfig::default()
            });
            c.grid = Some(GridConfig::with(
                "repetitions",
                Grid::list(vec![1.0, 2.0, 4.0, 9.0, 16.0, 25.0, 49.0, 100.0]),
            ));
            (
                "spread of the averaged signal against the number of repetitions",
                &["ramsey.theta", "ramsey.beta", "ramsey.alpha"],
            )
        }
        "3c" => {
            c.kind = Kind::AlphaSweep;
            c.ramsey = Some(RamseyConfig {
                theta: Some(FRAC_PI_2),
                beta: Some(FRAC_PI_2),
                repetitions: Some(1),
                ..RamseyConfig::default()
            });
            // the minimum is flat (δβ ∝ 1/sin α here), so Δp needs to be known to well
            // under 1 %
            c.estimator = Some(EstimatorConfig {
                replicas: Some(20_000),
                ..EstimatorConfig::default()
            });
            c.grid = Some(GridConfig::with(
                "alpha",
                Grid::linspace(PI / 8.0, 7.0 * PI / 8.0, 13),
            ));
            (
                "sensitivity against the read-out angle",
                &["ramsey.theta", "ramsey.beta", "ramsey.repetitions"],
            )
        }
        "3d" => {
            c.kind = Kind::CrbAudit;
            c.ramsey = Some(RamseyConfig {
                measure_protocol: Some(true),
                ..RamseyConfig::default()
            });
            c.grid = Some(GridConfig::with("theta", theta_grid()));
            ("sensitivity against 1/sqrt(F) across resource states", &[])
        }
        "4a" | "4b" => {
            c.kind = Kind::QfiTwoQubit;
            c.pair = Some(PairConfig {
                a_par: Some(Frequency::mhz(11.832)),
                a_perp: Some(Frequency::mhz(2.79)),
                field_gauss: Some(504.0),
                ..PairConfig::default()
            });
            let fig_a = id == "4a";
            c.multilevel = Some(MultilevelConfig {
                measure: Some(fig_a),
                ..MultilevelConfig::default()
            });
            let points = if fig_a { 21 } else { 201 };
            c.grid = Some(GridConfig::with("beta", Grid::linspace(0.19, 0.59, points)));
            let description = if fig_a {
                "ground-state QFI of the electron-nuclear pair, measured and exact"
            } else {
                "ground-state concurrence and gap of the electron-nuclear pair"
            };
            (
                description,
                &["pair.a_par", "pair.a_perp", "pair.field_gauss"],
            )
        }
        _ => unreachable!(),
    };
    Ok(Preset {
        id,
        description,
        config: c,
        from_figure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::resolve;

    #[test]
    fn every_preset_resolves() {
        for id in FIGURES {
            let p = preset(id, 1).unwrap();
            let r = resolve(&p.config).unwrap_or_else(|e| panic!("{id}: {e}"));
            let keys = crate::config::provenance(&p.config, &r.config, |_| {
                crate::config::Source::FromFigure
            });
            for k in p.from_figure {
                assert!(
                    keys.contains_key(*k),
                    "{id}: {k} is not a resolved parameter"
                );
            }
        }
    }

    #[test]
    fn unknown_figure_is_rejected() {
        assert!(matches!(preset("5a", 1), Err(CliError::UnknownFigure(_))));
        assert!(preset("2B", 1).is_ok());
    }
}
