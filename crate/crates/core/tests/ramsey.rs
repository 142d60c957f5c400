use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

use qfi_core::ramsey::{
    crb_audit, estimate, noise_scaling, ramsey_sensitivity, spread, EstimateSettings,
    NoiseCorrelation, PhotonModel,
};

#[test]
fn bright_limit_concentrates_the_ratio() {
    let model = PhotonModel {
        n0_mean: 1.0e5,
        n1_mean: 1.0,
        ..PhotonModel::default()
    };
    let s = spread(1.0, 1, &model, &EstimateSettings::default()).unwrap();
    assert_eq!(s.s_mean, 1.0);
    assert_eq!(s.delta_p, 0.0);
}

#[test]
fn injected_floor_is_recovered() {
    let settings = EstimateSettings::default();
    let model = PhotonModel::ideal(17).with_noise(0.05);
    let grid = [1, 4, 16, 64, 256, 1024, 4096, 10_000];
    let r = noise_scaling(FRAC_PI_2, FRAC_PI_2, FRAC_PI_2, &grid, &model, &settings).unwrap();
    assert!((0.03..=0.07).contains(&r.xi0), "{r:?}");
    // without the floor the fit finds none
    let clean = noise_scaling(
        FRAC_PI_2,
        FRAC_PI_2,
        FRAC_PI_2,
        &grid,
        &PhotonModel::ideal(17),
        &settings,
    )
    .unwrap();
    assert!(clean.xi0 < 0.02, "{}", clean.xi0);
    assert!((clean.delta0 - 0.5).abs() < 0.05);
    assert!((-0.55..=-0.45).contains(&clean.loglog_slope_above_floor));
}

#[test]
fn per_run_noise_averages_away() {
    let settings = EstimateSettings::default();
    let model = PhotonModel {
        noise_correlation: NoiseCorrelation::PerRun,
        ..PhotonModel::ideal(5).with_noise(0.05)
    };
    let s = spread(0.5, 1024, &model, &settings).unwrap();
    assert!(s.delta_p < 0.03, "{}", s.delta_p);
}

#[test]
fn sensitivity_matches_theory_off_quadrature() {
    let (theta, beta, alpha) = (FRAC_PI_3, 1.2, 1.9);
    let r = estimate(
        theta,
        beta,
        alpha,
        1,
        &PhotonModel::ideal(8),
        &EstimateSettings::default(),
    )
    .unwrap();
    let want = ramsey_sensitivity(theta, beta, alpha).unwrap();
    assert!(
        (r.delta_beta - want).abs() / want < 0.05,
        "{} vs {want}",
        r.delta_beta
    );
}

#[test]
fn saturation_at_half_pi() {
    let audit = crb_audit(
        &[FRAC_PI_2],
        &PhotonModel::ideal(12),
        &EstimateSettings::default(),
        None,
    )
    .unwrap();
    let p = &audit.points[0];
    assert!((p.ratio - 1.0).abs() < 3.0 * p.ratio_stderr + 1e-3, "{p:?}");
    assert!(audit.bound_holds);
}

#[test]
fn realistic_readout_sits_above_the_bound() {
    let grid = [PI / 4.0, FRAC_PI_2, 3.0 * PI / 4.0];
    let settings = EstimateSettings {
        replicas: 4000,
        ..Default::default()
    };
    let audit = crb_audit(&grid, &PhotonModel::default().with_seed(3), &settings, None).unwrap();
    assert!(audit.bound_holds);
    // ratios outside [0, 1] add variance beyond p(1 − p)
    assert!(
        audit.slope > 1.0 + 3.0 * audit.slope_stderr,
        "{} ± {}",
        audit.slope,
        audit.slope_stderr
    );
}

#[test]
fn seeds_fix_every_field() {
    let s = EstimateSettings {
        chi_runs: 50_000,
        ..Default::default()
    };
    let run = || {
        crb_audit(
            &[0.7, 1.9],
            &PhotonModel::default().with_noise(0.02).with_seed(99),
            &s,
            None,
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a, b);
    for (x, y) in a.points.iter().zip(&b.points) {
        assert_eq!(
            x.estimate.delta_beta.to_bits(),
            y.estimate.delta_beta.to_bits()
        );
    }
}
