use super::*;
use crate::bounds::fisher_information;
use crate::channels::{builtin, Axis, FamilyOptions};
use crate::linalg::max_abs;

fn cfg() -> DiffConfig {
    DiffConfig::default()
}

fn family(name: &str) -> ParametricChannel {
    builtin(name, &FamilyOptions::default()).unwrap()
}

fn rotation(axis: Axis, input: PureState) -> ParametricChannel {
    let opts = FamilyOptions {
        axis: Some(axis),
        input_state: Some(input),
        ..Default::default()
    };
    builtin("rotation", &opts).unwrap()
}

#[test]
fn deterministic_outcome() {
    let rho = DensityMatrix::from(&PureState::basis(2, 0));
    assert_eq!(sample_outcomes(&rho, &Povm::computational(2), 100, 7).unwrap(), vec![100, 0]);
}

#[test]
fn law_of_large_numbers() {
    let rho = family("dephasing").output_state(&[0.2]).unwrap();
    let n = 100_000;
    let k = sample_outcomes(&rho, &Povm::plus_minus(), n, 1).unwrap();
    assert_eq!(k.iter().sum::<u64>(), n);
    let sigma = (0.16 / n as f64).sqrt();
    assert!((k[0] as f64 / n as f64 - 0.8).abs() < 3.0 * sigma);
}

#[test]
fn sampling_is_reproducible() {
    let rho = family("amplitude-damping").output_state(&[0.3]).unwrap();
    let m = Povm::plus_minus();
    let a = sample_outcomes(&rho, &m, 5000, 99).unwrap();
    assert_eq!(a, sample_outcomes(&rho, &m, 5000, 99).unwrap());
    assert_ne!(a, sample_outcomes(&rho, &m, 5000, 100).unwrap());
}

#[test]
fn multinomial_marginals() {
    // three-outcome POVM on a qubit: check every marginal within 4σ
    let e = |a: f64| crate::linalg::identity(2).scale(a);
    let m = Povm::new(vec![e(0.2), e(0.5), e(0.3)]).unwrap();
    let rho = DensityMatrix::from(&PureState::plus());
    let n = 200_000u64;
    let k = sample_outcomes(&rho, &m, n, 3).unwrap();
    for (i, p) in [0.2, 0.5, 0.3].iter().enumerate() {
        let sigma = (p * (1.0 - p) / n as f64).sqrt();
        assert!((k[i] as f64 / n as f64 - p).abs() < 4.0 * sigma);
    }
}

#[test]
fn binomial_mle_is_the_fraction() {
    let ch = family("dephasing");
    let r = mle_estimate(&ch, &Povm::plus_minus(), &[80, 20], None).unwrap();
    assert!((r.theta - 0.2).abs() < 1e-7, "{r:?}");
    assert!(!r.at_boundary);
    let r = mle_estimate(&ch, &Povm::plus_minus(), &[37, 63], None).unwrap();
    assert!((r.theta - 0.63).abs() < 1e-7, "{r:?}");
}

#[test]
fn boundary_mle_is_flagged() {
    let ch = family("dephasing");
    let r = mle_estimate(&ch, &Povm::plus_minus(), &[100, 0], None).unwrap();
    assert_eq!(r.theta, 0.0);
    assert!(r.at_boundary);
    let r = mle_estimate(&ch, &Povm::plus_minus(), &[0, 100], None).unwrap();
    assert_eq!(r.theta, 1.0);
}

#[test]
fn flat_likelihood_breaks_ties_to_the_center() {
    let ch = family("dephasing");
    let r = mle_estimate(&ch, &Povm::computational(2), &[40, 60], None).unwrap();
    assert_eq!(r.theta, 0.5);
    let r = mle_estimate(&ch, &Povm::computational(2), &[40, 60], Some((0.1, 0.3))).unwrap();
    assert!((r.theta - 0.2).abs() < 1e-12);
}

#[test]
fn impossible_counts() {
    let ch = family("dephasing").with_input(PureState::basis(2, 0)).unwrap();
    assert!(matches!(
        mle_estimate(&ch, &Povm::computational(2), &[5, 5], None),
        Err(QfiError::ImpossibleCounts)
    ));
}

#[test]
fn mle_input_checks() {
    let ch = family("dephasing");
    assert!(mle_estimate(&ch, &Povm::plus_minus(), &[0, 0], None).is_err());
    assert!(mle_estimate(&ch, &Povm::plus_minus(), &[1, 2, 3], None).is_err());
    assert!(mle_estimate(&ch, &Povm::plus_minus(), &[1, 2], Some((-0.5, 0.5))).is_err());
    assert!(mle_estimate(&family("dephasing2"), &Povm::plus_minus(), &[1, 2], None).is_err());
}

#[test]
fn large_sample_consistency() {
    let ch = family("amplitude-damping");
    let theta = 0.35;
    let m = Povm::plus_minus();
    let n = 100_000;
    let k = sample_outcomes(&ch.output_state(&[theta]).unwrap(), &m, n, 17).unwrap();
    let est = mle_estimate(&ch, &m, &k, None).unwrap();
    let f = fisher_information(&ch, &m, theta, &cfg()).unwrap().value;
    assert!((est.theta - theta).abs() < 3.0 / (n as f64 * f).sqrt());
}

#[test]
fn adaptive_dephasing_uses_the_plus_minus_basis() {
    let ch = family("dephasing");
    let cfg_a = AdaptiveConfig::new(500, 2);
    let run = adaptive_two_stage(&ch, 0.2, 10_000, &cfg_a, &cfg(), 5).unwrap();
    // the computational pilot carries no information: the estimate is the center
    assert_eq!(run.pilot_estimate.theta, 0.5);
    assert_eq!(run.pilot_counts.iter().sum::<u64>(), 500);
    assert_eq!(run.counts.iter().sum::<u64>(), 9_500);
    let pm = Povm::plus_minus();
    assert!(run
        .stage2_povm
        .elements()
        .iter()
        .all(|x| pm.elements().iter().any(|y| max_abs(&(x - y)) < 1e-8)));
    assert!((run.estimate.theta - 0.2).abs() < 0.02);
}

#[test]
fn adaptive_extreme_split_runs() {
    let ch = family("dephasing");
    let run = adaptive_two_stage(&ch, 0.2, 1000, &AdaptiveConfig::new(999, 2), &cfg(), 1).unwrap();
    assert_eq!(run.counts.iter().sum::<u64>(), 1);
    assert!(run.estimate.at_boundary);
    assert!(adaptive_two_stage(&ch, 0.2, 1000, &AdaptiveConfig::new(1000, 2), &cfg(), 1).is_err());
    assert!(adaptive_two_stage(&ch, 0.2, 1000, &AdaptiveConfig::new(0, 2), &cfg(), 1).is_err());
}

#[test]
fn adaptive_rotation_reaches_unit_information() {
    let ch = rotation(Axis::X, PureState::basis(2, 0));
    let cfg_a = AdaptiveConfig {
        search: Some((0.0, std::f64::consts::PI)),
        ..AdaptiveConfig::new(500, 2)
    };
    let run = adaptive_two_stage(&ch, 1.0, 10_000, &cfg_a, &cfg(), 3).unwrap();
    let f = fisher_information(&ch, &run.stage2_povm, 1.0, &cfg()).unwrap().value;
    assert!((f - 1.0).abs() < 1e-6, "{f}");
    let exp = adaptive_experiment(&ch, 1.0, 10_000, &cfg_a, 100, 8, &cfg()).unwrap();
    let ratio = exp.ratios.sld.unwrap();
    assert!((0.7..1.3).contains(&ratio), "{ratio}");
    assert_eq!(exp.shots, 9_500);
}

#[test]
fn cr_experiment_reports() {
    let ch = family("dephasing");
    let run = cr_experiment(&ch, 0.2, &Povm::plus_minus(), "plus-minus", 2000, 50, 11, &cfg()).unwrap();
    assert_eq!(run.estimates.len(), 50);
    assert!(run.counts.iter().all(|k| k.iter().sum::<u64>() == 2000));
    assert!(run.variance >= 0.0);
    assert!((run.floors.sld - 6.25).abs() < 1e-8 && (run.floors.sm - 6.25).abs() < 1e-8);
    assert!((run.floors.fisher.unwrap() - 6.25).abs() < 1e-8);
    let again = cr_experiment(&ch, 0.2, &Povm::plus_minus(), "plus-minus", 2000, 50, 11, &cfg()).unwrap();
    assert_eq!(run, again);

    let flat = cr_experiment(&ch, 0.2, &Povm::computational(2), "computational", 100, 5, 1, &cfg()).unwrap();
    assert!(flat.floors.fisher_floor.is_none() && flat.ratios.fisher.is_none());
    assert!(flat.warnings.iter().any(|w| w.contains("uninformative")));
}

#[test]
fn angles_give_unit_vectors() {
    for d in 1..5 {
        let x: Vec<f64> = (0..2 * d - 2).map(|i| 0.3 + 0.7 * i as f64).collect();
        let s = state_from_angles(d, &x);
        assert!((s.vector().norm() - 1.0).abs() < 1e-12);
        assert_eq!(s.dim(), d);
    }
    let s = state_from_angles(2, &[std::f64::consts::FRAC_PI_4, 0.0]);
    assert!((s.vector() - PureState::plus().vector()).norm() < 1e-12);
}

#[test]
fn rotation_input_optimum_is_on_the_equator() {
    let ch = rotation(Axis::Z, PureState::basis(2, 0));
    let opt = optimize_input_state(&ch, 0.4, Objective::Sld, 3, 1, &cfg()).unwrap();
    assert!((opt.value - 1.0).abs() < 1e-6, "{opt:?}");
    assert!((opt.state.vector()[0].norm_sqr() - 0.5).abs() < 1e-3);
    let opt = optimize_input_state(&ch, 0.4, Objective::Sm, 2, 1, &cfg()).unwrap();
    assert!((opt.value - 1.0).abs() < 1e-9);
}

#[test]
fn dephasing_input_optimum_beats_a_sphere_scan() {
    let ch = family("dephasing");
    let theta = 0.3;
    let opt = optimize_input_state(&ch, theta, Objective::Sld, 3, 2, &cfg()).unwrap();
    assert!((opt.value - 1.0 / (theta * (1.0 - theta))).abs() < 1e-6, "{opt:?}");
    let mut scan: f64 = 0.0;
    for i in 0..=60 {
        for j in 0..60 {
            let a = std::f64::consts::PI * i as f64 / 120.0;
            let b = std::f64::consts::TAU * j as f64 / 60.0;
            if let Ok(v) = evaluate(&ch, theta, Objective::Sld, state_from_angles(2, &[a, b]), &cfg()) {
                scan = scan.max(v);
            }
        }
    }
    assert!(opt.value >= scan - 1e-6);
}

#[test]
fn spectral_channels_cannot_be_optimized() {
    assert!(matches!(
        optimize_input_state(&family("example1"), 0.5, Objective::Sld, 1, 0, &cfg()),
        Err(QfiError::WrongForm { .. })
    ));
}

