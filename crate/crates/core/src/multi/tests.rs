use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::bounds::{fisher_information, sm_bound_spectral};
use crate::channels::{builtin, Affine, FamilyOptions};
use crate::random::{random_povm, random_quasi_classical, random_stinespring};

fn cfg() -> DiffConfig {
    DiffConfig::default()
}

fn family(name: &str) -> ParametricChannel {
    builtin(name, &FamilyOptions::default()).unwrap()
}

fn entry_diff(a: &InfoMatrix, b: &[[f64; 2]; 2]) -> f64 {
    (0..2)
        .flat_map(|j| (0..2).map(move |k| (j, k)))
        .map(|(j, k)| (a.entries[j][k] - b[j][k]).abs())
        .fold(0.0, f64::max)
}

#[test]
fn info_matrix_rejects_asymmetry() {
    assert!(InfoMatrix::new(vec![vec![1.0, 0.5], vec![0.4, 1.0]], InfoKind::Sld).is_err());
    let m = InfoMatrix::new(vec![vec![2.0, 1.0], vec![1.0, 2.0]], InfoKind::Sld).unwrap();
    assert!((m.min_eigenvalue() - 1.0).abs() < 1e-12);
    assert!((m.quadratic(&[1.0, -1.0]) - 2.0).abs() < 1e-12);
}

#[test]
fn dephasing2_fisher_is_rank_one() {
    let ch = family("dephasing2");
    let (a, b) = (0.5, 0.6);
    let q = a * b;
    let f = fisher_matrix(&ch, &Povm::plus_minus(), &[a, b], &cfg()).unwrap();
    let s = q * (1.0 - q);
    let want = [[b * b / s, a * b / s], [a * b / s, a * a / s]];
    assert!(entry_diff(&f.matrix, &want) < 1e-9);
    assert!(f.matrix.min_eigenvalue().abs() < 1e-9);
}

#[test]
fn constant_probabilities_give_zero_fisher() {
    let ch = family("dephasing2");
    let f = fisher_matrix(&ch, &Povm::computational(2), &[0.3, 0.7], &cfg()).unwrap();
    assert!(f.matrix.max_abs() < 1e-12);
}

#[test]
fn one_parameter_reductions() {
    let ch = family("amplitude-damping");
    let t = 0.4;
    let msc = multi_spectral_curve(&ch, &[t], &cfg()).unwrap();
    let sc = spectral_curve(&ch, t, &cfg()).unwrap();
    let h = sld_matrix(&msc).unwrap();
    assert!((h.entries[0][0] - sld_information(&sc).unwrap()).abs() < 1e-10);
    let c = sm_matrix(&ch, &[t], &cfg()).unwrap();
    assert!((c.entries[0][0] - sm_bound_spectral(&sc)).abs() < 1e-8);
    let m = Povm::computational(2);
    let f = fisher_matrix(&ch, &m, &[t], &cfg()).unwrap();
    assert!((f.matrix.entries[0][0] - fisher_information(&ch, &m, t, &cfg()).unwrap().value).abs() < 1e-12);
}

#[test]
fn example2_equality() {
    // f = θ¹, g = θ²: eigenvalues move with θ¹ only, the eigenvector with θ²
    let ch = family("example2");
    let th = [0.6, 0.3];
    let msc = multi_spectral_curve(&ch, &th, &cfg()).unwrap();
    let h = sld_matrix(&msc).unwrap();
    let c = sm_matrix(&ch, &th, &cfg()).unwrap();
    let h22 = 4.0 * 0.36 / (1.0 - 0.09);
    assert!(entry_diff(&h, &[[6.25, 0.0], [0.0, h22]]) < 1e-10);
    assert!(entry_diff(&c, &[[6.25, 0.0], [0.0, h22]]) < 1e-10);
    let a = multi_attainability_check(&msc, 1e-9);
    assert!(a.attainable && a.residual < 1e-10 && !a.quasi_classical && !a.full_support);
}

#[test]
fn example2_with_affine_maps() {
    let opts = FamilyOptions {
        f: Some(Affine([0.2, 0.3, 0.1])),
        g: Some(Affine([0.1, 0.2, 0.4])),
        ..Default::default()
    };
    let ch = builtin("example2", &opts).unwrap();
    let th = [0.5, 0.4];
    let msc = multi_spectral_curve(&ch, &th, &cfg()).unwrap();
    let h = sld_matrix(&msc).unwrap();
    let c = sm_matrix(&ch, &th, &cfg()).unwrap();
    let diff = (h.matrix() - c.matrix()).abs().max();
    assert!(diff < 1e-10, "{diff}");
    assert!(h.entries[0][1].abs() > 1e-3);
}

#[test]
fn unitary_pair_at_origin() {
    // generators σ_x/2, σ_y/2 on |0⟩: C = 4 Re tr{G_j ρ₀ G_k} = identity
    let ch = family("unitary2");
    let c = sm_matrix(&ch, &[0.0, 0.0], &cfg()).unwrap();
    assert!(entry_diff(&c, &[[1.0, 0.0], [0.0, 1.0]]) < 1e-9);
    let msc = multi_spectral_curve(&ch, &[0.0, 0.0], &cfg()).unwrap();
    let h = sld_matrix(&msc).unwrap();
    // ⟨G⟩ = 0 on |0⟩, so the pure-state H coincides with C
    assert!(entry_diff(&h, &[[1.0, 0.0], [0.0, 1.0]]) < 1e-8);
    let a = multi_attainability_check(&msc, 1e-6);
    assert!(a.pure_output && a.attainable);
}

#[test]
fn damped_rotation_is_not_attainable() {
    let ch = family("damped-rotation");
    let msc = multi_spectral_curve(&ch, &[0.4, 0.7], &cfg()).unwrap();
    let a = multi_attainability_check(&msc, 1e-6);
    assert!(!a.attainable && a.residual > 1e-3);
    let h = sld_matrix(&msc).unwrap();
    let c = sm_matrix(&ch, &[0.4, 0.7], &cfg()).unwrap();
    let r = loewner_report(None, &h, &c, LOEWNER_TOL).unwrap();
    assert!(r.sld_le_sm.holds && r.sld_le_sm.min_eigenvalue.abs() < 1e3);
    assert!((c.matrix() - h.matrix()).abs().max() > 1e-3);
}

#[test]
fn quasi_classical_sld_is_classical() {
    let mut rng = ChaCha20Rng::seed_from_u64(11);
    for _ in 0..5 {
        let ch = random_quasi_classical(&mut rng, 3, 3, 2).unwrap();
        let th = [0.2, -0.3];
        let msc = multi_spectral_curve(&ch, &th, &cfg()).unwrap();
        let h = sld_matrix(&msc).unwrap();
        let mut want = [[0.0; 2]; 2];
        for k in (0..msc.dim()).filter(|&k| msc.support_mask[k]) {
            for j in 0..2 {
                for l in 0..2 {
                    want[j][l] += msc.dp[j][k] * msc.dp[l][k] / msc.p[k];
                }
            }
        }
        assert!(entry_diff(&h, &want) < 1e-8 * (1.0 + h.max_abs()));
        let a = multi_attainability_check(&msc, 1e-6);
        assert!(a.attainable && a.quasi_classical, "{a:?}");
        let c = sm_matrix(&ch, &th, &cfg()).unwrap();
        assert!((c.matrix() - h.matrix()).abs().max() < 1e-6 * (1.0 + c.max_abs()));
        // the eigenbasis POVM meets the condition with per-parameter multipliers
        let basis = Povm::new(msc.w.iter().map(|w| crate::linalg::outer(w, w)).collect()).unwrap();
        let rho = DensityMatrix::new(msc.slice(0).state()).unwrap();
        let cond = povm_multi_sld_condition_check(&basis, &sld_scores(&msc).unwrap(), &rho, 1e-6).unwrap();
        assert!(cond.satisfied, "{cond:?}");
        let f = fisher_matrix(&ch, &basis, &th, &cfg()).unwrap();
        assert!((f.matrix.matrix() - h.matrix()).abs().max() < 1e-6 * (1.0 + h.max_abs()));
    }
}

#[test]
fn zero_fisher_is_below_everything() {
    let ch = family("dephasing2");
    let th = [0.5, 0.6];
    let msc = multi_spectral_curve(&ch, &th, &cfg()).unwrap();
    let h = sld_matrix(&msc).unwrap();
    let c = sm_matrix(&ch, &th, &cfg()).unwrap();
    let f = fisher_matrix(&ch, &Povm::computational(2), &th, &cfg()).unwrap().matrix;
    let r = loewner_report(Some(&f), &h, &c, LOEWNER_TOL).unwrap();
    assert!(r.fisher_le_sld.unwrap().holds && r.fisher_le_sm.unwrap().holds && r.sld_le_sm.holds);
}

#[test]
fn loewner_dimension_mismatch() {
    let a = InfoMatrix::new(vec![vec![1.0]], InfoKind::Sld).unwrap();
    let b = InfoMatrix::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]], InfoKind::Sm).unwrap();
    assert!(matches!(loewner_report(None, &a, &b, LOEWNER_TOL), Err(QfiError::DimensionMismatch { .. })));
}

#[test]
fn random_channels_are_ordered() {
    let mut rng = ChaCha20Rng::seed_from_u64(5);
    for _ in 0..6 {
        let ch = random_stinespring(&mut rng, 2, 2, 2).unwrap();
        let th = [0.1, -0.2];
        let msc = multi_spectral_curve(&ch, &th, &cfg()).unwrap();
        let h = sld_matrix(&msc).unwrap();
        let c = sm_matrix(&ch, &th, &cfg()).unwrap();
        let povm = random_povm(&mut rng, 2, 3).unwrap();
        let f = fisher_matrix(&ch, &povm, &th, &cfg()).unwrap().matrix;
        let r = loewner_report(Some(&f), &h, &c, LOEWNER_TOL).unwrap();
        assert!(r.fisher_le_sld.unwrap().holds && r.sld_le_sm.holds && r.fisher_le_sm.unwrap().holds, "{r:?}");
        let sc = spectral_curve(&ch, 0.0, &cfg());
        assert!(sc.is_err(), "two-parameter channels are not one-parameter curves");
    }
}

#[test]
fn cramer_rao_pseudo_inverse() {
    let h = InfoMatrix::new(vec![vec![6.25, 0.0], vec![0.0, 0.0]], InfoKind::Sld).unwrap();
    let cr = cramer_rao(&h, 10).unwrap();
    assert_eq!(cr.rank, 1);
    assert!(!cr.full_rank);
    assert!((cr.covariance_bound[0][0] - 0.016).abs() < 1e-12 && cr.covariance_bound[1][1] == 0.0);
    let h = InfoMatrix::new(vec![vec![2.0, 1.0], vec![1.0, 2.0]], InfoKind::Sld).unwrap();
    let cr = cramer_rao(&h, 1).unwrap();
    assert!(cr.full_rank);
    let want = [[2.0 / 3.0, -1.0 / 3.0], [-1.0 / 3.0, 2.0 / 3.0]];
    assert!((0..2).all(|j| (0..2).all(|k| (cr.covariance_bound[j][k] - want[j][k]).abs() < 1e-12)));
    assert!(cramer_rao(&h, 0).is_err());
}

#[test]
fn axis_direction_recovers_the_slice() {
    let ch = family("damped-rotation");
    let th = [0.4, 0.7];
    let r = directional_reduction_check(&ch, &th, &[1.0, 0.0], &cfg()).unwrap();
    assert!(r.consistent, "{r:?}");
    assert!(r.kraus_mismatch.unwrap() < 1e-8);
    let r = directional_reduction_check(&ch, &th, &[0.0, 1.0], &cfg()).unwrap();
    assert!(r.consistent, "{r:?}");
}

#[test]
fn example2_diagonal_direction() {
    let ch = family("example2");
    let s = 0.5f64.sqrt();
    let r = directional_reduction_check(&ch, &[0.6, 0.3], &[s, s], &cfg()).unwrap();
    assert!(r.consistent && r.kraus_mismatch.is_none(), "{r:?}");
    assert!((r.h_quadratic - r.c_quadratic).abs() < 1e-9);
}

#[test]
fn slice_domain_and_direction_checks() {
    let ch = family("dephasing2");
    let slice = directional_slice(&ch, &[0.5, 0.5], &[1.0, -0.5]).unwrap();
    assert_eq!(slice.domain(), &[(-0.5, 0.5)]);
    assert!(directional_slice(&ch, &[0.5, 0.5], &[0.0, 0.0]).is_err());
    assert!(directional_slice(&ch, &[0.5], &[1.0, 0.0]).is_err());
    assert!(directional_slice(&ch, &[1.5, 0.5], &[1.0, 0.0]).is_err());
}

#[test]
fn random_quasi_classical_directions() {
    let mut rng = ChaCha20Rng::seed_from_u64(21);
    let ch = random_quasi_classical(&mut rng, 3, 3, 2).unwrap();
    for i in 0..10 {
        let a = i as f64 * 0.6;
        let v = [a.cos(), a.sin()];
        let r = directional_reduction_check(&ch, &[0.1, 0.2], &v, &cfg()).unwrap();
        assert!(r.consistent, "{r:?}");
    }
}
