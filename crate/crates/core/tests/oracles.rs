mod common;

use common::{close, fisher, pure_state_bounds, sld_info, sld_matrix as oracle_matrix};
use qfi_core::bounds::{fisher_information, multi_spectral_curve, sld_information, sm_bound_canonical, sm_bound_spectral, spectral_curve};
use qfi_core::channels::{builtin, Affine, Axis, FamilyOptions, ParametricChannel};
use qfi_core::linalg::DiffConfig;
use qfi_core::multi::{sld_matrix, sm_matrix};
use qfi_core::quantum::PureState;
use qfi_core::random::{random_povm, random_quasi_classical, random_state, random_stinespring};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

fn cfg() -> DiffConfig {
    DiffConfig::default()
}

fn family(name: &str) -> ParametricChannel {
    builtin(name, &FamilyOptions::default()).unwrap()
}

fn h(ch: &ParametricChannel, t: f64) -> f64 {
    sld_information(&spectral_curve(ch, t, &cfg()).unwrap()).unwrap()
}

#[test]
fn sld_information_matches_lyapunov_on_builtins() {
    for (name, thetas) in [
        ("dephasing", vec![0.1, 0.35, 0.5, 0.8]),
        ("amplitude-damping", vec![0.2, 0.5, 0.7]),
        ("depolarizing", vec![0.3, 0.9]),
        ("example1", vec![0.2, 0.4, 0.6, 0.8]),
    ] {
        let ch = family(name);
        for t in thetas {
            let (got, want) = (h(&ch, t), sld_info(&ch, t));
            assert!(close(got, want, 1e-6), "{name} at {t}: {got} vs {want}");
        }
    }
}

#[test]
fn example1_value_includes_the_kernel_term() {
    let ch = family("example1");
    for t in [0.2f64, 0.4, 0.6, 0.8] {
        let want = 4.0 * (1.0 + t * t) / (1.0 - t * t);
        assert!(close(sld_info(&ch, t), want, 1e-6));
        assert!(close(h(&ch, t), want, 1e-9));
    }
}

#[test]
fn sld_information_matches_lyapunov_on_random_channels() {
    let mut rng = ChaCha20Rng::seed_from_u64(41);
    for i in 0..12 {
        let ch = random_stinespring(&mut rng, 2 + i % 3, 1 + i % 4, 1).unwrap();
        let t = 0.1 * (i as f64) - 0.5;
        let (got, want) = (h(&ch, t), sld_info(&ch, t));
        assert!(close(got, want, 1e-6), "case {i}: {got} vs {want}");
    }
}

#[test]
fn fisher_matches_born_rule_oracle() {
    let mut rng = ChaCha20Rng::seed_from_u64(42);
    for i in 0..10 {
        let d = 2 + i % 3;
        let ch = random_stinespring(&mut rng, d, 2, 1).unwrap();
        let povm = random_povm(&mut rng, d, 3).unwrap();
        let t = 0.3 - 0.05 * i as f64;
        let got = fisher_information(&ch, &povm, t, &cfg()).unwrap().value;
        let want = fisher(&ch, povm.elements(), t);
        assert!(close(got, want, 1e-7), "case {i}: {got} vs {want}");
    }
}

#[test]
fn unitary_channels_match_pure_state_formulas() {
    let mut rng = ChaCha20Rng::seed_from_u64(43);
    let mut channels = Vec::new();
    for axis in [Axis::X, Axis::Y, Axis::Z] {
        let opts = FamilyOptions {
            axis: Some(axis),
            input_state: Some(random_state(&mut rng, 2)),
            ..Default::default()
        };
        channels.push(builtin("rotation", &opts).unwrap());
    }
    for d in 2..5 {
        channels.push(random_stinespring(&mut rng, d, 1, 1).unwrap());
    }
    for ch in &channels {
        for t in [-0.4, 0.25] {
            let (h_oracle, c_oracle) = pure_state_bounds(ch, t);
            let sc = spectral_curve(ch, t, &cfg()).unwrap();
            assert!(close(sld_information(&sc).unwrap(), h_oracle, 1e-7), "{}", ch.name());
            assert!(close(sm_bound_spectral(&sc), c_oracle, 1e-7), "{}", ch.name());
            assert!(close(sm_bound_canonical(ch, t, &cfg()).unwrap(), c_oracle, 1e-7));
        }
    }
}

#[test]
fn quasi_classical_channels_reach_the_bound() {
    let mut rng = ChaCha20Rng::seed_from_u64(44);
    for d in 2..5 {
        let ch = random_quasi_classical(&mut rng, d, d, 1).unwrap();
        let want = sld_info(&ch, 0.2);
        let sc = spectral_curve(&ch, 0.2, &cfg()).unwrap();
        assert!(close(sld_information(&sc).unwrap(), want, 1e-6));
        assert!(close(sm_bound_spectral(&sc), want, 1e-6));
    }
}

#[test]
fn sld_matrices_match_lyapunov() {
    let mut rng = ChaCha20Rng::seed_from_u64(45);
    let opts = FamilyOptions {
        f: Some(Affine([0.1, 0.5, 0.2])),
        g: Some(Affine([0.05, -0.2, 0.6])),
        ..Default::default()
    };
    let cases = vec![
        (family("damped-rotation"), vec![0.3, 0.8]),
        (family("dephasing2"), vec![0.4, 0.7]),
        (builtin("example2", &opts).unwrap(), vec![0.6, 0.3]),
        (random_stinespring(&mut rng, 3, 2, 2).unwrap(), vec![0.1, -0.2]),
        (random_stinespring(&mut rng, 2, 3, 2).unwrap(), vec![-0.3, 0.4]),
    ];
    for (ch, theta) in &cases {
        let msc = multi_spectral_curve(ch, theta, &cfg()).unwrap();
        let got = sld_matrix(&msc).unwrap();
        let want = oracle_matrix(ch, theta);
        for j in 0..2 {
            for k in 0..2 {
                assert!(close(got.entries[j][k], want[j][k], 1e-6), "{} ({j},{k})", ch.name());
            }
        }
    }
}

#[test]
fn unitary2_bound_at_origin() {
    // generators σ_x/2 and σ_y/2 on |0⟩: tr{G_j ρ₀ G_k} terms give C = I
    let ch = family("unitary2");
    let c = sm_matrix(&ch, &[0.0, 0.0], &cfg()).unwrap();
    let want = [[1.0, 0.0], [0.0, 1.0]];
    for j in 0..2 {
        for k in 0..2 {
            assert!((c.entries[j][k] - want[j][k]).abs() < 1e-8);
        }
    }
    let opts = FamilyOptions {
        input_state: Some(PureState::plus()),
        ..Default::default()
    };
    let plus = builtin("unitary2", &opts).unwrap();
    let c = sm_matrix(&plus, &[0.0, 0.0], &cfg()).unwrap();
    let h = sld_matrix(&multi_spectral_curve(&plus, &[0.0, 0.0], &cfg()).unwrap()).unwrap();
    let o = oracle_matrix(&plus, &[0.0, 0.0]);
    assert!((h.entries[1][1] - o[1][1]).abs() < 1e-7 && (h.entries[0][0] - o[0][0]).abs() < 1e-7);
    assert!(c.entries[0][0] >= h.entries[0][0] - 1e-9);
}
