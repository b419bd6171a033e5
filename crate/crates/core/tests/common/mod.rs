//! Reference computations that share no code with the library: density
//! matrices are rebuilt from Kraus operators, derivatives are plain central
//! differences, and the SLD comes from a vectorized Lyapunov solve.

#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;
use qfi_core::channels::ParametricChannel;

pub type M = DMatrix<Complex64>;

pub const H_STEP: f64 = 1e-4;

/// ρ(θ) = Σ_k E_k |ψ⟩⟨ψ| E_k† straight from the Kraus operators.
pub fn rho(ch: &ParametricChannel, theta: &[f64]) -> M {
    match ch.kraus_at(theta) {
        Ok(ops) => {
            let psi = ch.input_state().unwrap().vector().clone();
            let mut out = M::zeros(psi.len(), psi.len());
            for e in ops.operators() {
                let v = e * &psi;
                out += &v * v.adjoint();
            }
            out
        }
        Err(_) => ch.output_state(theta).unwrap().matrix().clone(),
    }
}

/// Fourth-order central difference of ρ along axis `l`.
pub fn drho(ch: &ParametricChannel, theta: &[f64], l: usize) -> M {
    let at = |s: f64| {
        let mut t = theta.to_vec();
        t[l] += s * H_STEP;
        rho(ch, &t)
    };
    (at(-2.0) - at(-1.0).scale(8.0) + at(1.0).scale(8.0) - at(2.0)).unscale(12.0 * H_STEP)
}

/// Minimal-norm solution L of ρ' = ½(ρL + Lρ), via the d²×d² linear system.
pub fn lyapunov_sld(rho: &M, drho: &M) -> M {
    let d = rho.nrows();
    let id = M::identity(d, d);
    let a = (id.kronecker(rho) + rho.transpose().kronecker(&id)).scale(0.5);
    let b = DMatrix::from_column_slice(d * d, 1, drho.as_slice());
    let pinv = a.pseudo_inverse(1e-12).unwrap();
    let x = pinv * b;
    let l = M::from_column_slice(d, d, x.as_slice());
    (&l + l.adjoint()).scale(0.5)
}

/// H = tr{ρL²} for the Lyapunov SLD of the finite-differenced state.
pub fn sld_info(ch: &ParametricChannel, theta: f64) -> f64 {
    let r = rho(ch, &[theta]);
    let l = lyapunov_sld(&r, &drho(ch, &[theta], 0));
    (&r * &l * &l).trace().re
}

/// H_jk = Re tr{ρ L_j L_k}.
pub fn sld_matrix(ch: &ParametricChannel, theta: &[f64]) -> Vec<Vec<f64>> {
    let r = rho(ch, theta);
    let ls: Vec<M> = (0..theta.len()).map(|l| lyapunov_sld(&r, &drho(ch, theta, l))).collect();
    ls.iter()
        .map(|a| ls.iter().map(|b| (&r * a * b).trace().re).collect())
        .collect()
}

/// Classical Fisher information of Born probabilities tr{ρ M_m}.
pub fn fisher(ch: &ParametricChannel, povm: &[M], theta: f64) -> f64 {
    let r = rho(ch, &[theta]);
    let dr = drho(ch, &[theta], 0);
    povm.iter()
        .map(|m| {
            let p = (&r * m).trace().re;
            let dp = (&dr * m).trace().re;
            if p > 1e-12 {
                dp * dp / p
            } else {
                0.0
            }
        })
        .sum()
}

/// 4(⟨ψ'|ψ'⟩ − |⟨ψ|ψ'⟩|²), and 4‖(U' − tr{U†U'}/d·U)ψ₀‖² for a unitary
/// channel: the bound in the phase convention where tr{U†U'} = 0.
pub fn pure_state_bounds(ch: &ParametricChannel, theta: f64) -> (f64, f64) {
    let u = |s: f64| ch.kraus_at(&[theta + s * H_STEP]).unwrap().operators()[0].clone();
    let u0 = u(0.0);
    let du = (u(-2.0) - u(-1.0).scale(8.0) + u(1.0).scale(8.0) - u(2.0)).unscale(12.0 * H_STEP);
    let psi0 = ch.input_state().unwrap().vector().clone();
    let psi = &u0 * &psi0;
    let dpsi = &du * &psi0;
    let h = 4.0 * (dpsi.norm_squared() - psi.dotc(&dpsi).norm_sqr());
    let phase = (u0.adjoint() * &du).trace() / Complex64::new(u0.nrows() as f64, 0.0);
    let c = 4.0 * (&dpsi - &psi * phase).norm_squared();
    (h, c)
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}
