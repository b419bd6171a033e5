//! Scalar information quantities of one-parameter channels.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::canonical::{canonical_kraus, expect_one_parameter};
use super::curve::SpectralCurve;
use crate::channels::{kraus_derivative, ParametricChannel};
use crate::error::{QfiError, Result};
use crate::linalg::{self, c, hermitian_eigendecompose, max_abs, outer, CMatrix, DiffConfig, CLUSTER_TOL};
use crate::quantum::{born_probabilities, DensityMatrix, KrausSet, Povm};

/// Outcomes with p_m at or below this are left out of Fisher sums.
pub const P_FLOOR: f64 = 1e-12;
/// A left-out outcome whose |p_m'| exceeds this makes the Fisher sum singular.
pub const DP_FLOOR: f64 = 1e-8;

/// SLD matrix elements ⟨w_j|λ̃|w_k⟩.
pub(crate) fn sld_in_eigenbasis(sc: &SpectralCurve) -> CMatrix {
    let d = sc.dim();
    let mut l = CMatrix::zeros(d, d);
    for j in 0..d {
        if sc.support_mask[j] {
            l[(j, j)] = c(sc.dp[j] / sc.p[j], 0.0);
        }
        for k in 0..d {
            let s = sc.p[j] + sc.p[k];
            if j != k && (sc.support_mask[j] || sc.support_mask[k]) {
                l[(j, k)] = sc.overlap(j, k) * (2.0 * (sc.p[j] - sc.p[k]) / s);
            }
        }
    }
    l
}

/// The particular SLD solution λ̃ with vanishing off-support block.
///
/// Errors if ½{ρ, λ̃} misses the curve's ρ' by more than 1e-6.
pub fn sld_score(sc: &SpectralCurve) -> Result<CMatrix> {
    let u = sc.basis();
    let l = &u * sld_in_eigenbasis(sc) * u.adjoint();
    let l = (&l + l.adjoint()).scale(0.5);
    let rho = sc.state();
    let resid = max_abs(&(sc.state_derivative() - (&rho * &l + &l * &rho).scale(0.5)));
    if !(resid < 1e-6) {
        return Err(QfiError::Consistency {
            what: "SLD equation residual",
            left: resid,
            right: 1e-6,
        });
    }
    Ok(l)
}

/// H = Σ p_k'²/p_k + Σ_{j<k} 4(p_j − p_k)²/(p_j + p_k)·|⟨w_j'|w_k⟩|²,
/// cross-checked against tr{ρλ̃²}.
pub fn sld_information(sc: &SpectralCurve) -> Result<f64> {
    let d = sc.dim();
    let mut h = 0.0;
    for j in 0..d {
        if sc.support_mask[j] {
            h += sc.dp[j] * sc.dp[j] / sc.p[j];
        }
        for k in (j + 1)..d {
            let s = sc.p[j] + sc.p[k];
            if sc.support_mask[j] || sc.support_mask[k] {
                let diff = sc.p[j] - sc.p[k];
                h += 4.0 * diff * diff / s * sc.overlap(j, k).norm_sqr();
            }
        }
    }
    let l = sld_in_eigenbasis(sc);
    let trace: f64 = (0..d)
        .map(|j| sc.p[j] * l.row(j).iter().map(|z| z.norm_sqr()).sum::<f64>())
        .sum();
    if (h - trace).abs() > 1e-8 * h.max(1.0) {
        return Err(QfiError::Consistency {
            what: "SLD information vs tr{rho lambda^2}",
            left: h,
            right: trace,
        });
    }
    Ok(h)
}

/// C_Υ = Σ p_k'²/p_k + Σ_{j<k} 4(p_j + p_k)|⟨w_j'|w_k⟩|² + 4Σ p_k|⟨w_k'|w_k⟩|².
pub fn sm_bound_spectral(sc: &SpectralCurve) -> f64 {
    let d = sc.dim();
    let mut total = 0.0;
    for j in (0..d).filter(|&j| sc.support_mask[j]) {
        total += sc.dp[j] * sc.dp[j] / sc.p[j];
        total += 4.0 * sc.p[j] * sc.overlap(j, j).norm_sqr();
    }
    for j in 0..d {
        for k in (j + 1)..d {
            if sc.support_mask[j] || sc.support_mask[k] {
                total += 4.0 * (sc.p[j] + sc.p[k]) * sc.overlap(j, k).norm_sqr();
            }
        }
    }
    total
}

/// C = 4 Σ_k tr{E_k' ρ₀ E_k'†} for any Kraus representation and input state.
pub fn sm_bound_kraus(ops: &KrausSet, derivs: &[CMatrix], rho0: &DensityMatrix) -> Result<f64> {
    if derivs.len() != ops.len() {
        return Err(QfiError::DimensionMismatch {
            expected: ops.len(),
            actual: derivs.len(),
        });
    }
    if ops.dim() != rho0.dim() {
        return Err(QfiError::DimensionMismatch {
            expected: ops.dim(),
            actual: rho0.dim(),
        });
    }
    Ok(4.0
        * derivs
            .iter()
            .map(|e| linalg::trace(&(e * rho0.matrix() * e.adjoint())).re)
            .sum::<f64>())
}

/// C_E of the channel's own Kraus operators at θ.
pub fn sm_bound_raw(ch: &ParametricChannel, theta: f64, cfg: &DiffConfig) -> Result<f64> {
    expect_one_parameter(ch)?;
    let ops = ch.kraus_at(&[theta])?;
    let derivs = kraus_derivative(ch, &[theta], 0, cfg)?;
    sm_bound_kraus(&ops, &derivs, &DensityMatrix::from(ch.pure_input()?))
}

/// C_Υ evaluated on the canonical Kraus operators.
pub fn sm_bound_canonical(ch: &ParametricChannel, theta: f64, cfg: &DiffConfig) -> Result<f64> {
    let ck = canonical_kraus(ch, theta, cfg)?;
    sm_bound_kraus(&ck.ops, ck.derivs(), &DensityMatrix::from(ch.pure_input()?))
}

/// C_Υ − H = 8 Σ_{j,k supported} p_j p_k/(p_j + p_k)·|⟨w_j'|w_k⟩|², checked
/// against the difference of the two closed forms.
pub fn bound_gap(sc: &SpectralCurve) -> Result<f64> {
    let d = sc.dim();
    let mut gap = 0.0;
    for j in (0..d).filter(|&j| sc.support_mask[j]) {
        for k in (0..d).filter(|&k| sc.support_mask[k]) {
            gap += 8.0 * sc.p[j] * sc.p[k] / (sc.p[j] + sc.p[k]) * sc.overlap(j, k).norm_sqr();
        }
    }
    let cu = sm_bound_spectral(sc);
    let h = sld_information(sc)?;
    if ((cu - h) - gap).abs() > 1e-8 * cu.max(1.0) {
        return Err(QfiError::Consistency {
            what: "bound gap vs C_upsilon - H",
            left: gap,
            right: cu - h,
        });
    }
    Ok(gap)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Attainability {
    pub attainable: bool,
    pub residual: f64,
    pub tol: f64,
}

/// H = C_Υ holds iff ⟨w_j'|w_k⟩ = 0 for all supported j, k.
pub fn attainability_check(sc: &SpectralCurve, tol: f64) -> Attainability {
    let d = sc.dim();
    let mut residual: f64 = 0.0;
    for j in (0..d).filter(|&j| sc.support_mask[j]) {
        for k in (0..d).filter(|&k| sc.support_mask[k]) {
            residual = residual.max(sc.overlap(j, k).norm());
        }
    }
    Attainability {
        attainable: residual < tol,
        residual,
        tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitaryCondition {
    /// tr{U ρ₀ U'†}
    pub value: Complex64,
    pub attainable: bool,
    pub tol: f64,
}

/// For a unitary channel, H = C_Υ iff tr{U ρ₀ U'†} = 0.
pub fn unitary_attainability(
    ch: &ParametricChannel,
    theta: f64,
    cfg: &DiffConfig,
    tol: f64,
) -> Result<UnitaryCondition> {
    expect_one_parameter(ch)?;
    let ops = ch.kraus_at(&[theta])?;
    if ops.len() != 1 {
        return Err(QfiError::WrongForm {
            required: "single-Kraus-operator (unitary)",
        });
    }
    let u = &ops.operators()[0];
    let du = &kraus_derivative(ch, &[theta], 0, cfg)?[0];
    let rho0 = DensityMatrix::from(ch.pure_input()?);
    let value = linalg::trace(&(u * rho0.matrix() * du.adjoint()));
    Ok(UnitaryCondition {
        value,
        attainable: value.norm() < tol,
        tol,
    })
}

/// Projectors onto the eigenspaces of λ̃; eigenvalues closer than 1e-8
/// (relative to ‖λ̃‖) share one element.
pub fn optimal_povm_from_sld(lambda: &CMatrix) -> Result<Povm> {
    let es = hermitian_eigendecompose(lambda)?;
    let tol = CLUSTER_TOL * max_abs(lambda).max(1.0);
    let elements = es
        .clusters(tol)
        .into_iter()
        .map(|r| {
            r.map(|k| {
                let v = es.vector(k);
                outer(&v, &v)
            })
            .fold(CMatrix::zeros(es.dim(), es.dim()), |acc, p| acc + p)
        })
        .collect();
    Povm::new(elements)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherInfo {
    pub value: f64,
    /// Outcomes skipped because both p_m and p_m' were negligible.
    pub dropped: Vec<usize>,
}

/// F_{jk} = Σ_m ∂_j p_m ∂_k p_m / p_m with the support floors applied.
/// `dp[l][m]` = ∂p_m/∂θ^l.
pub(crate) fn fisher_sum(p: &[f64], dp: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let n = dp.len();
    let mut f = vec![vec![0.0; n]; n];
    let mut dropped = Vec::new();
    for (m, &pm) in p.iter().enumerate() {
        if !(pm > P_FLOOR) {
            let worst = dp.iter().map(|d| d[m].abs()).fold(0.0, |a: f64, b| if b.is_nan() { b } else { a.max(b) });
            if !(worst <= DP_FLOOR) {
                return Err(QfiError::SingularFisher {
                    outcome: m,
                    probability: pm,
                    derivative: worst,
                });
            }
            dropped.push(m);
            continue;
        }
        for j in 0..n {
            for k in 0..n {
                f[j][k] += dp[j][m] * dp[k][m] / pm;
            }
        }
    }
    Ok((f, dropped))
}

pub(crate) fn outcome_probabilities(
    ch: &ParametricChannel,
    povm: &Povm,
    theta: &[f64],
    cfg: &DiffConfig,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if povm.dim() != ch.dim() {
        return Err(QfiError::DimensionMismatch {
            expected: ch.dim(),
            actual: povm.dim(),
        });
    }
    let rho = ch.output_state(theta)?;
    let p = born_probabilities(rho.matrix(), povm);
    let dp = (0..ch.param_count())
        .map(|l| Ok(born_probabilities(&ch.output_derivative(theta, l, cfg)?, povm)))
        .collect::<Result<_>>()?;
    Ok((p, dp))
}

/// Classical Fisher information of measuring `povm` on ρ(θ).
pub fn fisher_information(ch: &ParametricChannel, povm: &Povm, theta: f64, cfg: &DiffConfig) -> Result<FisherInfo> {
    expect_one_parameter(ch)?;
    let (p, dp) = outcome_probabilities(ch, povm, &[theta], cfg)?;
    let (f, dropped) = fisher_sum(&p, &dp)?;
    Ok(FisherInfo {
        value: f[0][0],
        dropped,
    })
}

/// 4Σ_{jk} p_k |u'_jk|²: the excess of C_E over C_Υ for Kraus operators
/// E_j = Σ_k u_jk Υ_k of a channel satisfying the attainability condition.
pub fn remix_penalty(weights: &[f64], du: &CMatrix) -> f64 {
    let mut total = 0.0;
    for j in 0..du.nrows() {
        for (k, &p) in weights.iter().enumerate().take(du.ncols()) {
            total += p * du[(j, k)].norm_sqr();
        }
    }
    4.0 * total
}
