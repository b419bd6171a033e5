//! One-parameter bounds: canonical Kraus operators, spectral curves, the SLD,
//! H(θ), C_Υ(θ), C_E(θ), their gap, attainability and optimal POVMs.

mod canonical;
mod conditions;
mod curve;
mod info;

use serde::{Deserialize, Serialize};

pub use canonical::{canonical_kraus, CanonicalKraus, SUPPORT_TOL};
pub use conditions::{
    povm_sld_condition_check, povm_sm_condition_check, ElementCondition, SldCondition, SmCondition,
    UNATTAINABLE_NOTE,
};
pub use curve::{multi_spectral_curve, spectral_curve, GaugeSource, MultiSpectralCurve, SpectralCurve};
pub use info::{
    attainability_check, bound_gap, fisher_information, optimal_povm_from_sld, remix_penalty, sld_information,
    sld_score, sm_bound_canonical, sm_bound_kraus, sm_bound_raw, sm_bound_spectral, unitary_attainability,
    Attainability, FisherInfo, UnitaryCondition, DP_FLOOR, P_FLOOR,
};

pub(crate) use canonical::{canonical_partials, expect_one_parameter};
pub(crate) use info::{fisher_sum, outcome_probabilities, sld_in_eigenbasis};

use crate::channels::ParametricChannel;
use crate::error::Result;
use crate::linalg::DiffConfig;
use crate::quantum::{DensityMatrix, Povm};

pub const GAUGE_NOTE: &str = "eigenvector phases follow the canonical Kraus operators, aligned across the \
     finite-difference stencil by maximal overlap";
pub const DEGENERACY_NOTE: &str = "degenerate output eigenvalues at this point; the eigenbasis was fixed \
     by the derivative of the Gram matrix";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theta: f64,
    /// Fisher information of the supplied POVM.
    pub fisher: Option<f64>,
    /// Fisher information of the SLD-eigenbasis POVM.
    pub optimal_fisher: Option<f64>,
    pub sld_information: f64,
    pub c_upsilon: f64,
    /// C_E of the channel's own Kraus operators.
    pub c_e: Option<f64>,
    pub gap: f64,
    pub attainable: Attainability,
    /// |C_Υ(spectral) − C_Υ(canonical Kraus)|
    pub method_cross_check: Option<f64>,
    pub unitary_condition: Option<UnitaryCondition>,
    pub sld_condition: Option<SldCondition>,
    pub sm_condition: Option<SmCondition>,
    pub gauge_source: GaugeSource,
    pub warnings: Vec<String>,
}

/// Every one-parameter quantity at θ in one pass.
pub fn bound_report(
    ch: &ParametricChannel,
    theta: f64,
    povm: Option<&Povm>,
    cfg: &DiffConfig,
    tol: f64,
) -> Result<BoundReport> {
    expect_one_parameter(ch)?;
    let sc = spectral_curve(ch, theta, cfg)?;
    let h = sld_information(&sc)?;
    let cu = sm_bound_spectral(&sc);
    let gap = bound_gap(&sc)?;
    let attainable = attainability_check(&sc, tol);
    let lambda = sld_score(&sc)?;
    let mut warnings = Vec::new();
    if sc.gauge_source == GaugeSource::CanonicalKraus {
        warnings.push(GAUGE_NOTE.to_string());
    }
    if sc.resolved_degeneracy {
        warnings.push(DEGENERACY_NOTE.to_string());
    }
    if !attainable.attainable {
        warnings.push(UNATTAINABLE_NOTE.to_string());
    }

    let mut fisher_of = |m: &Povm, label: &str| match fisher_information(ch, m, theta, cfg) {
        Ok(f) => {
            if !f.dropped.is_empty() {
                warnings.push(format!("{label}: outcomes {:?} dropped from the Fisher sum", f.dropped));
            }
            Some(f.value)
        }
        Err(e) => {
            warnings.push(format!("{label}: {e}"));
            None
        }
    };
    let optimal = optimal_povm_from_sld(&lambda)?;
    let optimal_fisher = fisher_of(&optimal, "SLD-eigenbasis POVM");
    let fisher = povm.and_then(|m| fisher_of(m, "supplied POVM"));

    let rho = DensityMatrix::new(sc.state())?;
    let sld_condition = povm.map(|m| povm_sld_condition_check(m, &lambda, &rho, tol)).transpose()?;

    let (mut c_e, mut cross, mut unitary, mut sm_condition) = (None, None, None, None);
    if ch.is_kraus() {
        let ck = canonical_kraus(ch, theta, cfg)?;
        let rho0 = DensityMatrix::from(ch.pure_input()?);
        let c_canon = sm_bound_kraus(&ck.ops, ck.derivs(), &rho0)?;
        cross = Some((cu - c_canon).abs());
        c_e = Some(sm_bound_raw(ch, theta, cfg)?);
        if ch.kraus_at(&[theta])?.len() == 1 {
            unitary = Some(unitary_attainability(ch, theta, cfg, tol)?);
        }
        if let Some(m) = povm {
            let mut cond = povm_sm_condition_check(m, &ck.ops, ck.derivs(), &rho0, tol)?;
            if !attainable.attainable {
                cond.note = Some(UNATTAINABLE_NOTE.to_string());
            }
            sm_condition = Some(cond);
        }
    }

    Ok(BoundReport {
        theta,
        fisher,
        optimal_fisher,
        sld_information: h,
        c_upsilon: cu,
        c_e,
        gap,
        attainable,
        method_cross_check: cross,
        unitary_condition: unitary,
        sld_condition,
        sm_condition,
        gauge_source: sc.gauge_source,
        warnings,
    })
}
