//! POVM optimality conditions.

use serde::{Deserialize, Serialize};

use crate::error::{QfiError, Result};
use crate::linalg::{psd_sqrt, trace, CMatrix};
use crate::quantum::{DensityMatrix, KrausSet, Povm};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ElementCondition {
    pub xi: f64,
    pub residual: f64,
    /// M_m^{1/2} ρ^{1/2} vanishes, so the element constrains nothing.
    pub vacuous: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SldCondition {
    pub elements: Vec<ElementCondition>,
    pub satisfied: bool,
    pub tol: f64,
}

fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real ξ minimizing Σ_i ‖A_i − ξ B_i‖ over a stack of pairs, plus the
/// imaginary part of Σ tr{B_i†A_i} relative to Σ tr{B_i†B_i}.
fn fit_real_multiplier(a: &[CMatrix], b: &[CMatrix]) -> (f64, f64, f64) {
    let mut ba = num_complex::Complex64::new(0.0, 0.0);
    let mut bb = 0.0;
    for (x, y) in a.iter().zip(b) {
        ba += trace(&(y.adjoint() * x));
        bb += frobenius(y).powi(2);
    }
    if bb == 0.0 {
        return (0.0, 0.0, 0.0);
    }
    (ba.re / bb, ba.im.abs() / bb, bb)
}

fn check_dims(povm: &Povm, d: usize) -> Result<()> {
    if povm.dim() != d {
        return Err(QfiError::DimensionMismatch {
            expected: d,
            actual: povm.dim(),
        });
    }
    Ok(())
}

/// Tests M_m^{1/2} λ̃ ρ^{1/2} = ξ_m M_m^{1/2} ρ^{1/2} with real ξ_m for every
/// element m.
pub fn povm_sld_condition_check(povm: &Povm, lambda: &CMatrix, rho: &DensityMatrix, tol: f64) -> Result<SldCondition> {
    check_dims(povm, rho.dim())?;
    let sqrt_rho = psd_sqrt(rho.matrix())?;
    let mut elements = Vec::with_capacity(povm.len());
    for m in povm.elements() {
        let sm = psd_sqrt(m)?;
        let b = &sm * &sqrt_rho;
        let a = &sm * lambda * &sqrt_rho;
        if frobenius(&b) < tol {
            elements.push(ElementCondition {
                xi: 0.0,
                residual: 0.0,
                vacuous: true,
            });
            continue;
        }
        let (xi, imag, _) = fit_real_multiplier(std::slice::from_ref(&a), std::slice::from_ref(&b));
        elements.push(ElementCondition {
            xi,
            residual: frobenius(&(a - b.scale(xi))) + imag,
            vacuous: false,
        });
    }
    let satisfied = elements.iter().all(|e| e.residual < tol);
    Ok(SldCondition {
        elements,
        satisfied,
        tol,
    })
}

/// Attached to Kraus-form condition results when the channel does not
/// satisfy the attainability condition.
pub const UNATTAINABLE_NOTE: &str = "no POVM can satisfy the Kraus-form optimality condition on this channel \
     because C_upsilon > H here; the condition cannot be used to test for optimal POVMs, and the SLD \
     eigenbasis POVM reaches H instead";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmCondition {
    /// One real multiplier per POVM element, shared by every Kraus index.
    pub xi: Vec<f64>,
    /// `residuals[m][k]`
    pub residuals: Vec<Vec<f64>>,
    pub satisfied: bool,
    pub tol: f64,
    pub note: Option<String>,
}

/// Tests M_m^{1/2} Υ_k' ρ₀^{1/2} = ξ_m M_m^{1/2} Υ_k ρ₀^{1/2} for all m, k with
/// one real ξ_m per element, fitted by least squares over k.
pub fn povm_sm_condition_check(
    povm: &Povm,
    ops: &KrausSet,
    derivs: &[CMatrix],
    rho0: &DensityMatrix,
    tol: f64,
) -> Result<SmCondition> {
    check_dims(povm, rho0.dim())?;
    if derivs.len() != ops.len() {
        return Err(QfiError::DimensionMismatch {
            expected: ops.len(),
            actual: derivs.len(),
        });
    }
    let sqrt_rho = psd_sqrt(rho0.matrix())?;
    let mut xis = Vec::with_capacity(povm.len());
    let mut residuals = Vec::with_capacity(povm.len());
    for m in povm.elements() {
        let sm = psd_sqrt(m)?;
        let a: Vec<CMatrix> = derivs.iter().map(|d| &sm * d * &sqrt_rho).collect();
        let b: Vec<CMatrix> = ops.operators().iter().map(|e| &sm * e * &sqrt_rho).collect();
        let (xi, _, bb) = fit_real_multiplier(&a, &b);
        let row = a
            .iter()
            .zip(&b)
            .map(|(x, y)| {
                let imag = if bb > 0.0 {
                    trace(&(y.adjoint() * x)).im.abs() / bb
                } else {
                    0.0
                };
                frobenius(&(x - y.scale(xi))) + imag
            })
            .collect();
        xis.push(xi);
        residuals.push(row);
    }
    let satisfied = residuals.iter().flatten().all(|&r| r < tol);
    Ok(SmCondition {
        xi: xis,
        residuals,
        satisfied,
        tol,
        note: None,
    })
}
