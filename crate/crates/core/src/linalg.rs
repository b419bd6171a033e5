//! Dense complex linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra` dynamic matrices over `Complex64`. On top of the
//! raw Hermitian eigensolver this module fixes a deterministic output
//! convention (ascending eigenvalues, phase-normalized eigenvectors, stable
//! ordering inside degenerate clusters), and provides PSD square roots,
//! Loewner-order tests and finite-difference stencils for matrix curves.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QfiError, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigenvalues closer than this are treated as one cluster.
pub const CLUSTER_TOL: f64 = 1e-8;

/// Hermiticity tolerance for inputs to the eigensolver.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., -1.), c(0., 1.), c(0., 0.)])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c(-1., 0.)])
}

/// |u⟩⟨v|
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

/// ⟨u|v⟩, conjugate-linear in the first argument.
pub fn inner(u: &CVector, v: &CVector) -> Complex64 {
    u.dotc(v)
}

/// Largest entry modulus; NaN if any entry is NaN.
pub fn max_abs(m: &CMatrix) -> f64 {
    let mut worst = 0.0f64;
    for z in m.iter() {
        let x = z.norm();
        if x.is_nan() {
            return f64::NAN;
        }
        worst = worst.max(x);
    }
    worst
}

/// max |A - A†|
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs(&(m - m.adjoint()))
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, aligned with `values`.
    pub vectors: CMatrix,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> CVector {
        self.vectors.column(k).into_owned()
    }

    pub fn reconstruct(&self) -> CMatrix {
        let d = self.values.len();
        let diag = CMatrix::from_diagonal(&DVector::from_iterator(
            d,
            self.values.iter().map(|&x| c(x, 0.0)),
        ));
        &self.vectors * diag * self.vectors.adjoint()
    }

    pub fn min_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Index ranges of eigenvalue clusters (consecutive values within `tol`).
    pub fn clusters(&self, tol: f64) -> Vec<std::ops::Range<usize>> {
        cluster_ranges(&self.values, tol)
    }
}

pub(crate) fn cluster_ranges(sorted: &[f64], tol: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=sorted.len() {
        if i == sorted.len() || sorted[i] - sorted[i - 1] > tol {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// Multiply `v` by a phase so that its largest-magnitude entry is real and
/// positive. Near-ties in magnitude go to the lowest index.
pub fn normalize_phase(v: &mut CVector) {
    let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-10))
        .unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    v.iter_mut().for_each(|z| *z *= phase);
}

fn lexicographic(a: &CVector, b: &CVector) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        let o = x
            .re
            .partial_cmp(&y.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.im.partial_cmp(&y.im).unwrap_or(std::cmp::Ordering::Equal));
        if o != std::cmp::Ordering::Equal {
            return o.reverse();
        }
    }
    std::cmp::Ordering::Equal
}

pub fn hermitian_eigendecompose(a: &CMatrix) -> Result<EigenSystem> {
    if !a.is_square() {
        return Err(QfiError::DimensionMismatch {
            expected: a.nrows(),
            actual: a.ncols(),
        });
    }
    let asym = hermiticity_defect(a);
    if asym >= HERMITIAN_TOL * max_abs(a).max(1.0) {
        return Err(QfiError::NotHermitian { asymmetry: asym });
    }
    let sym = (a + a.adjoint()).scale(0.5);
    let eig = SymmetricEigen::new(sym);
    let d = a.nrows();

    let mut pairs: Vec<(f64, CVector)> = (0..d)
        .map(|k| {
            let mut v = eig.eigenvectors.column(k).into_owned();
            normalize_phase(&mut v);
            (eig.eigenvalues[k], v)
        })
        .collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap_or(std::cmp::Ordering::Equal));

    // deterministic order inside degenerate clusters
    let values: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    for r in cluster_ranges(&values, CLUSTER_TOL) {
        pairs[r].sort_by(|x, y| lexicographic(&x.1, &y.1));
    }

    let values = pairs.iter().map(|p| p.0).collect();
    let cols: Vec<CVector> = pairs.into_iter().map(|p| p.1).collect();
    let vectors = if d == 0 {
        CMatrix::zeros(0, 0)
    } else {
        CMatrix::from_columns(&cols)
    };
    Ok(EigenSystem { values, vectors })
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn hermitian_map(a: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    let es = hermitian_eigendecompose(a)?;
    let d = es.dim();
    let diag = CMatrix::from_diagonal(&DVector::from_iterator(
        d,
        es.values.iter().map(|&x| c(f(x), 0.0)),
    ));
    Ok(&es.vectors * diag * es.vectors.adjoint())
}

/// Principal square root of a positive semidefinite matrix.
///
/// Eigenvalues down to -1e-8 are clamped to zero; anything more negative is
/// rejected.
pub fn psd_sqrt(a: &CMatrix) -> Result<CMatrix> {
    let es = hermitian_eigendecompose(a)?;
    if es.min_value() < -1e-8 {
        return Err(QfiError::NotPositive {
            min_eigenvalue: es.min_value(),
        });
    }
    let d = es.dim();
    // round-off sized eigenvalues would otherwise turn into √ε-sized entries
    let floor = 64.0 * f64::EPSILON * es.values.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let diag = CMatrix::from_diagonal(&DVector::from_iterator(
        d,
        es.values
            .iter()
            .map(|&x| c(if x > floor { x.sqrt() } else { 0.0 }, 0.0)),
    ));
    Ok(&es.vectors * diag * es.vectors.adjoint())
}

/// Tests A ≤ B in Loewner order: the smallest eigenvalue of B - A must be at
/// least `-tol`. Returns the verdict together with that eigenvalue.
pub fn loewner_leq(a: &CMatrix, b: &CMatrix, tol: f64) -> Result<(bool, f64)> {
    if a.shape() != b.shape() {
        return Err(QfiError::DimensionMismatch {
            expected: a.nrows(),
            actual: b.nrows(),
        });
    }
    let min = hermitian_eigendecompose(&(b - a))?.min_value();
    Ok((min >= -tol, min))
}

/// exp(-i H) for Hermitian H.
pub fn unitary_exp(h: &CMatrix) -> Result<CMatrix> {
    let es = hermitian_eigendecompose(h)?;
    let d = es.dim();
    let diag = CMatrix::from_diagonal(&DVector::from_iterator(
        d,
        es.values.iter().map(|&x| Complex64::from_polar(1.0, -x)),
    ));
    Ok(&es.vectors * diag * es.vectors.adjoint())
}

/// d/ds exp(-i (H + s·D)) at s = 0, via the divided-difference formula in
/// the eigenbasis of H.
pub fn unitary_exp_derivative(h: &CMatrix, direction: &CMatrix) -> Result<CMatrix> {
    let es = hermitian_eigendecompose(h)?;
    let v = &es.vectors;
    let mut inner = v.adjoint() * direction * v;
    for a in 0..es.dim() {
        for b in 0..es.dim() {
            let (la, lb) = (es.values[a], es.values[b]);
            let half = 0.5 * (la - lb);
            let sinc = if half.abs() < 1e-8 {
                1.0 - half * half / 6.0
            } else {
                half.sin() / half
            };
            // (e^{-i la} - e^{-i lb}) / (la - lb)
            let dd = c(0.0, -1.0) * Complex64::from_polar(1.0, -0.5 * (la + lb)) * sinc;
            inner[(a, b)] *= dd;
        }
    }
    Ok(v * inner * v.adjoint())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffScheme {
    Central2,
    Central4,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffConfig {
    pub step: f64,
    pub scheme: DiffScheme,
    pub richardson: bool,
}

impl Default for DiffConfig {
    fn default() -> Self {
        DiffConfig {
            step: 1e-4,
            scheme: DiffScheme::Central4,
            richardson: false,
        }
    }
}

impl DiffConfig {
    pub fn new(step: f64, scheme: DiffScheme, richardson: bool) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(QfiError::Invalid {
                what: "finite-difference step",
                detail: format!("h = {step} must be positive"),
            });
        }
        Ok(DiffConfig {
            step,
            scheme,
            richardson,
        })
    }

    fn base_stencil(&self, h: f64) -> Vec<(f64, f64)> {
        match self.scheme {
            DiffScheme::Central2 => vec![(-h, -0.5 / h), (h, 0.5 / h)],
            DiffScheme::Central4 => vec![
                (-2.0 * h, 1.0 / (12.0 * h)),
                (-h, -8.0 / (12.0 * h)),
                (h, 8.0 / (12.0 * h)),
                (2.0 * h, -1.0 / (12.0 * h)),
            ],
        }
    }

    /// (offset, weight) pairs: f'(θ) ≈ Σ weight · f(θ + offset).
    pub fn stencil(&self) -> Vec<(f64, f64)> {
        let h = self.step;
        if !self.richardson {
            return self.base_stencil(h);
        }
        // D = (2^p D(h/2) - D(h)) / (2^p - 1)
        let k = match self.scheme {
            DiffScheme::Central2 => 4.0,
            DiffScheme::Central4 => 16.0,
        };
        let mut out: Vec<(f64, f64)> = self
            .base_stencil(h / 2.0)
            .into_iter()
            .map(|(o, w)| (o, w * k / (k - 1.0)))
            .collect();
        for (o, w) in self.base_stencil(h) {
            let w = -w / (k - 1.0);
            match out.iter_mut().find(|(x, _)| (*x - o).abs() < 1e-15 * h) {
                Some(slot) => slot.1 += w,
                None => out.push((o, w)),
            }
        }
        out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        out
    }

    /// Largest |offset| used by the stencil.
    pub fn reach(&self) -> f64 {
        match self.scheme {
            DiffScheme::Central2 => self.step,
            DiffScheme::Central4 => 2.0 * self.step,
        }
    }
}

/// Combines stencil samples `values[i] = f(θ + offset_i)` into a derivative.
pub fn combine_stencil(weights: &[f64], values: &[CMatrix]) -> CMatrix {
    let mut acc = CMatrix::zeros(values[0].nrows(), values[0].ncols());
    for (w, v) in weights.iter().zip(values) {
        acc += v.scale(*w);
    }
    acc
}

/// Finite-difference derivative of a matrix-valued curve.
pub fn differentiate_curve<F, E>(curve: F, theta: f64, cfg: &DiffConfig) -> std::result::Result<CMatrix, E>
where
    F: Fn(f64) -> std::result::Result<CMatrix, E>,
{
    let stencil = cfg.stencil();
    let mut values = Vec::with_capacity(stencil.len());
    for &(o, _) in &stencil {
        values.push(curve(theta + o)?);
    }
    let weights: Vec<f64> = stencil.iter().map(|s| s.1).collect();
    Ok(combine_stencil(&weights, &values))
}
