//! Validated quantum primitives: states, Kraus sets and POVMs.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{QfiError, Result};
use crate::linalg::{self, c, hermitian_eigendecompose, hermiticity_defect, max_abs, CMatrix, CVector};

/// Construction-time tolerance for Hermiticity, trace and positivity.
pub const STATE_TOL: f64 = 1e-10;
/// Construction-time tolerance for completeness / resolution of identity.
pub const COMPLETENESS_TOL: f64 = 1e-9;
/// User-facing verdict tolerance.
pub const VERDICT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix(CMatrix);

impl DensityMatrix {
    pub fn new(m: CMatrix) -> Result<Self> {
        let diag = Diagnostics::of_state(&m);
        if diag.hermiticity_defect > STATE_TOL {
            return Err(QfiError::NotHermitian {
                asymmetry: diag.hermiticity_defect,
            });
        }
        if diag.trace_defect > STATE_TOL {
            return Err(QfiError::Invalid {
                what: "density matrix",
                detail: format!("trace defect {:e}", diag.trace_defect),
            });
        }
        if diag.min_eigenvalue < -STATE_TOL {
            return Err(QfiError::NotPositive {
                min_eigenvalue: diag.min_eigenvalue,
            });
        }
        Ok(DensityMatrix(m))
    }

    pub(crate) fn new_unchecked(m: CMatrix) -> Self {
        DensityMatrix(m)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn purity(&self) -> f64 {
        linalg::trace(&(&self.0 * &self.0)).re
    }
}

impl From<&PureState> for DensityMatrix {
    fn from(psi: &PureState) -> Self {
        DensityMatrix(linalg::outer(&psi.0, &psi.0))
    }
}

/// Serialized as its list of amplitudes; deserialization re-checks the norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Complex64>", into = "Vec<Complex64>")]
pub struct PureState(CVector);

impl TryFrom<Vec<Complex64>> for PureState {
    type Error = QfiError;

    fn try_from(amps: Vec<Complex64>) -> Result<Self> {
        PureState::from_slice(&amps)
    }
}

impl From<PureState> for Vec<Complex64> {
    fn from(s: PureState) -> Self {
        s.amplitudes()
    }
}

impl PureState {
    pub fn new(amplitudes: CVector) -> Result<Self> {
        let defect = (amplitudes.norm() - 1.0).abs();
        if amplitudes.is_empty() || defect > STATE_TOL {
            return Err(QfiError::Invalid {
                what: "pure state",
                detail: format!("norm defect {defect:e}"),
            });
        }
        Ok(PureState(amplitudes))
    }

    pub fn from_slice(amps: &[Complex64]) -> Result<Self> {
        Self::new(CVector::from_column_slice(amps))
    }

    /// Normalizes any nonzero vector.
    pub fn normalized(v: CVector) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(QfiError::Invalid {
                what: "pure state",
                detail: "zero vector".into(),
            });
        }
        Ok(PureState(v.unscale(n)))
    }

    pub fn basis(d: usize, k: usize) -> Self {
        let mut v = CVector::zeros(d);
        v[k] = c(1.0, 0.0);
        PureState(v)
    }

    /// (|0⟩ + |1⟩)/√2
    pub fn plus() -> Self {
        let s = 0.5f64.sqrt();
        PureState(CVector::from_vec(vec![c(s, 0.0), c(s, 0.0)]))
    }

    pub fn vector(&self) -> &CVector {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> Vec<Complex64> {
        self.0.iter().copied().collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KrausSet(Vec<CMatrix>);

impl KrausSet {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let ks = Self::new_unchecked(ops)?;
        let defect = ks.completeness_defect();
        if defect > COMPLETENESS_TOL {
            return Err(QfiError::Completeness { defect });
        }
        Ok(ks)
    }

    /// Checks shapes only.
    pub fn new_unchecked(ops: Vec<CMatrix>) -> Result<Self> {
        let d = ops.first().map(|m| m.nrows()).ok_or(QfiError::Invalid {
            what: "Kraus set",
            detail: "no operators".into(),
        })?;
        for m in &ops {
            if m.nrows() != d || m.ncols() != d {
                return Err(QfiError::DimensionMismatch {
                    expected: d,
                    actual: m.nrows().max(m.ncols()),
                });
            }
        }
        Ok(KrausSet(ops))
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.0[0].nrows()
    }

    pub fn completeness_defect(&self) -> f64 {
        let d = self.dim();
        let sum = self
            .0
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, e| acc + e.adjoint() * e);
        max_abs(&(sum - linalg::identity(d)))
    }

    /// E_j ↦ Σ_k mix[j,k] E_k
    pub fn remix(&self, mix: &CMatrix) -> Result<KrausSet> {
        if mix.nrows() != self.len() || mix.ncols() != self.len() {
            return Err(QfiError::DimensionMismatch {
                expected: self.len(),
                actual: mix.nrows(),
            });
        }
        Ok(KrausSet(remix_ops(mix, &self.0)))
    }
}

pub(crate) fn remix_ops(mix: &CMatrix, ops: &[CMatrix]) -> Vec<CMatrix> {
    let d = ops[0].nrows();
    (0..mix.nrows())
        .map(|j| {
            ops.iter()
                .enumerate()
                .fold(CMatrix::zeros(d, d), |acc, (k, e)| acc + e * mix[(j, k)])
        })
        .collect()
}

/// Serialized as a list of elements, each a list of rows; deserialization
/// re-validates the measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<Vec<Complex64>>>", into = "Vec<Vec<Vec<Complex64>>>")]
pub struct Povm(Vec<CMatrix>);

impl TryFrom<Vec<Vec<Vec<Complex64>>>> for Povm {
    type Error = QfiError;

    fn try_from(elements: Vec<Vec<Vec<Complex64>>>) -> Result<Self> {
        let mats = elements
            .iter()
            .map(|rows| {
                let d = rows.len();
                if rows.iter().any(|r| r.len() != d) {
                    return Err(QfiError::Invalid {
                        what: "POVM element",
                        detail: "rows must form a square matrix".into(),
                    });
                }
                Ok(CMatrix::from_fn(d, d, |i, j| rows[i][j]))
            })
            .collect::<Result<Vec<_>>>()?;
        Povm::new(mats)
    }
}

impl From<Povm> for Vec<Vec<Vec<Complex64>>> {
    fn from(p: Povm) -> Self {
        p.0.iter()
            .map(|m| (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect())
            .collect()
    }
}

impl Povm {
    pub fn new(elements: Vec<CMatrix>) -> Result<Self> {
        let d = elements.first().map(|m| m.nrows()).ok_or(QfiError::Invalid {
            what: "POVM",
            detail: "no elements".into(),
        })?;
        for m in &elements {
            if m.nrows() != d || m.ncols() != d {
                return Err(QfiError::DimensionMismatch {
                    expected: d,
                    actual: m.nrows().max(m.ncols()),
                });
            }
        }
        let p = Povm(elements);
        let diag = p.diagnostics();
        if diag.hermiticity_defect > STATE_TOL {
            return Err(QfiError::NotHermitian {
                asymmetry: diag.hermiticity_defect,
            });
        }
        if diag.min_eigenvalue < -STATE_TOL {
            return Err(QfiError::NotPositive {
                min_eigenvalue: diag.min_eigenvalue,
            });
        }
        if diag.completeness_defect > COMPLETENESS_TOL {
            return Err(QfiError::Completeness {
                defect: diag.completeness_defect,
            });
        }
        Ok(p)
    }

    /// Rank-one projectors onto the columns of a unitary.
    pub fn from_basis(basis: &CMatrix) -> Result<Self> {
        Povm::new(
            (0..basis.ncols())
                .map(|k| {
                    let v = basis.column(k).into_owned();
                    linalg::outer(&v, &v)
                })
                .collect(),
        )
    }

    pub fn computational(d: usize) -> Self {
        Povm::from_basis(&linalg::identity(d)).expect("identity basis")
    }

    /// {|+⟩⟨+|, |−⟩⟨−|}
    pub fn plus_minus() -> Self {
        let s = 0.5f64.sqrt();
        let b = CMatrix::from_row_slice(2, 2, &[c(s, 0.), c(s, 0.), c(s, 0.), c(-s, 0.)]);
        Povm::from_basis(&b).expect("x basis")
    }

    /// Eigenbasis of σ_y: {|+i⟩, |−i⟩}.
    pub fn sigma_y() -> Self {
        let s = 0.5f64.sqrt();
        let b = CMatrix::from_row_slice(2, 2, &[c(s, 0.), c(s, 0.), c(0., s), c(0., -s)]);
        Povm::from_basis(&b).expect("y basis")
    }

    pub fn elements(&self) -> &[CMatrix] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.0[0].nrows()
    }
}

/// Per-invariant residuals. Fields that do not apply to the object are zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    pub hermiticity_defect: f64,
    pub trace_defect: f64,
    pub completeness_defect: f64,
    pub min_eigenvalue: f64,
}

impl Diagnostics {
    fn of_state(m: &CMatrix) -> Self {
        let herm = hermiticity_defect(m);
        let min_eig = if m.is_square() {
            hermitian_eigendecompose(&(m + m.adjoint()).scale(0.5))
                .map(|e| e.min_value())
                .unwrap_or(f64::NAN)
        } else {
            f64::NAN
        };
        Diagnostics {
            hermiticity_defect: herm,
            trace_defect: (linalg::trace(m) - c(1.0, 0.0)).norm(),
            completeness_defect: 0.0,
            min_eigenvalue: min_eig,
        }
    }

    pub fn within(&self, tol: f64) -> bool {
        self.hermiticity_defect <= tol
            && self.trace_defect <= tol
            && self.completeness_defect <= tol
            && self.min_eigenvalue >= -tol
    }
}

/// Report-only validation of objects that may or may not satisfy their invariants.
pub trait Validate {
    fn diagnostics(&self) -> Diagnostics;
}

impl Validate for DensityMatrix {
    fn diagnostics(&self) -> Diagnostics {
        Diagnostics::of_state(&self.0)
    }
}

impl Validate for KrausSet {
    fn diagnostics(&self) -> Diagnostics {
        Diagnostics {
            completeness_defect: self.completeness_defect(),
            ..Default::default()
        }
    }
}

impl Validate for Povm {
    fn diagnostics(&self) -> Diagnostics {
        let d = self.dim();
        let mut herm: f64 = 0.0;
        let mut min_eig = f64::INFINITY;
        let mut sum = CMatrix::zeros(d, d);
        for m in &self.0 {
            herm = herm.max(hermiticity_defect(m));
            let e = hermitian_eigendecompose(&(m + m.adjoint()).scale(0.5))
                .map(|e| e.min_value())
                .unwrap_or(f64::NAN);
            min_eig = min_eig.min(e);
            sum += m;
        }
        Diagnostics {
            hermiticity_defect: herm,
            trace_defect: 0.0,
            completeness_defect: max_abs(&(sum - linalg::identity(d))),
            min_eigenvalue: min_eig,
        }
    }
}

/// Report-only diagnostics for a raw matrix claimed to be a state.
pub fn validate_state_matrix(m: &CMatrix) -> Diagnostics {
    Diagnostics::of_state(m)
}

/// ρ ↦ Σ_k E_k ρ E_k†
pub fn apply_channel(kraus: &KrausSet, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if kraus.dim() != rho.dim() {
        return Err(QfiError::DimensionMismatch {
            expected: kraus.dim(),
            actual: rho.dim(),
        });
    }
    let defect = kraus.completeness_defect();
    if defect > VERDICT_TOL {
        return Err(QfiError::Completeness { defect });
    }
    Ok(DensityMatrix::new_unchecked(apply_ops(kraus.operators(), rho.matrix())))
}

pub(crate) fn apply_ops(ops: &[CMatrix], rho: &CMatrix) -> CMatrix {
    let d = rho.nrows();
    let out = ops
        .iter()
        .fold(CMatrix::zeros(d, d), |acc, e| acc + e * rho * e.adjoint());
    // remove round-off asymmetry
    (&out + out.adjoint()).scale(0.5)
}

/// Born-rule outcome probabilities tr{ρ M_m}.
pub fn measurement_distribution(rho: &DensityMatrix, povm: &Povm) -> Result<Vec<f64>> {
    if rho.dim() != povm.dim() {
        return Err(QfiError::DimensionMismatch {
            expected: povm.dim(),
            actual: rho.dim(),
        });
    }
    let raw = born_probabilities(rho.matrix(), povm);
    let sum: f64 = raw.iter().sum();
    if (sum - 1.0).abs() > VERDICT_TOL {
        return Err(QfiError::Invalid {
            what: "outcome distribution",
            detail: format!("probabilities sum to {sum}"),
        });
    }
    let mut p: Vec<f64> = raw
        .into_iter()
        .map(|x| if x < 0.0 && x >= -STATE_TOL { 0.0 } else { x })
        .collect();
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() <= COMPLETENESS_TOL {
        p.iter_mut().for_each(|x| *x /= sum);
    }
    Ok(p)
}

/// Unclamped tr{A M_m} for any matrix A (e.g. a state derivative).
pub(crate) fn born_probabilities(a: &CMatrix, povm: &Povm) -> Vec<f64> {
    povm.elements()
        .iter()
        .map(|m| {
            // tr{A M} = Σ_ij A_ij M_ji
            let mut acc = c(0.0, 0.0);
            for i in 0..a.nrows() {
                for j in 0..a.ncols() {
                    acc += a[(i, j)] * m[(j, i)];
                }
            }
            acc.re
        })
        .collect()
}
