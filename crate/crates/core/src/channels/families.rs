use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{KrausFamily, SpectralFamily, SpectralPoint};
use crate::error::{QfiError, Result};
use crate::linalg::{self, c, pauli_x, pauli_y, pauli_z, unitary_exp, unitary_exp_derivative, CMatrix, CVector};
use crate::quantum::remix_ops;

fn scalar_ops(scales: &[f64], ops: &[CMatrix]) -> Vec<CMatrix> {
    scales.iter().zip(ops).map(|(s, m)| m.scale(*s)).collect()
}

/// {√(1−θ) I, √θ σ_z}
#[derive(Debug, Clone, Copy)]
pub struct Dephasing;

impl KrausFamily for Dephasing {
    fn dim(&self) -> usize {
        2
    }
    fn param_count(&self) -> usize {
        1
    }
    fn kraus_at(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        let t = theta[0];
        Ok(scalar_ops(&[(1.0 - t).sqrt(), t.sqrt()], &[linalg::identity(2), pauli_z()]))
    }
    fn kraus_partial(&self, theta: &[f64], _l: usize) -> Option<Result<Vec<CMatrix>>> {
        let t = theta[0];
        Some(Ok(scalar_ops(
            &[-0.5 / (1.0 - t).sqrt(), 0.5 / t.sqrt()],
            &[linalg::identity(2), pauli_z()],
        )))
    }
}

/// Dephasing with strength θ¹θ².
#[derive(Debug, Clone, Copy)]
pub struct Dephasing2;

impl KrausFamily for Dephasing2 {
    fn dim(&self) -> usize {
        2
    }
    fn param_count(&self) -> usize {
        2
    }
    fn kraus_at(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        let q = theta[0] * theta[1];
        Ok(scalar_ops(&[(1.0 - q).sqrt(), q.sqrt()], &[linalg::identity(2), pauli_z()]))
    }
    fn kraus_partial(&self, theta: &[f64], l: usize) -> Option<Result<Vec<CMatrix>>> {
        let q = theta[0] * theta[1];
        let dq = theta[1 - l];
        Some(Ok(scalar_ops(
            &[-0.5 * dq / (1.0 - q).sqrt(), 0.5 * dq / q.sqrt()],
            &[linalg::identity(2), pauli_z()],
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn pauli(self) -> CMatrix {
        match self {
            Axis::X => pauli_x(),
            Axis::Y => pauli_y(),
            Axis::Z => pauli_z(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = QfiError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(QfiError::Invalid {
                what: "axis",
                detail: format!("`{other}` is not one of x, y, z"),
            }),
        }
    }
}

/// exp(−iθσ/2)
#[derive(Debug, Clone, Copy)]
pub struct Rotation {
    pub axis: Axis,
}

impl Rotation {
    fn unitary(&self, t: f64) -> CMatrix {
        linalg::identity(2).scale((t / 2.0).cos()) + self.axis.pauli() * c(0.0, -(t / 2.0).sin())
    }
}

impl KrausFamily for Rotation {
    fn dim(&self) -> usize {
        2
    }
    fn param_count(&self) -> usize {
        1
    }
    fn kraus_at(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        Ok(vec![self.unitary(theta[0])])
    }
    fn kraus_partial(&self, theta: &[f64], _l: usize) -> Option<Result<Vec<CMatrix>>> {
        Some(Ok(vec![self.axis.pauli() * self.unitary(theta[0]) * c(0.0, -0.5)]))
    }
}

fn damping_ops(g: f64) -> Vec<CMatrix> {
    vec![
        CMatrix::from_row_slice(2, 2, &[c(1., 0.), c(0., 0.), c(0., 0.), c((1.0 - g).sqrt(), 0.)]),
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(g.sqrt(), 0.), c(0., 0.), c(0., 0.)]),
    ]
}

fn damping_partials(g: f64) -> Vec<CMatrix> {
    vec![
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0., 0.), c(0., 0.), c(-0.5 / (1.0 - g).sqrt(), 0.)]),
        CMatrix::from_row_slice(2, 2, &[c(0., 0.), c(0.5 / g.sqrt(), 0.), c(0., 0.), c(0., 0.)]),
    ]
}

#[derive(Debug, Clone, Copy)]
pub struct AmplitudeDamping;

impl KrausFamily for AmplitudeDamping {
    fn dim(&self) -> usize {
        2
    }
    fn param_count(&self) -> usize {
        1
    }
    fn kraus_at(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        Ok(damping_ops(theta[0]))
    }
    fn kraus_partial(&self, theta: &[f64], _l: usize) -> Option<Result<Vec<CMatrix>>> {
        Some(Ok(damping_partials(theta[0])))
    }
}

/// {√(1−3θ/4) I, √(θ/4) σ_x, √(θ/4) σ_y, √(θ/4) σ_z}
#[derive(Debug, Clone, Copy)]
pub struct Depolarizing;

impl Depolarizing {
    fn basis() -> [CMatrix; 4] {
        [linalg::identity(2), pauli_x(), pauli_y(), pauli_z()]
    }
}

impl KrausFamily for Depolarizing {
    fn dim(&self) -> usize {
        2
    }
    fn param_count(&self) -> usize {
        1
    }
    fn kraus_at(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        let t = theta[0];
        let a = (1.0 - 0.75 * t).sqrt();
        let b = (t / 4.0).sqrt();
        Ok(scalar_ops(&[a, b, b, b], &Self::basis()))
    }
    fn kraus_partial(&self, theta: &[f64], _l: usize) -> Option<Result<Vec<CMatrix>>> {
        let t = theta[0];
        let da = -0.375 / (1.0 - 0.75 * t).sqrt();
        let db = 0.125 / (t / 4.0).sqrt();
        Some(Ok(scalar_ops(&[da, db, db, db], &Self::basis())))
    }
}

/// Single unitary exp(−i(G₀ + Σ_l θ^l G_l)).
#[derive(Debug, Clone)]
pub struct GeneratorUnitary {
    offset: CMatrix,
    generators: Vec<CMatrix>,
}

impl GeneratorUnitary {
    pub fn new(offset: CMatrix, generators: Vec<CMatrix>) -> Result<Self> {
        check_generators(&offset, &generators)?;
        Ok(GeneratorUnitary { offset, generators })
    }

    fn hamiltonian(&self, theta: &[f64]) -> CMatrix {
        self.generators
            .iter()
            .zip(theta)
            .fold(self.offset.clone(), |acc, (g, &t)| acc + g.scale(t))
    }
}

fn check_generators(offset: &CMatrix, generators: &[CMatrix]) -> Result<()> {
    for g in std::iter::once(offset).chain(generators) {
        if g.shape() != offset.shape() {
            return Err(QfiError::DimensionMismatch {
                expected: offset.nrows(),
                actual: g.nrows(),
            });
        }
        let defect = linalg::hermiticity_defect(g);
        if defect > linalg::HERMITIAN_TOL {
            return Err(QfiError::NotHermitian { asymmetry: defect });
        }
    }
    Ok(())
}

impl KrausFamily for GeneratorUnitary {
    fn dim(&self) -> usize {
        self.offset.nrows()
    }
    fn param_count(&self) -> usize {
        self.generators.len()
    }
    fn kraus_at(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        Ok(vec![unitary_exp(&self.hamiltonian(theta))?])
    }
    fn kraus_partial(&self, theta: &[f64], l: usize) -> Option<Result<Vec<CMatrix>>> {
        Some(unitary_exp_derivative(&self.hamiltonian(theta), &self.generators[l]).map(|d| vec![d]))
    }
}

/// Amplitude damping with rate θ¹ after a z-rotation by θ².
#[derive(Debug, Clone, Copy)]
pub struct DampedRotation;

impl KrausFamily for DampedRotation {
    fn dim(&self) -> usize {
        2
    }
    fn param_count(&self) -> usize {
        2
    }
    fn kraus_at(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        let r = Rotation { axis: Axis::Z }.unitary(theta[1]);
        Ok(damping_ops(theta[0]).into_iter().map(|a| a * &r).collect())
    }
    fn kraus_partial(&self, theta: &[f64], l: usize) -> Option<Result<Vec<CMatrix>>> {
        let rot = Rotation { axis: Axis::Z };
        let r = rot.unitary(theta[1]);
        Some(Ok(if l == 0 {
            damping_partials(theta[0]).into_iter().map(|a| a * &r).collect()
        } else {
            let dr = pauli_z() * &r * c(0.0, -0.5);
            damping_ops(theta[0]).into_iter().map(|a| a * &dr).collect()
        }))
    }
}

/// Kraus operators read off a system-environment unitary:
/// E_k(θ) = (⟨k| ⊗ I) exp(−i(G₀ + Σ θ^l G_l)) (|0⟩ ⊗ I).
#[derive(Debug, Clone)]
pub struct Stinespring {
    dim: usize,
    count: usize,
    unitary: GeneratorUnitary,
}

impl Stinespring {
    /// Generators act on C^count ⊗ C^dim (environment index major).
    pub fn new(dim: usize, count: usize, offset: CMatrix, generators: Vec<CMatrix>) -> Result<Self> {
        if offset.nrows() != dim * count {
            return Err(QfiError::DimensionMismatch {
                expected: dim * count,
                actual: offset.nrows(),
            });
        }
        Ok(Stinespring {
            dim,
            count,
            unitary: GeneratorUnitary::new(offset, generators)?,
        })
    }

    fn blocks(&self, u: &CMatrix) -> Vec<CMatrix> {
        (0..self.count)
            .map(|k| u.view((k * self.dim, 0), (self.dim, self.dim)).into_owned())
            .collect()
    }
}

impl KrausFamily for Stinespring {
    fn dim(&self) -> usize {
        self.dim
    }
    fn param_count(&self) -> usize {
        self.unitary.param_count()
    }
    fn kraus_at(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        let u = self.unitary.kraus_at(theta)?.remove(0);
        Ok(self.blocks(&u))
    }
    fn kraus_partial(&self, theta: &[f64], l: usize) -> Option<Result<Vec<CMatrix>>> {
        Some(
            self.unitary
                .kraus_partial(theta, l)?
                .map(|mut du| self.blocks(&du.remove(0))),
        )
    }
}

/// E_k(θ) = √q_k(θ) U_k with q = softmax(a + Bθ) and U_k|ψ₀⟩ orthonormal,
/// so output eigenvectors do not move with θ.
#[derive(Debug, Clone)]
pub struct QuasiClassical {
    unitaries: Vec<CMatrix>,
    bias: Vec<f64>,
    /// `slopes[k][l]`
    slopes: Vec<Vec<f64>>,
}

impl QuasiClassical {
    pub fn new(unitaries: Vec<CMatrix>, bias: Vec<f64>, slopes: Vec<Vec<f64>>) -> Result<Self> {
        if unitaries.len() != bias.len() || bias.len() != slopes.len() || unitaries.is_empty() {
            return Err(QfiError::Invalid {
                what: "quasi-classical family",
                detail: "mismatched component counts".into(),
            });
        }
        Ok(QuasiClassical {
            unitaries,
            bias,
            slopes,
        })
    }

    fn weights(&self, theta: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = self
            .bias
            .iter()
            .zip(&self.slopes)
            .map(|(b, s)| b + s.iter().zip(theta).map(|(x, t)| x * t).sum::<f64>())
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|x| (x - max).exp()).collect();
        let z: f64 = e.iter().sum();
        e.into_iter().map(|x| x / z).collect()
    }
}

impl KrausFamily for QuasiClassical {
    fn dim(&self) -> usize {
        self.unitaries[0].nrows()
    }
    fn param_count(&self) -> usize {
        self.slopes[0].len()
    }
    fn kraus_at(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        let q = self.weights(theta);
        Ok(self
            .unitaries
            .iter()
            .zip(&q)
            .map(|(u, &w)| u.scale(w.sqrt()))
            .collect())
    }
    fn kraus_partial(&self, theta: &[f64], l: usize) -> Option<Result<Vec<CMatrix>>> {
        let q = self.weights(theta);
        let mean: f64 = q.iter().zip(&self.slopes).map(|(w, s)| w * s[l]).sum();
        Some(Ok(self
            .unitaries
            .iter()
            .zip(q.iter().zip(&self.slopes))
            .map(|(u, (&w, s))| u.scale(0.5 * w.sqrt() * (s[l] - mean)))
            .collect()))
    }
}

/// Kraus operators of `base` remixed by u(θ) = exp(−i Σ θ^l G_l) · U₀:
/// E_j(θ) = Σ_k u_jk(θ) F_k(θ).
#[derive(Debug, Clone)]
pub struct Remixed {
    base: Arc<dyn KrausFamily>,
    fixed: CMatrix,
    generators: Vec<CMatrix>,
}

impl Remixed {
    pub fn new(base: Arc<dyn KrausFamily>, fixed: CMatrix, generators: Vec<CMatrix>) -> Result<Self> {
        let n = base.kraus_at(&vec![0.5; base.param_count()])?.len();
        if fixed.nrows() != n || generators.len() != base.param_count() {
            return Err(QfiError::DimensionMismatch {
                expected: n,
                actual: fixed.nrows(),
            });
        }
        check_generators(&CMatrix::zeros(n, n), &generators)?;
        Ok(Remixed {
            base,
            fixed,
            generators,
        })
    }

    fn hamiltonian(&self, theta: &[f64]) -> CMatrix {
        let n = self.fixed.nrows();
        self.generators
            .iter()
            .zip(theta)
            .fold(CMatrix::zeros(n, n), |acc, (g, &t)| acc + g.scale(t))
    }

    /// u(θ)
    pub fn mixing(&self, theta: &[f64]) -> Result<CMatrix> {
        Ok(unitary_exp(&self.hamiltonian(theta))? * &self.fixed)
    }

    /// ∂u/∂θ^l
    pub fn mixing_partial(&self, theta: &[f64], l: usize) -> Result<CMatrix> {
        Ok(unitary_exp_derivative(&self.hamiltonian(theta), &self.generators[l])? * &self.fixed)
    }
}

impl KrausFamily for Remixed {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn param_count(&self) -> usize {
        self.base.param_count()
    }
    fn kraus_at(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        Ok(remix_ops(&self.mixing(theta)?, &self.base.kraus_at(theta)?))
    }
    fn kraus_partial(&self, theta: &[f64], l: usize) -> Option<Result<Vec<CMatrix>>> {
        let dbase = self.base.kraus_partial(theta, l)?;
        Some((|| {
            let base = self.base.kraus_at(theta)?;
            let a = remix_ops(&self.mixing_partial(theta, l)?, &base);
            let b = remix_ops(&self.mixing(theta)?, &dbase?);
            Ok(a.into_iter().zip(b).map(|(x, y)| x + y).collect())
        })())
    }
}

/// t ↦ (t, √(1−t²), 0) with weight t², and (0, 0, 1) with weight 1 − t².
#[derive(Debug, Clone, Copy)]
pub struct Example1;

fn tilted(g: f64) -> (CVector, CVector) {
    let s = (1.0 - g * g).max(0.0).sqrt();
    (
        CVector::from_vec(vec![c(g, 0.), c(s, 0.), c(0., 0.)]),
        CVector::from_vec(vec![c(1., 0.), c(-g / s, 0.), c(0., 0.)]),
    )
}

fn e3() -> CVector {
    CVector::from_vec(vec![c(0., 0.), c(0., 0.), c(1., 0.)])
}

impl SpectralFamily for Example1 {
    fn dim(&self) -> usize {
        3
    }
    fn param_count(&self) -> usize {
        1
    }
    fn spectral_at(&self, theta: &[f64]) -> Result<SpectralPoint> {
        let t = theta[0];
        let (w1, dw1) = tilted(t);
        Ok(SpectralPoint {
            p: vec![t * t, 1.0 - t * t],
            w: vec![w1, e3()],
            dp: vec![vec![2.0 * t, -2.0 * t]],
            dw: vec![vec![dw1, CVector::zeros(3)]],
        })
    }
}

/// Affine map c₀ + c₁θ¹ + c₂θ², clamped to [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine(pub [f64; 3]);

impl Affine {
    pub fn eval(&self, theta: &[f64]) -> f64 {
        (self.0[0] + self.0[1] * theta[0] + self.0[2] * theta[1]).clamp(0.0, 1.0)
    }

    pub fn partial(&self, theta: &[f64], l: usize) -> f64 {
        let raw = self.0[0] + self.0[1] * theta[0] + self.0[2] * theta[1];
        if (0.0..=1.0).contains(&raw) {
            self.0[1 + l]
        } else {
            0.0
        }
    }
}

/// Two-parameter version of [`Example1`] with weight f(θ)² and tilt g(θ).
#[derive(Debug, Clone, Copy)]
pub struct Example2 {
    pub f: Affine,
    pub g: Affine,
}

impl SpectralFamily for Example2 {
    fn dim(&self) -> usize {
        3
    }
    fn param_count(&self) -> usize {
        2
    }
    fn spectral_at(&self, theta: &[f64]) -> Result<SpectralPoint> {
        let f = self.f.eval(theta);
        let g = self.g.eval(theta);
        let (w1, dir) = tilted(g);
        let mut dp = Vec::new();
        let mut dw = Vec::new();
        for l in 0..2 {
            let df = self.f.partial(theta, l);
            let dg = self.g.partial(theta, l);
            dp.push(vec![2.0 * f * df, -2.0 * f * df]);
            let dw1 = if dg == 0.0 { CVector::zeros(3) } else { dir.scale(dg) };
            dw.push(vec![dw1, CVector::zeros(3)]);
        }
        Ok(SpectralPoint {
            p: vec![f * f, 1.0 - f * f],
            w: vec![w1, e3()],
            dp,
            dw,
        })
    }
}

/// One-parameter spectral family read from a channel-spec file:
/// p_k(θ) = Σ_j c_kj θ^j and |w_k(θ)⟩ = exp(−iθG)|w_k(0)⟩.
#[derive(Debug, Clone)]
pub struct CustomSpectral {
    pub eigenvalues: Vec<Vec<f64>>,
    pub basis: Vec<CVector>,
    pub generator: CMatrix,
}

impl CustomSpectral {
    pub fn new(eigenvalues: Vec<Vec<f64>>, basis: Vec<CVector>, generator: CMatrix) -> Result<Self> {
        let d = generator.nrows();
        if !generator.is_square() || basis.len() != d || eigenvalues.len() != d {
            return Err(QfiError::Invalid {
                what: "custom-spectral family",
                detail: format!(
                    "need {d} eigenvalue polynomials and {d} basis vectors for a {d}x{d} generator"
                ),
            });
        }
        if let Some(v) = basis.iter().find(|v| v.len() != d) {
            return Err(QfiError::DimensionMismatch {
                expected: d,
                actual: v.len(),
            });
        }
        check_generators(&generator, &[])?;
        Ok(CustomSpectral {
            eigenvalues,
            basis,
            generator,
        })
    }
}

fn poly(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &x| acc * t + x)
}

fn poly_derivative(coeffs: &[f64], t: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (j, &x)| acc * t + j as f64 * x)
}

impl SpectralFamily for CustomSpectral {
    fn dim(&self) -> usize {
        self.generator.nrows()
    }
    fn param_count(&self) -> usize {
        1
    }
    fn spectral_at(&self, theta: &[f64]) -> Result<SpectralPoint> {
        let t = theta[0];
        let u = unitary_exp(&self.generator.scale(t))?;
        let mig = self.generator.map(|z| z * Complex64::new(0.0, -1.0));
        let w: Vec<CVector> = self.basis.iter().map(|b| &u * b).collect();
        let dw: Vec<CVector> = w.iter().map(|v| &mig * v).collect();
        Ok(SpectralPoint {
            p: self.eigenvalues.iter().map(|c| poly(c, t)).collect(),
            w,
            dp: vec![self.eigenvalues.iter().map(|c| poly_derivative(c, t)).collect()],
            dw: vec![dw],
        })
    }
}
