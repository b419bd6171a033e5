//! Multi-parameter information matrices, their Loewner ordering, equality
//! conditions and the reduction to one-parameter slices along a direction.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    canonical_partials, fisher_sum, multi_spectral_curve, outcome_probabilities, sld_in_eigenbasis,
    sld_information, sld_score, sm_bound_canonical, sm_bound_spectral, spectral_curve, MultiSpectralCurve,
};
use crate::channels::{ChannelForm, KrausFamily, ParametricChannel, SpectralFamily, SpectralPoint};
use crate::error::{QfiError, Result};
use crate::linalg::{inner, psd_sqrt, trace, CMatrix, CVector, DiffConfig};
use crate::quantum::{DensityMatrix, Povm};

/// Relative slack of Loewner comparisons: tol·(1 + ‖C‖_max).
pub const LOEWNER_TOL: f64 = 1e-8;
const SYMMETRY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InfoKind {
    Fisher,
    Sld,
    Sm,
}

/// Real symmetric m×m information matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfoMatrix {
    pub entries: Vec<Vec<f64>>,
    pub kind: InfoKind,
}

impl InfoMatrix {
    /// Symmetrizes after checking the asymmetry is below 1e-9 (relative).
    pub fn new(entries: Vec<Vec<f64>>, kind: InfoKind) -> Result<Self> {
        let m = entries.len();
        if entries.iter().any(|r| r.len() != m) {
            return Err(QfiError::Invalid {
                what: "information matrix",
                detail: "not square".into(),
            });
        }
        let scale = entries.iter().flatten().fold(1.0f64, |a, &x| a.max(x.abs()));
        let mut out = entries.clone();
        for j in 0..m {
            for k in 0..j {
                let (a, b) = (entries[j][k], entries[k][j]);
                if !((a - b).abs() <= SYMMETRY_TOL * scale) {
                    return Err(QfiError::Consistency {
                        what: "information matrix symmetry",
                        left: a,
                        right: b,
                    });
                }
                let s = 0.5 * (a + b);
                out[j][k] = s;
                out[k][j] = s;
            }
        }
        Ok(InfoMatrix { entries: out, kind })
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_fn(m, m, |j, k| self.entries[j][k])
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().flatten().fold(0.0, |a, &x| a.max(x.abs()))
    }

    /// vᵀ A v
    pub fn quadratic(&self, v: &[f64]) -> f64 {
        let m = self.dim();
        (0..m).flat_map(|j| (0..m).map(move |k| (j, k))).map(|(j, k)| v[j] * self.entries[j][k] * v[k]).sum()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue(&self.matrix())
    }
}

fn min_eigenvalue(a: &DMatrix<f64>) -> f64 {
    if a.is_empty() {
        return 0.0;
    }
    SymmetricEigen::new(a.clone()).eigenvalues.iter().fold(f64::INFINITY, |m, &x| m.min(x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    pub matrix: InfoMatrix,
    /// Outcomes with vanishing probability and derivative, left out of the sum.
    pub dropped: Vec<usize>,
}

/// F_jk = Σ_m ∂_j p_m ∂_k p_m / p_m.
pub fn fisher_matrix(ch: &ParametricChannel, povm: &Povm, theta: &[f64], cfg: &DiffConfig) -> Result<FisherMatrix> {
    let (p, dp) = outcome_probabilities(ch, povm, theta, cfg)?;
    let (f, dropped) = fisher_sum(&p, &dp)?;
    Ok(FisherMatrix {
        matrix: InfoMatrix::new(f, InfoKind::Fisher)?,
        dropped,
    })
}

/// SLD matrices λ̃^{(l)} in the w-basis of the curve, one per parameter.
fn slds_in_eigenbasis(msc: &MultiSpectralCurve) -> Result<Vec<CMatrix>> {
    (0..msc.param_count())
        .map(|l| {
            let sc = msc.slice(l);
            sld_score(&sc)?;
            Ok(sld_in_eigenbasis(&sc))
        })
        .collect()
}

/// λ̃^{(l)} in the standard basis.
pub fn sld_scores(msc: &MultiSpectralCurve) -> Result<Vec<CMatrix>> {
    (0..msc.param_count()).map(|l| sld_score(&msc.slice(l))).collect()
}

/// H_jk = Re tr{λ̃^{(j)} ρ λ̃^{(k)}}.
pub fn sld_matrix(msc: &MultiSpectralCurve) -> Result<InfoMatrix> {
    let ls = slds_in_eigenbasis(msc)?;
    let m = ls.len();
    let d = msc.dim();
    let mut h = vec![vec![0.0; m]; m];
    for j in 0..m {
        for k in 0..m {
            let mut s = Complex64::new(0.0, 0.0);
            for a in 0..d {
                for b in (0..d).filter(|&b| msc.support_mask[b]) {
                    s += ls[j][(a, b)] * msc.p[b] * ls[k][(b, a)];
                }
            }
            h[j][k] = s.re;
        }
    }
    InfoMatrix::new(h, InfoKind::Sld)
}

/// C_jk = 4 Σ_k Re⟨v_k^{(j)}|v_k^{(l)}⟩ with |v_k⟩ = √p_k|w_k⟩.
pub fn sm_matrix_spectral(msc: &MultiSpectralCurve) -> Result<InfoMatrix> {
    let m = msc.param_count();
    let vs: Vec<Vec<CVector>> = (0..m).map(|l| msc.amplitude_partials(l)).collect();
    let mut c = vec![vec![0.0; m]; m];
    for j in 0..m {
        for k in 0..m {
            c[j][k] = 4.0 * vs[j].iter().zip(&vs[k]).map(|(a, b)| inner(a, b).re).sum::<f64>();
        }
    }
    InfoMatrix::new(c, InfoKind::Sm)
}

/// Multi-parameter SM bound: C_jk = 4 Σ_l Re tr{Υ_l^{(j)} ρ₀ Υ_l^{(k)†}}.
///
/// Kraus-curve channels use the canonical operators directly; spectral-form
/// channels use the same sum written in terms of the curve.
pub fn sm_matrix(ch: &ParametricChannel, theta: &[f64], cfg: &DiffConfig) -> Result<InfoMatrix> {
    match ch.form() {
        ChannelForm::Kraus(_) => {
            let ck = canonical_partials(ch, theta, cfg, false)?;
            let psi = ch.input_state().expect("kraus channels carry an input").vector();
            let m = ck.partials.len();
            let images: Vec<Vec<CVector>> = ck.partials.iter().map(|ops| ops.iter().map(|u| u * psi).collect()).collect();
            let mut c = vec![vec![0.0; m]; m];
            for j in 0..m {
                for k in 0..m {
                    c[j][k] = 4.0 * images[j].iter().zip(&images[k]).map(|(a, b)| inner(b, a).re).sum::<f64>();
                }
            }
            InfoMatrix::new(c, InfoKind::Sm)
        }
        ChannelForm::Spectral(_) => sm_matrix_spectral(&multi_spectral_curve(ch, theta, cfg)?),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiAttainability {
    pub attainable: bool,
    /// max over l and supported j, k of |⟨w_j^{(l)}|w_k⟩|
    pub residual: f64,
    pub tol: f64,
    /// Every supported eigenvector is stationary in every direction.
    pub quasi_classical: bool,
    /// Every eigenvalue is strictly positive; equality then requires a
    /// quasi-classical channel.
    pub full_support: bool,
    /// The output is pure. For a unitary channel the residual is
    /// max_l |tr{U ρ₀ U^{(l)†}}|.
    pub pure_output: bool,
}

/// H = C_Υ holds iff ⟨w_j^{(l)}|w_k⟩ = 0 for all l and supported j, k.
pub fn multi_attainability_check(msc: &MultiSpectralCurve, tol: f64) -> MultiAttainability {
    let d = msc.dim();
    let sup: Vec<usize> = (0..d).filter(|&k| msc.support_mask[k]).collect();
    let mut residual: f64 = 0.0;
    let mut stationary: f64 = 0.0;
    for l in 0..msc.param_count() {
        for &j in &sup {
            stationary = stationary.max(msc.dw[l][j].norm());
            for &k in &sup {
                residual = residual.max(inner(&msc.dw[l][j], &msc.w[k]).norm());
            }
        }
    }
    MultiAttainability {
        attainable: residual < tol,
        residual,
        tol,
        quasi_classical: stationary < tol,
        full_support: sup.len() == d,
        pure_output: sup.len() == 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoewnerVerdict {
    pub holds: bool,
    /// Smallest eigenvalue of (upper − lower).
    pub min_eigenvalue: f64,
    pub tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoewnerReport {
    pub fisher_le_sld: Option<LoewnerVerdict>,
    pub sld_le_sm: LoewnerVerdict,
    pub fisher_le_sm: Option<LoewnerVerdict>,
}

fn verdict(lower: &InfoMatrix, upper: &InfoMatrix, tol: f64) -> Result<LoewnerVerdict> {
    if lower.dim() != upper.dim() {
        return Err(QfiError::DimensionMismatch {
            expected: upper.dim(),
            actual: lower.dim(),
        });
    }
    let min = min_eigenvalue(&(upper.matrix() - lower.matrix()));
    Ok(LoewnerVerdict {
        holds: min >= -tol,
        min_eigenvalue: min,
        tol,
    })
}

/// F ≤ H ≤ C_Υ with slack `rel_tol`·(1 + ‖C‖_max).
pub fn loewner_report(f: Option<&InfoMatrix>, h: &InfoMatrix, c: &InfoMatrix, rel_tol: f64) -> Result<LoewnerReport> {
    let tol = rel_tol * (1.0 + c.max_abs());
    Ok(LoewnerReport {
        fisher_le_sld: f.map(|f| verdict(f, h, tol)).transpose()?,
        sld_le_sm: verdict(h, c, tol)?,
        fisher_le_sm: f.map(|f| verdict(f, c, tol)).transpose()?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CramerRao {
    /// Moore-Penrose pseudo-inverse of the information matrix, divided by N.
    pub covariance_bound: Vec<Vec<f64>>,
    pub rank: usize,
    pub full_rank: bool,
}

/// Lower bound on the covariance of N-copy estimators. A rank-deficient
/// matrix is inverted on its range only, which `rank` discloses.
pub fn cramer_rao(info: &InfoMatrix, copies: usize) -> Result<CramerRao> {
    if copies == 0 {
        return Err(QfiError::Invalid {
            what: "copies",
            detail: "must be positive".into(),
        });
    }
    let m = info.dim();
    let es = SymmetricEigen::new(info.matrix());
    let cut = 1e-10 * es.eigenvalues.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
    let mut inv = DMatrix::<f64>::zeros(m, m);
    let mut rank = 0;
    for (i, &x) in es.eigenvalues.iter().enumerate() {
        if x.abs() > cut && x != 0.0 {
            let v = es.eigenvectors.column(i);
            inv += (v * v.transpose()) / x;
            rank += 1;
        }
    }
    let n = copies as f64;
    Ok(CramerRao {
        covariance_bound: (0..m).map(|j| (0..m).map(|k| inv[(j, k)] / n).collect()).collect(),
        rank,
        full_rank: rank == m,
    })
}

/// Σ_l v^l X_l
fn combine_ops(parts: &[CMatrix], v: &[f64]) -> CMatrix {
    parts.iter().zip(v).skip(1).fold(parts[0].scale(v[0]), |acc, (x, &s)| acc + x.scale(s))
}

fn combine_vecs(parts: &[CVector], v: &[f64]) -> CVector {
    parts.iter().zip(v).skip(1).fold(parts[0].scale(v[0]), |acc, (x, &s)| acc + x.scale(s))
}

fn shifted(theta0: &[f64], v: &[f64], t: f64) -> Vec<f64> {
    theta0.iter().zip(v).map(|(a, b)| a + t * b).collect()
}

#[derive(Debug)]
struct KrausSlice {
    base: Arc<dyn KrausFamily>,
    theta0: Vec<f64>,
    v: Vec<f64>,
}

impl KrausFamily for KrausSlice {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn param_count(&self) -> usize {
        1
    }
    fn kraus_at(&self, theta: &[f64]) -> Result<Vec<CMatrix>> {
        self.base.kraus_at(&shifted(&self.theta0, &self.v, theta[0]))
    }
    fn kraus_partial(&self, theta: &[f64], _l: usize) -> Option<Result<Vec<CMatrix>>> {
        let at = shifted(&self.theta0, &self.v, theta[0]);
        let mut parts = Vec::with_capacity(self.v.len());
        for l in 0..self.v.len() {
            match self.base.kraus_partial(&at, l)? {
                Ok(p) => parts.push(p),
                Err(e) => return Some(Err(e)),
            }
        }
        let n = parts[0].len();
        Some(Ok((0..n)
            .map(|k| {
                let ops: Vec<CMatrix> = parts.iter().map(|p| p[k].clone()).collect();
                combine_ops(&ops, &self.v)
            })
            .collect()))
    }
}

#[derive(Debug)]
struct SpectralSlice {
    base: Arc<dyn SpectralFamily>,
    theta0: Vec<f64>,
    v: Vec<f64>,
}

impl SpectralFamily for SpectralSlice {
    fn dim(&self) -> usize {
        self.base.dim()
    }
    fn param_count(&self) -> usize {
        1
    }
    fn spectral_at(&self, theta: &[f64]) -> Result<SpectralPoint> {
        let sp = self.base.spectral_at(&shifted(&self.theta0, &self.v, theta[0]))?;
        let n = sp.p.len();
        let dp = (0..n)
            .map(|k| sp.dp.iter().zip(&self.v).map(|(d, s)| d[k] * s).sum())
            .collect();
        let dw = (0..n)
            .map(|k| {
                let parts: Vec<CVector> = sp.dw.iter().map(|d| d[k].clone()).collect();
                combine_vecs(&parts, &self.v)
            })
            .collect();
        Ok(SpectralPoint {
            p: sp.p,
            w: sp.w,
            dp: vec![dp],
            dw: vec![dw],
        })
    }
}

/// The one-parameter channel t ↦ ch(θ₀ + t·v), restricted to the largest
/// interval of t that keeps θ₀ + t·v inside the domain box.
pub fn directional_slice(ch: &ParametricChannel, theta0: &[f64], v: &[f64]) -> Result<ParametricChannel> {
    let m = ch.param_count();
    if theta0.len() != m || v.len() != m {
        return Err(QfiError::DimensionMismatch {
            expected: m,
            actual: if theta0.len() != m { theta0.len() } else { v.len() },
        });
    }
    if v.iter().all(|&x| x == 0.0) || v.iter().any(|x| !x.is_finite()) {
        return Err(QfiError::Invalid {
            what: "direction",
            detail: format!("{v:?} is not a usable direction"),
        });
    }
    ch.check_domain(theta0, 0.0)?;
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for ((&(a, b), &t), &s) in ch.domain().iter().zip(theta0).zip(v) {
        if s != 0.0 {
            let (x, y) = ((a - t) / s, (b - t) / s);
            lo = lo.max(x.min(y));
            hi = hi.min(x.max(y));
        }
    }
    let name = format!("{} along {v:?}", ch.name());
    let (theta0, v) = (theta0.to_vec(), v.to_vec());
    match ch.form() {
        ChannelForm::Kraus(base) => {
            let fam = KrausSlice {
                base: base.clone(),
                theta0,
                v,
            };
            let input = ch.input_state().expect("kraus channels carry an input").clone();
            ParametricChannel::from_kraus(&name, Arc::new(fam), input, vec![(lo, hi)])
        }
        ChannelForm::Spectral(base) => {
            let fam = SpectralSlice {
                base: base.clone(),
                theta0,
                v,
            };
            ParametricChannel::from_spectral(&name, Arc::new(fam), vec![(lo, hi)])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionalReport {
    pub direction: Vec<f64>,
    /// max_k ‖dΥ_k/dt − Σ_l Υ_k^{(l)} v^l‖ for Kraus-curve channels.
    pub kraus_mismatch: Option<f64>,
    pub h_slice: f64,
    pub h_quadratic: f64,
    pub c_slice: f64,
    pub c_quadratic: f64,
    /// Largest of the relative H and C mismatches.
    pub relative_mismatch: f64,
    pub consistent: bool,
}

/// Relative tolerance of the directional identities.
pub const DIRECTIONAL_TOL: f64 = 1e-5;

/// Compares the one-parameter slice along `v` with the matrix quadratic
/// forms vᵀHv and vᵀCv, and the slice's canonical derivative with the
/// chain-rule combination of partials.
pub fn directional_reduction_check(
    ch: &ParametricChannel,
    theta: &[f64],
    v: &[f64],
    cfg: &DiffConfig,
) -> Result<DirectionalReport> {
    let mut out = directional_reductions(ch, theta, std::slice::from_ref(&v.to_vec()), cfg)?;
    Ok(out.remove(0))
}

/// [`directional_reduction_check`] for several directions, sharing the
/// matrix bounds and partials between them.
pub fn directional_reductions(
    ch: &ParametricChannel,
    theta: &[f64],
    directions: &[Vec<f64>],
    cfg: &DiffConfig,
) -> Result<Vec<DirectionalReport>> {
    for v in directions {
        directional_slice(ch, theta, v)?;
    }
    let msc = multi_spectral_curve(ch, theta, cfg)?;
    let h = sld_matrix(&msc)?;
    let c = sm_matrix(ch, theta, cfg)?;
    let multi = if ch.is_kraus() {
        Some(canonical_partials(ch, theta, cfg, false)?)
    } else {
        None
    };
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    directions
        .iter()
        .map(|v| {
            let slice = directional_slice(ch, theta, v)?;
            let sc = spectral_curve(&slice, 0.0, cfg)?;
            let h_slice = sld_information(&sc)?;
            let (c_slice, kraus_mismatch) = match &multi {
                Some(multi) => {
                    let single = canonical_partials(&slice, &[0.0], cfg, false)?;
                    let mut worst: f64 = 0.0;
                    for (k, d) in single.partials[0].iter().enumerate() {
                        let parts: Vec<CMatrix> = multi.partials.iter().map(|p| p[k].clone()).collect();
                        let diff = d - combine_ops(&parts, v);
                        worst = worst.max(diff.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt());
                    }
                    (sm_bound_canonical(&slice, 0.0, cfg)?, Some(worst))
                }
                None => (sm_bound_spectral(&sc), None),
            };
            let (hq, cq) = (h.quadratic(v), c.quadratic(v));
            let relative_mismatch = rel(h_slice, hq).max(rel(c_slice, cq));
            let scale = v.iter().map(|x| x * x).sum::<f64>().max(1.0);
            let consistent = relative_mismatch < DIRECTIONAL_TOL
                && kraus_mismatch.is_none_or(|x| x < DIRECTIONAL_TOL * scale);
            Ok(DirectionalReport {
                direction: v.to_vec(),
                kraus_mismatch,
                h_slice,
                h_quadratic: hq,
                c_slice,
                c_quadratic: cq,
                relative_mismatch,
                consistent,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSldCondition {
    /// `xi[m][l]`
    pub xi: Vec<Vec<f64>>,
    /// `residuals[m][l]`
    pub residuals: Vec<Vec<f64>>,
    pub satisfied: bool,
    pub tol: f64,
}

/// Tests M_m^{1/2} λ̃^{(l)} ρ^{1/2} = ξ_m^{(l)} M_m^{1/2} ρ^{1/2} for all m, l,
/// with a real multiplier per element and parameter.
pub fn povm_multi_sld_condition_check(
    povm: &Povm,
    lambdas: &[CMatrix],
    rho: &DensityMatrix,
    tol: f64,
) -> Result<MultiSldCondition> {
    if povm.dim() != rho.dim() {
        return Err(QfiError::DimensionMismatch {
            expected: rho.dim(),
            actual: povm.dim(),
        });
    }
    let sqrt_rho = psd_sqrt(rho.matrix())?;
    let mut xi = Vec::with_capacity(povm.len());
    let mut residuals = Vec::with_capacity(povm.len());
    for m in povm.elements() {
        let sm = psd_sqrt(m)?;
        let b = &sm * &sqrt_rho;
        let bb = b.iter().map(|z| z.norm_sqr()).sum::<f64>();
        let mut xs = Vec::with_capacity(lambdas.len());
        let mut rs = Vec::with_capacity(lambdas.len());
        for l in lambdas {
            if bb.sqrt() < tol {
                xs.push(0.0);
                rs.push(0.0);
                continue;
            }
            let a = &sm * l * &sqrt_rho;
            let ba = trace(&(b.adjoint() * &a));
            let x = ba.re / bb;
            let r = (&a - b.scale(x)).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt() + ba.im.abs() / bb;
            xs.push(x);
            rs.push(r);
        }
        xi.push(xs);
        residuals.push(rs);
    }
    let satisfied = residuals.iter().flatten().all(|&r| r < tol);
    Ok(MultiSldCondition {
        xi,
        residuals,
        satisfied,
        tol,
    })
}

#[cfg(test)]
mod tests;
