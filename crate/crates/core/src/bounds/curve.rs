//! Output-state spectral curves: eigenvalues, eigenvectors and their
//! first derivatives at one parameter point.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::canonical::{canonical_partials, expect_one_parameter, CanonicalKraus, SUPPORT_TOL};
use crate::channels::{ChannelForm, ParametricChannel};
use crate::error::{QfiError, Result};
use crate::linalg::{self, hermitian_eigendecompose, identity, inner, outer, CMatrix, CVector, DiffConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GaugeSource {
    CanonicalKraus,
    SpectralForm,
}

impl GaugeSource {
    pub fn name(self) -> &'static str {
        match self {
            GaugeSource::CanonicalKraus => "canonical-kraus",
            GaugeSource::SpectralForm => "spectral-form",
        }
    }
}

/// Spectral data with partials along every parameter axis.
///
/// Supported entries (p_k > [`SUPPORT_TOL`]) come first in descending order
/// of p; the remaining vectors complete an orthonormal basis and carry
/// p = 0 and zero derivatives.
#[derive(Debug, Clone)]
pub struct MultiSpectralCurve {
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
    pub w: Vec<CVector>,
    /// `dp[l][k]`
    pub dp: Vec<Vec<f64>>,
    /// `dw[l][k]`
    pub dw: Vec<Vec<CVector>>,
    pub gauge_source: GaugeSource,
    pub support_mask: Vec<bool>,
    pub resolved_degeneracy: bool,
}

/// One-parameter spectral curve.
#[derive(Debug, Clone)]
pub struct SpectralCurve {
    pub theta: f64,
    pub p: Vec<f64>,
    pub w: Vec<CVector>,
    pub dp: Vec<f64>,
    pub dw: Vec<CVector>,
    pub gauge_source: GaugeSource,
    pub support_mask: Vec<bool>,
    pub resolved_degeneracy: bool,
}

impl SpectralCurve {
    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn support(&self) -> usize {
        self.support_mask.iter().filter(|&&s| s).count()
    }

    /// ⟨w_j'|w_k⟩, falling back to −⟨w_j|w_k'⟩ when p_j = 0.
    pub fn overlap(&self, j: usize, k: usize) -> Complex64 {
        if self.support_mask[j] {
            inner(&self.dw[j], &self.w[k])
        } else if self.support_mask[k] {
            -inner(&self.w[j], &self.dw[k])
        } else {
            Complex64::new(0.0, 0.0)
        }
    }

    /// Unitary with columns w_k.
    pub fn basis(&self) -> CMatrix {
        CMatrix::from_columns(&self.w)
    }

    /// ρ = Σ p_k |w_k⟩⟨w_k|
    pub fn state(&self) -> CMatrix {
        let d = self.dim();
        (0..d)
            .filter(|&k| self.support_mask[k])
            .fold(CMatrix::zeros(d, d), |acc, k| acc + outer(&self.w[k], &self.w[k]).scale(self.p[k]))
    }

    /// ρ' = Σ p_k'|w_k⟩⟨w_k| + p_k(|w_k'⟩⟨w_k| + |w_k⟩⟨w_k'|)
    pub fn state_derivative(&self) -> CMatrix {
        let d = self.dim();
        let mut acc = CMatrix::zeros(d, d);
        for k in (0..d).filter(|&k| self.support_mask[k]) {
            acc += outer(&self.w[k], &self.w[k]).scale(self.dp[k]);
            let t = outer(&self.dw[k], &self.w[k]).scale(self.p[k]);
            acc += &t + t.adjoint();
        }
        acc
    }

    /// Violations of the curve invariants: `.0` covers normalization and
    /// orthonormality, `.1` covers Σp' = 0, Re⟨w_k'|w_k⟩ = 0 and
    /// ⟨w_j'|w_k⟩ = −⟨w_j|w_k'⟩*.
    pub fn invariant_residuals(&self) -> (f64, f64) {
        let d = self.dim();
        let mut state = (self.p.iter().sum::<f64>() - 1.0).abs();
        for j in 0..d {
            for k in 0..d {
                let want = if j == k { 1.0 } else { 0.0 };
                state = state.max((inner(&self.w[j], &self.w[k]) - want).norm());
            }
        }
        let mut deriv = self.dp.iter().sum::<f64>().abs();
        for j in (0..d).filter(|&j| self.support_mask[j]) {
            deriv = deriv.max(inner(&self.dw[j], &self.w[j]).re.abs());
            for k in (0..d).filter(|&k| self.support_mask[k]) {
                let a = inner(&self.dw[j], &self.w[k]);
                let b = inner(&self.w[j], &self.dw[k]);
                deriv = deriv.max((a + b).norm());
            }
        }
        (state, deriv)
    }
}

impl MultiSpectralCurve {
    pub fn dim(&self) -> usize {
        self.p.len()
    }

    pub fn param_count(&self) -> usize {
        self.dp.len()
    }

    /// The one-parameter curve along axis `l`.
    pub fn slice(&self, l: usize) -> SpectralCurve {
        SpectralCurve {
            theta: self.theta[l],
            p: self.p.clone(),
            w: self.w.clone(),
            dp: self.dp[l].clone(),
            dw: self.dw[l].clone(),
            gauge_source: self.gauge_source,
            support_mask: self.support_mask.clone(),
            resolved_degeneracy: self.resolved_degeneracy,
        }
    }

    /// Unnormalized partials |v_k^{(l)}⟩ = ∂(√p_k |w_k⟩)/∂θ^l for supported k.
    pub fn amplitude_partials(&self, l: usize) -> Vec<CVector> {
        (0..self.dim())
            .filter(|&k| self.support_mask[k])
            .map(|k| {
                let s = self.p[k].sqrt();
                self.dw[l][k].scale(s) + self.w[k].scale(self.dp[l][k] / (2.0 * s))
            })
            .collect()
    }
}

const STATE_RESIDUAL_TOL: f64 = 1e-9;
const DERIVATIVE_RESIDUAL_TOL: f64 = 1e-6;

struct Supported {
    p: f64,
    w: CVector,
    dp: Vec<f64>,
    dw: Vec<CVector>,
}

/// Orders supported entries, appends an orthonormal completion and checks
/// the invariants.
fn assemble(
    theta: &[f64],
    d: usize,
    mut entries: Vec<Supported>,
    gauge_source: GaugeSource,
    resolved: bool,
) -> Result<MultiSpectralCurve> {
    let m = theta.len();
    entries.sort_by(|a, b| b.p.partial_cmp(&a.p).unwrap_or(std::cmp::Ordering::Equal));
    let r = entries.len();
    if r > d {
        return Err(QfiError::Invalid {
            what: "spectral curve",
            detail: format!("{r} supported eigenvectors in dimension {d}"),
        });
    }
    let mut p = Vec::with_capacity(d);
    let mut w = Vec::with_capacity(d);
    let mut dp = vec![Vec::with_capacity(d); m];
    let mut dw = vec![Vec::with_capacity(d); m];
    let mut proj = identity(d);
    for e in entries {
        proj -= outer(&e.w, &e.w);
        p.push(e.p);
        w.push(e.w);
        for l in 0..m {
            dp[l].push(e.dp[l]);
            dw[l].push(e.dw[l].clone());
        }
    }
    if r < d {
        let es = hermitian_eigendecompose(&(&proj + proj.adjoint()).scale(0.5))?;
        // top d − r eigenvectors of the complementary projector
        for i in 0..(d - r) {
            let v = es.vector(d - 1 - i);
            p.push(0.0);
            w.push(v);
            for l in 0..m {
                dp[l].push(0.0);
                dw[l].push(CVector::zeros(d));
            }
        }
    }
    let support_mask = (0..d).map(|k| k < r).collect();
    let curve = MultiSpectralCurve {
        theta: theta.to_vec(),
        p,
        w,
        dp,
        dw,
        gauge_source,
        support_mask,
        resolved_degeneracy: resolved,
    };
    for l in 0..m {
        let (state, deriv) = curve.slice(l).invariant_residuals();
        if !(state <= STATE_RESIDUAL_TOL) {
            return Err(QfiError::Consistency {
                what: "spectral curve normalization",
                left: state,
                right: STATE_RESIDUAL_TOL,
            });
        }
        if !(deriv <= DERIVATIVE_RESIDUAL_TOL) {
            return Err(QfiError::Consistency {
                what: "spectral curve derivative identities",
                left: deriv,
                right: DERIVATIVE_RESIDUAL_TOL,
            });
        }
    }
    Ok(curve)
}

/// Curve induced by a canonical decomposition: v_k = Υ_k|ψ₀⟩,
/// p_k = ⟨v_k|v_k⟩, |w_k⟩ = |v_k⟩/√p_k.
pub(crate) fn curve_from_canonical(
    theta: &[f64],
    psi: &CVector,
    ck: &CanonicalKraus,
) -> Result<MultiSpectralCurve> {
    let d = psi.len();
    let entries = (0..ck.support)
        .map(|k| {
            let v = &ck.ops.operators()[k] * psi;
            let p = v.norm_squared();
            let s = p.sqrt();
            let mut dp = Vec::new();
            let mut dw = Vec::new();
            for part in &ck.partials {
                let dv = &part[k] * psi;
                let dpk = 2.0 * linalg::inner(&v, &dv).re;
                dw.push(dv.unscale(s) - v.scale(dpk / (2.0 * p * s)));
                dp.push(dpk);
            }
            Supported {
                p,
                w: v.unscale(s),
                dp,
                dw,
            }
        })
        .collect();
    assemble(theta, d, entries, GaugeSource::CanonicalKraus, ck.resolved_degeneracy)
}

pub(crate) fn multi_curve(
    ch: &ParametricChannel,
    theta: &[f64],
    cfg: &DiffConfig,
    resolve_degenerate: bool,
) -> Result<MultiSpectralCurve> {
    match ch.form() {
        ChannelForm::Kraus(_) => {
            let ck = canonical_partials(ch, theta, cfg, resolve_degenerate)?;
            curve_from_canonical(theta, ch.pure_input()?.vector(), &ck)
        }
        ChannelForm::Spectral(fam) => {
            ch.check_domain(theta, 0.0)?;
            let sp = fam.spectral_at(theta)?;
            let m = ch.param_count();
            let entries = (0..sp.p.len())
                .filter(|&k| sp.p[k] > SUPPORT_TOL)
                .map(|k| Supported {
                    p: sp.p[k],
                    w: sp.w[k].clone(),
                    dp: (0..m).map(|l| sp.dp[l][k]).collect(),
                    dw: (0..m).map(|l| sp.dw[l][k].clone()).collect(),
                })
                .collect();
            assemble(theta, ch.dim(), entries, GaugeSource::SpectralForm, false)
        }
    }
}

/// Spectral curve of a one-parameter channel at θ.
///
/// Kraus-curve channels inherit eigenvector phases from the canonical
/// decomposition; spectral-form channels use the family's own data.
pub fn spectral_curve(ch: &ParametricChannel, theta: f64, cfg: &DiffConfig) -> Result<SpectralCurve> {
    expect_one_parameter(ch)?;
    Ok(multi_curve(ch, &[theta], cfg, true)?.slice(0))
}

/// Spectral curve with partials along every axis, all sharing the same
/// center basis. Degenerate supported eigenvalues are an error.
pub fn multi_spectral_curve(ch: &ParametricChannel, theta: &[f64], cfg: &DiffConfig) -> Result<MultiSpectralCurve> {
    multi_curve(ch, theta, cfg, false)
}
