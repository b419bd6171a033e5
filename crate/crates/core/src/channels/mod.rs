//! Parametric channel families.
//!
//! A [`ParametricChannel`] is either a differentiable Kraus-operator curve
//! acting on a fixed pure input, or a family of output states given directly
//! by their spectral data. Both present a uniform interface to the bound
//! computations.

mod families;
mod spec_file;

use std::fmt;
use std::sync::Arc;

use crate::error::{QfiError, Result};
use crate::linalg::{self, combine_stencil, CMatrix, CVector, DiffConfig};
use crate::quantum::{apply_ops, DensityMatrix, KrausSet, PureState, COMPLETENESS_TOL};

pub use families::{
    AmplitudeDamping, Axis, DampedRotation, Dephasing, Dephasing2, Depolarizing, Example1, Example2,
    GeneratorUnitary, QuasiClassical, Remixed, Rotation, Stinespring, CustomSpectral, Affine,
};
pub use spec_file::{parse_channel_spec, ChannelSpec};

/// A channel given as a differentiable curve θ ↦ {E_k(θ)}.
pub trait KrausFamily: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn param_count(&self) -> usize;
    fn kraus_at(&self, theta: &[f64]) -> Result<Vec<CMatrix>>;

    /// ∂E_k/∂θ^l, when known in closed form.
    fn kraus_partial(&self, _theta: &[f64], _l: usize) -> Option<Result<Vec<CMatrix>>> {
        None
    }
}

/// Spectral data of an output state at one parameter point.
///
/// Vectors may cover only part of the space; zero-weight entries are allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralPoint {
    pub p: Vec<f64>,
    pub w: Vec<CVector>,
    /// `dp[l][k]` = ∂p_k/∂θ^l
    pub dp: Vec<Vec<f64>>,
    /// `dw[l][k]` = ∂|w_k⟩/∂θ^l
    pub dw: Vec<Vec<CVector>>,
}

/// A channel given directly by its family of output states.
pub trait SpectralFamily: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;
    fn param_count(&self) -> usize;
    fn spectral_at(&self, theta: &[f64]) -> Result<SpectralPoint>;
}

#[derive(Debug, Clone)]
pub enum ChannelForm {
    Kraus(Arc<dyn KrausFamily>),
    Spectral(Arc<dyn SpectralFamily>),
}

#[derive(Debug, Clone)]
pub struct ParametricChannel {
    name: String,
    form: ChannelForm,
    input: Option<PureState>,
    domain: Vec<(f64, f64)>,
}

impl ParametricChannel {
    pub fn from_kraus(
        name: impl Into<String>,
        family: Arc<dyn KrausFamily>,
        input: PureState,
        domain: Vec<(f64, f64)>,
    ) -> Result<Self> {
        if input.dim() != family.dim() {
            return Err(QfiError::DimensionMismatch {
                expected: family.dim(),
                actual: input.dim(),
            });
        }
        Self::checked(ParametricChannel {
            name: name.into(),
            form: ChannelForm::Kraus(family),
            input: Some(input),
            domain,
        })
    }

    pub fn from_spectral(
        name: impl Into<String>,
        family: Arc<dyn SpectralFamily>,
        domain: Vec<(f64, f64)>,
    ) -> Result<Self> {
        Self::checked(ParametricChannel {
            name: name.into(),
            form: ChannelForm::Spectral(family),
            input: None,
            domain,
        })
    }

    fn checked(ch: Self) -> Result<Self> {
        if ch.domain.len() != ch.param_count() {
            return Err(QfiError::Invalid {
                what: "domain",
                detail: format!(
                    "{} intervals for {} parameters",
                    ch.domain.len(),
                    ch.param_count()
                ),
            });
        }
        if ch.domain.iter().any(|&(a, b)| !(a < b)) {
            return Err(QfiError::Invalid {
                what: "domain",
                detail: format!("empty interval in {:?}", ch.domain),
            });
        }
        Ok(ch)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn form(&self) -> &ChannelForm {
        &self.form
    }

    pub fn is_kraus(&self) -> bool {
        matches!(self.form, ChannelForm::Kraus(_))
    }

    pub fn dim(&self) -> usize {
        match &self.form {
            ChannelForm::Kraus(f) => f.dim(),
            ChannelForm::Spectral(f) => f.dim(),
        }
    }

    pub fn param_count(&self) -> usize {
        match &self.form {
            ChannelForm::Kraus(f) => f.param_count(),
            ChannelForm::Spectral(f) => f.param_count(),
        }
    }

    pub fn input_state(&self) -> Option<&PureState> {
        self.input.as_ref()
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    /// Same family with a different input state.
    pub fn with_input(&self, input: PureState) -> Result<Self> {
        match &self.form {
            ChannelForm::Kraus(f) => {
                Self::from_kraus(self.name.clone(), f.clone(), input, self.domain.clone())
            }
            ChannelForm::Spectral(_) => Err(QfiError::WrongForm {
                required: "Kraus-curve",
            }),
        }
    }

    pub fn kraus_family(&self) -> Result<&Arc<dyn KrausFamily>> {
        match &self.form {
            ChannelForm::Kraus(f) => Ok(f),
            ChannelForm::Spectral(_) => Err(QfiError::WrongForm {
                required: "Kraus-curve",
            }),
        }
    }

    pub fn spectral_family(&self) -> Result<&Arc<dyn SpectralFamily>> {
        match &self.form {
            ChannelForm::Spectral(f) => Ok(f),
            ChannelForm::Kraus(_) => Err(QfiError::WrongForm {
                required: "spectral-form",
            }),
        }
    }

    pub(crate) fn pure_input(&self) -> Result<&PureState> {
        self.input.as_ref().ok_or(QfiError::Invalid {
            what: "channel",
            detail: "Kraus-curve channel without an input state".into(),
        })
    }

    fn check_arity(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.param_count() {
            return Err(QfiError::DimensionMismatch {
                expected: self.param_count(),
                actual: theta.len(),
            });
        }
        Ok(())
    }

    /// Errors unless every coordinate θ^l ± `reach` lies inside the domain.
    pub fn check_domain(&self, theta: &[f64], reach: f64) -> Result<()> {
        self.check_arity(theta)?;
        let ok = theta
            .iter()
            .zip(&self.domain)
            .all(|(&t, &(a, b))| t.is_finite() && t - reach >= a && t + reach <= b);
        if ok {
            Ok(())
        } else {
            Err(QfiError::OutOfDomain {
                theta: theta.to_vec(),
                reach,
                domain: self.domain.clone(),
            })
        }
    }

    /// Same as [`check_domain`](Self::check_domain) but only along axis `l`.
    pub fn check_axis(&self, theta: &[f64], l: usize, reach: f64) -> Result<()> {
        self.check_domain(theta, 0.0)?;
        let (a, b) = self.domain[l];
        if theta[l] - reach >= a && theta[l] + reach <= b {
            Ok(())
        } else {
            Err(QfiError::OutOfDomain {
                theta: theta.to_vec(),
                reach,
                domain: self.domain.clone(),
            })
        }
    }

    pub fn kraus_at(&self, theta: &[f64]) -> Result<KrausSet> {
        self.check_domain(theta, 0.0)?;
        KrausSet::new(self.kraus_family()?.kraus_at(theta)?)
    }

    pub fn spectral_at(&self, theta: &[f64]) -> Result<SpectralPoint> {
        self.check_domain(theta, 0.0)?;
        self.spectral_family()?.spectral_at(theta)
    }

    /// Output state ρ(θ).
    pub fn output_state(&self, theta: &[f64]) -> Result<DensityMatrix> {
        self.check_domain(theta, 0.0)?;
        let m = match &self.form {
            ChannelForm::Kraus(f) => {
                let rho0 = DensityMatrix::from(self.pure_input()?);
                apply_ops(&f.kraus_at(theta)?, rho0.matrix())
            }
            ChannelForm::Spectral(f) => {
                let sp = f.spectral_at(theta)?;
                let d = f.dim();
                sp.p.iter()
                    .zip(&sp.w)
                    .fold(CMatrix::zeros(d, d), |acc, (&p, w)| acc + linalg::outer(w, w).scale(p))
            }
        };
        DensityMatrix::new(m)
    }

    /// ∂ρ/∂θ^l, built from analytic derivatives where the family has them.
    pub fn output_derivative(&self, theta: &[f64], l: usize, cfg: &DiffConfig) -> Result<CMatrix> {
        match &self.form {
            ChannelForm::Kraus(f) => {
                let rho0 = DensityMatrix::from(self.pure_input()?);
                let ops = f.kraus_at(theta)?;
                let dops = kraus_derivative(self, theta, l, cfg)?;
                let d = self.dim();
                let mut acc = CMatrix::zeros(d, d);
                for (e, de) in ops.iter().zip(&dops) {
                    let t = de * rho0.matrix() * e.adjoint();
                    acc += &t + t.adjoint();
                }
                Ok(acc)
            }
            ChannelForm::Spectral(f) => {
                self.check_domain(theta, 0.0)?;
                let sp = f.spectral_at(theta)?;
                let d = self.dim();
                let mut acc = CMatrix::zeros(d, d);
                for k in 0..sp.p.len() {
                    let w = &sp.w[k];
                    let dw = &sp.dw[l][k];
                    acc += linalg::outer(w, w).scale(sp.dp[l][k]);
                    let t = linalg::outer(dw, w).scale(sp.p[k]);
                    acc += &t + t.adjoint();
                }
                Ok(acc)
            }
        }
    }

    /// Checks the form invariants at one parameter point and returns the
    /// worst residual.
    pub fn invariant_residual(&self, theta: &[f64]) -> Result<f64> {
        match &self.form {
            ChannelForm::Kraus(f) => {
                let ks = KrausSet::new_unchecked(f.kraus_at(theta)?)?;
                Ok(ks.completeness_defect())
            }
            ChannelForm::Spectral(f) => {
                let sp = f.spectral_at(theta)?;
                let mut worst = (sp.p.iter().sum::<f64>() - 1.0).abs();
                for j in 0..sp.w.len() {
                    for k in 0..sp.w.len() {
                        let want = if j == k { 1.0 } else { 0.0 };
                        worst = worst.max((linalg::inner(&sp.w[j], &sp.w[k]) - want).norm());
                    }
                }
                if let Some(neg) = sp.p.iter().copied().find(|&p| p < -1e-10) {
                    worst = worst.max(-neg);
                }
                Ok(worst)
            }
        }
    }

    /// Validates the form invariants at the domain corners and midpoint.
    pub fn validate(&self) -> Result<()> {
        let mid: Vec<f64> = self.domain.iter().map(|&(a, b)| 0.5 * (a + b)).collect();
        let lo: Vec<f64> = self.domain.iter().map(|d| d.0).collect();
        let hi: Vec<f64> = self.domain.iter().map(|d| d.1).collect();
        let tol = match self.form {
            ChannelForm::Kraus(_) => COMPLETENESS_TOL,
            ChannelForm::Spectral(_) => 1e-10,
        };
        for theta in [mid, lo, hi] {
            let r = self.invariant_residual(&theta)?;
            if !(r <= tol) {
                return Err(QfiError::Invalid {
                    what: "channel",
                    detail: format!("invariant residual {r:e} at theta = {theta:?}"),
                });
            }
        }
        Ok(())
    }
}

/// ∂E_k/∂θ^l: the family's closed form when available, otherwise an
/// element-wise finite difference along axis `l` with the Kraus ordering
/// held fixed.
pub fn kraus_derivative(
    ch: &ParametricChannel,
    theta: &[f64],
    l: usize,
    cfg: &DiffConfig,
) -> Result<Vec<CMatrix>> {
    let fam = ch.kraus_family()?;
    if l >= ch.param_count() {
        return Err(QfiError::DimensionMismatch {
            expected: ch.param_count(),
            actual: l + 1,
        });
    }
    if let Some(d) = fam.kraus_partial(theta, l) {
        ch.check_domain(theta, 0.0)?;
        return d;
    }
    ch.check_axis(theta, l, cfg.reach())?;
    numeric_kraus_derivative(fam.as_ref(), theta, l, cfg)
}

/// Element-wise finite difference of the Kraus operators along axis `l`,
/// ignoring any closed form the family provides.
pub fn numeric_kraus_derivative(
    fam: &dyn KrausFamily,
    theta: &[f64],
    l: usize,
    cfg: &DiffConfig,
) -> Result<Vec<CMatrix>> {
    let stencil = cfg.stencil();
    let mut samples = Vec::with_capacity(stencil.len());
    for &(o, _) in &stencil {
        let mut t = theta.to_vec();
        t[l] += o;
        samples.push(fam.kraus_at(&t)?);
    }
    let weights: Vec<f64> = stencil.iter().map(|s| s.1).collect();
    let n = samples[0].len();
    Ok((0..n)
        .map(|k| {
            let vals: Vec<CMatrix> = samples.iter().map(|s| s[k].clone()).collect();
            combine_stencil(&weights, &vals)
        })
        .collect())
}

/// Options for [`builtin`]. Unused fields are ignored by families that do
/// not take them.
#[derive(Debug, Clone, Default)]
pub struct FamilyOptions {
    pub axis: Option<Axis>,
    pub f: Option<Affine>,
    pub g: Option<Affine>,
    pub input_state: Option<PureState>,
    pub domain: Option<Vec<(f64, f64)>>,
}

pub const BUILTIN_FAMILIES: &[&str] = &[
    "dephasing",
    "dephasing2",
    "rotation",
    "amplitude-damping",
    "depolarizing",
    "example1",
    "example2",
    "unitary2",
    "damped-rotation",
];

/// Looks up a built-in family by name.
pub fn builtin(family: &str, opts: &FamilyOptions) -> Result<ParametricChannel> {
    let kraus = |fam: Arc<dyn KrausFamily>, default_input: PureState, default_domain: Vec<(f64, f64)>| {
        let input = opts.input_state.clone().unwrap_or(default_input);
        let domain = opts.domain.clone().unwrap_or(default_domain);
        ParametricChannel::from_kraus(family, fam, input, domain)
    };
    let unit = vec![(0.0, 1.0)];
    let ch = match family {
        "dephasing" => kraus(Arc::new(Dephasing), PureState::plus(), unit)?,
        "dephasing2" => kraus(Arc::new(Dephasing2), PureState::plus(), vec![(0.0, 1.0); 2])?,
        "rotation" => {
            let axis = opts.axis.unwrap_or(Axis::Z);
            let tau = 2.0 * std::f64::consts::PI;
            kraus(Arc::new(Rotation { axis }), PureState::basis(2, 0), vec![(-tau, tau)])?
        }
        "amplitude-damping" => kraus(Arc::new(AmplitudeDamping), PureState::plus(), unit)?,
        "depolarizing" => kraus(Arc::new(Depolarizing), PureState::basis(2, 0), vec![(0.0, 4.0 / 3.0)])?,
        "unitary2" => {
            let fam = GeneratorUnitary::new(
                CMatrix::zeros(2, 2),
                vec![linalg::pauli_x().scale(0.5), linalg::pauli_y().scale(0.5)],
            )?;
            let tau = 2.0 * std::f64::consts::PI;
            kraus(Arc::new(fam), PureState::basis(2, 0), vec![(-tau, tau); 2])?
        }
        "damped-rotation" => {
            let tau = 2.0 * std::f64::consts::PI;
            kraus(Arc::new(DampedRotation), PureState::plus(), vec![(0.0, 1.0), (-tau, tau)])?
        }
        "example1" => {
            let domain = opts.domain.clone().unwrap_or(unit);
            ParametricChannel::from_spectral(family, Arc::new(Example1), domain)?
        }
        "example2" => {
            let fam = Example2 {
                f: opts.f.unwrap_or(Affine([0.0, 1.0, 0.0])),
                g: opts.g.unwrap_or(Affine([0.0, 0.0, 1.0])),
            };
            let domain = opts.domain.clone().unwrap_or(vec![(0.0, 1.0); 2]);
            ParametricChannel::from_spectral(family, Arc::new(fam), domain)?
        }
        other => return Err(QfiError::UnknownFamily(other.to_string())),
    };
    ch.validate()?;
    Ok(ch)
}
