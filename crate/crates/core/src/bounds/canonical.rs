//! Canonical Kraus operators Υ_k with tr{Υ_j ρ₀ Υ_k†} = p_k δ_jk, and their
//! parameter derivatives under the maximal-overlap gauge.

use std::ops::Range;

use num_complex::Complex64;

use crate::channels::{kraus_derivative, KrausFamily, ParametricChannel};
use crate::error::{QfiError, Result};
use crate::linalg::{
    cluster_ranges, combine_stencil, hermitian_eigendecompose, max_abs, normalize_phase, trace, CMatrix, CVector,
    DiffConfig, CLUSTER_TOL,
};
use crate::quantum::{remix_ops, KrausSet};

/// Weights at or below this count as zero.
pub const SUPPORT_TOL: f64 = 1e-10;

/// Smallest acceptable |overlap| when matching eigenvectors across the stencil.
const MATCH_FLOOR: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct CanonicalKraus {
    /// Υ_k, ordered by descending weight.
    pub ops: KrausSet,
    /// Υ_k = Σ_j W_kj E_j
    pub mixing: CMatrix,
    /// `partials[l][k]` = ∂Υ_k/∂θ^l
    pub partials: Vec<Vec<CMatrix>>,
    /// p_k = tr{Υ_k ρ₀ Υ_k†}
    pub weights: Vec<f64>,
    /// Number of k with p_k > [`SUPPORT_TOL`]; these come first.
    pub support: usize,
    /// True when a degenerate supported cluster was split by the derivative
    /// of the Gram matrix.
    pub resolved_degeneracy: bool,
}

impl CanonicalKraus {
    /// Υ' for a one-parameter channel.
    pub fn derivs(&self) -> &[CMatrix] {
        &self.partials[0]
    }
}

/// Columns E_j|ψ⟩.
fn images(ops: &[CMatrix], psi: &CVector) -> CMatrix {
    let cols: Vec<CVector> = ops.iter().map(|e| e * psi).collect();
    CMatrix::from_columns(&cols)
}

fn gram(ops: &[CMatrix], psi: &CVector) -> CMatrix {
    let a = images(ops, psi);
    let g = a.adjoint() * &a;
    (&g + g.adjoint()).scale(0.5)
}

/// Eigenpairs of the Gram matrix in descending order.
fn descending(g: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let es = hermitian_eigendecompose(g)?;
    let n = es.dim();
    let idx: Vec<usize> = (0..n).rev().collect();
    let p = idx.iter().map(|&i| es.values[i]).collect();
    Ok((p, es.vectors.select_columns(&idx)))
}

struct Center {
    ops: Vec<CMatrix>,
    v: CMatrix,
    p: Vec<f64>,
    support: usize,
}

fn degenerate_clusters(p: &[f64], support: usize) -> Vec<Range<usize>> {
    // cluster_ranges wants ascending input
    let asc: Vec<f64> = p[..support].iter().rev().copied().collect();
    cluster_ranges(&asc, CLUSTER_TOL)
        .into_iter()
        .filter(|r| r.len() > 1)
        .map(|r| (support - r.end)..(support - r.start))
        .collect()
}

fn center(fam: &dyn KrausFamily, psi: &CVector, theta: &[f64]) -> Result<(Center, Vec<Range<usize>>)> {
    let ops = fam.kraus_at(theta)?;
    let (p, mut v) = descending(&gram(&ops, psi))?;
    for k in 0..v.ncols() {
        let mut col = v.column(k).into_owned();
        normalize_phase(&mut col);
        v.set_column(k, &col);
    }
    let support = p.iter().take_while(|&&x| x > SUPPORT_TOL).count();
    let clusters = degenerate_clusters(&p, support);
    Ok((Center { ops, v, p, support }, clusters))
}

fn separation(p: &[f64], r: &Range<usize>) -> f64 {
    p[r.clone()].windows(2).map(|w| (w[0] - w[1]).abs()).fold(f64::INFINITY, f64::min)
}

/// Splits degenerate supported clusters by diagonalizing the derivative of
/// the Gram matrix inside each cluster.
fn resolve(c: &mut Center, dops: &[CMatrix], psi: &CVector, clusters: &[Range<usize>], theta: &[f64]) -> Result<()> {
    let a = images(&c.ops, psi);
    let da = images(dops, psi);
    let gp = da.adjoint() * &a + a.adjoint() * &da;
    for r in clusters {
        let block = c.v.columns(r.start, r.len()).into_owned();
        let proj = block.adjoint() * &gp * &block;
        let proj = (&proj + proj.adjoint()).scale(0.5);
        let (vals, vecs) = descending(&proj)?;
        let scale = max_abs(&proj).max(1.0);
        let sep = vals.windows(2).map(|w| w[0] - w[1]).fold(f64::INFINITY, f64::min);
        if sep <= CLUSTER_TOL * scale {
            return Err(QfiError::Degeneracy {
                theta: theta.to_vec(),
                separation: separation(&c.p, r).max(0.0),
            });
        }
        let rotated = block * vecs;
        for (i, k) in r.clone().enumerate() {
            let mut col = rotated.column(i).into_owned();
            normalize_phase(&mut col);
            c.v.set_column(k, &col);
        }
    }
    Ok(())
}

/// Σ_j v_j E_j
fn combine(ops: &[CMatrix], v: &CVector) -> CMatrix {
    ops.iter().zip(v.iter()).fold(CMatrix::zeros(ops[0].nrows(), ops[0].ncols()), |acc, (e, &x)| acc + e * x)
}

/// Eigenvectors of the Gram matrix at a stencil point, matched and
/// phase-aligned to the center basis.
fn aligned(c: &Center, fam: &dyn KrausFamily, psi: &CVector, theta: &[f64]) -> Result<CMatrix> {
    let ops = fam.kraus_at(theta)?;
    let (p, vo) = descending(&gram(&ops, psi))?;
    let n = vo.ncols();
    let mut out = CMatrix::zeros(n, n);
    let mut used = vec![false; n];
    for k in 0..c.support {
        let ck = c.v.column(k);
        let mut best: Option<(usize, Complex64)> = None;
        for j in (0..n).filter(|&j| !used[j]) {
            let z = ck.dotc(&vo.column(j));
            if best.is_none_or(|(_, b)| z.norm() > b.norm()) {
                best = Some((j, z));
            }
        }
        let (j, z) = best.expect("at least one unused column");
        if z.norm() < MATCH_FLOOR {
            let gap = p
                .windows(2)
                .map(|w| (w[0] - w[1]).abs())
                .fold(f64::INFINITY, f64::min);
            return Err(QfiError::Degeneracy {
                theta: theta.to_vec(),
                separation: gap,
            });
        }
        used[j] = true;
        // phase from the operator overlap tr{Υ_k(θ₀)†Υ_k(θ)}, which does not
        // depend on how the Kraus set was mixed
        let here = combine(&ops, &vo.column(j).into_owned());
        let there = combine(&c.ops, &c.v.column(k).into_owned());
        let z = trace(&(there.adjoint() * here));
        if z.norm() == 0.0 {
            return Err(QfiError::Degeneracy {
                theta: theta.to_vec(),
                separation: 0.0,
            });
        }
        let phase = z.conj() / z.norm();
        out.set_column(k, &vo.column(j).map(|x| x * phase));
    }
    let rest: Vec<usize> = (0..n).filter(|&j| !used[j]).collect();
    if !rest.is_empty() {
        // orthogonal Procrustes for the null block
        let s = vo.select_columns(&rest);
        let cn = c.v.columns(c.support, n - c.support).into_owned();
        let svd = (s.adjoint() * &cn).svd(true, true);
        let r = svd.u.expect("requested") * svd.v_t.expect("requested");
        let block = s * r;
        for (i, k) in (c.support..n).enumerate() {
            out.set_column(k, &block.column(i).into_owned());
        }
    }
    Ok(out)
}

fn mixing_derivative(
    c: &Center,
    fam: &dyn KrausFamily,
    psi: &CVector,
    theta: &[f64],
    l: usize,
    cfg: &DiffConfig,
) -> Result<CMatrix> {
    let stencil = cfg.stencil();
    let mut values = Vec::with_capacity(stencil.len());
    for &(o, _) in &stencil {
        if o == 0.0 {
            values.push(c.v.clone());
        } else {
            let mut t = theta.to_vec();
            t[l] += o;
            values.push(aligned(c, fam, psi, &t)?);
        }
    }
    let weights: Vec<f64> = stencil.iter().map(|s| s.1).collect();
    Ok(combine_stencil(&weights, &values))
}

/// Canonical decomposition with partials along every parameter axis.
///
/// With `resolve_degenerate`, a degenerate supported cluster is split using
/// the Gram derivative along axis 0 (one-parameter channels only);
/// otherwise it is a degeneracy error.
pub(crate) fn canonical_partials(
    ch: &ParametricChannel,
    theta: &[f64],
    cfg: &DiffConfig,
    resolve_degenerate: bool,
) -> Result<CanonicalKraus> {
    let fam = ch.kraus_family()?.clone();
    let psi = ch.pure_input()?.vector().clone();
    let m = ch.param_count();
    for l in 0..m {
        ch.check_axis(theta, l, cfg.reach())?;
    }
    let dops: Vec<Vec<CMatrix>> = (0..m)
        .map(|l| kraus_derivative(ch, theta, l, cfg))
        .collect::<Result<_>>()?;

    let (mut c, clusters) = center(fam.as_ref(), &psi, theta)?;
    let mut resolved = false;
    if !clusters.is_empty() {
        if resolve_degenerate && m == 1 {
            resolve(&mut c, &dops[0], &psi, &clusters, theta)?;
            resolved = true;
        } else {
            return Err(QfiError::Degeneracy {
                theta: theta.to_vec(),
                separation: clusters.iter().map(|r| separation(&c.p, r)).fold(f64::INFINITY, f64::min),
            });
        }
    }

    let mixing = c.v.transpose();
    let ops = remix_ops(&mixing, &c.ops);
    let mut partials = Vec::with_capacity(m);
    for (l, d) in dops.iter().enumerate() {
        let dv = mixing_derivative(&c, fam.as_ref(), &psi, theta, l, cfg)?;
        let a = remix_ops(&dv.transpose(), &c.ops);
        let b = remix_ops(&mixing, d);
        partials.push(a.into_iter().zip(b).map(|(x, y)| x + y).collect());
    }

    // diagonality of the canonical Gram matrix
    let g = gram(&ops, &psi);
    let mut off: f64 = 0.0;
    for j in 0..g.nrows() {
        for k in 0..g.ncols() {
            if j != k {
                off = off.max(g[(j, k)].norm());
            }
        }
    }
    if off > 1e-8 {
        return Err(QfiError::Consistency {
            what: "canonical Gram matrix off-diagonal",
            left: off,
            right: 0.0,
        });
    }
    let weights = (0..g.nrows()).map(|k| g[(k, k)].re).collect();

    Ok(CanonicalKraus {
        ops: KrausSet::new_unchecked(ops)?,
        mixing,
        partials,
        weights,
        support: c.support,
        resolved_degeneracy: resolved,
    })
}

pub(crate) fn expect_one_parameter(ch: &ParametricChannel) -> Result<()> {
    if ch.param_count() != 1 {
        return Err(QfiError::DimensionMismatch {
            expected: 1,
            actual: ch.param_count(),
        });
    }
    Ok(())
}

/// Canonical Kraus operators Υ(θ), the mixing matrix W with Υ = W·E, and Υ'(θ)
/// for a one-parameter Kraus-curve channel with a pure input.
pub fn canonical_kraus(ch: &ParametricChannel, theta: f64, cfg: &DiffConfig) -> Result<CanonicalKraus> {
    expect_one_parameter(ch)?;
    canonical_partials(ch, &[theta], cfg, true)
}
