//! Randomized property suites: ordering of the information quantities, the
//! gap identity, agreement of the Kraus and spectral routes to C_Υ, and the
//! directional reduction of the matrix bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    attainability_check, bound_gap, fisher_information, optimal_povm_from_sld, sld_information, sld_score,
    sm_bound_canonical, sm_bound_raw, sm_bound_spectral, spectral_curve,
};
use crate::channels::ParametricChannel;
use crate::error::{QfiError, Result};
use crate::linalg::{hermitian_eigendecompose, DiffConfig};
use crate::multi::{
    directional_reductions, directional_slice, fisher_matrix, multi_attainability_check, sld_matrix, sm_matrix,
    InfoMatrix, DIRECTIONAL_TOL,
};
use crate::quantum::VERDICT_TOL;
use crate::random::{random_povm, random_quasi_classical, random_remix, random_stinespring};
use crate::bounds::multi_spectral_curve;

pub const ORDER_TOL: f64 = 1e-8;
/// F ≤ H carries the extra error of differentiating probabilities.
pub const FISHER_ORDER_TOL: f64 = 1e-7;
pub const GAP_TOL: f64 = 1e-8;
pub const ROUTE_TOL: f64 = 1e-6;
pub const OPTIMAL_POVM_TOL: f64 = 1e-5;
pub const AXIS_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Ordering,
    Gap,
    Routes,
    Directional,
    All,
}

impl std::str::FromStr for Suite {
    type Err = QfiError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "ordering" => Suite::Ordering,
            "gap" => Suite::Gap,
            "routes" => Suite::Routes,
            "directional" => Suite::Directional,
            "all" => Suite::All,
            other => {
                return Err(QfiError::Invalid {
                    what: "suite",
                    detail: format!("`{other}` is not one of ordering, gap, routes, directional, all"),
                })
            }
        })
    }
}

/// One property evaluated on one channel. `residual` is the size of the
/// violation (or mismatch), compared against `tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub property: String,
    pub channel: String,
    pub theta: Vec<f64>,
    pub residual: f64,
    pub tol: f64,
    pub passed: bool,
}

impl Check {
    fn new(property: &str, ch: &ParametricChannel, theta: &[f64], residual: f64, tol: f64) -> Self {
        Check {
            property: property.to_string(),
            channel: ch.name().to_string(),
            theta: theta.to_vec(),
            residual,
            tol,
            passed: residual <= tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub seed: u64,
    pub cases: usize,
    pub checks: usize,
    /// Cases skipped because a quantity was not defined there (degenerate
    /// spectrum, singular Fisher term), with the reason.
    pub skipped: Vec<String>,
    pub failures: Vec<Check>,
    /// The check closest to (or furthest past) its tolerance.
    pub worst: Option<Check>,
}

impl SuiteReport {
    fn new(name: &str, seed: u64, cases: usize) -> Self {
        SuiteReport {
            name: name.to_string(),
            seed,
            cases,
            checks: 0,
            skipped: Vec::new(),
            failures: Vec::new(),
            worst: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.checks > 0
    }

    fn record(&mut self, c: Check) {
        self.checks += 1;
        let ratio = |c: &Check| if c.residual.is_nan() { f64::INFINITY } else { c.residual / c.tol };
        if self.worst.as_ref().is_none_or(|w| ratio(&c) > ratio(w)) {
            self.worst = Some(c.clone());
        }
        if !c.passed {
            self.failures.push(c);
        }
    }

    fn skip(&mut self, case: usize, ch: &ParametricChannel, e: &QfiError) {
        self.skipped.push(format!("case {case} ({}): {e}", ch.name()));
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// Case `i` of the one-parameter suite: random Stinespring curves of
/// dimension 2..4 with 1..4 Kraus operators, every seventh one quasi-classical.
pub fn random_case(rng: &mut ChaCha20Rng, i: usize, params: usize) -> Result<(ParametricChannel, Vec<f64>)> {
    let d = 2 + i % 3;
    let count = 1 + (i / 3) % 4;
    let ch = if i % 7 == 6 {
        random_quasi_classical(rng, d, count, params)?
    } else {
        random_stinespring(rng, d, count, params)?
    };
    let theta = (0..params).map(|_| rng.random_range(-0.6..0.6)).collect();
    Ok((ch, theta))
}

fn nondegenerate(lambda: &crate::linalg::CMatrix) -> Result<bool> {
    let es = hermitian_eigendecompose(lambda)?;
    let scale = es.values.iter().fold(1.0f64, |a, x| a.max(x.abs()));
    Ok(es.values.windows(2).all(|w| (w[0] - w[1]).abs() > 1e-6 * scale))
}

/// F_M ≤ H ≤ C_Υ, H ≤ C_E under fixed and θ-dependent remixing, and F = H
/// for the SLD-eigenbasis POVM where λ̃ is nondegenerate.
pub fn ordering_suite(seed: u64, cases: usize, cfg: &DiffConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new("ordering", seed, cases);
    for i in 0..cases {
        let (ch, theta) = random_case(&mut rng, i, 1)?;
        let t = theta[0];
        let outcomes = rng.random_range(2..=5);
        let povm = random_povm(&mut rng, ch.dim(), outcomes)?;
        let fixed = random_remix(&mut rng, &ch, false)?;
        let moving = random_remix(&mut rng, &ch, true)?;
        let run = |rep: &mut SuiteReport| -> Result<()> {
            let sc = spectral_curve(&ch, t, cfg)?;
            let h = sld_information(&sc)?;
            let cu = sm_bound_spectral(&sc);
            rep.record(Check::new("H <= C_Y", &ch, &theta, h - cu, ORDER_TOL));
            match fisher_information(&ch, &povm, t, cfg) {
                Ok(f) => rep.record(Check::new("F <= H", &ch, &theta, f.value - h, FISHER_ORDER_TOL)),
                Err(e @ QfiError::SingularFisher { .. }) => rep.skip(i, &ch, &e),
                Err(e) => return Err(e),
            }
            for (label, remixed) in [("H <= C_E (fixed remix)", &fixed), ("H <= C_E (moving remix)", &moving)] {
                let ce = sm_bound_raw(remixed, t, cfg)?;
                rep.record(Check::new(label, &ch, &theta, h - ce, ORDER_TOL));
            }
            let lambda = sld_score(&sc)?;
            if nondegenerate(&lambda)? {
                let f = fisher_information(&ch, &optimal_povm_from_sld(&lambda)?, t, cfg)?.value;
                rep.record(Check::new("F(SLD basis) = H", &ch, &theta, rel(f, h), OPTIMAL_POVM_TOL));
            }
            Ok(())
        };
        if let Err(e) = run(&mut rep) {
            if !e.is_numeric() {
                return Err(e);
            }
            rep.skip(i, &ch, &e);
        }
    }
    Ok(rep)
}

/// (C_Υ − H) equals the closed-form gap, and the attainability verdict
/// agrees with the gap.
pub fn gap_suite(seed: u64, cases: usize, cfg: &DiffConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new("gap", seed, cases);
    for i in 0..cases {
        let (ch, theta) = random_case(&mut rng, i, 1)?;
        let run = |rep: &mut SuiteReport| -> Result<()> {
            let sc = spectral_curve(&ch, theta[0], cfg)?;
            let h = sld_information(&sc)?;
            let cu = sm_bound_spectral(&sc);
            let gap = bound_gap(&sc)?;
            rep.record(Check::new("C_Y - H = gap", &ch, &theta, ((cu - h) - gap).abs(), GAP_TOL * cu.max(1.0)));
            let att = attainability_check(&sc, VERDICT_TOL);
            let d2 = (ch.dim() * ch.dim()) as f64;
            // attainable ⇒ small gap; not attainable ⇒ positive gap
            let residual = if att.attainable { gap - d2 * att.tol } else { -gap };
            rep.record(Check::new("attainability vs gap", &ch, &theta, residual, 0.0));
            Ok(())
        };
        if let Err(e) = run(&mut rep) {
            if !e.is_numeric() {
                return Err(e);
            }
            rep.skip(i, &ch, &e);
        }
    }
    Ok(rep)
}

/// C_Υ from the canonical Kraus operators equals C_Υ from the spectral curve.
pub fn routes_suite(seed: u64, cases: usize, cfg: &DiffConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new("routes", seed, cases);
    for i in 0..cases {
        let (ch, theta) = random_case(&mut rng, i, 1)?;
        let run = |rep: &mut SuiteReport| -> Result<()> {
            let spectral = sm_bound_spectral(&spectral_curve(&ch, theta[0], cfg)?);
            let kraus = sm_bound_canonical(&ch, theta[0], cfg)?;
            rep.record(Check::new("C_Y kraus = C_Y spectral", &ch, &theta, rel(kraus, spectral), ROUTE_TOL));
            Ok(())
        };
        if let Err(e) = run(&mut rep) {
            if !e.is_numeric() {
                return Err(e);
            }
            rep.skip(i, &ch, &e);
        }
    }
    Ok(rep)
}

fn min_gap(lower: &InfoMatrix, upper: &InfoMatrix) -> f64 {
    let diff = upper.matrix() - lower.matrix();
    nalgebra::SymmetricEigen::new(diff).eigenvalues.min()
}

/// Two-parameter Loewner ordering F ≤ H ≤ C_Υ with a random POVM, and the
/// matrix attainability verdict against ‖C − H‖.
pub fn loewner_suite(seed: u64, cases: usize, cfg: &DiffConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new("loewner", seed, cases);
    for i in 0..cases {
        let (ch, theta) = random_case(&mut rng, i, 2)?;
        let outcomes = rng.random_range(2..=5);
        let povm = random_povm(&mut rng, ch.dim(), outcomes)?;
        let run = |rep: &mut SuiteReport| -> Result<()> {
            let msc = multi_spectral_curve(&ch, &theta, cfg)?;
            let h = sld_matrix(&msc)?;
            let c = sm_matrix(&ch, &theta, cfg)?;
            rep.record(Check::new("H <= C_Y (matrix)", &ch, &theta, -min_gap(&h, &c), ORDER_TOL));
            match fisher_matrix(&ch, &povm, &theta, cfg) {
                Ok(f) => {
                    rep.record(Check::new("F <= H (matrix)", &ch, &theta, -min_gap(&f.matrix, &h), ORDER_TOL));
                    rep.record(Check::new("F <= C_Y (matrix)", &ch, &theta, -min_gap(&f.matrix, &c), ORDER_TOL));
                }
                Err(e @ QfiError::SingularFisher { .. }) => rep.skip(i, &ch, &e),
                Err(e) => return Err(e),
            }
            let att = multi_attainability_check(&msc, VERDICT_TOL);
            let bound = (2 * ch.dim() * ch.dim()) as f64 * att.tol;
            let spread = (c.matrix() - h.matrix()).abs().max();
            let residual = if att.attainable { spread - bound } else { bound - spread };
            rep.record(Check::new("attainability vs C - H", &ch, &theta, residual, 0.0));
            Ok(())
        };
        if let Err(e) = run(&mut rep) {
            if !e.is_numeric() {
                return Err(e);
            }
            rep.skip(i, &ch, &e);
        }
    }
    Ok(rep)
}

/// Slices along random directions reproduce vᵀHv and vᵀC_Υv, the chain rule
/// holds for the canonical Kraus derivative, and axis slices reproduce the
/// matrix diagonals.
pub fn directional_suite(seed: u64, cases: usize, directions: usize, cfg: &DiffConfig) -> Result<SuiteReport> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut rep = SuiteReport::new("directional", seed, cases);
    for i in 0..cases {
        let (ch, theta) = random_case(&mut rng, i, 2)?;
        let dirs: Vec<Vec<f64>> = (0..directions)
            .map(|_| {
                let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                vec![a.cos(), a.sin()]
            })
            .collect();
        let run = |rep: &mut SuiteReport| -> Result<()> {
            let msc = multi_spectral_curve(&ch, &theta, cfg)?;
            let h = sld_matrix(&msc)?;
            let c = sm_matrix(&ch, &theta, cfg)?;
            for l in 0..2 {
                let mut e = vec![0.0; 2];
                e[l] = 1.0;
                let sc = spectral_curve(&directional_slice(&ch, &theta, &e)?, 0.0, cfg)?;
                let (hs, cs) = (sld_information(&sc)?, sm_bound_spectral(&sc));
                let residual = rel(hs, h.entries[l][l]).max(rel(cs, c.entries[l][l]));
                rep.record(Check::new("axis slice = diagonal", &ch, &theta, residual, AXIS_TOL));
            }
            for r in directional_reductions(&ch, &theta, &dirs, cfg)? {
                rep.record(Check::new("slice = quadratic form", &ch, &theta, r.relative_mismatch, DIRECTIONAL_TOL));
                if let Some(k) = r.kraus_mismatch {
                    rep.record(Check::new("chain rule", &ch, &theta, k, DIRECTIONAL_TOL));
                }
            }
            Ok(())
        };
        if let Err(e) = run(&mut rep) {
            if !e.is_numeric() {
                return Err(e);
            }
            rep.skip(i, &ch, &e);
        }
    }
    Ok(rep)
}

/// Default sizes: 200 one-parameter cases, 50 two-parameter cases with 20
/// directions each.
pub fn run_suite(suite: Suite, seed: u64, cfg: &DiffConfig) -> Result<Vec<SuiteReport>> {
    let mut out = Vec::new();
    if matches!(suite, Suite::Ordering | Suite::All) {
        out.push(ordering_suite(seed, 200, cfg)?);
        out.push(loewner_suite(seed, 50, cfg)?);
    }
    if matches!(suite, Suite::Gap | Suite::All) {
        out.push(gap_suite(seed, 200, cfg)?);
    }
    if matches!(suite, Suite::Routes | Suite::All) {
        out.push(routes_suite(seed, 200, cfg)?);
    }
    if matches!(suite, Suite::Directional | Suite::All) {
        out.push(directional_suite(seed, 50, 20, cfg)?);
    }
    Ok(out)
}
