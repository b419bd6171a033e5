//! Monte-Carlo layer: sampling measurement records, maximum-likelihood
//! estimation, the two-stage adaptive scheme, Cramér–Rao experiments and
//! input-state optimization.
//!
//! Every random stream is a ChaCha20 generator seeded with `seed ^ r` for
//! replication `r`, so runs are reproducible and replications independent.

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::goldensectionsearch::GoldenSectionSearch;
use argmin::solver::neldermead::NelderMead;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::bounds::{
    optimal_povm_from_sld, sld_information, sld_score, sm_bound_canonical, sm_bound_spectral, spectral_curve,
    fisher_information,
};
use crate::channels::ParametricChannel;
use crate::error::{QfiError, Result};
use crate::linalg::{c, CVector, DiffConfig};
use crate::quantum::{born_probabilities, measurement_distribution, DensityMatrix, Povm, PureState};

/// Coarse likelihood grid size.
pub const GRID_POINTS: usize = 129;
/// Width of the final golden-section bracket.
pub const MLE_TOL: f64 = 1e-8;

fn draw<R: Rng + ?Sized>(rng: &mut R, p: &[f64], shots: u64) -> Vec<u64> {
    let mut counts = vec![0u64; p.len()];
    let mut left = shots;
    let mut mass = 1.0;
    for (m, &pm) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if m + 1 == p.len() {
            counts[m] = left;
            break;
        }
        let q = if mass > 0.0 { (pm / mass).clamp(0.0, 1.0) } else { 0.0 };
        let k = Binomial::new(left, q).expect("q in [0, 1]").sample(rng);
        counts[m] = k;
        left -= k;
        mass -= pm;
    }
    counts
}

/// Multinomial outcome counts of `shots` measurements of `povm` on ρ.
pub fn sample_outcomes(rho: &DensityMatrix, povm: &Povm, shots: u64, seed: u64) -> Result<Vec<u64>> {
    let p = measurement_distribution(rho, povm)?;
    Ok(draw(&mut ChaCha20Rng::seed_from_u64(seed), &p, shots))
}

fn log_likelihood(ch: &ParametricChannel, povm: &Povm, counts: &[u64], theta: f64) -> Result<f64> {
    let rho = ch.output_state(&[theta])?;
    let p = born_probabilities(rho.matrix(), povm);
    let mut total = 0.0;
    for (&n, &pm) in counts.iter().zip(&p) {
        if n == 0 {
            continue;
        }
        if !(pm > 0.0) {
            return Ok(f64::NEG_INFINITY);
        }
        total += n as f64 * pm.ln();
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleResult {
    pub theta: f64,
    pub log_likelihood: f64,
    /// The maximizer sits on an end of the search interval.
    pub at_boundary: bool,
}

struct NegLogLikelihood<'a> {
    ch: &'a ParametricChannel,
    povm: &'a Povm,
    counts: &'a [u64],
    lo: f64,
    width: f64,
}

impl NegLogLikelihood<'_> {
    // the solver's stopping rule is relative, so it works on x ∈ [1, 2]
    fn theta(&self, x: f64) -> f64 {
        self.lo + (x - 1.0) * self.width
    }
}

impl CostFunction for NegLogLikelihood<'_> {
    type Param = f64;
    type Output = f64;

    fn cost(&self, x: &f64) -> std::result::Result<f64, argmin::core::Error> {
        let t = self.theta(x.clamp(1.0, 2.0));
        let v = log_likelihood(self.ch, self.povm, self.counts, t).map_err(|e| argmin::core::Error::msg(e.to_string()))?;
        Ok(if v.is_finite() { -v } else { f64::INFINITY })
    }
}

fn tied(a: f64, b: f64) -> bool {
    a == b || (a.is_finite() && b.is_finite() && (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0))
}

/// Maximum-likelihood θ over `search` (the channel domain by default):
/// 129-point grid, then golden-section refinement of the best bracket.
/// Ties go to the grid point nearest the center of the interval.
pub fn mle_estimate(
    ch: &ParametricChannel,
    povm: &Povm,
    counts: &[u64],
    search: Option<(f64, f64)>,
) -> Result<MleResult> {
    if ch.param_count() != 1 {
        return Err(QfiError::WrongForm {
            required: "one-parameter",
        });
    }
    if counts.len() != povm.len() {
        return Err(QfiError::DimensionMismatch {
            expected: povm.len(),
            actual: counts.len(),
        });
    }
    if counts.iter().all(|&n| n == 0) {
        return Err(QfiError::Invalid {
            what: "counts",
            detail: "no shots recorded".into(),
        });
    }
    let (dlo, dhi) = ch.domain()[0];
    let (lo, hi) = search.unwrap_or((dlo.max(-1e6), dhi.min(1e6)));
    if !(lo < hi) || lo < dlo || hi > dhi {
        return Err(QfiError::Invalid {
            what: "search interval",
            detail: format!("[{lo}, {hi}] must be a nonempty part of the domain [{dlo}, {dhi}]"),
        });
    }
    let n = GRID_POINTS;
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let values = grid
        .iter()
        .map(|&t| log_likelihood(ch, povm, counts, t))
        .collect::<Result<Vec<f64>>>()?;
    let best = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if best == f64::NEG_INFINITY {
        return Err(QfiError::ImpossibleCounts);
    }
    let center = 0.5 * (lo + hi);
    let i = (0..n)
        .filter(|&i| tied(values[i], best))
        .min_by(|&a, &b| (grid[a] - center).abs().total_cmp(&(grid[b] - center).abs()))
        .expect("the maximum is attained");

    let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
    let flat = tied(values[a], values[i]) && tied(values[b], values[i]);
    let (mut theta, mut value) = (grid[i], values[i]);
    if !flat {
        let width = hi - lo;
        let problem = NegLogLikelihood {
            ch,
            povm,
            counts,
            lo,
            width,
        };
        let (xa, xb) = (1.0 + (grid[a] - lo) / width, 1.0 + (grid[b] - lo) / width);
        let x0 = 1.0 + (grid[i] - lo) / width;
        let solver = GoldenSectionSearch::new(xa, xb)
            .and_then(|s| s.with_tolerance(MLE_TOL / (4.0 * width)))
            .map_err(|e| QfiError::Invalid {
                what: "golden-section search",
                detail: e.to_string(),
            })?;
        let res = Executor::new(problem, solver)
            .configure(|s| s.param(x0).max_iters(500))
            .run()
            .map_err(|e| QfiError::Invalid {
                what: "golden-section search",
                detail: e.to_string(),
            })?;
        let st = res.state();
        if let Some(&x) = st.get_best_param() {
            let t = lo + (x - 1.0) * width;
            let v = -st.get_best_cost();
            if v >= value {
                theta = t;
                value = v;
            }
        }
    }
    // snap refinements that stopped within the bracket tolerance of an end
    for end in [lo, hi] {
        if (theta - end).abs() <= 2.0 * MLE_TOL {
            let v = log_likelihood(ch, povm, counts, end)?;
            if v >= value {
                theta = end;
                value = v;
            }
        }
    }
    Ok(MleResult {
        theta,
        log_likelihood: value,
        at_boundary: theta == lo || theta == hi,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    /// Shots spent on the pilot measurement.
    pub n_pilot: u64,
    pub pilot_povm: Povm,
    /// MLE search interval for both stages; the channel domain by default.
    pub search: Option<(f64, f64)>,
}

impl AdaptiveConfig {
    /// Computational-basis pilot over the whole domain.
    pub fn new(n_pilot: u64, dim: usize) -> Self {
        AdaptiveConfig {
            n_pilot,
            pilot_povm: Povm::computational(dim),
            search: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveRun {
    pub pilot_counts: Vec<u64>,
    pub pilot_estimate: MleResult,
    /// Point where the stage-2 POVM was built (the pilot estimate, pulled
    /// inside the domain far enough for the derivative stencil).
    pub design_point: f64,
    pub stage2_povm: Povm,
    pub counts: Vec<u64>,
    pub estimate: MleResult,
}

/// SLD-eigenbasis POVM at θ; a single-element result means λ̃ is fully
/// degenerate there and the measurement would carry no information.
fn optimal_measurement(ch: &ParametricChannel, theta: f64, cfg: &DiffConfig) -> Result<Povm> {
    let lambda = sld_score(&spectral_curve(ch, theta, cfg)?)?;
    let povm = optimal_povm_from_sld(&lambda)?;
    if povm.len() < 2 {
        return Err(QfiError::Degeneracy {
            theta: vec![theta],
            separation: 0.0,
        });
    }
    Ok(povm)
}

/// Stage 1 measures `n_pilot` copies with the pilot POVM and estimates θ̂₀;
/// stage 2 measures the other N − n_pilot copies in the SLD eigenbasis at
/// θ̂₀. The final estimate uses stage-2 data only.
pub fn adaptive_two_stage(
    ch: &ParametricChannel,
    theta_true: f64,
    shots: u64,
    cfg: &AdaptiveConfig,
    diff: &DiffConfig,
    seed: u64,
) -> Result<AdaptiveRun> {
    if !(cfg.n_pilot > 0 && cfg.n_pilot < shots) {
        return Err(QfiError::Invalid {
            what: "adaptive config",
            detail: format!("need 0 < n_pilot < N, got n_pilot = {} and N = {shots}", cfg.n_pilot),
        });
    }
    let rho = ch.output_state(&[theta_true])?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let pilot_counts = draw(&mut rng, &measurement_distribution(&rho, &cfg.pilot_povm)?, cfg.n_pilot);
    let pilot_estimate = mle_estimate(ch, &cfg.pilot_povm, &pilot_counts, cfg.search)?;

    let (lo, hi) = ch.domain()[0];
    let reach = if ch.is_kraus() { diff.reach() } else { 0.0 };
    let design_point = pilot_estimate.theta.clamp(lo + reach, hi - reach);
    let stage2_povm = optimal_measurement(ch, design_point, diff)?;

    rng.set_stream(1);
    let counts = draw(&mut rng, &measurement_distribution(&rho, &stage2_povm)?, shots - cfg.n_pilot);
    let estimate = mle_estimate(ch, &stage2_povm, &counts, cfg.search)?;
    Ok(AdaptiveRun {
        pilot_counts,
        pilot_estimate,
        design_point,
        stage2_povm,
        counts,
        estimate,
    })
}

/// Information values at θ_true and the matching variance floors 1/(N·X).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Floors {
    pub fisher: Option<f64>,
    pub sld: f64,
    pub sm: f64,
    pub fisher_floor: Option<f64>,
    pub sld_floor: Option<f64>,
    pub sm_floor: Option<f64>,
}

/// Empirical variance divided by each floor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VarianceRatios {
    pub fisher: Option<f64>,
    pub sld: Option<f64>,
    pub sm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotSummary {
    pub n_pilot: u64,
    pub estimates: Vec<f64>,
    pub design_points: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationRun {
    pub channel: String,
    pub theta_true: f64,
    pub povm: String,
    /// Copies measured per replication (stage 2 only for adaptive runs).
    pub shots: u64,
    pub seed: u64,
    pub replications: usize,
    /// `counts[r][m]`
    pub counts: Vec<Vec<u64>>,
    pub estimates: Vec<f64>,
    pub boundary_hits: usize,
    pub mean: f64,
    pub bias: f64,
    pub variance: f64,
    pub floors: Floors,
    pub ratios: VarianceRatios,
    pub pilot: Option<PilotSummary>,
    pub warnings: Vec<String>,
}

fn floors(
    ch: &ParametricChannel,
    povm: Option<&Povm>,
    theta: f64,
    shots: u64,
    diff: &DiffConfig,
    warnings: &mut Vec<String>,
) -> Result<Floors> {
    let sc = spectral_curve(ch, theta, diff)?;
    let sld = sld_information(&sc)?;
    let sm = sm_bound_spectral(&sc);
    let fisher = match povm.map(|m| fisher_information(ch, m, theta, diff)).transpose() {
        Ok(f) => f.map(|f| f.value),
        Err(e) => {
            warnings.push(format!("Fisher information unavailable: {e}"));
            None
        }
    };
    let n = shots as f64;
    let floor = |x: f64| if x > 1e-12 { Some(1.0 / (n * x)) } else { None };
    let fisher_floor = fisher.and_then(floor);
    if fisher.is_some() && fisher_floor.is_none() {
        warnings.push("the POVM is uninformative at theta_true (F = 0); no variance ratio".into());
    }
    Ok(Floors {
        fisher,
        sld,
        sm,
        fisher_floor,
        sld_floor: floor(sld),
        sm_floor: floor(sm),
    })
}

fn summarize(estimates: &[f64], theta: f64) -> (f64, f64, f64) {
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let var = if estimates.len() > 1 {
        estimates.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (mean, mean - theta, var)
}

fn ratios(variance: f64, f: &Floors) -> VarianceRatios {
    let r = |x: Option<f64>| x.map(|b| variance / b);
    VarianceRatios {
        fisher: r(f.fisher_floor),
        sld: r(f.sld_floor),
        sm: r(f.sm_floor),
    }
}

/// Repeats "measure N copies with `povm`, estimate by MLE" and compares the
/// spread of the estimates with 1/(N·F), 1/(N·H) and 1/(N·C_Υ).
#[allow(clippy::too_many_arguments)]
pub fn cr_experiment(
    ch: &ParametricChannel,
    theta_true: f64,
    povm: &Povm,
    povm_name: &str,
    shots: u64,
    replications: usize,
    seed: u64,
    diff: &DiffConfig,
) -> Result<EstimationRun> {
    if replications == 0 || shots == 0 {
        return Err(QfiError::Invalid {
            what: "experiment size",
            detail: "shots and replications must be positive".into(),
        });
    }
    let mut warnings = Vec::new();
    let fl = floors(ch, Some(povm), theta_true, shots, diff, &mut warnings)?;
    let rho = ch.output_state(&[theta_true])?;
    let p = measurement_distribution(&rho, povm)?;
    let mut counts = Vec::with_capacity(replications);
    let mut estimates = Vec::with_capacity(replications);
    let mut boundary_hits = 0;
    for r in 0..replications {
        let k = draw(&mut ChaCha20Rng::seed_from_u64(seed ^ r as u64), &p, shots);
        let est = mle_estimate(ch, povm, &k, None)?;
        boundary_hits += est.at_boundary as usize;
        estimates.push(est.theta);
        counts.push(k);
    }
    let (mean, bias, variance) = summarize(&estimates, theta_true);
    let ratios = ratios(variance, &fl);
    Ok(EstimationRun {
        channel: ch.name().to_string(),
        theta_true,
        povm: povm_name.to_string(),
        shots,
        seed,
        replications,
        counts,
        estimates,
        boundary_hits,
        mean,
        bias,
        variance,
        floors: fl,
        ratios,
        pilot: None,
        warnings,
    })
}

/// Replicated [`adaptive_two_stage`]; floors use the N − n_pilot stage-2 copies.
pub fn adaptive_experiment(
    ch: &ParametricChannel,
    theta_true: f64,
    shots: u64,
    cfg: &AdaptiveConfig,
    replications: usize,
    seed: u64,
    diff: &DiffConfig,
) -> Result<EstimationRun> {
    if replications == 0 {
        return Err(QfiError::Invalid {
            what: "experiment size",
            detail: "replications must be positive".into(),
        });
    }
    let mut warnings = Vec::new();
    let stage2 = shots.saturating_sub(cfg.n_pilot);
    let mut counts = Vec::with_capacity(replications);
    let mut estimates = Vec::with_capacity(replications);
    let mut pilots = Vec::with_capacity(replications);
    let mut designs = Vec::with_capacity(replications);
    let mut boundary_hits = 0;
    for r in 0..replications {
        let run = adaptive_two_stage(ch, theta_true, shots, cfg, diff, seed ^ r as u64)?;
        boundary_hits += run.estimate.at_boundary as usize;
        estimates.push(run.estimate.theta);
        pilots.push(run.pilot_estimate.theta);
        designs.push(run.design_point);
        counts.push(run.counts);
    }
    let fl = floors(ch, None, theta_true, stage2, diff, &mut warnings)?;
    let (mean, bias, variance) = summarize(&estimates, theta_true);
    Ok(EstimationRun {
        channel: ch.name().to_string(),
        theta_true,
        povm: "adaptive".to_string(),
        shots: stage2,
        seed,
        replications,
        counts,
        estimates,
        boundary_hits,
        mean,
        bias,
        variance,
        ratios: ratios(variance, &fl),
        floors: fl,
        pilot: Some(PilotSummary {
            n_pilot: cfg.n_pilot,
            estimates: pilots,
            design_points: designs,
        }),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Objective {
    /// H(θ)
    Sld,
    /// C_Υ(θ)
    Sm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputOptimum {
    pub state: PureState,
    pub value: f64,
    /// Candidates whose objective could not be evaluated.
    pub rejected: usize,
}

/// Unit vector from d − 1 hyperspherical angles and d − 1 relative phases.
pub fn state_from_angles(d: usize, x: &[f64]) -> PureState {
    let mut amps = Vec::with_capacity(d);
    let mut s = 1.0;
    for k in 0..d {
        let r = if k + 1 < d { s * x[k].cos() } else { s };
        if k + 1 < d {
            s *= x[k].sin();
        }
        let phase = if k == 0 { 0.0 } else { x[d - 1 + k - 1] };
        amps.push(c(r * phase.cos(), r * phase.sin()));
    }
    PureState::normalized(CVector::from_vec(amps)).expect("unit vector by construction")
}

fn evaluate(ch: &ParametricChannel, theta: f64, objective: Objective, input: PureState, diff: &DiffConfig) -> Result<f64> {
    let ch = ch.with_input(input)?;
    match objective {
        Objective::Sld => sld_information(&spectral_curve(&ch, theta, diff)?),
        Objective::Sm => sm_bound_canonical(&ch, theta, diff),
    }
}

struct NegObjective<'a> {
    ch: &'a ParametricChannel,
    theta: f64,
    objective: Objective,
    diff: &'a DiffConfig,
    rejected: std::cell::Cell<usize>,
}

impl CostFunction for NegObjective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, x: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        let d = self.ch.dim();
        match evaluate(self.ch, self.theta, self.objective, state_from_angles(d, x), self.diff) {
            Ok(v) if v.is_finite() => Ok(-v),
            _ => {
                self.rejected.set(self.rejected.get() + 1);
                Ok(f64::INFINITY)
            }
        }
    }
}

/// Maximizes H or C_Υ over pure inputs with a Nelder–Mead simplex search
/// from `restarts` seeded random starts. Candidates where the objective
/// fails (for instance at a degeneracy) are rejected.
pub fn optimize_input_state(
    ch: &ParametricChannel,
    theta: f64,
    objective: Objective,
    restarts: usize,
    seed: u64,
    diff: &DiffConfig,
) -> Result<InputOptimum> {
    if !ch.is_kraus() {
        return Err(QfiError::WrongForm { required: "Kraus-curve" });
    }
    let d = ch.dim();
    let n = 2 * d - 2;
    if n == 0 {
        let state = PureState::basis(1, 0);
        let value = evaluate(ch, theta, objective, state.clone(), diff)?;
        return Ok(InputOptimum { state, value, rejected: 0 });
    }
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut rejected = 0;
    let mut last_err = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha20Rng::seed_from_u64(seed ^ r as u64);
        let start: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        let mut simplex = vec![start.clone()];
        for i in 0..n {
            let mut v = start.clone();
            v[i] += 0.6;
            simplex.push(v);
        }
        let problem = NegObjective {
            ch,
            theta,
            objective,
            diff,
            rejected: std::cell::Cell::new(0),
        };
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(1e-12)
            .map_err(|e| QfiError::Invalid {
                what: "simplex search",
                detail: e.to_string(),
            })?;
        match Executor::new(problem, solver).configure(|s| s.max_iters(600)).run() {
            Ok(res) => {
                rejected += res.problem.problem.as_ref().map_or(0, |p| p.rejected.get());
                let st = res.state();
                let cost = st.get_best_cost();
                if let (Some(x), true) = (st.get_best_param(), cost.is_finite()) {
                    if best.as_ref().is_none_or(|(_, v)| -cost > *v) {
                        best = Some((x.clone(), -cost));
                    }
                }
            }
            Err(e) => last_err = Some(e.to_string()),
        }
    }
    match best {
        Some((x, _)) => {
            // re-evaluate so the reported value is exactly the returned state's
            let state = state_from_angles(d, &x);
            let value = evaluate(ch, theta, objective, state.clone(), diff)?;
            Ok(InputOptimum { state, value, rejected })
        }
        None => Err(QfiError::Invalid {
            what: "input optimization",
            detail: last_err.unwrap_or_else(|| "no candidate could be evaluated".into()),
        }),
    }
}

#[cfg(test)]
mod tests;
