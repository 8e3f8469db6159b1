//! Maximization of the empirical cumulant function over the unit sphere at a
//! fixed radius.
//!
//! Each start runs projected gradient ascent: step along the tangent
//! gradient, retract by normalizing, and backtrack (halving) until the value
//! increases. Trial steps follow the Barzilai-Borwein rule once two iterates
//! are available. Converged points are checked against random tangent
//! perturbations so that saddles are not reported as maxima. Starts are
//! independent and run in parallel; each owns an RNG stream derived from
//! `(seed, start index)`, so results do not depend on the thread count.

use ndarray::Array1;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::cumulant::{evaluate, standard_error, Evaluation};
use crate::error::{McfError, Result};
use crate::pca::first_principal_component;
use crate::types::{normalize, DataMatrix, Direction, Radius};

const STEP_FLOOR: f64 = 1e-12;
const STEP_CEIL: f64 = 1e12;
/// Largest angular move (radians) attempted in one step.
const MAX_MOVE: f64 = 1.0;
const PERTURBATIONS: usize = 8;
const PERTURBATION_SIZE: f64 = 1e-3;
const MAX_RESTARTS: usize = 4;
const AUTO_RADIUS_RANDOM_PROBES: usize = 8;
const AUTO_RADIUS_MAX_DOUBLINGS: usize = 60;
const AUTO_RADIUS_BISECTIONS: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptimizerConfig {
    pub starts: usize,
    pub max_iters: usize,
    pub step_init: f64,
    pub grad_tol: f64,
    pub angle_dedup_deg: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            starts: 32,
            max_iters: 500,
            step_init: 0.1,
            grad_tol: 1e-8,
            angle_dedup_deg: 2.0,
            seed: 0,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(McfError::InvalidInput(format!("optimizer config: {what}")));
        if self.starts == 0 {
            return bad("starts must be positive");
        }
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.step_init > 0.0 && self.step_init.is_finite()) {
            return bad("step_init must be positive");
        }
        if !(self.grad_tol > 0.0 && self.grad_tol.is_finite()) {
            return bad("grad_tol must be positive");
        }
        if !(self.angle_dedup_deg > 0.0 && self.angle_dedup_deg < 90.0) {
            return bad("angle_dedup_deg must lie in (0, 90)");
        }
        Ok(())
    }
}

/// A local maximum after deduplication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Maximum {
    pub direction: Direction,
    pub g_value: f64,
    /// Number of converged starts merged into this maximum.
    pub basin_count: usize,
}

/// Outcome of one ascent run.
#[derive(Debug, Clone)]
pub struct Ascent {
    pub direction: Direction,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// All starts at one radius.
#[derive(Debug, Clone)]
pub struct RadiusSearch {
    pub maxima: Vec<Maximum>,
    pub converged_starts: usize,
    pub failed_starts: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McfResult {
    pub radius_used: f64,
    pub maxima: Vec<Maximum>,
    pub pc1: Direction,
    /// ESS at the top maximum.
    pub ess_at_radius: f64,
    pub warnings: Vec<String>,
}

fn converged(e: &Evaluation, tol: f64) -> bool {
    norm(&e.gradient) <= tol * e.value.abs().max(1.0)
}

fn norm(v: &Array1<f64>) -> f64 {
    v.dot(v).sqrt()
}

fn retract(theta: &Direction, step: &Array1<f64>) -> Result<Direction> {
    normalize(&(theta.as_array() + step).view())
}

/// An uphill trial move is accepted when the value increases, or when the
/// value is flat to rounding and the gradient shrinks (the regime right
/// before convergence, where value differences are below machine precision).
fn accept(current: &Evaluation, trial: &Evaluation) -> bool {
    if trial.value > current.value {
        return true;
    }
    let slack = 8.0 * f64::EPSILON * current.value.abs().max(1.0);
    trial.value >= current.value - slack && norm(&trial.gradient) < norm(&current.gradient)
}

fn random_direction<R: Rng>(d: usize, rng: &mut R) -> Direction {
    loop {
        let v: Array1<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        if let Ok(dir) = normalize(&v.view()) {
            return dir;
        }
    }
}

fn random_tangent<R: Rng>(theta: &Direction, rng: &mut R) -> Option<Array1<f64>> {
    let d = theta.dim();
    if d < 2 {
        return None;
    }
    for _ in 0..16 {
        let v: Array1<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let t = &v - &(theta.as_array() * v.dot(theta.as_array()));
        let n = norm(&t);
        if n > 1e-8 {
            return Some(t / n);
        }
    }
    None
}

/// Gradient ascent from one start until the tangent gradient is below
/// `grad_tol * max(1, |G|)` or `max_iters` is exhausted.
fn ascend_from(data: &DataMatrix, r: Radius, start: Direction, cfg: &OptimizerConfig, budget: usize) -> Result<Ascent> {
    let mut theta = start;
    let mut cur = evaluate(data, r, &theta)?;
    let mut step = cfg.step_init;
    let mut prev: Option<(Array1<f64>, Array1<f64>)> = None;
    let mut iterations = 0;
    while iterations < budget {
        if converged(&cur, cfg.grad_tol) {
            break;
        }
        iterations += 1;
        let g_norm = norm(&cur.gradient);
        if let Some((prev_theta, prev_grad)) = &prev {
            // Barzilai-Borwein step for ascent: s^T s / |s^T y| with y the
            // decrease of the gradient along the move.
            let s = theta.as_array() - prev_theta;
            let y = prev_grad - &cur.gradient;
            let sy = s.dot(&y);
            if sy > 0.0 {
                step = s.dot(&s) / sy;
            } else {
                step *= 2.0;
            }
        }
        step = step.clamp(STEP_FLOOR, STEP_CEIL).min(MAX_MOVE / g_norm);
        let mut accepted = None;
        while step >= STEP_FLOOR {
            let cand = retract(&theta, &(&cur.gradient * step))?;
            let trial = evaluate(data, r, &cand)?;
            if accept(&cur, &trial) {
                accepted = Some((cand, trial));
                break;
            }
            step *= 0.5;
        }
        match accepted {
            Some((cand, trial)) => {
                prev = Some((theta.as_array().clone(), cur.gradient.clone()));
                theta = cand;
                cur = trial;
            }
            // No uphill move even at the step floor: the iterate is as good
            // as rounding allows.
            None => break,
        }
    }
    Ok(Ascent {
        grad_norm: norm(&cur.gradient),
        converged: converged(&cur, cfg.grad_tol),
        value: cur.value,
        direction: theta,
        iterations,
    })
}

/// Best point among `PERTURBATIONS` random tangent moves that beats `value`.
fn second_order_escape<R: Rng>(
    data: &DataMatrix,
    r: Radius,
    at: &Ascent,
    rng: &mut R,
) -> Result<Option<Direction>> {
    let mut best: Option<(Direction, f64)> = None;
    for _ in 0..PERTURBATIONS {
        let Some(t) = random_tangent(&at.direction, rng) else {
            return Ok(None);
        };
        let cand = retract(&at.direction, &(t * PERTURBATION_SIZE))?;
        let v = evaluate(data, r, &cand)?.value;
        if v > at.value && best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((cand, v));
        }
    }
    Ok(best.map(|(d, _)| d))
}

/// Full single-start run: ascent, then a perturbation check that restarts
/// the ascent from any better nearby point.
pub fn ascend(data: &DataMatrix, r: Radius, start: Direction, cfg: &OptimizerConfig, rng: &mut ChaCha8Rng) -> Result<Ascent> {
    let mut budget = cfg.max_iters;
    let mut run = ascend_from(data, r, start, cfg, budget)?;
    for _ in 0..MAX_RESTARTS {
        if !run.converged {
            break;
        }
        match second_order_escape(data, r, &run, rng)? {
            Some(better) => {
                budget = budget.saturating_sub(run.iterations);
                if budget == 0 {
                    run.converged = false;
                    break;
                }
                let spent = cfg.max_iters - budget;
                run = ascend_from(data, r, better, cfg, budget)?;
                run.iterations += spent;
            }
            None => break,
        }
    }
    Ok(run)
}

fn lexicographic(a: &Direction, b: &Direction) -> std::cmp::Ordering {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Greedy merge by descending value: a solution within `angle_dedup_deg` of
/// an already kept one is folded into it. Ties in value go to the
/// lexicographically smaller direction. Antipodal solutions stay distinct.
pub fn deduplicate(solutions: &[(Direction, f64)], angle_dedup_deg: f64) -> Vec<Maximum> {
    let mut sorted: Vec<&(Direction, f64)> = solutions.iter().collect();
    sorted.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| lexicographic(&a.0, &b.0)));
    let mut kept: Vec<Maximum> = Vec::new();
    for (dir, value) in sorted {
        match kept.iter_mut().find(|k| k.direction.angle_deg(dir) <= angle_dedup_deg) {
            Some(k) => k.basin_count += 1,
            None => kept.push(Maximum {
                direction: dir.clone(),
                g_value: *value,
                basin_count: 1,
            }),
        }
    }
    kept
}

/// Multi-start maximization at a fixed radius; returns the distinct
/// converged maxima sorted by value.
pub fn maximize_at_radius(data: &DataMatrix, r: Radius, cfg: &OptimizerConfig) -> Result<RadiusSearch> {
    cfg.validate()?;
    if !data.is_centered() {
        return Err(McfError::NotCentered);
    }
    if r.value() <= 0.0 {
        return Err(McfError::InvalidInput("radius must be positive".into()));
    }
    let d = data.dim();
    if d == 1 {
        // The sphere is {-1, +1}.
        let mut sols = Vec::with_capacity(2);
        for s in [1.0, -1.0] {
            let dir = Direction::new(&[s])?;
            let g = evaluate(data, r, &dir)?.value;
            sols.push((dir, g));
        }
        return Ok(RadiusSearch {
            maxima: deduplicate(&sols, cfg.angle_dedup_deg),
            converged_starts: 2,
            failed_starts: 0,
        });
    }
    let runs: Vec<Result<Ascent>> = (0..cfg.starts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(i as u64);
            let start = random_direction(d, &mut rng);
            ascend(data, r, start, cfg, &mut rng)
        })
        .collect();
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let (ok, failed): (Vec<_>, Vec<_>) = runs.into_iter().partition(|a| a.converged);
    if ok.is_empty() {
        let best = failed
            .iter()
            .max_by(|a, b| a.value.total_cmp(&b.value))
            .expect("at least one start");
        return Err(McfError::NonConvergence {
            max_iters: cfg.max_iters,
            best_direction: best.direction.to_vec(),
            best_value: best.value,
        });
    }
    let sols: Vec<(Direction, f64)> = ok.iter().map(|a| (a.direction.clone(), a.value)).collect();
    Ok(RadiusSearch {
        maxima: deduplicate(&sols, cfg.angle_dedup_deg),
        converged_starts: ok.len(),
        failed_starts: failed.len(),
    })
}

/// Radius picked by [`auto_radius`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RadiusChoice {
    pub radius: Radius,
    /// Smallest ESS over the probe directions at `radius`.
    pub min_ess: f64,
    /// Set when even the smallest grid radius fails the ESS requirement;
    /// the estimate is then unreliable at every radius.
    pub heavy_tail: bool,
}

fn probe_directions(d: usize, seed: u64) -> Result<Vec<Direction>> {
    let mut probes = Vec::with_capacity(2 * d + AUTO_RADIUS_RANDOM_PROBES);
    for i in 0..d {
        let axis = Direction::axis(d, i)?;
        probes.push(axis.neg());
        probes.push(axis);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    for _ in 0..AUTO_RADIUS_RANDOM_PROBES {
        probes.push(random_direction(d, &mut rng));
    }
    Ok(probes)
}

fn min_ess(data: &DataMatrix, r: f64, probes: &[Direction]) -> Result<f64> {
    let r = Radius::new(r)?;
    probes
        .par_iter()
        .map(|p| evaluate(data, r, p).map(|e| e.ess))
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().fold(f64::INFINITY, f64::min))
}

/// Largest radius on the grid `r0 * 2^k`, `r0 = 0.1 / sigma_max`, at which
/// the ESS stays at least `ess_min` along every probe direction (the
/// coordinate axes in both signs plus eight random directions), refined by
/// five bisection steps.
pub fn auto_radius(data: &DataMatrix, ess_min: f64, seed: u64) -> Result<RadiusChoice> {
    if !data.is_centered() {
        return Err(McfError::NotCentered);
    }
    let n = data.n_obs() as f64;
    if !(ess_min > 1.0 && ess_min <= n) {
        return Err(McfError::InvalidInput(format!(
            "ess_min must lie in (1, N] = (1, {n}], got {ess_min}"
        )));
    }
    let sigma_max = data.column_std().iter().copied().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return Err(McfError::InvalidInput("all columns are constant".into()));
    }
    let probes = probe_directions(data.dim(), seed)?;
    let r0 = 0.1 / sigma_max;
    let ess0 = min_ess(data, r0, &probes)?;
    if ess0 < ess_min {
        return Ok(RadiusChoice {
            radius: Radius::new(r0)?,
            min_ess: ess0,
            heavy_tail: true,
        });
    }
    let (mut lo, mut lo_ess) = (r0, ess0);
    let mut hi = None;
    for _ in 0..AUTO_RADIUS_MAX_DOUBLINGS {
        let cand = 2.0 * lo;
        let e = min_ess(data, cand, &probes)?;
        if e >= ess_min {
            lo = cand;
            lo_ess = e;
        } else {
            hi = Some(cand);
            break;
        }
    }
    if let Some(mut hi) = hi {
        for _ in 0..AUTO_RADIUS_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            let e = min_ess(data, mid, &probes)?;
            if e >= ess_min {
                lo = mid;
                lo_ess = e;
            } else {
                hi = mid;
            }
        }
    }
    Ok(RadiusChoice {
        radius: Radius::new(lo)?,
        min_ess: lo_ess,
        heavy_tail: false,
    })
}

/// End-to-end MCF analysis: center, choose the radius (unless given), run the
/// multi-start search, and attach the first principal component as baseline.
pub fn mcf(data: &DataMatrix, cfg: &OptimizerConfig, radius: Option<Radius>, ess_min: f64) -> Result<McfResult> {
    cfg.validate()?;
    let data = data.center();
    let mut warnings = Vec::new();
    let r = match radius {
        Some(r) => r,
        None => {
            let choice = auto_radius(&data, ess_min, cfg.seed)?;
            if choice.heavy_tail {
                warnings.push(format!(
                    "heavy tail: ESS is below {ess_min} even at the smallest grid radius {:.6e}; \
                     the cumulant estimate is unreliable at every radius",
                    choice.radius.value()
                ));
            }
            choice.radius
        }
    };
    let search = maximize_at_radius(&data, r, cfg)?;
    if search.failed_starts > 0 {
        warnings.push(format!(
            "{} of {} starts did not converge within {} iterations",
            search.failed_starts,
            search.failed_starts + search.converged_starts,
            cfg.max_iters
        ));
    }
    let pc1 = first_principal_component(&data)?;
    if pc1.degenerate {
        warnings.push("degenerate spectrum: the first principal component is not unique".into());
    }
    let top = &search.maxima[0];
    let ess = evaluate(&data, r, &top.direction)?.ess;
    if ess < ess_min {
        warnings.push(format!(
            "ESS {ess:.3} at the top maximum is below {ess_min}; the estimate at radius {:.6e} is unreliable",
            r.value()
        ));
    }
    Ok(McfResult {
        radius_used: r.value(),
        maxima: search.maxima,
        pc1: pc1.eigenvector,
        ess_at_radius: ess,
        warnings,
    })
}

/// Spread of the maxima values in units of the largest per-maximum standard
/// error; near zero for direction-free (isotropic) data.
pub fn value_spread_in_se(data: &DataMatrix, r: Radius, maxima: &[Maximum]) -> Result<f64> {
    let mut se = 0.0_f64;
    for m in maxima {
        let e = evaluate(data, r, &m.direction)?;
        se = se.max(standard_error(e.ess, data.n_obs()));
    }
    let hi = maxima.iter().map(|m| m.g_value).fold(f64::NEG_INFINITY, f64::max);
    let lo = maxima.iter().map(|m| m.g_value).fold(f64::INFINITY, f64::min);
    Ok((hi - lo) / se)
}
