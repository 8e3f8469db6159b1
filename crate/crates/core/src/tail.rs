//! Marginal densities of projected data and the tail-dominance check: when
//! the projected density along `theta_a` exceeds the one along `theta_b`
//! beyond some `z*`, the cumulant function along `theta_a` should dominate
//! for all large enough radii.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::cumulant::{evaluate, standard_error, DEFAULT_ESS_MIN};
use crate::error::{McfError, Result};
use crate::types::{DataMatrix, Direction, Radius};

pub const GRID_POINTS: usize = 512;
pub const DENSITY_NOISE_FLOOR: f64 = 1e-6;
/// Minimum number of grid points above `z*` that must support the crossing.
pub const MIN_TAIL_POINTS: usize = 10;
/// Differences smaller than this many combined standard errors are treated
/// as noise when judging whether dominance is significant.
pub const SIGNIFICANCE_SE: f64 = 3.0;
const MIN_OBSERVATIONS: usize = 30;

/// Kernel density of `theta . x` on a uniform grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalDensity {
    pub direction: Direction,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    pub bandwidth: f64,
}

impl MarginalDensity {
    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        self.grid
            .windows(2)
            .zip(self.density.windows(2))
            .map(|(z, f)| 0.5 * (z[1] - z[0]) * (f[0] + f[1]))
            .sum()
    }

    /// Linear interpolation, zero outside the grid.
    pub fn at(&self, z: f64) -> f64 {
        let (first, last) = (self.grid[0], self.grid[self.grid.len() - 1]);
        if !(first..=last).contains(&z) {
            return 0.0;
        }
        let i = self.grid.partition_point(|g| *g <= z).clamp(1, self.grid.len() - 1);
        let (z0, z1) = (self.grid[i - 1], self.grid[i]);
        let t = if z1 > z0 { (z - z0) / (z1 - z0) } else { 0.0 };
        self.density[i - 1] * (1.0 - t) + self.density[i] * t
    }
}

/// Silverman's rule of thumb `1.06 sigma N^(-1/5)`.
pub fn silverman_bandwidth(z: &[f64]) -> f64 {
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    1.06 * var.sqrt() * n.powf(-0.2)
}

/// Gaussian-kernel density estimate of a 1-D sample on `GRID_POINTS` points
/// spanning `[min - 3h, max + 3h]`.
pub fn kde(z: &[f64], bandwidth: Option<f64>) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let (lo, hi) = z
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
    if hi.is_nan() || lo.is_nan() || hi <= lo {
        return Err(McfError::DegenerateProjection);
    }
    let h = match bandwidth {
        Some(h) if h > 0.0 && h.is_finite() => h,
        Some(h) => return Err(McfError::InvalidInput(format!("bandwidth must be positive, got {h}"))),
        None => silverman_bandwidth(z),
    };
    if h.is_nan() || h <= 0.0 {
        return Err(McfError::DegenerateProjection);
    }
    let start = lo - 3.0 * h;
    let step = (hi + 3.0 * h - start) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| start + step * i as f64).collect();
    let norm = 1.0 / (z.len() as f64 * h * (2.0 * PI).sqrt());
    let density = grid
        .par_iter()
        .map(|g| {
            z.iter()
                .map(|zi| {
                    let u = (g - zi) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();
    Ok((grid, density, h))
}

/// Density of the projections `theta . x_i` of centered data.
pub fn marginal_density(data: &DataMatrix, dir: &Direction, bandwidth: Option<f64>) -> Result<MarginalDensity> {
    if !data.is_centered() {
        return Err(McfError::NotCentered);
    }
    if data.dim() != dir.dim() {
        return Err(McfError::DimensionMismatch {
            expected: data.dim(),
            got: dir.dim(),
        });
    }
    if data.n_obs() < MIN_OBSERVATIONS {
        return Err(McfError::InsufficientData(format!(
            "density estimation needs at least {MIN_OBSERVATIONS} observations, got {}",
            data.n_obs()
        )));
    }
    let z: Vec<f64> = data.values().rows().into_iter().map(|row| dir.dot(&row)).collect();
    let (grid, density, bandwidth) = kde(&z, bandwidth)?;
    Ok(MarginalDensity {
        direction: dir.clone(),
        grid,
        density,
        bandwidth,
    })
}

/// Start of the upper region where `fa > fb` strictly.
///
/// Both densities are compared on a common grid (the union of their ranges,
/// `GRID_POINTS` points, linear interpolation). Only points where both
/// densities exceed the noise floor take part. `z*` is the last such point
/// where `fa <= fb`; when there is none, it is the first qualified point. At
/// least `MIN_TAIL_POINTS` qualified points with `fa > fb` must lie above it.
pub fn find_tail_crossing(fa: &MarginalDensity, fb: &MarginalDensity) -> Option<f64> {
    let lo = fa.grid[0].min(fb.grid[0]);
    let hi = fa.grid[fa.grid.len() - 1].max(fb.grid[fb.grid.len() - 1]);
    let shared = fa.grid == fb.grid;
    let grid: Vec<f64> = if shared {
        fa.grid.clone()
    } else {
        let step = (hi - lo) / (GRID_POINTS - 1) as f64;
        (0..GRID_POINTS).map(|i| lo + step * i as f64).collect()
    };
    let pairs: Vec<(f64, f64, f64)> = grid
        .iter()
        .enumerate()
        .map(|(i, &z)| {
            if shared {
                (z, fa.density[i], fb.density[i])
            } else {
                (z, fa.at(z), fb.at(z))
            }
        })
        .filter(|(_, a, b)| *a > DENSITY_NOISE_FLOOR && *b > DENSITY_NOISE_FLOOR)
        .collect();
    crossing_on_grid(&pairs)
}

fn crossing_on_grid(pairs: &[(f64, f64, f64)]) -> Option<f64> {
    let first = pairs.first()?;
    let last_not_above = pairs.iter().rposition(|(_, a, b)| a <= b);
    let (z_star, above) = match last_not_above {
        Some(i) => (pairs[i].0, pairs.len() - 1 - i),
        None => (first.0, pairs.len() - 1),
    };
    (above >= MIN_TAIL_POINTS).then_some(z_star)
}

/// Comparison of the two cumulant estimates at one radius.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RadiusCheck {
    pub radius: f64,
    /// `G(theta_a) > G(theta_b)`.
    pub holds: bool,
    pub g_a: f64,
    pub g_b: f64,
    pub ess_a: f64,
    pub ess_b: f64,
    /// Both ESS values at or above the reliability threshold.
    pub reliable: bool,
    /// `G(theta_a) - G(theta_b)` exceeds `SIGNIFICANCE_SE` combined standard errors.
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailDominanceReport {
    pub z_star: Option<f64>,
    pub s_star_estimate: Option<f64>,
    pub holds_for_radii: Vec<RadiusCheck>,
    pub bandwidth_a: f64,
    pub bandwidth_b: f64,
    pub ess_min: f64,
}

impl TailDominanceReport {
    /// Dominance holds, and is significant, at every reliable radius from
    /// `s_star_estimate` on.
    pub fn stable_dominance(&self) -> bool {
        let Some(s) = self.s_star_estimate else {
            return false;
        };
        let tail: Vec<&RadiusCheck> = self
            .holds_for_radii
            .iter()
            .filter(|c| c.reliable && c.radius >= s)
            .collect();
        !tail.is_empty() && tail.iter().all(|c| c.holds && c.significant)
    }

    /// Radii flagged as unreliable (ESS below threshold).
    pub fn unreliable_radii(&self) -> Vec<f64> {
        self.holds_for_radii
            .iter()
            .filter(|c| !c.reliable)
            .map(|c| c.radius)
            .collect()
    }
}

/// Operational tail-dominance check on a centered sample.
///
/// `s_star_estimate` is the smallest tested radius from which dominance holds
/// at every larger reliable radius; radii whose ESS falls below `ess_min` are
/// recorded but do not take part.
pub fn verify_tail_dominance(
    data: &DataMatrix,
    theta_a: &Direction,
    theta_b: &Direction,
    radii: &[Radius],
    ess_min: f64,
) -> Result<TailDominanceReport> {
    if radii.windows(2).any(|w| w[1].value() <= w[0].value()) {
        return Err(McfError::InvalidInput("radii must be strictly increasing".into()));
    }
    let fa = marginal_density(data, theta_a, None)?;
    let fb = marginal_density(data, theta_b, None)?;
    let z_star = find_tail_crossing(&fa, &fb);
    let n = data.n_obs();
    let mut checks = Vec::with_capacity(radii.len());
    for &r in radii {
        let a = evaluate(data, r, theta_a)?;
        let b = evaluate(data, r, theta_b)?;
        let se = standard_error(a.ess, n).hypot(standard_error(b.ess, n));
        checks.push(RadiusCheck {
            radius: r.value(),
            holds: a.value > b.value,
            g_a: a.value,
            g_b: b.value,
            ess_a: a.ess,
            ess_b: b.ess,
            reliable: a.ess >= ess_min && b.ess >= ess_min,
            significant: a.value - b.value > SIGNIFICANCE_SE * se,
        });
    }
    let s_star_estimate = z_star.and_then(|_| {
        let reliable: Vec<&RadiusCheck> = checks.iter().filter(|c| c.reliable).collect();
        let from = reliable.iter().rposition(|c| !c.holds).map_or(0, |i| i + 1);
        reliable.get(from).map(|c| c.radius)
    });
    Ok(TailDominanceReport {
        z_star,
        s_star_estimate,
        holds_for_radii: checks,
        bandwidth_a: fa.bandwidth,
        bandwidth_b: fb.bandwidth,
        ess_min,
    })
}

/// [`verify_tail_dominance`] with the default reliability threshold.
pub fn verify_theorem1(
    data: &DataMatrix,
    theta_a: &Direction,
    theta_b: &Direction,
    radii: &[Radius],
) -> Result<TailDominanceReport> {
    verify_tail_dominance(data, theta_a, theta_b, radii, DEFAULT_ESS_MIN)
}
