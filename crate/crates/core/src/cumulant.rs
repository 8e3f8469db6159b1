//! Empirical cumulant function of projected data.
//!
//! For centered observations `x_i` the estimator at radius `r` along `theta` is
//!
//! ```text
//! G(r, theta) = log( (1/N) * sum_i exp(r * theta . x_i) )
//! ```
//!
//! evaluated as a max-shifted log-sum-exp. The same exponential weights
//! `w_i = exp(r * theta . x_i - max_j r * theta . x_j)` give the gradient and the
//! effective sample size `(sum w)^2 / sum w^2`, which is the reliability
//! diagnostic used for radius selection.

use ndarray::{Array1, ArrayView1};

use crate::error::{McfError, Result};
use crate::types::{CumulantProfile, DataMatrix, Direction, Radius};

/// ESS below which an estimate is flagged unreliable.
pub const DEFAULT_ESS_MIN: f64 = 10.0;

/// Value, tangent gradient and ESS from a single pass over the data.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub value: f64,
    pub gradient: Array1<f64>,
    pub ess: f64,
}

fn check_centered(data: &DataMatrix) -> Result<()> {
    if data.is_centered() {
        Ok(())
    } else {
        Err(McfError::NotCentered)
    }
}

fn check_dim(data: &DataMatrix, dir: &Direction) -> Result<()> {
    if data.dim() == dir.dim() {
        Ok(())
    } else {
        Err(McfError::DimensionMismatch {
            expected: data.dim(),
            got: dir.dim(),
        })
    }
}

/// Scaled projections `r * theta . x_i`.
fn scaled_projections(data: &DataMatrix, r: f64, dir: &Direction) -> Result<Vec<f64>> {
    let z: Vec<f64> = data
        .values()
        .rows()
        .into_iter()
        .map(|row| r * dir.dot(&row))
        .collect();
    if z.iter().any(|v| !v.is_finite()) {
        return Err(McfError::NumericalError(format!(
            "non-finite projection at radius {r}"
        )));
    }
    Ok(z)
}

/// `log(mean(exp(z)))`, shifted by `max(z)` so no exponential overflows.
pub fn log_mean_exp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = z.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln() - (z.len() as f64).ln()
}

fn log_mean_exp_at(data: &DataMatrix, r: f64, dir: &Direction) -> Result<f64> {
    check_dim(data, dir)?;
    if r == 0.0 {
        return Ok(0.0);
    }
    let z = scaled_projections(data, r, dir)?;
    let g = log_mean_exp(&z);
    if g.is_finite() {
        Ok(g)
    } else {
        Err(McfError::NumericalError(format!("non-finite cumulant at radius {r}")))
    }
}

/// Plug-in estimate of the centered cumulant function.
pub fn empirical_cumulant(data: &DataMatrix, r: Radius, dir: &Direction) -> Result<f64> {
    check_centered(data)?;
    log_mean_exp_at(data, r.value(), dir)
}

/// Same estimator without the centering requirement.
#[cfg(test)]
pub(crate) fn raw_cumulant(data: &DataMatrix, r: f64, dir: &Direction) -> Result<f64> {
    log_mean_exp_at(data, r, dir)
}

/// Removes the component of `g` along the unit vector `theta`.
pub fn project_tangent(g: &Array1<f64>, theta: &ArrayView1<'_, f64>) -> Array1<f64> {
    g - &(theta.to_owned() * g.dot(theta))
}

/// Value, tangent gradient and ESS in one pass.
pub fn evaluate(data: &DataMatrix, r: Radius, dir: &Direction) -> Result<Evaluation> {
    check_centered(data)?;
    check_dim(data, dir)?;
    let n = data.n_obs();
    let r = r.value();
    if r == 0.0 {
        return Ok(Evaluation {
            value: 0.0,
            gradient: Array1::zeros(data.dim()),
            ess: n as f64,
        });
    }
    let z = scaled_projections(data, r, dir)?;
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum_w = 0.0;
    let mut sum_w2 = 0.0;
    let mut weighted = Array1::<f64>::zeros(data.dim());
    for (zi, row) in z.iter().zip(data.values().rows()) {
        let w = (zi - max).exp();
        sum_w += w;
        sum_w2 += w * w;
        weighted.scaled_add(w, &row);
    }
    let value = max + sum_w.ln() - (n as f64).ln();
    if !value.is_finite() {
        return Err(McfError::NumericalError(format!("non-finite cumulant at radius {r}")));
    }
    let euclid = weighted * (r / sum_w);
    let gradient = project_tangent(&euclid, &dir.as_array().view());
    Ok(Evaluation {
        value,
        gradient,
        ess: sum_w * sum_w / sum_w2,
    })
}

/// Gradient of the estimator on the sphere (tangent at `dir`).
pub fn cumulant_gradient(data: &DataMatrix, r: Radius, dir: &Direction) -> Result<Array1<f64>> {
    Ok(evaluate(data, r, dir)?.gradient)
}

/// Effective number of observations carrying the estimate, in `[1, N]`.
pub fn effective_sample_size(data: &DataMatrix, r: Radius, dir: &Direction) -> Result<f64> {
    Ok(evaluate(data, r, dir)?.ess)
}

/// Delta-method standard error of the estimator given its ESS:
/// `Var(G) ~ Var(w) / (N mean(w)^2) = 1/ESS - 1/N`.
pub fn standard_error(ess: f64, n_obs: usize) -> f64 {
    (1.0 / ess - 1.0 / n_obs as f64).max(0.0).sqrt()
}

/// Evaluates the estimator and its ESS on strictly increasing radii.
pub fn cumulant_profile(data: &DataMatrix, dir: &Direction, radii: &[Radius]) -> Result<CumulantProfile> {
    if radii.windows(2).any(|w| w[1].value() <= w[0].value()) {
        return Err(McfError::InvalidInput("radii must be strictly increasing".into()));
    }
    let mut values = Vec::with_capacity(radii.len());
    let mut ess = Vec::with_capacity(radii.len());
    for &r in radii {
        let e = evaluate(data, r, dir)?;
        values.push(e.value);
        ess.push(e.ess);
    }
    Ok(CumulantProfile {
        direction: dir.clone(),
        radii: radii.iter().map(|r| r.value()).collect(),
        values,
        ess,
    })
}
