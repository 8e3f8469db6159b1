//! Sample covariance and the leading eigenpair (first principal component).

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{McfError, Result};
use crate::types::{angle_between_deg, DataMatrix, Direction};

pub const DEFAULT_EIGEN_TOL: f64 = 1e-10;
const MAX_POWER_ITERS: usize = 10_000;
const DEGENERATE_ANGLE_DEG: f64 = 2.0;

/// Top eigenvalue and its unit eigenvector, sign fixed so that the first
/// nonzero coordinate is positive.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenPair {
    pub eigenvalue: f64,
    pub eigenvector: Direction,
    /// Set when two independent starts converged to different vectors with the
    /// same eigenvalue; `eigenvector` is then one arbitrary member of the
    /// leading eigenspace.
    pub degenerate: bool,
}

/// `(1/N) X^T X` of centered data.
pub fn sample_covariance(data: &DataMatrix) -> Result<Array2<f64>> {
    if !data.is_centered() {
        return Err(McfError::NotCentered);
    }
    let x = data.values();
    let mut c = x.t().dot(x) / data.n_obs() as f64;
    // Exact symmetry regardless of the BLAS-free summation order.
    let d = c.nrows();
    for i in 0..d {
        for j in 0..i {
            let m = 0.5 * (c[[i, j]] + c[[j, i]]);
            c[[i, j]] = m;
            c[[j, i]] = m;
        }
    }
    Ok(c)
}

fn check_symmetric(m: &Array2<f64>) -> Result<()> {
    let (r, c) = m.dim();
    if r != c || r == 0 {
        return Err(McfError::InvalidInput(format!("expected a square matrix, got {r}x{c}")));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(McfError::InvalidInput("matrix has non-finite entries".into()));
    }
    let scale = m.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0);
    for i in 0..r {
        for j in 0..i {
            if (m[[i, j]] - m[[j, i]]).abs() > 1e-12 * scale {
                return Err(McfError::InvalidInput("matrix is not symmetric".into()));
            }
        }
    }
    Ok(())
}

/// Shift making every eigenvalue of `M + cI` positive, so the top eigenvalue
/// dominates in magnitude. Gershgorin discs bound the spectrum from below.
fn spectral_shift(m: &Array2<f64>) -> f64 {
    let d = m.nrows();
    let min_diag = (0..d).map(|i| m[[i, i]]).fold(f64::INFINITY, f64::min);
    let gershgorin_low = (0..d)
        .map(|i| {
            let off: f64 = (0..d).filter(|&j| j != i).map(|j| m[[i, j]].abs()).sum();
            m[[i, i]] - off
        })
        .fold(f64::INFINITY, f64::min);
    let scale = m.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    (min_diag.abs() + 1.0).max(-gershgorin_low + 1e-3 * scale.max(1.0))
}

struct PowerOutcome {
    eigenvalue: f64,
    vector: Array1<f64>,
    converged: bool,
}

fn power_iterate(m: &Array2<f64>, shift: f64, start: Array1<f64>, tol: f64) -> PowerOutcome {
    let mut v = &start / start.dot(&start).sqrt();
    let mut lambda = 0.0;
    for _ in 0..MAX_POWER_ITERS {
        let mv = m.dot(&v);
        lambda = v.dot(&mv);
        let residual = &mv - &(&v * lambda);
        if residual.dot(&residual).sqrt() <= tol * lambda.abs() {
            return PowerOutcome {
                eigenvalue: lambda,
                vector: v,
                converged: true,
            };
        }
        let next = mv + &v * shift;
        let norm = next.dot(&next).sqrt();
        if norm == 0.0 {
            break;
        }
        v = next / norm;
    }
    PowerOutcome {
        eigenvalue: lambda,
        vector: v,
        converged: false,
    }
}

/// Generic start vectors: two fixed, irregular patterns that are unlikely to
/// be orthogonal to any structured eigenvector.
fn starts(d: usize) -> [Array1<f64>; 2] {
    let a = Array1::from_iter((0..d).map(|i| 1.0 + 0.618_033_988_7 * ((i as f64 + 1.0) * 1.7).sin()));
    let b = Array1::from_iter((0..d).map(|i| {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        sign * (0.5 + ((i as f64 + 2.3) * 2.9).cos().abs())
    }));
    [a, b]
}

/// Leading eigenpair of a symmetric matrix by shifted power iteration.
///
/// Converged when `|Mv - lambda v| <= tol * |lambda|`.
pub fn leading_eigenpair(m: &Array2<f64>, tol: f64) -> Result<EigenPair> {
    check_symmetric(m)?;
    if tol.is_nan() || tol <= 0.0 {
        return Err(McfError::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let d = m.nrows();
    if d == 1 {
        return Ok(EigenPair {
            eigenvalue: m[[0, 0]],
            eigenvector: Direction::axis(1, 0)?,
            degenerate: false,
        });
    }
    if m.iter().all(|v| *v == 0.0) {
        return Ok(EigenPair {
            eigenvalue: 0.0,
            eigenvector: Direction::axis(d, 0)?,
            degenerate: true,
        });
    }
    let shift = spectral_shift(m);
    let [s1, s2] = starts(d);
    let a = power_iterate(m, shift, s1, tol);
    let b = power_iterate(m, shift, s2, tol);
    let (best, other) = match (a.converged, b.converged) {
        (false, false) => {
            return Err(McfError::NonConvergence {
                max_iters: MAX_POWER_ITERS,
                best_direction: a.vector.to_vec(),
                best_value: a.eigenvalue,
            })
        }
        (true, false) => (a, None),
        (false, true) => (b, None),
        (true, true) => {
            if b.eigenvalue > a.eigenvalue {
                (b, Some(a))
            } else {
                (a, Some(b))
            }
        }
    };
    let degenerate = other.is_some_and(|o| {
        let same_value = (best.eigenvalue - o.eigenvalue).abs() <= tol * best.eigenvalue.abs().max(1.0);
        let angle = angle_between_deg(&best.vector.view(), &o.vector.view());
        same_value && angle.min(180.0 - angle) > DEGENERATE_ANGLE_DEG
    });
    let eigenvector = Direction::new(best.vector.as_slice().expect("contiguous"))?.canonical_sign();
    Ok(EigenPair {
        eigenvalue: best.eigenvalue,
        eigenvector,
        degenerate,
    })
}

/// First principal component of centered data.
pub fn first_principal_component(data: &DataMatrix) -> Result<EigenPair> {
    leading_eigenpair(&sample_covariance(data)?, DEFAULT_EIGEN_TOL)
}
