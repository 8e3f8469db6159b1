//! Analytic cumulant functions, closed-form MCF directions and samplers for
//! the Gaussian, skew-normal and shared-shock gamma families.
//!
//! These serve as oracles for the empirical pipeline.

use std::f64::consts::{FRAC_PI_2, LN_2, PI};

use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::error::{DomainViolation, McfError, Result};
use crate::pca::{leading_eigenpair, DEFAULT_EIGEN_TOL};
use crate::types::{DataMatrix, Direction, Radius};

/// Log arguments closer to zero than this are treated as saturated: the
/// difference `1 - r*theta` is then pure rounding noise.
const LOG_ARG_FLOOR: f64 = 4.0 * f64::EPSILON;

/// `log(Phi(x))` for the standard normal CDF, accurate far into the lower tail.
pub fn log_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x > 5.0 {
        (-0.5 * erfc(x / std::f64::consts::SQRT_2)).ln_1p()
    } else if x >= -20.0 {
        (0.5 * erfc(-x / std::f64::consts::SQRT_2)).ln()
    } else {
        // Phi(x) = phi(x) / CF(t), t = -x, with the Laplace continued fraction
        // CF(t) = t + 1/(t + 2/(t + 3/(t + ...))).
        let t = -x;
        let mut cf = t;
        for k in (1..=60).rev() {
            cf = t + k as f64 / cf;
        }
        -0.5 * x * x - 0.5 * (2.0 * PI).ln() - cf.ln()
    }
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Array2<f64>> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(McfError::InvalidInput("expected a nonempty square matrix".into()));
    }
    Array2::from_shape_vec((d, d), rows.iter().flatten().copied().collect())
        .map_err(|e| McfError::InvalidInput(e.to_string()))
}

fn matrix_to_rows(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// Lower Cholesky factor; fails unless the matrix is positive definite.
pub fn cholesky(m: &Array2<f64>) -> Result<Array2<f64>> {
    let d = m.nrows();
    let mut l = Array2::<f64>::zeros((d, d));
    for j in 0..d {
        let mut diag = m[[j, j]];
        for k in 0..j {
            diag -= l[[j, k]] * l[[j, k]];
        }
        if diag.is_nan() || diag <= 0.0 {
            return Err(McfError::NotPositiveDefinite);
        }
        let ljj = diag.sqrt();
        l[[j, j]] = ljj;
        for i in (j + 1)..d {
            let mut s = m[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            l[[i, j]] = s / ljj;
        }
    }
    Ok(l)
}

fn check_spd(sigma: &Array2<f64>) -> Result<()> {
    let (r, c) = sigma.dim();
    if r != c || r == 0 {
        return Err(McfError::InvalidInput(format!("sigma must be square, got {r}x{c}")));
    }
    for i in 0..r {
        for j in 0..i {
            if (sigma[[i, j]] - sigma[[j, i]]).abs() > 1e-12 {
                return Err(McfError::InvalidInput("sigma is not symmetric".into()));
            }
        }
    }
    cholesky(sigma).map(|_| ())
}

fn check_dir(d: usize, dir: &Direction) -> Result<()> {
    if dir.dim() == d {
        Ok(())
    } else {
        Err(McfError::DimensionMismatch {
            expected: d,
            got: dir.dim(),
        })
    }
}

fn quad_form(m: &Array2<f64>, dir: &Direction) -> f64 {
    let v = dir.as_array();
    v.dot(&m.dot(v))
}

/// Zero-mean Gaussian with covariance `sigma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GaussianRaw", into = "GaussianRaw")]
pub struct GaussianParams {
    sigma: Array2<f64>,
}

#[derive(Serialize, Deserialize)]
struct GaussianRaw {
    sigma: Vec<Vec<f64>>,
}

impl TryFrom<GaussianRaw> for GaussianParams {
    type Error = McfError;
    fn try_from(raw: GaussianRaw) -> Result<Self> {
        GaussianParams::new(matrix_from_rows(&raw.sigma)?)
    }
}

impl From<GaussianParams> for GaussianRaw {
    fn from(p: GaussianParams) -> Self {
        GaussianRaw {
            sigma: matrix_to_rows(&p.sigma),
        }
    }
}

impl GaussianParams {
    pub fn new(sigma: Array2<f64>) -> Result<Self> {
        check_spd(&sigma)?;
        Ok(Self { sigma })
    }

    pub fn sigma(&self) -> &Array2<f64> {
        &self.sigma
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }
}

/// `G = (r^2 / 2) theta^T Sigma theta`.
pub fn gaussian_cumulant(p: &GaussianParams, r: Radius, dir: &Direction) -> Result<f64> {
    check_dir(p.dim(), dir)?;
    let r = r.value();
    Ok(0.5 * r * r * quad_form(&p.sigma, dir))
}

/// Leading eigenvector of `Sigma`, independent of the radius.
pub fn gaussian_mcf(p: &GaussianParams) -> Result<Direction> {
    let e = leading_eigenpair(&p.sigma, DEFAULT_EIGEN_TOL)?;
    if e.degenerate {
        return Err(McfError::DegenerateSpectrum);
    }
    Ok(e.eigenvector)
}

/// Skew-normal with density `2 phi_Sigma(x) Phi(alpha^T x)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SkewNormalRaw", into = "SkewNormalRaw")]
pub struct SkewNormalParams {
    sigma: Array2<f64>,
    alpha: Array1<f64>,
    mu: Array1<f64>,
}

#[derive(Serialize, Deserialize)]
struct SkewNormalRaw {
    sigma: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    /// Derived; written for reference and ignored on input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mu: Option<Vec<f64>>,
}

impl TryFrom<SkewNormalRaw> for SkewNormalParams {
    type Error = McfError;
    fn try_from(raw: SkewNormalRaw) -> Result<Self> {
        SkewNormalParams::new(matrix_from_rows(&raw.sigma)?, Array1::from(raw.alpha))
    }
}

impl From<SkewNormalParams> for SkewNormalRaw {
    fn from(p: SkewNormalParams) -> Self {
        SkewNormalRaw {
            sigma: matrix_to_rows(&p.sigma),
            alpha: p.alpha.to_vec(),
            mu: Some(p.mu.to_vec()),
        }
    }
}

impl SkewNormalParams {
    pub fn new(sigma: Array2<f64>, alpha: Array1<f64>) -> Result<Self> {
        check_spd(&sigma)?;
        if alpha.len() != sigma.nrows() {
            return Err(McfError::DimensionMismatch {
                expected: sigma.nrows(),
                got: alpha.len(),
            });
        }
        if alpha.iter().any(|a| !a.is_finite()) {
            return Err(McfError::InvalidInput("alpha must be finite".into()));
        }
        let mu = skew_normal_mean(&sigma, &alpha);
        Ok(Self { sigma, alpha, mu })
    }

    pub fn sigma(&self) -> &Array2<f64> {
        &self.sigma
    }

    pub fn alpha(&self) -> &Array1<f64> {
        &self.alpha
    }

    pub fn mu(&self) -> &Array1<f64> {
        &self.mu
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    /// `Sigma - mu mu^T`, the covariance of the distribution.
    pub fn covariance(&self) -> Array2<f64> {
        self.sigma_minus_mu_outer(1.0)
    }

    fn sigma_minus_mu_outer(&self, factor: f64) -> Array2<f64> {
        let d = self.dim();
        Array2::from_shape_fn((d, d), |(i, j)| self.sigma[[i, j]] - factor * self.mu[i] * self.mu[j])
    }
}

fn skew_normal_mean(sigma: &Array2<f64>, alpha: &Array1<f64>) -> Array1<f64> {
    let sa = sigma.dot(alpha);
    let denom = (FRAC_PI_2 * (1.0 + alpha.dot(&sa))).sqrt();
    sa / denom
}

/// `mu = Sigma alpha / sqrt((pi/2)(1 + alpha^T Sigma alpha))`.
pub fn sn_mean(p: &SkewNormalParams) -> Array1<f64> {
    p.mu.clone()
}

/// Cumulant function of `theta^T (X - mu)`:
/// `-r mu.theta + (r^2/2) theta^T Sigma theta + log(2 Phi(sqrt(pi/2) r mu.theta))`.
pub fn sn_cumulant_centered(p: &SkewNormalParams, r: Radius, dir: &Direction) -> Result<f64> {
    check_dir(p.dim(), dir)?;
    let r = r.value();
    let m = p.mu.dot(dir.as_array());
    let arg = FRAC_PI_2.sqrt() * r * m;
    // The skew terms vanish exactly when mu . theta = 0.
    Ok(0.5 * r * r * quad_form(&p.sigma, dir) + ((LN_2 + log_normal_cdf(arg)) - r * m))
}

/// Small-radius MCF: leading eigenvector of `Sigma - mu mu^T`.
pub fn sn_mcf_small_radius(p: &SkewNormalParams) -> Result<Direction> {
    Ok(leading_eigenpair(&p.covariance(), DEFAULT_EIGEN_TOL)?.eigenvector)
}

/// Large-radius MCF pair.
///
/// The first direction is the leading eigenvector of `Sigma` on the side
/// `mu.theta >= 0`; the second is the leading eigenvector of
/// `Sigma - (pi/2) mu mu^T` on the side `mu.theta < 0`.
pub fn sn_mcf_large_radius(p: &SkewNormalParams) -> Result<(Direction, Direction)> {
    if p.mu.iter().all(|m| *m == 0.0) {
        return Err(McfError::InvalidInput(
            "mu = 0: the skew-normal reduces to the Gaussian case".into(),
        ));
    }
    let first = leading_eigenpair(&p.sigma, DEFAULT_EIGEN_TOL)?.eigenvector;
    let first = if p.mu.dot(first.as_array()) < 0.0 { first.neg() } else { first };
    let second = leading_eigenpair(&p.sigma_minus_mu_outer(FRAC_PI_2), DEFAULT_EIGEN_TOL)?.eigenvector;
    let second = if p.mu.dot(second.as_array()) >= 0.0 { second.neg() } else { second };
    Ok((first, second))
}

/// Shared-shock gamma vector `x_i = z_0 + z_i` with independent unit-scale
/// gamma variables `z_0 ~ Gamma(alpha0)`, `z_i ~ Gamma(alpha_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GammaRaw", into = "GammaRaw")]
pub struct GammaParams {
    alpha0: f64,
    alphas: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct GammaRaw {
    alpha0: f64,
    alphas: Vec<f64>,
}

impl TryFrom<GammaRaw> for GammaParams {
    type Error = McfError;
    fn try_from(raw: GammaRaw) -> Result<Self> {
        GammaParams::new(raw.alpha0, raw.alphas)
    }
}

impl From<GammaParams> for GammaRaw {
    fn from(p: GammaParams) -> Self {
        GammaRaw {
            alpha0: p.alpha0,
            alphas: p.alphas,
        }
    }
}

impl GammaParams {
    pub fn new(alpha0: f64, alphas: Vec<f64>) -> Result<Self> {
        if alphas.is_empty() {
            return Err(McfError::InvalidInput("need at least one alpha_i".into()));
        }
        if !(alpha0 > 0.0 && alpha0.is_finite()) || alphas.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(McfError::InvalidInput("gamma shapes must be positive and finite".into()));
        }
        Ok(Self { alpha0, alphas })
    }

    pub fn alpha0(&self) -> f64 {
        self.alpha0
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn dim(&self) -> usize {
        self.alphas.len()
    }

    /// `mu_i = alpha0 + alpha_i`.
    pub fn mean(&self) -> Array1<f64> {
        self.alphas.iter().map(|a| self.alpha0 + a).collect()
    }

    /// `alpha0 + alpha_i` on the diagonal, `alpha0` elsewhere.
    pub fn covariance(&self) -> Array2<f64> {
        let d = self.dim();
        Array2::from_shape_fn((d, d), |(i, j)| {
            if i == j {
                self.alpha0 + self.alphas[i]
            } else {
                self.alpha0
            }
        })
    }
}

/// Cumulant function of `theta^T (X - mu)`:
/// `-alpha0 log(1 - r sum theta) - sum alpha_i log(1 - r theta_i) - r sum (alpha0 + alpha_i) theta_i`.
pub fn gamma_cumulant_centered(p: &GammaParams, r: Radius, dir: &Direction) -> Result<f64> {
    check_dir(p.dim(), dir)?;
    let r = r.value();
    let theta = dir.as_slice();
    for (i, t) in theta.iter().enumerate() {
        if r * t >= 1.0 - LOG_ARG_FLOOR {
            return Err(McfError::OutsideDomain(DomainViolation::Component(i)));
        }
    }
    let sum: f64 = theta.iter().sum();
    if r * sum >= 1.0 - LOG_ARG_FLOOR {
        return Err(McfError::OutsideDomain(DomainViolation::Sum));
    }
    let mut g = -p.alpha0 * (-r * sum).ln_1p();
    for (a, t) in p.alphas.iter().zip(theta) {
        g -= a * (-r * t).ln_1p();
        g -= r * (p.alpha0 + a) * t;
    }
    Ok(g)
}

/// Largest radius at which the gamma cumulant function is finite for every
/// direction but the simplex one: `1 / sqrt(d)`.
pub fn gamma_max_radius(d: usize) -> Result<Radius> {
    if d == 0 {
        return Err(McfError::InvalidInput("dimension must be at least 1".into()));
    }
    Radius::new(1.0 / (d as f64).sqrt())
}

/// The uniform simplex direction `(1, ..., 1) / sqrt(d)`.
pub fn gamma_mcf_large_radius(d: usize) -> Result<Direction> {
    if d == 0 {
        return Err(McfError::InvalidInput("dimension must be at least 1".into()));
    }
    Direction::new(&vec![1.0; d])
}

/// Radius just inside the boundary, `(1 - eps) / sqrt(d)`, used when the
/// large-radius limit is evaluated numerically.
pub fn gamma_near_boundary_radius(d: usize, eps: f64) -> Result<Radius> {
    Radius::new((1.0 - eps) * gamma_max_radius(d)?.value())
}

/// Cholesky transform of standard normal draws.
pub fn sample_gaussian(p: &GaussianParams, n_samples: usize, seed: u64) -> Result<DataMatrix> {
    let l = cholesky(&p.sigma)?;
    let d = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Array2::<f64>::zeros((n_samples, d));
    let mut z = Array1::<f64>::zeros(d);
    for mut row in values.rows_mut() {
        z.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
        row.assign(&l.dot(&z));
    }
    DataMatrix::new(values)
}

/// Raw skew-normal draws by reflection: `Y ~ N(0, Sigma)`, `W ~ N(0, 1)`,
/// output `Y` if `W <= alpha^T Y` and `-Y` otherwise.
pub fn sample_skew_normal_raw(p: &SkewNormalParams, n_samples: usize, seed: u64) -> Result<DataMatrix> {
    let l = cholesky(&p.sigma)?;
    let d = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Array2::<f64>::zeros((n_samples, d));
    let mut z = Array1::<f64>::zeros(d);
    for mut row in values.rows_mut() {
        z.iter_mut().for_each(|v| *v = StandardNormal.sample(&mut rng));
        let y = l.dot(&z);
        let w: f64 = StandardNormal.sample(&mut rng);
        if w <= p.alpha.dot(&y) {
            row.assign(&y);
        } else {
            row.assign(&(-y));
        }
    }
    DataMatrix::new(values)
}

/// Skew-normal draws with the population mean `mu` subtracted.
pub fn sample_skew_normal(p: &SkewNormalParams, n_samples: usize, seed: u64) -> Result<DataMatrix> {
    let raw = sample_skew_normal_raw(p, n_samples, seed)?;
    DataMatrix::new(raw.into_values() - &p.mu)
}

/// Raw gamma draws `x_i = z_0 + z_i`.
pub fn sample_gamma_raw(p: &GammaParams, n_samples: usize, seed: u64) -> Result<DataMatrix> {
    let shape = |a: f64| Gamma::new(a, 1.0).map_err(|e| McfError::InvalidInput(e.to_string()));
    let shared = shape(p.alpha0)?;
    let own = p.alphas.iter().map(|a| shape(*a)).collect::<Result<Vec<_>>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Array2::<f64>::zeros((n_samples, p.dim()));
    for mut row in values.rows_mut() {
        let z0 = shared.sample(&mut rng);
        for (x, g) in row.iter_mut().zip(&own) {
            *x = z0 + g.sample(&mut rng);
        }
    }
    DataMatrix::new(values)
}

/// Gamma draws with the population mean `alpha0 + alpha_i` subtracted.
pub fn sample_gamma(p: &GammaParams, n_samples: usize, seed: u64) -> Result<DataMatrix> {
    let raw = sample_gamma_raw(p, n_samples, seed)?;
    DataMatrix::new(raw.into_values() - &p.mean())
}

/// One of the three parametric families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", content = "params", rename_all = "kebab-case")]
pub enum ModelParams {
    Gaussian(GaussianParams),
    SkewNormal(SkewNormalParams),
    Gamma(GammaParams),
}

impl ModelParams {
    pub fn name(&self) -> &'static str {
        match self {
            ModelParams::Gaussian(_) => "gaussian",
            ModelParams::SkewNormal(_) => "skew-normal",
            ModelParams::Gamma(_) => "gamma",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            ModelParams::Gaussian(p) => p.dim(),
            ModelParams::SkewNormal(p) => p.dim(),
            ModelParams::Gamma(p) => p.dim(),
        }
    }

    /// Draws with the population mean removed.
    pub fn sample(&self, n_samples: usize, seed: u64) -> Result<DataMatrix> {
        match self {
            ModelParams::Gaussian(p) => sample_gaussian(p, n_samples, seed),
            ModelParams::SkewNormal(p) => sample_skew_normal(p, n_samples, seed),
            ModelParams::Gamma(p) => sample_gamma(p, n_samples, seed),
        }
    }

    /// Analytic centered cumulant function.
    pub fn cumulant(&self, r: Radius, dir: &Direction) -> Result<f64> {
        match self {
            ModelParams::Gaussian(p) => gaussian_cumulant(p, r, dir),
            ModelParams::SkewNormal(p) => sn_cumulant_centered(p, r, dir),
            ModelParams::Gamma(p) => gamma_cumulant_centered(p, r, dir),
        }
    }

    /// Population mean of the uncentered family.
    pub fn mean(&self) -> Array1<f64> {
        match self {
            ModelParams::Gaussian(p) => Array1::zeros(p.dim()),
            ModelParams::SkewNormal(p) => p.mu.clone(),
            ModelParams::Gamma(p) => p.mean(),
        }
    }

    /// Population covariance.
    pub fn covariance(&self) -> Array2<f64> {
        match self {
            ModelParams::Gaussian(p) => p.sigma.clone(),
            ModelParams::SkewNormal(p) => p.covariance(),
            ModelParams::Gamma(p) => p.covariance(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn fig2() -> SkewNormalParams {
        SkewNormalParams::new(array![[1.2, 0.0], [0.0, 0.5143]], array![4.365, -1.455]).unwrap()
    }

    fn fig3() -> GammaParams {
        GammaParams::new(2.0, vec![0.5, 4.0]).unwrap()
    }

    fn r(x: f64) -> Radius {
        Radius::new(x).unwrap()
    }

    #[test]
    fn log_normal_cdf_matches_reference_values() {
        // Reference values from mpmath at 40 digits.
        let cases = [
            (0.0, -std::f64::consts::LN_2),
            (1.0, -0.172_753_779_023_449_9),
            (-5.0, -15.064_998_393_988_725),
            (-19.5, -194.016_965_777_497_5),
            (-20.5, -214.066_728_963_263_8),
            (-40.0, -804.608_442_013_753_8),
            (8.0, -6.220_960_574_271_786e-16),
        ];
        for (x, expected) in cases {
            let got = log_normal_cdf(x);
            assert!(
                ((got - expected) / expected).abs() < 1e-12,
                "x={x}: got {got}, expected {expected}"
            );
        }
    }

    #[test]
    fn log_normal_cdf_is_continuous_at_switch_points() {
        for x0 in [-20.0, 5.0] {
            let a = log_normal_cdf(x0 - 1e-9);
            let b = log_normal_cdf(x0 + 1e-9);
            assert!((a - b).abs() < 1e-6 * a.abs().max(1e-12), "{x0}: {a} vs {b}");
        }
    }

    #[test]
    fn gaussian_cumulant_examples() {
        let p = GaussianParams::new(array![[1.2, 0.0], [0.0, 0.5143]]).unwrap();
        let e1 = Direction::new(&[1.0, 0.0]).unwrap();
        assert!((gaussian_cumulant(&p, r(2.0), &e1).unwrap() - 2.4).abs() < 1e-12);
        assert_eq!(gaussian_cumulant(&p, Radius::ZERO, &e1).unwrap(), 0.0);
        let iso = GaussianParams::new(Array2::eye(2)).unwrap();
        let t = Direction::new(&[0.3, -0.8]).unwrap();
        assert!((gaussian_cumulant(&iso, r(1.0), &t).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn gaussian_mcf_examples() {
        let p = GaussianParams::new(array![[1.2, 0.0], [0.0, 0.5143]]).unwrap();
        assert!(gaussian_mcf(&p).unwrap().angle_deg(&Direction::new(&[1.0, 0.0]).unwrap()) < 1e-4);
        let p = GaussianParams::new(array![[0.5, 0.0], [0.0, 2.0]]).unwrap();
        assert!(gaussian_mcf(&p).unwrap().angle_deg(&Direction::new(&[0.0, 1.0]).unwrap()) < 1e-4);
        let iso = GaussianParams::new(Array2::eye(2)).unwrap();
        assert_eq!(gaussian_mcf(&iso), Err(McfError::DegenerateSpectrum));
    }

    #[test]
    fn gaussian_rejects_non_spd() {
        assert_eq!(
            GaussianParams::new(array![[1.0, 2.0], [2.0, 1.0]]),
            Err(McfError::NotPositiveDefinite)
        );
        assert!(GaussianParams::new(array![[1.0, 0.5], [0.4, 1.0]]).is_err());
    }

    #[test]
    fn sn_mean_examples() {
        let mu = sn_mean(&fig2());
        assert!((mu[0] - 0.8367).abs() < 5e-5 && (mu[1] + 0.1195).abs() < 5e-5, "{mu}");
        let p = SkewNormalParams::new(Array2::eye(2), array![0.0, 0.0]).unwrap();
        assert_eq!(sn_mean(&p), array![0.0, 0.0]);
        let p = SkewNormalParams::new(array![[1.0]], array![1e8]).unwrap();
        assert!((sn_mean(&p)[0] - (2.0 / PI).sqrt()).abs() < 1e-7);
    }

    #[test]
    fn sn_covariance_is_psd() {
        let c = fig2().covariance();
        assert!(cholesky(&c).is_ok());
        let p = SkewNormalParams::new(array![[1.0]], array![1e6]).unwrap();
        assert!(p.covariance()[[0, 0]] > 0.0);
    }

    #[test]
    fn sn_cumulant_zero_radius_and_zero_skew() {
        let p = fig2();
        let t = Direction::new(&[0.6, 0.8]).unwrap();
        assert!(sn_cumulant_centered(&p, Radius::ZERO, &t).unwrap().abs() < 1e-15);
        let sigma = array![[1.2, 0.3], [0.3, 0.5143]];
        let sn = SkewNormalParams::new(sigma.clone(), array![0.0, 0.0]).unwrap();
        let g = GaussianParams::new(sigma).unwrap();
        for rad in [0.1, 1.0, 7.0] {
            assert_eq!(
                sn_cumulant_centered(&sn, r(rad), &t).unwrap(),
                gaussian_cumulant(&g, r(rad), &t).unwrap()
            );
        }
    }

    #[test]
    fn sn_cumulant_small_radius_quadratic() {
        let p = fig2();
        let t = Direction::new(&[1.0, 0.0]).unwrap();
        let c = p.covariance();
        for rad in [0.01, 0.005] {
            let g = sn_cumulant_centered(&p, r(rad), &t).unwrap();
            let q = 0.5 * rad * rad * c[[0, 0]];
            assert!((g - q).abs() < 2.0 * rad.powi(3), "r={rad}: {g} vs {q}");
        }
    }

    #[test]
    fn sn_cumulant_deep_lower_tail_is_finite() {
        let p = fig2();
        let t = Direction::new(&[-1.0, 0.0]).unwrap();
        // sqrt(pi/2) r mu.theta ~ -50 at r = 48.
        let g = sn_cumulant_centered(&p, r(48.0), &t).unwrap();
        assert!(g.is_finite());
    }

    #[test]
    fn sn_small_radius_mcf() {
        let d = sn_mcf_small_radius(&fig2()).unwrap();
        let target = Direction::new(&[1.0, 1.0]).unwrap();
        assert!(d.axis_angle_deg(&target) < 0.5, "{:?}", d);
        let sigma = array![[2.0, 0.3], [0.3, 1.0]];
        let zero = SkewNormalParams::new(sigma.clone(), array![0.0, 0.0]).unwrap();
        let g = GaussianParams::new(sigma).unwrap();
        assert!(sn_mcf_small_radius(&zero).unwrap().angle_deg(&gaussian_mcf(&g).unwrap()) < 1e-6);
    }

    #[test]
    fn sn_mu_along_top_eigenvector_shrinks_it() {
        // Rank-1 update oracle: Sigma = diag(2, 1.5), alpha along e1 lowers the
        // e1 variance by mu1^2 and leaves e2 untouched.
        let p = SkewNormalParams::new(array![[2.0, 0.0], [0.0, 1.5]], array![3.0, 0.0]).unwrap();
        let mu1 = p.mu()[0];
        assert!((mu1 - 2.0 * 3.0 / (FRAC_PI_2 * (1.0 + 18.0)).sqrt()).abs() < 1e-12);
        let c = p.covariance();
        assert!((c[[0, 0]] - (2.0 - mu1 * mu1)).abs() < 1e-12);
        // 2 - mu1^2 < 1.5, so the small-radius MCF switches to e2.
        let d = sn_mcf_small_radius(&p).unwrap();
        assert!(d.axis_angle_deg(&Direction::new(&[0.0, 1.0]).unwrap()) < 1e-4);
    }

    #[test]
    fn sn_large_radius_pair() {
        let (m1, m2) = sn_mcf_large_radius(&fig2()).unwrap();
        assert!(m1.angle_deg(&Direction::new(&[1.0, 0.0]).unwrap()) < 0.5);
        assert!(m2.angle_deg(&Direction::new(&[-0.3317, -0.9434]).unwrap()) < 0.5, "{m2:?}");
        let p = SkewNormalParams::new(array![[1.0]], array![0.6]).unwrap();
        let (a, b) = sn_mcf_large_radius(&p).unwrap();
        assert_eq!(a.as_slice(), &[1.0]);
        assert_eq!(b.as_slice(), &[-1.0]);
        let zero = SkewNormalParams::new(Array2::eye(2), array![0.0, 0.0]).unwrap();
        assert!(sn_mcf_large_radius(&zero).is_err());
    }

    #[test]
    fn sn_large_radius_orthogonal_tiny_mu() {
        let sigma = array![[2.0, 0.0], [0.0, 1.0]];
        let p = SkewNormalParams::new(sigma.clone(), array![0.0, 1e-6]).unwrap();
        let (m1, _) = sn_mcf_large_radius(&p).unwrap();
        let g = gaussian_mcf(&GaussianParams::new(sigma).unwrap()).unwrap();
        assert!(m1.axis_angle_deg(&g) < 1e-6);
    }

    #[test]
    fn gamma_cumulant_examples() {
        let p = fig3();
        let e1 = Direction::new(&[1.0, 0.0]).unwrap();
        assert_eq!(gamma_cumulant_centered(&p, Radius::ZERO, &e1).unwrap(), 0.0);
        let g = gamma_cumulant_centered(&p, r(0.01), &e1).unwrap();
        let q = 0.5 * 0.01 * 0.01 * 2.5;
        assert!((g - q).abs() < 0.01f64.powi(3) * 10.0, "{g} vs {q}");
    }

    #[test]
    fn gamma_domain_boundary() {
        let p = fig3();
        let simplex = gamma_mcf_large_radius(2).unwrap();
        let rmax = gamma_max_radius(2).unwrap();
        assert_eq!(
            gamma_cumulant_centered(&p, rmax, &simplex),
            Err(McfError::OutsideDomain(DomainViolation::Sum))
        );
        assert_eq!(
            gamma_cumulant_centered(&p, r(1.0), &Direction::new(&[1.0, 0.0]).unwrap()),
            Err(McfError::OutsideDomain(DomainViolation::Component(0)))
        );
        assert!(gamma_cumulant_centered(&p, gamma_near_boundary_radius(2, 1e-3).unwrap(), &simplex).is_ok());
    }

    #[test]
    fn gamma_diverges_toward_boundary() {
        let p = fig3();
        let simplex = gamma_mcf_large_radius(2).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for eps in [1e-1, 1e-2, 1e-3, 1e-5, 1e-8, 1e-12] {
            let g = gamma_cumulant_centered(&p, gamma_near_boundary_radius(2, eps).unwrap(), &simplex).unwrap();
            assert!(g > prev);
            prev = g;
        }
        assert!(prev > 50.0);
    }

    #[test]
    fn gamma_radius_and_direction() {
        assert!((gamma_max_radius(2).unwrap().value() - 0.707_106_781_186_547_5).abs() < 1e-15);
        assert_eq!(gamma_max_radius(1).unwrap().value(), 1.0);
        assert_eq!(gamma_max_radius(4).unwrap().value(), 0.5);
        let s = gamma_mcf_large_radius(3).unwrap();
        assert!(s.as_slice().iter().all(|x| (x - 0.577_350_269_189_625_8).abs() < 1e-15));
        assert_eq!(gamma_mcf_large_radius(1).unwrap().as_slice(), &[1.0]);
        assert!(gamma_max_radius(0).is_err());
    }

    #[test]
    fn gamma_rejects_nonpositive_shapes() {
        assert!(GammaParams::new(0.0, vec![1.0]).is_err());
        assert!(GammaParams::new(1.0, vec![1.0, -2.0]).is_err());
        assert!(GammaParams::new(1.0, vec![]).is_err());
    }

    #[test]
    fn samplers_are_seed_deterministic() {
        let p = GaussianParams::new(array![[1.2, 0.0], [0.0, 0.5143]]).unwrap();
        assert_eq!(sample_gaussian(&p, 100, 7).unwrap(), sample_gaussian(&p, 100, 7).unwrap());
        assert_ne!(sample_gaussian(&p, 100, 7).unwrap(), sample_gaussian(&p, 100, 8).unwrap());
        assert_eq!(sample_gamma(&fig3(), 50, 3).unwrap(), sample_gamma(&fig3(), 50, 3).unwrap());
    }

    #[test]
    fn params_json_round_trip() {
        let m = ModelParams::SkewNormal(fig2());
        let s = serde_json::to_string(&m).unwrap();
        assert!(s.contains("\"model\":\"skew-normal\""));
        let back: ModelParams = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
        let g: ModelParams =
            serde_json::from_str(r#"{"model":"gamma","params":{"alpha0":2,"alphas":[0.5,4]}}"#).unwrap();
        assert_eq!(g, ModelParams::Gamma(fig3()));
        assert!(serde_json::from_str::<ModelParams>(r#"{"model":"gamma","params":{"alpha0":-1,"alphas":[1]}}"#).is_err());
    }
}
