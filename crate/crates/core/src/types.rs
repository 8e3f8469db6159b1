//! Shared domain types: the observation matrix, unit directions, radii and
//! sampled cumulant profiles.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{McfError, Result};

/// `N x d` sample of the random vector, one observation per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    values: Array2<f64>,
    centered: bool,
    mean: Array1<f64>,
}

impl DataMatrix {
    /// Wraps an uncentered sample. Requires `N >= 2`, `d >= 1` and finite entries.
    pub fn new(values: Array2<f64>) -> Result<Self> {
        let (n, d) = values.dim();
        if n < 2 {
            return Err(McfError::InsufficientData(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        if d == 0 {
            return Err(McfError::InsufficientData("need at least 1 variable".into()));
        }
        if let Some(((i, j), v)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(McfError::InvalidInput(format!(
                "non-finite entry {v} at row {i}, column {j}"
            )));
        }
        Ok(Self {
            values,
            centered: false,
            mean: Array1::zeros(d),
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if let Some((i, row)) = rows.iter().enumerate().find(|(_, r)| r.len() != d) {
            return Err(McfError::InvalidInput(format!(
                "row {i} has {} values, expected {d}",
                row.len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let values = Array2::from_shape_vec((rows.len(), d), flat)
            .map_err(|e| McfError::InvalidInput(e.to_string()))?;
        Self::new(values)
    }

    /// Marks a sample as already centered by the caller (e.g. a sampler that
    /// subtracted the population mean). The stored mean is the zero vector.
    pub fn new_centered(values: Array2<f64>) -> Result<Self> {
        let mut m = Self::new(values)?;
        m.centered = true;
        Ok(m)
    }

    pub fn n_obs(&self) -> usize {
        self.values.nrows()
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// The mean subtracted by [`DataMatrix::center`] (zero if not centered).
    pub fn mean(&self) -> &Array1<f64> {
        &self.mean
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// Subtracts the column means. A second correction pass removes the
    /// rounding residue left by the first.
    pub fn center(&self) -> DataMatrix {
        if self.centered {
            return self.clone();
        }
        let n = self.n_obs() as f64;
        let mut values = self.values.clone();
        let mut total = Array1::<f64>::zeros(self.dim());
        for _ in 0..2 {
            let m = values.sum_axis(Axis(0)) / n;
            values -= &m;
            total += &m;
        }
        DataMatrix {
            values,
            centered: true,
            mean: total,
        }
    }

    /// Column standard deviations with `1/N` normalization.
    pub fn column_std(&self) -> Array1<f64> {
        let n = self.n_obs() as f64;
        let means = self.values.sum_axis(Axis(0)) / n;
        let mut out = Array1::zeros(self.dim());
        for (j, col) in self.values.axis_iter(Axis(1)).enumerate() {
            let m = means[j];
            out[j] = (col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt();
        }
        out
    }

    /// Applies `x -> Q x` to every observation. The centered flag and the
    /// stored mean follow the rotation.
    pub fn transform(&self, q: &Array2<f64>) -> Result<DataMatrix> {
        if q.dim() != (self.dim(), self.dim()) {
            return Err(McfError::DimensionMismatch {
                expected: self.dim(),
                got: q.nrows(),
            });
        }
        Ok(DataMatrix {
            values: self.values.dot(&q.t()),
            centered: self.centered,
            mean: q.dot(&self.mean),
        })
    }

    /// Same observations in a different row order.
    pub fn permute_rows(&self, order: &[usize]) -> Result<DataMatrix> {
        if order.len() != self.n_obs() {
            return Err(McfError::DimensionMismatch {
                expected: self.n_obs(),
                got: order.len(),
            });
        }
        let values = self.values.select(Axis(0), order);
        Ok(DataMatrix {
            values,
            centered: self.centered,
            mean: self.mean.clone(),
        })
    }
}

/// Free-function form of [`DataMatrix::center`].
pub fn center(data: &DataMatrix) -> DataMatrix {
    data.center()
}

/// A unit vector on the hypersphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Direction(Array1<f64>);

impl Direction {
    pub fn new(v: &[f64]) -> Result<Self> {
        normalize(&ArrayView1::from(v))
    }

    pub fn as_array(&self) -> &Array1<f64> {
        &self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice().expect("contiguous")
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.to_vec()
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn dot(&self, v: &ArrayView1<'_, f64>) -> f64 {
        self.0.dot(v)
    }

    pub fn neg(&self) -> Direction {
        Direction(-&self.0)
    }

    /// Angle in degrees between two directions, in `[0, 180]`.
    pub fn angle_deg(&self, other: &Direction) -> f64 {
        angle_between_deg(&self.0.view(), &other.0.view())
    }

    /// Angle in degrees to the closer of `other` and `-other`, in `[0, 90]`.
    pub fn axis_angle_deg(&self, other: &Direction) -> f64 {
        let a = self.angle_deg(other);
        a.min(180.0 - a)
    }

    /// The *i*-th coordinate axis.
    pub fn axis(d: usize, i: usize) -> Result<Self> {
        if i >= d {
            return Err(McfError::DimensionMismatch { expected: d, got: i });
        }
        let mut v = Array1::zeros(d);
        v[i] = 1.0;
        Ok(Direction(v))
    }

    /// Flips the sign so that the first nonzero coordinate is positive.
    pub fn canonical_sign(&self) -> Direction {
        match self.0.iter().find(|x| **x != 0.0) {
            Some(x) if *x < 0.0 => self.neg(),
            _ => self.clone(),
        }
    }
}

impl TryFrom<Vec<f64>> for Direction {
    type Error = McfError;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Direction::new(&v)
    }
}

impl From<Direction> for Vec<f64> {
    fn from(d: Direction) -> Self {
        d.0.to_vec()
    }
}

/// Scales `v` to unit length. The norm is computed on a max-rescaled copy so
/// very large or very small entries neither overflow nor underflow.
pub fn normalize(v: &ArrayView1<'_, f64>) -> Result<Direction> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(McfError::DegenerateDirection);
    }
    let scale = v.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Err(McfError::DegenerateDirection);
    }
    let scaled = v.mapv(|x| x / scale);
    let norm = scaled.dot(&scaled).sqrt();
    Ok(Direction(scaled / norm))
}

pub(crate) fn angle_between_deg(a: &ArrayView1<'_, f64>, b: &ArrayView1<'_, f64>) -> f64 {
    // atan2 of |a x b| and a.b stays accurate for nearly parallel vectors.
    let dot = a.dot(b);
    let cross2 = (a.dot(a) * b.dot(b) - dot * dot).max(0.0);
    cross2.sqrt().atan2(dot).to_degrees()
}

/// Projection radius `|s|`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Radius(f64);

impl Radius {
    pub fn new(s: f64) -> Result<Self> {
        if !s.is_finite() || s < 0.0 {
            return Err(McfError::InvalidInput(format!(
                "radius must be finite and nonnegative, got {s}"
            )));
        }
        Ok(Radius(s))
    }

    pub const ZERO: Radius = Radius(0.0);

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Radius {
    type Error = McfError;

    fn try_from(s: f64) -> Result<Self> {
        Radius::new(s)
    }
}

impl From<Radius> for f64 {
    fn from(r: Radius) -> f64 {
        r.0
    }
}

/// The curve `r -> G_r(theta)` sampled at a set of radii, with the effective
/// sample size behind each estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantProfile {
    pub direction: Direction,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub ess: Vec<f64>,
}

impl CumulantProfile {
    /// Second differences (on the possibly non-uniform radius grid) are
    /// nonnegative up to `rel_tol * max|G|`.
    pub fn is_convex(&self, rel_tol: f64) -> bool {
        let scale = self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        self.values.windows(3).zip(self.radii.windows(3)).all(|(g, r)| {
            let left = (g[1] - g[0]) / (r[1] - r[0]);
            let right = (g[2] - g[1]) / (r[2] - r[1]);
            // Scaled by the outer spacing so the test compares like with like.
            (right - left) * (r[2] - r[0]) / 2.0 >= -rel_tol * scale.max(f64::MIN_POSITIVE)
        })
    }
}
