#![allow(dead_code)]

use mcf_core::models::{GammaParams, GaussianParams, SkewNormalParams};
use mcf_core::{DataMatrix, Direction};
use ndarray::{array, Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn dir(v: &[f64]) -> Direction {
    Direction::new(v).unwrap()
}

pub fn gaussian_fig() -> GaussianParams {
    GaussianParams::new(array![[1.2, 0.0], [0.0, 0.5143]]).unwrap()
}

pub fn skew_normal_fig() -> SkewNormalParams {
    SkewNormalParams::new(array![[1.2, 0.0], [0.0, 0.5143]], array![4.365, -1.455]).unwrap()
}

pub fn gamma_fig() -> GammaParams {
    GammaParams::new(2.0, vec![0.5, 4.0]).unwrap()
}

pub fn random_direction(d: usize, rng: &mut ChaCha8Rng) -> Direction {
    let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    Direction::new(&v).unwrap()
}

/// Haar-ish orthogonal matrix: Gram-Schmidt on a Gaussian matrix.
pub fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let mut q = Array2::<f64>::zeros((d, d));
    for i in 0..d {
        let mut v = Array1::from_iter((0..d).map(|_| rng.sample::<f64, _>(StandardNormal)));
        for j in 0..i {
            let qj = q.row(j).to_owned();
            v = &v - &(&qj * qj.dot(&v));
        }
        let n = v.dot(&v).sqrt();
        q.row_mut(i).assign(&(v / n));
    }
    q
}

/// Random SPD matrix `B B^T / d + 0.1 I`.
pub fn random_spd(d: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let b = Array2::from_shape_fn((d, d), |_| rng.sample::<f64, _>(StandardNormal));
    b.dot(&b.t()) / d as f64 + Array2::<f64>::eye(d) * 0.1
}

pub fn rotate(q: &Array2<f64>, t: &Direction) -> Direction {
    Direction::new(q.dot(t.as_array()).as_slice().unwrap()).unwrap()
}

/// Column 1 ~ Laplace(0, 1), column 2 ~ N(0, 1), independent.
pub fn laplace_normal(n: usize, seed: u64) -> DataMatrix {
    let mut r = rng(seed);
    let mut x = Array2::<f64>::zeros((n, 2));
    for i in 0..n {
        let e: f64 = Exp1.sample(&mut r);
        x[[i, 0]] = if r.random::<bool>() { e } else { -e };
        x[[i, 1]] = StandardNormal.sample(&mut r);
    }
    DataMatrix::new(x).unwrap()
}

pub fn isotropic_gaussian(n: usize, seed: u64) -> DataMatrix {
    let mut r = rng(seed);
    DataMatrix::new(Array2::from_shape_fn((n, 2), |_| r.sample::<f64, _>(StandardNormal))).unwrap()
}

/// Angle of a 2-D direction in degrees, in [0, 360).
pub fn polar_deg(t: &Direction) -> f64 {
    let s = t.as_slice();
    s[1].atan2(s[0]).to_degrees().rem_euclid(360.0)
}

pub fn circle_point(deg: f64) -> Direction {
    let a = deg.to_radians();
    Direction::new(&[a.cos(), a.sin()]).unwrap()
}

/// Strict local maxima of a periodic sequence.
pub fn periodic_local_maxima(values: &[f64]) -> Vec<usize> {
    let n = values.len();
    (0..n)
        .filter(|&i| {
            let (p, q) = (values[(i + n - 1) % n], values[(i + 1) % n]);
            values[i] > p && values[i] >= q
        })
        .collect()
}
