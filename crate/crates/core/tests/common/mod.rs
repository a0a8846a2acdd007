//! Oracle helpers shared by the oracle tests and the acceptance harness.
//! Nothing here calls the library's kernel code.
#![allow(dead_code)]

use fdcontrast::*;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SQRT_2PI: f64 = 2.506_628_274_631_000_2;

pub fn g(u: f64, s: f64) -> f64 {
    (-0.5 * (u / s).powi(2)).exp() / (s * SQRT_2PI)
}

pub fn dg(u: f64, s: f64) -> f64 {
    -u / (s * s) * g(u, s)
}

pub fn linspace(lo: f64, hi: f64, n: usize) -> (Vec<f64>, f64) {
    let h = (hi - lo) / (n - 1) as f64;
    ((0..n).map(|k| lo + k as f64 * h).collect(), h)
}

/// Trapezoid rule on an equispaced grid.
pub fn trapz(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    h * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[n - 1]))
}

pub fn trapz2(f: &DMatrix<f64>, hx: f64, hy: f64) -> f64 {
    let rows: Vec<f64> = (0..f.nrows()).map(|i| trapz(f.row(i).transpose().as_slice(), hy)).collect();
    trapz(&rows, hx)
}

pub fn uniforms(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

pub fn normals(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let (u1, u2): (f64, f64) = (rng.random::<f64>().max(1e-300), rng.random());
            (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
        })
        .collect()
}

pub fn normalized_pair(x: Vec<f64>, y: Vec<f64>) -> SampleMatrix {
    normalize(&SampleMatrix::from_rows(vec![x, y]).unwrap()).unwrap()
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// 2-D tensor-grid quadrature of `∫∫ ψ(s,t) F(s,t)` where both factor as sums
/// over rank-one terms in `s` and `t`.
pub struct Grid2 {
    pub t: Vec<f64>,
    pub h: f64,
}

impl Grid2 {
    pub fn new(span: f64, n: usize) -> Self {
        let (t, h) = linspace(-span, span, n);
        Self { t, h }
    }

    pub fn table(&self, f: impl Fn(f64) -> f64) -> DVector<f64> {
        DVector::from_iterator(self.t.len(), self.t.iter().map(|&u| f(u)))
    }
}

/// Quadrature values of `h'_l` and `h''_l` for the paired basis.
/// `order` 0 integrates against the KDE, 1 against its mixed partial.
pub fn paired_h_quadrature(z: &SampleMatrix, p: &DMatrix<f64>, sigma: f64, order: u8) -> (Vec<f64>, Vec<f64>) {
    let grid = Grid2::new(7.0, 561);
    let k = |u: f64| if order == 0 { g(u, sigma) } else { dg(u, sigma) };
    let (x, y) = (z.row(0), z.row(1));
    let n = x.len() as f64;
    let m = grid.t.len();
    let mut joint = DMatrix::zeros(m, m);
    let mut fx = DVector::zeros(m);
    let mut fy = DVector::zeros(m);
    for i in 0..x.len() {
        let a = grid.table(|s| k(s - x[i]));
        let b = grid.table(|t| k(t - y[i]));
        joint += &a * b.transpose() / n;
        fx += a / n;
        fy += b / n;
    }
    let product = &fx * fy.transpose();
    let mut h1 = Vec::new();
    let mut h2 = Vec::new();
    for l in 0..p.nrows() {
        let psi = grid.table(|s| g(s - p[(l, 0)], sigma)) * grid.table(|t| g(t - p[(l, 1)], sigma)).transpose();
        h1.push(trapz2(&psi.component_mul(&joint), grid.h, grid.h));
        h2.push(trapz2(&psi.component_mul(&product), grid.h, grid.h));
    }
    (h1, h2)
}

pub fn small_problem() -> (SampleMatrix, BasisSet, f64) {
    let x = uniforms(20, 31);
    let y: Vec<f64> = x.iter().zip(uniforms(20, 32)).map(|(a, b)| (a * 3.0).sin() + 0.5 * b).collect();
    let z = normalized_pair(x, y);
    let sigma = BandwidthSelector::Rot.select(&z).unwrap();
    let basis = select_basis(&z, 5, BasisMode::Paired, 4).unwrap();
    (z, basis, sigma)
}

pub fn brute_marginal(z: &SampleMatrix, px: f64, py: f64, s: f64, order: u8) -> f64 {
    let k = |u: f64| if order == 0 { g(u, s) } else { dg(u, s) };
    let (x, y) = (z.row(0), z.row(1));
    let n = x.len() as f64;
    let mut acc = 0.0;
    for &xi in &x {
        for &yj in &y {
            acc += k(px - xi) * k(py - yj);
        }
    }
    acc / (n * n)
}

/// Dense `(V_y ⊗ V_x + λI) vec Θ = vec H` with everything built from scratch.
pub fn dense_grid_solution(z: &SampleMatrix, p: &DMatrix<f64>, sigma: f64, lambda: f64, order: u8, scale: f64) -> DMatrix<f64> {
    let b = p.nrows();
    let s = sigma * 2f64.sqrt();
    let k = |u: f64| if order == 0 { g(u, s) } else { scale * dg(u, s) };
    let (x, y) = (z.row(0), z.row(1));
    let n = x.len() as f64;
    let vx = DMatrix::from_fn(b, b, |i, j| g(p[(i, 0)] - p[(j, 0)], s));
    let vy = DMatrix::from_fn(b, b, |i, j| g(p[(i, 1)] - p[(j, 1)], s));
    let mut hmat = DMatrix::zeros(b, b);
    for a in 0..b {
        for c in 0..b {
            let joint: f64 = (0..x.len()).map(|i| k(p[(a, 0)] - x[i]) * k(p[(c, 1)] - y[i])).sum::<f64>() / n;
            let sx: f64 = x.iter().map(|&xi| k(p[(a, 0)] - xi)).sum();
            let sy: f64 = y.iter().map(|&yi| k(p[(c, 1)] - yi)).sum();
            hmat[(a, c)] = joint - sx * sy / (n * n);
        }
    }
    let mut big = DMatrix::zeros(b * b, b * b);
    for r in 0..b * b {
        for q in 0..b * b {
            big[(r, q)] = vy[(r / b, q / b)] * vx[(r % b, q % b)];
        }
        big[(r, r)] += lambda;
    }
    let rhs = DVector::from_column_slice(hmat.as_slice());
    let sol = big.lu().solve(&rhs).unwrap();
    DMatrix::from_column_slice(b, b, sol.as_slice())
}

pub fn qmi_quadrature(z: &SampleMatrix, sigma: f64) -> f64 {
    let grid = Grid2::new(8.0, 641);
    let (x, y) = (z.row(0), z.row(1));
    let n = x.len() as f64;
    let m = grid.t.len();
    let ax = DMatrix::from_fn(m, x.len(), |r, i| g(grid.t[r] - x[i], sigma));
    let ay = DMatrix::from_fn(m, y.len(), |r, i| g(grid.t[r] - y[i], sigma));
    let joint = &ax * ay.transpose() / n;
    let product = (ax.column_sum() / n) * (ay.column_sum() / n).transpose();
    let diff = joint - product;
    trapz2(&diff.component_mul(&diff), grid.h, grid.h)
}

