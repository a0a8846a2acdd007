//! Two-source linear BSS harness: mixing, whitening, rotation sweeps.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::density::{normalize, SampleMatrix};
use crate::error::{Error, Result};
use crate::estimators::{derive_seed, fit_normalized, select_indices, EstimatorConfig};

pub const DEFAULT_GRID: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct MixingModel {
    pub mixing: DMatrix<f64>,
    pub sources: SampleMatrix,
}

impl MixingModel {
    pub fn new(mixing: DMatrix<f64>, sources: SampleMatrix) -> Result<Self> {
        check_mixing(&mixing, &sources)?;
        Ok(Self { mixing, sources })
    }

    pub fn observations(&self) -> Result<SampleMatrix> {
        mix(&self.sources, &self.mixing)
    }
}

fn check_mixing(a: &DMatrix<f64>, sources: &SampleMatrix) -> Result<()> {
    if !a.is_square() || a.ncols() != sources.n_components() {
        return Err(Error::invalid(format!(
            "mixing matrix {:?} does not conform to {} sources",
            a.shape(),
            sources.n_components()
        )));
    }
    let det = a.clone().lu().determinant();
    if !(det.abs() > 1e-12) {
        return Err(Error::invalid(format!("mixing matrix is rank deficient (det = {det:e})")));
    }
    Ok(())
}

/// `X = A S`.
pub fn mix(sources: &SampleMatrix, a: &DMatrix<f64>) -> Result<SampleMatrix> {
    check_mixing(a, sources)?;
    SampleMatrix::new(a * sources.as_matrix())
}

/// `[[cos θ, −sin θ], [sin θ, cos θ]]`
pub fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Whitened {
    pub white: SampleMatrix,
    /// Symmetric inverse square root of the sample covariance.
    pub transform: DMatrix<f64>,
    pub mean: Vec<f64>,
}

/// Symmetric (ZCA) whitening with the population covariance.
pub fn whiten(observations: &SampleMatrix) -> Result<Whitened> {
    let x = observations.as_matrix();
    let (n, len) = x.shape();
    if len < 2 {
        return Err(Error::invalid("whitening needs at least 2 samples"));
    }
    let mean: Vec<f64> = (0..n).map(|i| x.row(i).sum() / len as f64).collect();
    let centered = DMatrix::from_fn(n, len, |i, j| x[(i, j)] - mean[i]);
    let cov = &centered * centered.transpose() / len as f64;
    let eig = SymmetricEigen::new(cov.clone());
    let max = eig.eigenvalues.amax();
    if let Some(row) = (0..n).find(|&i| !(eig.eigenvalues[i] > 1e-12 * max.max(f64::MIN_POSITIVE))) {
        return Err(Error::DegenerateComponent { row });
    }
    let inv_sqrt = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
    let transform = &eig.eigenvectors * inv_sqrt * eig.eigenvectors.transpose();
    let white = SampleMatrix::new(&transform * centered)?;
    Ok(Whitened { white, transform, mean })
}

pub fn rotate2(white: &SampleMatrix, theta: f64) -> Result<SampleMatrix> {
    if white.n_components() != 2 {
        return Err(Error::Unsupported(format!("rotation sweep needs 2 components, got {}", white.n_components())));
    }
    SampleMatrix::new(rotation(theta) * white.as_matrix())
}

/// Distance between two angles up to the quarter-turn ambiguity of a
/// whitened two-source solution (permutation and sign).
pub fn angle_error(estimated: f64, truth: f64) -> f64 {
    let r = (estimated - truth).rem_euclid(FRAC_PI_2);
    r.min(FRAC_PI_2 - r)
}

/// Rotation angle that unmixes whitened data, given the map `Q = W A` from
/// sources to whitened observations.
///
/// Finite-sample sources are never exactly uncorrelated, so `Q` is only close
/// to orthogonal; the angle is read from its orthogonal polar factor.
pub fn unmixing_angle(q: &DMatrix<f64>) -> f64 {
    let svd = q.clone().svd(true, true);
    let o = svd.u.expect("u requested") * svd.v_t.expect("v_t requested");
    (-o[(1, 0)].atan2(o[(0, 0)])).rem_euclid(FRAC_PI_2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LandscapeOptions {
    pub grid_size: usize,
    /// The sweep covers `[0, span)`.
    pub span: f64,
    /// Keep the same basis sample columns at every angle.
    pub freeze_basis: bool,
}

impl Default for LandscapeOptions {
    fn default() -> Self {
        Self { grid_size: DEFAULT_GRID, span: FRAC_PI_2, freeze_basis: false }
    }
}

impl LandscapeOptions {
    pub fn with_grid(grid_size: usize) -> Self {
        Self { grid_size, ..Self::default() }
    }

    pub fn theta(&self, k: usize) -> f64 {
        k as f64 * self.span / self.grid_size as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Landscape {
    pub thetas: Vec<f64>,
    /// Estimated dependence measure (`−Φ`) at each angle.
    pub values: Vec<f64>,
    pub argmin_theta: f64,
}

impl Landscape {
    pub fn argmin_index(&self) -> usize {
        argmin(&self.values)
    }
}

fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &v)| if v < bv { (i, v) } else { (bi, bv) })
        .0
}

/// Seed used for the basis at grid index `k`.
pub fn landscape_seed(base: u64, k: usize) -> u64 {
    derive_seed(base, k as u64)
}

/// Evaluates the estimator on `rotate2(white, θ)` over an equispaced grid of angles.
///
/// Angles are evaluated in parallel; results are ordered by grid index.
pub fn landscape(white: &SampleMatrix, config: &EstimatorConfig, options: LandscapeOptions) -> Result<Landscape> {
    if options.grid_size < 8 {
        return Err(Error::invalid(format!("grid size must be >= 8, got {}", options.grid_size)));
    }
    if !(options.span > 0.0) {
        return Err(Error::invalid("sweep span must be positive"));
    }
    if white.n_components() != 2 {
        return Err(Error::Unsupported(format!("rotation sweep needs 2 components, got {}", white.n_components())));
    }
    let n = white.n_samples();
    let b = config.basis_count(n);
    let frozen = if options.freeze_basis { Some(select_indices(n, b, config.seed)?) } else { None };

    let thetas: Vec<f64> = (0..options.grid_size).map(|k| options.theta(k)).collect();
    let values = thetas
        .par_iter()
        .enumerate()
        .map(|(k, &theta)| {
            let attach = |e: Error| Error::AtAngle { theta, source: Box::new(e) };
            let rotated = rotate2(white, theta).map_err(attach)?;
            let z = normalize(&rotated).map_err(attach)?;
            let sigma = config.bandwidth.select(&z).map_err(attach)?;
            let indices = match &frozen {
                Some(idx) => idx.clone(),
                None => select_indices(n, b, landscape_seed(config.seed, k)).map_err(attach)?,
            };
            fit_normalized(&z, indices, sigma, config).map(|r| r.value()).map_err(attach)
        })
        .collect::<Result<Vec<f64>>>()?;
    let argmin_theta = thetas[argmin(&values)];
    Ok(Landscape { thetas, values, argmin_theta })
}
