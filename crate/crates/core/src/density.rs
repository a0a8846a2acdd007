//! Sample statistics, normalization, Gaussian KDE and bandwidth selection.
//!
//! Standard deviations use the population (N) divisor throughout.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernel_field::{check_sigma, gauss};

/// Observations with one row per component and one column per realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    data: DMatrix<f64>,
}

impl SampleMatrix {
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::invalid("sample matrix must be non-empty"));
        }
        if let Some(v) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!("sample matrix contains non-finite value {v}")));
        }
        Ok(Self { data })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::invalid("rows have different lengths"));
        }
        Self::new(DMatrix::from_fn(n, cols, |i, j| rows[i][j]))
    }

    pub fn n_components(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.data.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.data.row(i).iter().copied().collect()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n_components()).map(|i| self.row(i)).collect()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    /// Same data with rows `i` and `j` exchanged.
    pub fn swap_rows(&self, i: usize, j: usize) -> Self {
        let mut data = self.data.clone();
        data.swap_rows(i, j);
        Self { data }
    }
}

pub fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Population standard deviation.
pub fn std_dev(x: &[f64]) -> f64 {
    let m = mean(x);
    (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / x.len() as f64).sqrt()
}

fn is_degenerate(x: &[f64], sd: f64) -> bool {
    let scale = x.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    !(sd > 1e-12 * scale)
}

/// Standardizes one row to zero mean and unit population standard deviation.
pub fn standardize(x: &[f64]) -> Option<Vec<f64>> {
    if x.len() < 2 {
        return None;
    }
    let m = mean(x);
    let mut d: Vec<f64> = x.iter().map(|v| v - m).collect();
    // second pass removes the rounding left in the first mean
    let m2 = mean(&d);
    d.iter_mut().for_each(|v| *v -= m2);
    let sd = (d.iter().map(|v| v * v).sum::<f64>() / d.len() as f64).sqrt();
    if is_degenerate(x, sd) {
        return None;
    }
    Some(d.iter().map(|v| v / sd).collect())
}

/// Rescales every row to zero mean and unit standard deviation.
pub fn normalize(samples: &SampleMatrix) -> Result<SampleMatrix> {
    let rows = (0..samples.n_components())
        .map(|i| standardize(&samples.row(i)).ok_or(Error::DegenerateComponent { row: i }))
        .collect::<Result<Vec<_>>>()?;
    SampleMatrix::from_rows(rows)
}

/// Gaussian rule of thumb `1.06 · sd · N^(-1/5)`.
pub fn rot_bandwidth(samples: &[f64]) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::invalid("rule of thumb needs at least 2 samples"));
    }
    let sd = std_dev(samples);
    if is_degenerate(samples, sd) {
        return Err(Error::DegenerateComponent { row: 0 });
    }
    Ok(1.06 * sd * (samples.len() as f64).powf(-0.2))
}

/// A user-supplied bandwidth rule mapping one component's samples to a bandwidth.
#[derive(Clone)]
pub struct PluginBandwidth {
    pub name: String,
    rule: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl PluginBandwidth {
    pub fn new(name: impl Into<String>, rule: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), rule: Arc::new(rule) }
    }
}

impl fmt::Debug for PluginBandwidth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PluginBandwidth").field("name", &self.name).finish()
    }
}

#[derive(Debug, Clone)]
pub enum BandwidthSelector {
    Rot,
    Fixed(f64),
    Plugin(PluginBandwidth),
}

impl Default for BandwidthSelector {
    fn default() -> Self {
        BandwidthSelector::Rot
    }
}

impl BandwidthSelector {
    pub fn fixed(h: f64) -> Result<Self> {
        check_sigma(h)?;
        Ok(BandwidthSelector::Fixed(h))
    }

    /// One shared bandwidth for all components: the average of the per-row rule.
    pub fn select(&self, samples: &SampleMatrix) -> Result<f64> {
        let n = samples.n_components();
        let h = match self {
            BandwidthSelector::Fixed(h) => *h,
            BandwidthSelector::Rot => {
                let mut acc = 0.0;
                for i in 0..n {
                    acc += rot_bandwidth(&samples.row(i)).map_err(|e| match e {
                        Error::DegenerateComponent { .. } => Error::DegenerateComponent { row: i },
                        other => other,
                    })?;
                }
                acc / n as f64
            }
            BandwidthSelector::Plugin(p) => {
                (0..n).map(|i| (p.rule)(&samples.row(i))).sum::<f64>() / n as f64
            }
        };
        check_sigma(h)?;
        Ok(h)
    }
}

/// Gaussian KDE `(1/N) Σ G_σ(x − x_i)`.
pub fn kde_eval(samples: &[f64], sigma: f64, x: f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::invalid("KDE needs at least one sample"));
    }
    check_sigma(sigma)?;
    Ok(samples.iter().map(|&xi| gauss(x - xi, sigma)).sum::<f64>() / samples.len() as f64)
}

/// Square evaluation grid for the two-stage L^p oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub points: usize,
    /// Margin around the data range, in bandwidths.
    pub margin: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points: 128, margin: 4.0 }
    }
}

/// `(Σ |a − b|^p · cell_area)^(1/p)` over two tables sampled on the same grid.
pub fn grid_lp_distance(a: &DMatrix<f64>, b: &DMatrix<f64>, cell_area: f64, p: f64) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::invalid("grid tables differ in shape"));
    }
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("p must be >= 1, got {p}")));
    }
    let s: f64 = a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs().powf(p)).sum();
    Ok((s * cell_area).powf(1.0 / p))
}

/// Two-stage estimate of `‖p_xy − p_x p_y‖_p`: normalize, evaluate the joint
/// and marginal KDEs on a grid, then take the grid L^p norm of the difference.
pub fn lp_fd_grid(samples: &SampleMatrix, sigma: f64, p: f64, grid: GridSpec) -> Result<f64> {
    if samples.n_components() != 2 {
        return Err(Error::Unsupported(format!(
            "grid oracle is two-dimensional, got {} components",
            samples.n_components()
        )));
    }
    check_sigma(sigma)?;
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("p must be >= 1, got {p}")));
    }
    if grid.points < 2 {
        return Err(Error::invalid("grid needs at least 2 points per axis"));
    }
    let z = normalize(samples)?;
    let x = z.row(0);
    let y = z.row(1);
    let n = x.len() as f64;

    let axis = |v: &[f64]| -> (Vec<f64>, f64) {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min) - grid.margin * sigma;
        let hi = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + grid.margin * sigma;
        let step = (hi - lo) / (grid.points - 1) as f64;
        ((0..grid.points).map(|k| lo + k as f64 * step).collect(), step)
    };
    let (gx, dx) = axis(&x);
    let (gy, dy) = axis(&y);
    let limit = sigma / 2.0;
    let spacing = dx.max(dy);
    if spacing > limit {
        return Err(Error::GridTooCoarse { spacing, limit });
    }

    // kx[(g, i)] = G_σ(g − x_i)
    let kx = DMatrix::from_fn(gx.len(), x.len(), |g, i| gauss(gx[g] - x[i], sigma));
    let ky = DMatrix::from_fn(gy.len(), y.len(), |g, i| gauss(gy[g] - y[i], sigma));
    let joint = (&kx * ky.transpose()) / n;
    let fx = kx.column_sum() / n;
    let fy = ky.column_sum() / n;
    let product = &fx * fy.transpose();
    grid_lp_distance(&joint, &product, dx * dy, p)
}
