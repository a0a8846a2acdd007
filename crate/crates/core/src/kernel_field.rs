//! Gaussian kernel primitives and information potentials.
//!
//! Every closed form here rests on the convolution identity
//! `∫ G_a(x - p) G_b(x - q) dx = G_{√(a²+b²)}(p - q)`, so integrals of kernel
//! products collapse to a single kernel evaluated at the pairwise distance.
//! With a shared bandwidth σ the interaction kernel is `G_{σ√2}`.

use nalgebra::DMatrix;

use crate::density::SampleMatrix;
use crate::error::{Error, Result};

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Interactions farther apart than this many interaction bandwidths are
/// dropped when truncation is enabled. `exp(-36/2)` is about 1.5e-8.
pub const TRUNCATION_RADIUS: f64 = 6.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelOrder {
    /// `G_σ(u)`
    Density,
    /// `d/du G_σ(u)`
    Derivative,
}

impl KernelOrder {
    pub fn from_index(order: u8) -> Result<Self> {
        match order {
            0 => Ok(KernelOrder::Density),
            1 => Ok(KernelOrder::Derivative),
            other => Err(Error::invalid(format!("kernel order must be 0 or 1, got {other}"))),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            KernelOrder::Density => 0,
            KernelOrder::Derivative => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    sigma: f64,
    order: KernelOrder,
    truncate: bool,
}

impl KernelSpec {
    pub fn new(sigma: f64, order: KernelOrder) -> Result<Self> {
        check_sigma(sigma)?;
        Ok(Self { sigma, order, truncate: false })
    }

    pub fn density(sigma: f64) -> Result<Self> {
        Self::new(sigma, KernelOrder::Density)
    }

    pub fn derivative(sigma: f64) -> Result<Self> {
        Self::new(sigma, KernelOrder::Derivative)
    }

    /// Zero out interactions beyond [`TRUNCATION_RADIUS`] interaction bandwidths.
    pub fn with_truncation(mut self, truncate: bool) -> Self {
        self.truncate = truncate;
        self
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn order(&self) -> KernelOrder {
        self.order
    }

    pub fn truncate(&self) -> bool {
        self.truncate
    }
}

pub(crate) fn check_sigma(sigma: f64) -> Result<()> {
    if sigma.is_finite() && sigma > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("bandwidth must be positive and finite, got {sigma}")))
    }
}

#[inline]
pub(crate) fn gauss(u: f64, sigma: f64) -> f64 {
    let z = u / sigma;
    INV_SQRT_2PI / sigma * (-0.5 * z * z).exp()
}

#[inline]
pub(crate) fn gauss_d1(u: f64, sigma: f64) -> f64 {
    -u / (sigma * sigma) * gauss(u, sigma)
}

#[inline]
pub(crate) fn gauss_d2(u: f64, sigma: f64) -> f64 {
    let s2 = sigma * sigma;
    (u * u / (s2 * s2) - 1.0 / s2) * gauss(u, sigma)
}

#[inline]
fn cut(u: f64, s: f64, truncate: bool) -> bool {
    truncate && u.abs() > TRUNCATION_RADIUS * s
}

/// Evaluates the Gaussian kernel (order 0) or its first derivative (order 1) at `u`.
pub fn gaussian_eval(u: f64, spec: KernelSpec) -> Result<f64> {
    if !u.is_finite() {
        return Err(Error::invalid(format!("kernel argument must be finite, got {u}")));
    }
    Ok(match spec.order {
        KernelOrder::Density => gauss(u, spec.sigma),
        KernelOrder::Derivative => gauss_d1(u, spec.sigma),
    })
}

/// Bandwidth of the convolution of two Gaussians.
pub fn gaussian_convolve_sigma(sigma1: f64, sigma2: f64) -> Result<f64> {
    check_sigma(sigma1)?;
    check_sigma(sigma2)?;
    Ok(sigma1.hypot(sigma2))
}

fn check_samples(samples: &[f64], what: &str) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::invalid(format!("{what} is empty")));
    }
    if let Some(x) = samples.iter().find(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("{what} contains non-finite value {x}")));
    }
    Ok(())
}

/// Quadratic information potential `∫ f̂²`, i.e. `(1/N²) Σ_j Σ_i G_{σ√2}(x_i − x_j)`.
pub fn information_potential(samples: &[f64], sigma: f64) -> Result<f64> {
    check_samples(samples, "sample")?;
    check_sigma(sigma)?;
    let s = sigma * std::f64::consts::SQRT_2;
    let n = samples.len() as f64;
    let mut total = 0.0;
    for &xj in samples {
        for &xi in samples {
            total += gauss(xi - xj, s);
        }
    }
    Ok(total / (n * n))
}

/// Potential felt by sample `j`: `(1/N) Σ_i G_{σ√2}(x_j − x_i)`.
pub fn potential_at(samples: &[f64], j: usize, sigma: f64) -> Result<f64> {
    check_samples(samples, "sample")?;
    check_sigma(sigma)?;
    if j >= samples.len() {
        return Err(Error::invalid(format!("index {j} out of range for {} samples", samples.len())));
    }
    let s = sigma * std::f64::consts::SQRT_2;
    let xj = samples[j];
    Ok(samples.iter().map(|&xi| gauss(xj - xi, s)).sum::<f64>() / samples.len() as f64)
}

/// Information force on sample `j`, the derivative of [`potential_at`] with
/// respect to the position of `x_j`: `(1/N) Σ_i G'_{σ√2}(x_j − x_i)`.
pub fn information_force(samples: &[f64], j: usize, sigma: f64) -> Result<f64> {
    check_samples(samples, "sample")?;
    check_sigma(sigma)?;
    if j >= samples.len() {
        return Err(Error::invalid(format!("index {j} out of range for {} samples", samples.len())));
    }
    let s = sigma * std::f64::consts::SQRT_2;
    let xj = samples[j];
    Ok(samples.iter().map(|&xi| gauss_d1(xj - xi, s)).sum::<f64>() / samples.len() as f64)
}

/// Cross information potential `∫ f̂ ĝ` with both densities smoothed by `G_σ`.
pub fn cross_information_potential(samples_f: &[f64], samples_g: &[f64], sigma: f64) -> Result<f64> {
    check_samples(samples_f, "first sample")?;
    check_samples(samples_g, "second sample")?;
    check_sigma(sigma)?;
    let s = sigma * std::f64::consts::SQRT_2;
    // fixed summation order so that swapping the arguments is exact
    let key = |v: &[f64]| (v.len(), v.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
    let (outer, inner) = if key(samples_f) <= key(samples_g) { (samples_f, samples_g) } else { (samples_g, samples_f) };
    let mut total = 0.0;
    for &a in outer {
        for &b in inner {
            total += gauss(a - b, s);
        }
    }
    Ok(total / (samples_f.len() as f64 * samples_g.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BasisMode {
    /// One multiplicative kernel per selected joint sample (Hadamard structure).
    Paired,
    /// Kernels at every combination of per-dimension coordinates (Kronecker structure).
    Grid,
}

/// Locations of the kernel basis, one row per basis point and one column per dimension.
///
/// In `Grid` mode column `d` is the list of coordinates used along dimension
/// `d`; the actual basis is the Cartesian product of the columns.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    points: DMatrix<f64>,
    mode: BasisMode,
    indices: Vec<usize>,
}

impl BasisSet {
    pub fn new(points: DMatrix<f64>, mode: BasisMode) -> Result<Self> {
        let indices = (0..points.nrows()).collect();
        Self::with_indices(points, mode, indices)
    }

    pub(crate) fn with_indices(points: DMatrix<f64>, mode: BasisMode, indices: Vec<usize>) -> Result<Self> {
        if points.nrows() == 0 || points.ncols() == 0 {
            return Err(Error::invalid("basis set must have at least one point and one dimension"));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("basis points must be finite"));
        }
        Ok(Self { points, mode, indices })
    }

    /// Number of basis locations per dimension.
    pub fn b(&self) -> usize {
        self.points.nrows()
    }

    pub fn dims(&self) -> usize {
        self.points.ncols()
    }

    pub fn mode(&self) -> BasisMode {
        self.mode
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    /// Sample columns the points were taken from, when selected from data.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn coords(&self, dim: usize) -> Vec<f64> {
        self.points.column(dim).iter().copied().collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IimKind {
    Reference,
    CrossReference,
}

/// Information interaction matrix: the pairwise interaction potentials
/// before any averaging.
#[derive(Debug, Clone, PartialEq)]
pub struct Iim {
    pub values: DMatrix<f64>,
    pub sigma_used: f64,
    pub kind: IimKind,
}

/// `b × b` matrix of `∫ ψ_i ψ_j` along one dimension of the basis.
///
/// Order 0: `G_{σ√2}(p_i − p_j)`. Order 1 (derivative kernels on both sides):
/// `−G''_{σ√2}(p_i − p_j)`.
pub fn reference_iim(basis: &BasisSet, dim: usize, spec: KernelSpec) -> Result<Iim> {
    if dim >= basis.dims() {
        return Err(Error::invalid(format!("dimension {dim} out of range for {}-D basis", basis.dims())));
    }
    let p = basis.coords(dim);
    let s = spec.sigma * std::f64::consts::SQRT_2;
    let values = reference_matrix(&p, s, spec.order, spec.truncate);
    Ok(Iim { values, sigma_used: spec.sigma, kind: IimKind::Reference })
}

pub(crate) fn reference_matrix(p: &[f64], s: f64, order: KernelOrder, truncate: bool) -> DMatrix<f64> {
    let b = p.len();
    DMatrix::from_fn(b, b, |i, j| {
        let u = p[i] - p[j];
        if cut(u, s, truncate) {
            return 0.0;
        }
        match order {
            KernelOrder::Density => gauss(u, s),
            KernelOrder::Derivative => -gauss_d2(u, s),
        }
    })
}

/// `N × b` cross-reference matrix between samples and one dimension of the basis.
///
/// Entry `(i, l)` is `∫ ψ_l(x) K(x − x_i) dx` where `ψ_l` is the order-0 basis
/// kernel at `p_l` and `K` is the sample kernel of the requested order: order 0
/// gives `G_{σ√2}(p_l − x_i)`, order 1 gives `G'_{σ√2}(p_l − x_i)`.
pub fn cross_reference_iim(samples: &[f64], basis: &BasisSet, dim: usize, spec: KernelSpec) -> Result<Iim> {
    check_samples(samples, "sample")?;
    if dim >= basis.dims() {
        return Err(Error::invalid(format!("dimension {dim} out of range for {}-D basis", basis.dims())));
    }
    let p = basis.coords(dim);
    let s = spec.sigma * std::f64::consts::SQRT_2;
    let values = cross_matrix(samples, &p, s, spec.order, spec.truncate);
    Ok(Iim { values, sigma_used: spec.sigma, kind: IimKind::CrossReference })
}

pub(crate) fn cross_matrix(x: &[f64], p: &[f64], s: f64, order: KernelOrder, truncate: bool) -> DMatrix<f64> {
    DMatrix::from_fn(x.len(), p.len(), |i, l| {
        let u = p[l] - x[i];
        if cut(u, s, truncate) {
            return 0.0;
        }
        match order {
            KernelOrder::Density => gauss(u, s),
            KernelOrder::Derivative => gauss_d1(u, s),
        }
    })
}

/// Combines per-dimension reference IIMs into the joint one.
///
/// `Paired` takes the entrywise (Hadamard) product. `Grid` takes the Kronecker
/// product with the last dimension outermost, `V(y) ⊗ V(x)` in two dimensions,
/// which pairs with column-major `vec(Θ)`.
pub fn multiplicative_reference_iim(per_dim: &[Iim], mode: BasisMode) -> Result<Iim> {
    let first = per_dim.first().ok_or_else(|| Error::invalid("no per-dimension IIMs given"))?;
    for m in per_dim {
        if m.kind != IimKind::Reference {
            return Err(Error::invalid("multiplicative combination needs Reference IIMs"));
        }
        if !m.values.is_square() {
            return Err(Error::invalid("reference IIM must be square"));
        }
    }
    let values = match mode {
        BasisMode::Paired => {
            let shape = first.values.shape();
            let mut acc = first.values.clone();
            for m in &per_dim[1..] {
                if m.values.shape() != shape {
                    return Err(Error::invalid(format!(
                        "shape mismatch: {:?} vs {:?}",
                        m.values.shape(),
                        shape
                    )));
                }
                acc.component_mul_assign(&m.values);
            }
            acc
        }
        BasisMode::Grid => {
            let mut acc = first.values.clone();
            for m in &per_dim[1..] {
                acc = m.values.kronecker(&acc);
            }
            acc
        }
    };
    Ok(Iim { values, sigma_used: first.sigma_used, kind: IimKind::Reference })
}

/// The three potentials of the Euclidean quadratic mutual information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QmiEd {
    /// IP of the joint density.
    pub v_j: f64,
    /// IP of the product of marginals.
    pub v_m: f64,
    /// Cross potential between joint and product of marginals.
    pub v_c: f64,
    pub qmi: f64,
}

/// `∫∫ (p̂_xy − p̂_x p̂_y)² = V_J + V_M − 2 V_C` for a two-row sample.
pub fn qmi_ed(samples: &SampleMatrix, sigma: f64) -> Result<QmiEd> {
    if samples.n_components() != 2 {
        return Err(Error::invalid(format!("qmi_ed needs 2 components, got {}", samples.n_components())));
    }
    let n = samples.n_samples();
    if n < 2 {
        return Err(Error::invalid("qmi_ed needs at least 2 samples"));
    }
    check_sigma(sigma)?;
    let s = sigma * std::f64::consts::SQRT_2;
    let x1 = samples.row(0);
    let x2 = samples.row(1);
    let nf = n as f64;

    let mut v_j = 0.0;
    let mut pot1 = vec![0.0; n];
    let mut pot2 = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            let k1 = gauss(x1[i] - x1[j], s);
            let k2 = gauss(x2[i] - x2[j], s);
            v_j += k1 * k2;
            pot1[j] += k1;
            pot2[j] += k2;
        }
    }
    v_j /= nf * nf;
    pot1.iter_mut().for_each(|v| *v /= nf);
    pot2.iter_mut().for_each(|v| *v /= nf);

    let ip1 = pot1.iter().sum::<f64>() / nf;
    let ip2 = pot2.iter().sum::<f64>() / nf;
    let v_m = ip1 * ip2;
    let v_c = pot1.iter().zip(&pot2).map(|(a, b)| a * b).sum::<f64>() / nf;
    Ok(QmiEd { v_j, v_m, v_c, qmi: v_j + v_m - 2.0 * v_c })
}
