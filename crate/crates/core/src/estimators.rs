//! Least-squares direct estimators of the L² function-difference contrasts.
//!
//! The target `Δ(x, y) = p_xy − p_x p_y` (or its mixed partial `∂²Δ/∂x∂y` for
//! the gradient variants) is approximated by a linear combination of
//! multiplicative Gaussian kernels `g = θᵀΨ`. Minimizing
//! `∫∫ (g − Δ)²` up to the constant `∫∫ Δ²` gives
//!
//! ```text
//! J(θ) = θᵀ V_R θ − 2 hᵀ θ + λ θᵀ θ,     θ* = (V_R + λI)⁻¹ h
//! ```
//!
//! where `V_R` is the reference interaction matrix of the basis and `h` holds
//! the cross-reference potentials between the basis and `Δ`. At the optimum
//! `−J(θ*) = hᵀθ*` estimates `‖Δ‖²`.
//!
//! Basis placement:
//! - `Paired` (LSFD, LSGFD): `b` kernels at selected joint samples, `V_R = V_R(x) ∘ V_R(y)`.
//! - `Grid` (LSFD2, LSGFD2): `b²` kernels at all coordinate combinations,
//!   `V_R = V_R(y) ⊗ V_R(x)`, solved as `V_R(x) Θ V_R(y)ᵀ + λΘ = H`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::density::{normalize, BandwidthSelector, SampleMatrix};
use crate::error::{Error, Result};
use crate::kernel_field::{check_sigma, cross_matrix, reference_matrix, BasisMode, BasisSet, KernelOrder};
use crate::linalg::{solve_regularized, solve_sylvester};

pub const DEFAULT_LAMBDA: f64 = 0.01;
pub const DEFAULT_MAX_BASIS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimatorKind {
    Lsfd,
    Lsfd2,
    Lsgfd,
    Lsgfd2,
}

impl EstimatorKind {
    pub const ALL: [EstimatorKind; 4] =
        [EstimatorKind::Lsfd, EstimatorKind::Lsfd2, EstimatorKind::Lsgfd, EstimatorKind::Lsgfd2];

    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Lsfd => "lsfd",
            EstimatorKind::Lsfd2 => "lsfd2",
            EstimatorKind::Lsgfd => "lsgfd",
            EstimatorKind::Lsgfd2 => "lsgfd2",
        }
    }

    pub fn basis_mode(self) -> BasisMode {
        match self {
            EstimatorKind::Lsfd | EstimatorKind::Lsgfd => BasisMode::Paired,
            EstimatorKind::Lsfd2 | EstimatorKind::Lsgfd2 => BasisMode::Grid,
        }
    }

    pub fn derivative(self) -> bool {
        matches!(self, EstimatorKind::Lsgfd | EstimatorKind::Lsgfd2)
    }

    pub fn from_parts(mode: BasisMode, derivative: bool) -> Self {
        match (mode, derivative) {
            (BasisMode::Paired, false) => EstimatorKind::Lsfd,
            (BasisMode::Grid, false) => EstimatorKind::Lsfd2,
            (BasisMode::Paired, true) => EstimatorKind::Lsgfd,
            (BasisMode::Grid, true) => EstimatorKind::Lsgfd2,
        }
    }
}

impl fmt::Display for EstimatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EstimatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EstimatorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown estimator '{s}'")))
    }
}

/// Normalization of the derivative kernel placed on the samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum DerivativeScale {
    /// Dimensionless Hermite form `H₁(u/σ) G_σ(u) = −σ G'_σ(u)` per dimension.
    #[default]
    Hermite,
    /// The exact derivative `G'_σ(u)`; `h` then targets `∂²Δ/∂x∂y` itself.
    Exact,
}

#[derive(Debug, Clone)]
pub struct EstimatorConfig {
    /// Basis locations per dimension; `None` means `min(100, N)`.
    pub b: Option<usize>,
    pub lambda: f64,
    pub bandwidth: BandwidthSelector,
    pub basis_mode: BasisMode,
    pub derivative: bool,
    pub seed: u64,
    /// Multiplies σ for the derivative kernels of the gradient estimators.
    pub derivative_bandwidth_multiplier: f64,
    /// Also use the multiplied bandwidth for `V_R` in the gradient estimators.
    pub recompute_reference_for_derivative: bool,
    pub derivative_scale: DerivativeScale,
    /// Drop kernel interactions beyond six interaction bandwidths.
    pub truncate: bool,
}

impl EstimatorConfig {
    pub fn new(kind: EstimatorKind) -> Self {
        Self {
            b: None,
            lambda: DEFAULT_LAMBDA,
            bandwidth: BandwidthSelector::Rot,
            basis_mode: kind.basis_mode(),
            derivative: kind.derivative(),
            seed: 0,
            derivative_bandwidth_multiplier: 1.0,
            recompute_reference_for_derivative: false,
            derivative_scale: DerivativeScale::Hermite,
            truncate: false,
        }
    }

    pub fn kind(&self) -> EstimatorKind {
        EstimatorKind::from_parts(self.basis_mode, self.derivative)
    }

    pub fn with_b(mut self, b: usize) -> Self {
        self.b = Some(b);
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_bandwidth(mut self, bandwidth: BandwidthSelector) -> Self {
        self.bandwidth = bandwidth;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_derivative_scale(mut self, scale: DerivativeScale) -> Self {
        self.derivative_scale = scale;
        self
    }

    pub fn basis_count(&self, n_samples: usize) -> usize {
        self.b.unwrap_or(DEFAULT_MAX_BASIS.min(n_samples))
    }

    fn validate(&self, n_samples: usize) -> Result<()> {
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(Error::invalid(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if self.b == Some(0) {
            return Err(Error::invalid("basis count must be >= 1"));
        }
        let b = self.basis_count(n_samples);
        if b > n_samples {
            return Err(Error::invalid(format!("basis count {b} exceeds sample count {n_samples}")));
        }
        check_sigma(self.derivative_bandwidth_multiplier)
            .map_err(|_| Error::invalid("derivative bandwidth multiplier must be positive"))
    }
}

/// Fitted parameters: a vector over paired basis points or a `b × b` matrix
/// over grid combinations (row = x coordinate, column = y coordinate).
#[derive(Debug, Clone, PartialEq)]
pub enum Theta {
    Vector(DVector<f64>),
    Matrix(DMatrix<f64>),
}

impl Theta {
    pub fn norm_squared(&self) -> f64 {
        match self {
            Theta::Vector(v) => v.norm_squared(),
            Theta::Matrix(m) => m.norm_squared(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        match self {
            Theta::Vector(v) => v.as_slice(),
            Theta::Matrix(m) => m.as_slice(),
        }
    }
}

/// Nominal work done by a fit.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounts {
    pub kernel_evals: u64,
    /// Multiply-adds outside kernel evaluation (symmetric eigensolves counted as `9b³`,
    /// Cholesky as `b³/3`).
    pub mul_adds: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    pub kind: EstimatorKind,
    pub theta: Theta,
    /// `θᵀV_Rθ − 2hᵀθ + λθᵀθ` at the fitted θ.
    pub objective: f64,
    /// `θᵀV_Rθ`, the squared L² norm of the fitted function.
    pub v2_hat: f64,
    /// `hᵀθ`.
    pub crip_hat: f64,
    pub residual: f64,
    /// Contrast Φ, the negative of the dependence measure; equals `objective`.
    pub contrast: f64,
    pub sigma: f64,
    pub lambda: f64,
    pub b: usize,
    pub h_norm: f64,
    pub ops: OpCounts,
}

impl EstimatorReport {
    /// The dependence measure `−objective`, the non-negative quantity reported
    /// by the independence test and plotted by the landscape.
    pub fn value(&self) -> f64 {
        -self.objective
    }
}

/// The two parts of `h = h' − h''`: the joint-density term and the product-of-marginals term.
#[derive(Debug, Clone, PartialEq)]
pub struct HTerms<T> {
    pub joint: T,
    pub marginal: T,
}

impl HTerms<DVector<f64>> {
    pub fn h(&self) -> DVector<f64> {
        &self.joint - &self.marginal
    }
}

impl HTerms<DMatrix<f64>> {
    pub fn h(&self) -> DMatrix<f64> {
        &self.joint - &self.marginal
    }
}

pub(crate) fn derive_seed(base: u64, stream: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = base ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Chooses `b` sample columns by seeded uniform subsampling without
/// replacement, kept in ascending column order. In `Grid` mode the same
/// columns supply every dimension's coordinate list, so the grid contains the
/// paired points plus all unpaired combinations.
pub fn select_basis(samples: &SampleMatrix, b: usize, mode: BasisMode, seed: u64) -> Result<BasisSet> {
    let indices = select_indices(samples.n_samples(), b, seed)?;
    basis_from_indices(samples, indices, mode)
}

pub(crate) fn select_indices(n: usize, b: usize, seed: u64) -> Result<Vec<usize>> {
    if b == 0 {
        return Err(Error::invalid("basis count must be >= 1"));
    }
    if b > n {
        return Err(Error::invalid(format!("basis count {b} exceeds sample count {n}")));
    }
    if b == n {
        return Ok((0..n).collect());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, n, b).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

fn basis_from_indices(samples: &SampleMatrix, indices: Vec<usize>, mode: BasisMode) -> Result<BasisSet> {
    let data = samples.as_matrix();
    let points = DMatrix::from_fn(indices.len(), data.nrows(), |r, d| data[(d, indices[r])]);
    BasisSet::with_indices(points, mode, indices)
}

fn require_two(samples: &SampleMatrix) -> Result<()> {
    if samples.n_components() != 2 {
        return Err(Error::Unsupported(format!(
            "closed forms are implemented for 2 components, got {}",
            samples.n_components()
        )));
    }
    Ok(())
}

/// Per-dimension bandwidths and the sample-kernel shape for one fit.
#[derive(Debug, Clone, Copy)]
struct KernelPlan {
    /// Bandwidth of the basis kernels.
    basis_sigma: f64,
    /// Bandwidth of the kernels placed on the samples.
    sample_sigma: f64,
    order: KernelOrder,
    /// Per-dimension factor applied to the sample kernel.
    scale: f64,
    truncate: bool,
}

impl KernelPlan {
    fn density(sigma: f64, truncate: bool) -> Self {
        Self { basis_sigma: sigma, sample_sigma: sigma, order: KernelOrder::Density, scale: 1.0, truncate }
    }

    fn derivative(sigma: f64, config: &EstimatorConfig) -> Self {
        let m = config.derivative_bandwidth_multiplier;
        let sample_sigma = sigma * m;
        let basis_sigma = if config.recompute_reference_for_derivative { sigma * m } else { sigma };
        let scale = match config.derivative_scale {
            DerivativeScale::Hermite => -sample_sigma,
            DerivativeScale::Exact => 1.0,
        };
        Self { basis_sigma, sample_sigma, order: KernelOrder::Derivative, scale, truncate: config.truncate }
    }

    fn from_config(sigma: f64, config: &EstimatorConfig) -> Self {
        if config.derivative {
            Self::derivative(sigma, config)
        } else {
            Self::density(sigma, config.truncate)
        }
    }

    fn reference(&self, p: &[f64]) -> DMatrix<f64> {
        reference_matrix(p, self.basis_sigma * std::f64::consts::SQRT_2, KernelOrder::Density, self.truncate)
    }

    /// `N × b`: `∫ ψ_l(t) K(t − x_i) dt` for the sample kernel `K`.
    fn cross(&self, x: &[f64], p: &[f64]) -> DMatrix<f64> {
        let s = self.basis_sigma.hypot(self.sample_sigma);
        let mut m = cross_matrix(x, p, s, self.order, self.truncate);
        if self.scale != 1.0 {
            m *= self.scale;
        }
        m
    }
}

fn paired_terms(kx: &DMatrix<f64>, ky: &DMatrix<f64>) -> HTerms<DVector<f64>> {
    let n = kx.nrows() as f64;
    let joint = kx.component_mul(ky).row_sum().transpose() / n;
    let sx = kx.row_sum().transpose();
    let sy = ky.row_sum().transpose();
    let marginal = sx.component_mul(&sy) / (n * n);
    HTerms { joint, marginal }
}

fn grid_terms(kx: &DMatrix<f64>, ky: &DMatrix<f64>) -> HTerms<DMatrix<f64>> {
    let n = kx.nrows() as f64;
    let joint = kx.transpose() * ky / n;
    let sx = kx.row_sum().transpose();
    let sy = ky.row_sum().transpose();
    let marginal = &sx * sy.transpose() / (n * n);
    HTerms { joint, marginal }
}

fn terms_for<T>(
    samples: &SampleMatrix,
    basis: &BasisSet,
    plan: KernelPlan,
    f: impl Fn(&DMatrix<f64>, &DMatrix<f64>) -> HTerms<T>,
) -> Result<HTerms<T>> {
    require_two(samples)?;
    if basis.dims() != 2 {
        return Err(Error::invalid(format!("basis is {}-D, samples are 2-D", basis.dims())));
    }
    let kx = plan.cross(&samples.row(0), &basis.coords(0));
    let ky = plan.cross(&samples.row(1), &basis.coords(1));
    Ok(f(&kx, &ky))
}

/// `h' = (1/N) Σ_i V(x_i, x_l) V(y_i, y_l)` and the factorized
/// `h'' = (1/N²)(Σ_i V(x_i, x_l))(Σ_j V(y_j, y_l))` for a paired basis.
pub fn lsfd_h_terms(samples: &SampleMatrix, basis: &BasisSet, sigma: f64) -> Result<HTerms<DVector<f64>>> {
    check_sigma(sigma)?;
    terms_for(samples, basis, KernelPlan::density(sigma, false), paired_terms)
}

pub fn lsfd_h(samples: &SampleMatrix, basis: &BasisSet, sigma: f64) -> Result<DVector<f64>> {
    Ok(lsfd_h_terms(samples, basis, sigma)?.h())
}

/// Gradient-variant `h` terms: the sample kernels are derivative kernels, so
/// each term carries the odd factors `(x_i − x_l)(y_i − y_l)` in front of the
/// shared exponential.
pub fn lsgfd_h_terms(
    samples: &SampleMatrix,
    basis: &BasisSet,
    sigma: f64,
    scale: DerivativeScale,
) -> Result<HTerms<DVector<f64>>> {
    check_sigma(sigma)?;
    let config = EstimatorConfig::new(EstimatorKind::Lsgfd).with_derivative_scale(scale);
    terms_for(samples, basis, KernelPlan::derivative(sigma, &config), paired_terms)
}

pub fn lsgfd_h(samples: &SampleMatrix, basis: &BasisSet, sigma: f64) -> Result<DVector<f64>> {
    Ok(lsgfd_h_terms(samples, basis, sigma, DerivativeScale::Hermite)?.h())
}

/// Grid-basis `H` (`b × b`, row = x coordinate, column = y coordinate):
/// `H' = (1/N) V_xᵀ V_y` with `V_x[i, l] = V(x_i, x_l)`.
pub fn lsfd2_h_terms(samples: &SampleMatrix, basis: &BasisSet, sigma: f64) -> Result<HTerms<DMatrix<f64>>> {
    check_sigma(sigma)?;
    terms_for(samples, basis, KernelPlan::density(sigma, false), grid_terms)
}

pub fn lsgfd2_h_terms(
    samples: &SampleMatrix,
    basis: &BasisSet,
    sigma: f64,
    scale: DerivativeScale,
) -> Result<HTerms<DMatrix<f64>>> {
    check_sigma(sigma)?;
    let config = EstimatorConfig::new(EstimatorKind::Lsgfd2).with_derivative_scale(scale);
    terms_for(samples, basis, KernelPlan::derivative(sigma, &config), grid_terms)
}

/// Reference IIM pair `(V_R(x), V_R(y))` for the basis at bandwidth σ.
pub fn reference_pair(basis: &BasisSet, sigma: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    check_sigma(sigma)?;
    let plan = KernelPlan::density(sigma, false);
    Ok((plan.reference(&basis.coords(0)), plan.reference(&basis.coords(1))))
}

/// Fits the estimator selected by `config`. Samples are normalized first.
pub fn fit(samples: &SampleMatrix, config: &EstimatorConfig) -> Result<EstimatorReport> {
    require_two(samples)?;
    config.validate(samples.n_samples())?;
    let z = normalize(samples)?;
    let sigma = config.bandwidth.select(&z)?;
    let b = config.basis_count(z.n_samples());
    let indices = select_indices(z.n_samples(), b, config.seed)?;
    fit_normalized(&z, indices, sigma, config)
}

/// Fits with a caller-chosen basis, given in normalized coordinates.
pub fn fit_with_basis(samples: &SampleMatrix, basis: &BasisSet, config: &EstimatorConfig) -> Result<EstimatorReport> {
    require_two(samples)?;
    if basis.mode() != config.basis_mode {
        return Err(Error::invalid("basis mode does not match the estimator configuration"));
    }
    config.validate(samples.n_samples())?;
    let z = normalize(samples)?;
    let sigma = config.bandwidth.select(&z)?;
    fit_core(&z, basis, sigma, config)
}

pub(crate) fn fit_normalized(
    z: &SampleMatrix,
    indices: Vec<usize>,
    sigma: f64,
    config: &EstimatorConfig,
) -> Result<EstimatorReport> {
    let basis = basis_from_indices(z, indices, config.basis_mode)?;
    fit_core(z, &basis, sigma, config)
}

fn fit_core(z: &SampleMatrix, basis: &BasisSet, sigma: f64, config: &EstimatorConfig) -> Result<EstimatorReport> {
    let plan = KernelPlan::from_config(sigma, config);
    let (px, py) = (basis.coords(0), basis.coords(1));
    let (x, y) = (z.row(0), z.row(1));
    let n = x.len() as u64;
    let b = basis.b();
    let bu = b as u64;

    let vx = plan.reference(&px);
    let vy = plan.reference(&py);
    let kx = plan.cross(&x, &px);
    let ky = plan.cross(&y, &py);
    let kernel_evals = 2 * bu * bu + 2 * n * bu;
    let lambda = config.lambda;

    let report = match config.basis_mode {
        BasisMode::Paired => {
            let v = vx.component_mul(&vy);
            let h = paired_terms(&kx, &ky).h();
            let theta = solve_regularized(&v, lambda, &h)?;
            let vt = &v * &theta;
            let v2_hat = theta.dot(&vt);
            let crip_hat = h.dot(&theta);
            let residual = (&vt + &theta * lambda - &h).norm();
            let mul_adds = bu * bu + 3 * n * bu + bu * bu * bu / 3 + 4 * bu * bu;
            build_report(
                config.kind(),
                Theta::Vector(theta),
                v2_hat,
                crip_hat,
                residual,
                sigma,
                lambda,
                b,
                h.norm(),
                OpCounts { kernel_evals, mul_adds },
            )
        }
        BasisMode::Grid => {
            let h = grid_terms(&kx, &ky).h();
            let theta = solve_sylvester(&vx, &vy, lambda, &h)?;
            let vtv = &vx * &theta * vy.transpose();
            let v2_hat = theta.dot(&vtv);
            let crip_hat = h.dot(&theta);
            let residual = (&vtv + &theta * lambda - &h).norm();
            let mul_adds = n * bu * bu + 2 * n * bu + 2 * 9 * bu * bu * bu + 4 * bu * bu * bu + 4 * bu * bu * bu;
            build_report(
                config.kind(),
                Theta::Matrix(theta),
                v2_hat,
                crip_hat,
                residual,
                sigma,
                lambda,
                b,
                h.norm(),
                OpCounts { kernel_evals, mul_adds },
            )
        }
    };
    Ok(report)
}

#[allow(clippy::too_many_arguments)]
fn build_report(
    kind: EstimatorKind,
    theta: Theta,
    v2_hat: f64,
    crip_hat: f64,
    residual: f64,
    sigma: f64,
    lambda: f64,
    b: usize,
    h_norm: f64,
    ops: OpCounts,
) -> EstimatorReport {
    let objective = v2_hat - 2.0 * crip_hat + lambda * theta.norm_squared();
    EstimatorReport {
        kind,
        theta,
        objective,
        v2_hat,
        crip_hat,
        residual,
        contrast: objective,
        sigma,
        lambda,
        b,
        h_norm,
        ops,
    }
}

fn fit_kind(samples: &SampleMatrix, config: &EstimatorConfig, kind: EstimatorKind) -> Result<EstimatorReport> {
    if config.kind() != kind {
        return Err(Error::invalid(format!("configuration is for {}, not {kind}", config.kind())));
    }
    fit(samples, config)
}

/// Paired basis, density kernels.
pub fn lsfd_fit(samples: &SampleMatrix, config: &EstimatorConfig) -> Result<EstimatorReport> {
    fit_kind(samples, config, EstimatorKind::Lsfd)
}

/// Grid basis, density kernels, solved as a discrete Sylvester equation.
pub fn lsfd2_fit(samples: &SampleMatrix, config: &EstimatorConfig) -> Result<EstimatorReport> {
    fit_kind(samples, config, EstimatorKind::Lsfd2)
}

/// Paired basis, derivative kernels on the samples.
pub fn lsgfd_fit(samples: &SampleMatrix, config: &EstimatorConfig) -> Result<EstimatorReport> {
    fit_kind(samples, config, EstimatorKind::Lsgfd)
}

/// Grid basis, derivative kernels on the samples.
pub fn lsgfd2_fit(samples: &SampleMatrix, config: &EstimatorConfig) -> Result<EstimatorReport> {
    fit_kind(samples, config, EstimatorKind::Lsgfd2)
}
