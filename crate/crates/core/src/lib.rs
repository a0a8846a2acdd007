//! Kernel-based quadratic independence measures for blind source separation.
//!
//! The crate estimates the squared L² norm of the function difference
//! `Δ = p_xy − p_x p_y` and of its mixed partial derivative directly, by least
//! squares over a Gaussian kernel basis, without first estimating the
//! densities. The building blocks are information potentials and their
//! reference and cross-reference interaction matrices.
//!
//! ```no_run
//! use fdcontrast::{dependent_pair, fit, EstimatorConfig, EstimatorKind};
//!
//! let data = dependent_pair(300, 7)?;
//! let report = fit(&data, &EstimatorConfig::new(EstimatorKind::Lsfd))?;
//! println!("LSFD = {:.4e}", report.value());
//! # Ok::<(), fdcontrast::Error>(())
//! ```

pub mod bss;
pub mod density;
mod error;
pub mod estimators;
pub mod experiments;
pub mod kernel_field;
pub mod linalg;
pub mod sources;

pub use bss::{angle_error, landscape, mix, rotate2, whiten, Landscape, LandscapeOptions, MixingModel, Whitened};
pub use density::{
    kde_eval, lp_fd_grid, normalize, rot_bandwidth, BandwidthSelector, GridSpec, PluginBandwidth, SampleMatrix,
};
pub use error::{Error, Result};
pub use estimators::{
    fit, fit_with_basis, lsfd2_fit, lsfd_fit, lsfd_h, lsgfd2_fit, lsgfd_fit, lsgfd_h, select_basis, DerivativeScale,
    EstimatorConfig, EstimatorKind, EstimatorReport, Theta,
};
pub use kernel_field::{
    cross_information_potential, gaussian_convolve_sigma, gaussian_eval, information_force,
    information_potential, multiplicative_reference_iim, qmi_ed, reference_iim, BasisMode, BasisSet, Iim,
    IimKind, KernelOrder, KernelSpec, QmiEd,
};
pub use sources::{dependent_pair, independent_pair, sample, DistributionKind};
