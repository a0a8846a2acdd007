use std::f64::consts::{FRAC_PI_2, PI};

use fdcontrast::bss::{landscape_seed, rotation};
use fdcontrast::density::{mean, std_dev};
use fdcontrast::estimators::{lsfd2_h_terms, lsfd_h_terms, lsgfd2_h_terms, lsgfd_h_terms, reference_pair};
use fdcontrast::linalg::vec_col_major;
use fdcontrast::sources::{sample_raw, source_pair};
use fdcontrast::*;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pair(n: usize, seed: u64, coupling: f64) -> SampleMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    let y: Vec<f64> = x.iter().map(|v| coupling * (3.0 * v).cos() + rng.random::<f64>()).collect();
    SampleMatrix::from_rows(vec![x, y]).unwrap()
}

fn scaled(s: &SampleMatrix, a: f64, b: f64, shift: f64) -> SampleMatrix {
    SampleMatrix::from_rows(vec![
        s.row(0).iter().map(|v| a * v + shift).collect(),
        s.row(1).iter().map(|v| b * v - shift).collect(),
    ])
    .unwrap()
}

fn cfg(kind: EstimatorKind, b: usize, seed: u64) -> EstimatorConfig {
    EstimatorConfig::new(kind).with_b(b).with_seed(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ip_bounded_and_shift_invariant(
        x in prop::collection::vec(-5.0f64..5.0, 1..40),
        sigma in 0.05f64..3.0,
        c in -100.0f64..100.0,
    ) {
        let ip = information_potential(&x, sigma).unwrap();
        let peak = gaussian_eval(0.0, KernelSpec::density(sigma * 2f64.sqrt()).unwrap()).unwrap();
        prop_assert!(ip > 0.0 && ip <= peak * (1.0 + 1e-15));
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let ip2 = information_potential(&shifted, sigma).unwrap();
        prop_assert!((ip - ip2).abs() < 1e-12);
    }

    #[test]
    fn cross_potential_symmetric(
        f in prop::collection::vec(-5.0f64..5.0, 1..30),
        g in prop::collection::vec(-5.0f64..5.0, 1..30),
        sigma in 0.05f64..3.0,
    ) {
        prop_assert_eq!(
            cross_information_potential(&f, &g, sigma).unwrap(),
            cross_information_potential(&g, &f, sigma).unwrap()
        );
    }

    #[test]
    fn reference_iim_psd(
        p in prop::collection::vec(-3.0f64..3.0, 1..40),
        sigma in 0.05f64..2.0,
        derivative in any::<bool>(),
    ) {
        let basis = BasisSet::new(DMatrix::from_column_slice(p.len(), 1, &p), BasisMode::Paired).unwrap();
        let spec = if derivative { KernelSpec::derivative(sigma) } else { KernelSpec::density(sigma) }.unwrap();
        let v = reference_iim(&basis, 0, spec).unwrap().values;
        prop_assert_eq!(&v, &v.transpose());
        let eig = v.symmetric_eigenvalues();
        prop_assert!(eig.min() >= -1e-10 * eig.max().abs());
    }

    #[test]
    fn normalize_is_idempotent(seed in any::<u64>(), a in 0.01f64..100.0, shift in -50.0f64..50.0) {
        let s = scaled(&random_pair(50, seed, 0.5), a, 1.0 / a, shift);
        let z = normalize(&s).unwrap();
        for r in z.rows() {
            prop_assert!(mean(&r).abs() < 1e-12);
            prop_assert!((std_dev(&r) - 1.0).abs() < 1e-12);
        }
        let zz = normalize(&z).unwrap();
        prop_assert!((zz.as_matrix() - z.as_matrix()).amax() < 1e-12);
    }

    #[test]
    fn kronecker_trace_identity(seed in any::<u64>(), b in 1usize..8, sigma in 0.1f64..1.5) {
        let s = normalize(&random_pair(30, seed, 0.3)).unwrap();
        let basis = select_basis(&s, b, BasisMode::Grid, seed).unwrap();
        let (vx, vy) = reference_pair(&basis, sigma).unwrap();
        let spec = KernelSpec::density(sigma).unwrap();
        let per = [reference_iim(&basis, 0, spec).unwrap(), reference_iim(&basis, 1, spec).unwrap()];
        let big = multiplicative_reference_iim(&per, BasisMode::Grid).unwrap().values;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let theta = DMatrix::from_fn(b, b, |_, _| rng.random_range(-1.0..1.0));
        let v = vec_col_major(&theta);
        let lhs = v.dot(&(&big * &v));
        let rhs = (theta.transpose() * &vx * &theta * vy.transpose()).trace();
        prop_assert!((lhs - rhs).abs() < 1e-10);
    }

    #[test]
    fn rotation_composes(seed in any::<u64>(), a in -PI..PI, b in -PI..PI) {
        let s = random_pair(40, seed, 0.0);
        let two = rotate2(&rotate2(&s, a).unwrap(), b).unwrap();
        let one = rotate2(&s, a + b).unwrap();
        prop_assert!((two.as_matrix() - one.as_matrix()).amax() < 1e-12);
    }

    #[test]
    fn whitening_gives_identity_and_orthogonal_q(seed in any::<u64>(), entries in prop::array::uniform4(-3.0f64..3.0)) {
        let a = DMatrix::from_row_slice(2, 2, &entries);
        prop_assume!(a.determinant().abs() > 0.05);
        let src = whiten(&source_pair(DistributionKind::C, 300, seed).unwrap()).unwrap().white;
        let w = whiten(&mix(&src, &a).unwrap()).unwrap();
        let m = w.white.as_matrix();
        let cov = m * m.transpose() / m.ncols() as f64;
        prop_assert!((cov - DMatrix::identity(2, 2)).amax() < 1e-10);
        for r in w.white.rows() {
            prop_assert!(mean(&r).abs() < 1e-10);
        }
        let q = &w.transform * &a;
        prop_assert!((q.transpose() * &q - DMatrix::identity(2, 2)).norm() < 1e-8);
    }

    #[test]
    fn lp_grid_scale_invariant(seed in any::<u64>(), a in 0.05f64..20.0, b in 0.05f64..20.0) {
        let s = random_pair(60, seed, 1.0);
        let base = lp_fd_grid(&s, 0.45, 2.0, GridSpec::default()).unwrap();
        let other = lp_fd_grid(&scaled(&s, a, b, 3.0), 0.45, 2.0, GridSpec::default()).unwrap();
        prop_assert!((base - other).abs() < 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn estimators_scale_invariant(seed in any::<u64>(), a in 0.01f64..100.0, b in 0.01f64..100.0, shift in -10.0f64..10.0) {
        let s = random_pair(80, seed, 1.0);
        let t = scaled(&s, a, b, shift);
        for kind in EstimatorKind::ALL {
            let c = cfg(kind, 20, seed);
            let v0 = fit(&s, &c).unwrap().value();
            let v1 = fit(&t, &c).unwrap().value();
            prop_assert!((v0 - v1).abs() < 1e-10, "{} {} vs {}", kind, v0, v1);
        }
    }

    #[test]
    fn estimators_permutation_invariant(seed in any::<u64>()) {
        let s = random_pair(80, seed, 1.0);
        let swapped = s.swap_rows(0, 1);
        for kind in EstimatorKind::ALL {
            let c = cfg(kind, 20, seed);
            let v0 = fit(&s, &c).unwrap().value();
            let v1 = fit(&swapped, &c).unwrap().value();
            prop_assert!((v0 - v1).abs() < 1e-10, "{} {} vs {}", kind, v0, v1);
        }
    }

    #[test]
    fn objective_identity_and_solver_residual(seed in any::<u64>(), b in 3usize..30, lambda in 1e-4f64..1.0) {
        let s = normalize(&random_pair(60, seed, 0.8)).unwrap();
        let sigma = BandwidthSelector::Rot.select(&s).unwrap();
        for kind in EstimatorKind::ALL {
            let c = cfg(kind, b, seed).with_lambda(lambda);
            let basis = select_basis(&s, b, kind.basis_mode(), seed).unwrap();
            let r = fit_with_basis(&s, &basis, &c).unwrap();
            let (vx, vy) = reference_pair(&basis, sigma).unwrap();
            let (quad, lin, h_norm) = match &r.theta {
                Theta::Vector(th) => {
                    let h = if kind.derivative() {
                        lsgfd_h_terms(&s, &basis, sigma, DerivativeScale::Hermite).unwrap().h()
                    } else {
                        lsfd_h_terms(&s, &basis, sigma).unwrap().h()
                    };
                    let v = vx.component_mul(&vy);
                    (th.dot(&(&v * th)), h.dot(th), h.norm())
                }
                Theta::Matrix(th) => {
                    let h = if kind.derivative() {
                        lsgfd2_h_terms(&s, &basis, sigma, DerivativeScale::Hermite).unwrap().h()
                    } else {
                        lsfd2_h_terms(&s, &basis, sigma).unwrap().h()
                    };
                    let big = vy.kronecker(&vx);
                    let v = vec_col_major(th);
                    (v.dot(&(&big * &v)), h.dot(th), h.norm())
                }
            };
            let objective = quad - 2.0 * lin + lambda * r.theta.norm_squared();
            prop_assert!((objective - r.objective).abs() <= 1e-12 * objective.abs().max(1e-300) + 1e-300,
                "{}: {} vs {}", kind, objective, r.objective);
            prop_assert!(r.residual <= 1e-8 * (1.0 + h_norm));
            prop_assert_eq!(r.contrast, r.objective);
            prop_assert!(r.value() >= 0.0);
        }
    }
}

#[test]
fn ridge_limit_sends_objective_to_zero() {
    let s = random_pair(100, 5, 1.0);
    for kind in EstimatorKind::ALL {
        let lambda = 1e12;
        let r = fit(&s, &cfg(kind, 30, 1).with_lambda(lambda)).unwrap();
        // θ → h/λ and objective → −‖h‖²/λ
        let h2 = r.h_norm * r.h_norm;
        assert!(r.theta.norm_squared().sqrt() <= r.h_norm / lambda * (1.0 + 1e-9));
        assert!(r.objective <= 0.0 && r.objective.abs() <= h2 / lambda * (1.0 + 1e-9));
        assert!(((r.objective * lambda) + h2).abs() <= 1e-6 * h2);
    }
}

#[test]
fn singular_system_without_ridge() {
    let x: Vec<f64> = (0..60).map(|i| (i % 3) as f64).collect();
    let y: Vec<f64> = (0..60).map(|i| (i % 2) as f64 + 0.01 * i as f64).collect();
    let s = SampleMatrix::from_rows(vec![x, y]).unwrap();
    let c = EstimatorConfig::new(EstimatorKind::Lsfd2).with_b(30).with_lambda(0.0).with_seed(3);
    assert!(matches!(fit(&s, &c), Err(Error::SingularSystem { .. })));
}

#[test]
fn operation_counts_scale_as_documented() {
    let n = 200;
    let s = random_pair(n, 9, 1.0);
    for kind in EstimatorKind::ALL {
        let mut prev = None;
        for b in [10usize, 20, 40] {
            let r = fit(&s, &cfg(kind, b, 2)).unwrap();
            let (bu, nu) = (b as u64, n as u64);
            assert_eq!(r.ops.kernel_evals, 2 * bu * bu + 2 * nu * bu);
            let bound = match kind.basis_mode() {
                BasisMode::Paired => 20 * (bu * bu * bu + bu * bu + nu * bu),
                BasisMode::Grid => 40 * (bu * bu * bu + bu * bu * nu),
            };
            assert!(r.ops.mul_adds <= bound);
            if let Some(p) = prev {
                assert!(r.ops.mul_adds > p);
            }
            prev = Some(r.ops.mul_adds);
        }
    }
}

#[test]
fn whitening_already_white_input() {
    let src = source_pair(DistributionKind::U, 500, 4).unwrap();
    let w = whiten(&src).unwrap();
    // standardized but not decorrelated in-sample: W is near I up to sampling error
    assert!((&w.transform - DMatrix::identity(2, 2)).amax() < 0.2);
    let m = w.white.as_matrix();
    assert!((m * m.transpose() / 500.0 - DMatrix::identity(2, 2)).amax() < 1e-10);
    let again = whiten(&w.white).unwrap();
    assert!((&again.transform - DMatrix::identity(2, 2)).amax() < 1e-10);
    let scaled = whiten(&mix(&src, &DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.2]))).unwrap()).unwrap();
    let m = scaled.white.as_matrix();
    assert!((m * m.transpose() / 500.0 - DMatrix::identity(2, 2)).amax() < 1e-10);
}

#[test]
fn landscape_is_deterministic() {
    let w = whiten(&mix(&source_pair(DistributionKind::C, 200, 8).unwrap(), &rotation(0.4)).unwrap()).unwrap();
    for kind in [EstimatorKind::Lsfd, EstimatorKind::Lsgfd2] {
        let c = cfg(kind, 40, 12);
        let a = landscape(&w.white, &c, LandscapeOptions::with_grid(20)).unwrap();
        let b = landscape(&w.white, &c, LandscapeOptions::with_grid(20)).unwrap();
        assert_eq!(a, b);
        let bits: Vec<u64> = a.values.iter().map(|v| v.to_bits()).collect();
        assert_eq!(bits, b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }
}

#[test]
fn landscape_grid_matches_direct_loop() {
    let w = whiten(&mix(&source_pair(DistributionKind::B, 150, 3).unwrap(), &rotation(1.0)).unwrap()).unwrap();
    for freeze in [false, true] {
        for kind in EstimatorKind::ALL {
            let c = cfg(kind, 30, 77);
            let opts = LandscapeOptions { freeze_basis: freeze, ..LandscapeOptions::with_grid(8) };
            let land = landscape(&w.white, &c, opts).unwrap();
            assert_eq!(land.thetas.len(), 8);
            for k in 0..8 {
                let theta = k as f64 * FRAC_PI_2 / 8.0;
                assert_eq!(land.thetas[k], theta);
                let seed = if freeze { 77 } else { landscape_seed(77, k) };
                let direct = fit(&rotate2(&w.white, theta).unwrap(), &c.clone().with_seed(seed)).unwrap().value();
                assert_eq!(land.values[k], direct, "{kind} k={k} freeze={freeze}");
            }
        }
    }
}

#[test]
fn landscape_periodicity_statistical() {
    let seeds = 6u64;
    let grid = 40;
    let opts = LandscapeOptions { grid_size: 2 * grid, span: PI, freeze_basis: false };
    let c = cfg(EstimatorKind::Lsfd, 60, 0);
    let mut lands = Vec::new();
    for seed in 0..seeds {
        let w = whiten(&mix(&source_pair(DistributionKind::C, 300, seed).unwrap(), &rotation(0.3)).unwrap()).unwrap();
        lands.push(landscape(&w.white, &c.clone().with_seed(seed + 100), opts).unwrap().values);
    }
    for k in 0..grid {
        let lo: Vec<f64> = lands.iter().map(|v| v[k]).collect();
        let hi: Vec<f64> = lands.iter().map(|v| v[k + grid]).collect();
        let sd = std_dev(&lo).max(std_dev(&hi));
        assert!((mean(&lo) - mean(&hi)).abs() <= 3.0 * sd, "k={k}");
    }
}

#[test]
fn discrimination_over_twenty_trials() {
    let config = experiments::IndependenceTestConfig { trials: 20, seed: 2024, ..Default::default() };
    let res = experiments::independence_test(&config).unwrap();
    for kind in EstimatorKind::ALL {
        let ind = res.mean(kind, experiments::Condition::Independent).unwrap();
        let dep = res.mean(kind, experiments::Condition::Dependent).unwrap();
        assert!(dep >= 5.0 * ind, "{kind}: {dep} vs {ind}");
    }
}

#[test]
fn lp_grid_separates_dependent_from_independent() {
    let mut dep = 0.0;
    let mut ind = 0.0;
    for t in 0..20 {
        let d = dependent_pair(300, t).unwrap();
        let i = independent_pair(300, t).unwrap();
        let sigma = BandwidthSelector::Rot.select(&normalize(&d).unwrap()).unwrap();
        dep += lp_fd_grid(&d, sigma, 2.0, GridSpec::default()).unwrap();
        ind += lp_fd_grid(&i, sigma, 2.0, GridSpec::default()).unwrap();
    }
    assert!(dep >= 5.0 * ind, "{dep} vs {ind}");
}

#[test]
fn sources_are_seeded_and_standardized() {
    for kind in DistributionKind::ALL {
        let a = sample(kind, 1000, 42).unwrap();
        assert_eq!(a, sample(kind, 1000, 42).unwrap(), "{kind}");
        assert_ne!(a, sample(kind, 1000, 43).unwrap(), "{kind}");
        assert!(a.iter().all(|v| v.is_finite()));
        assert!(mean(&a).abs() < 1e-12, "{kind}");
        assert!((std_dev(&a) - 1.0).abs() < 1e-12, "{kind}");
        assert!(sample_raw(kind, 1000, 42).unwrap().iter().all(|v| v.is_finite()));
    }
}

#[test]
fn dependent_pair_is_functional() {
    let d = dependent_pair(300, 6).unwrap();
    let (x, y) = (d.row(0), d.row(1));
    for (a, b) in x.iter().zip(&y) {
        assert_eq!(*b, (a / 20.0 * PI).sin());
    }
    assert_eq!(d, dependent_pair(300, 6).unwrap());
    assert_eq!(independent_pair(300, 6).unwrap().row(0), x);
}
