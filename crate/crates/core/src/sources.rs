//! Seeded generators for the 21 benchmark source distributions (kinds a–u)
//! and the dependent test pair.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal, StudentT};

use crate::density::{standardize, SampleMatrix};
use crate::error::{Error, Result};
use crate::estimators::derive_seed;

/// The mixture table shipped with the crate.
pub const MIXTURE_TABLE: &str = include_str!("../data/mixtures.tsv");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DistributionKind {
    A, B, C, D, E, F, G, H, I, J, K, L, M, N, O, P, Q, R, S, T, U,
}

impl DistributionKind {
    pub const ALL: [DistributionKind; 21] = [
        Self::A, Self::B, Self::C, Self::D, Self::E, Self::F, Self::G, Self::H, Self::I, Self::J, Self::K,
        Self::L, Self::M, Self::N, Self::O, Self::P, Self::Q, Self::R, Self::S, Self::T, Self::U,
    ];

    pub fn letter(self) -> char {
        (b'a' + self as u8) as char
    }

    pub fn from_letter(c: char) -> Result<Self> {
        let c = c.to_ascii_lowercase();
        if c.is_ascii_lowercase() && c <= 'u' {
            Ok(Self::ALL[(c as u8 - b'a') as usize])
        } else {
            Err(Error::invalid(format!("unknown distribution kind '{c}'")))
        }
    }

    pub fn description(self) -> &'static str {
        use DistributionKind::*;
        match self {
            A => "Student t, 3 degrees of freedom",
            B => "double exponential",
            C => "uniform",
            D => "Student t, 5 degrees of freedom",
            E => "exponential",
            F => "mixture of two double exponentials",
            G => "symmetric mixture of two Gaussians, multimodal",
            H => "symmetric mixture of two Gaussians, transitional",
            I => "symmetric mixture of two Gaussians, unimodal",
            J => "nonsymmetric mixture of two Gaussians, multimodal",
            K => "nonsymmetric mixture of two Gaussians, transitional",
            L => "nonsymmetric mixture of two Gaussians, unimodal",
            M => "symmetric mixture of four Gaussians, multimodal",
            N => "symmetric mixture of four Gaussians, transitional",
            O => "symmetric mixture of four Gaussians, unimodal",
            P => "nonsymmetric mixture of four Gaussians, multimodal",
            Q => "nonsymmetric mixture of four Gaussians, transitional",
            R => "nonsymmetric mixture of four Gaussians, unimodal",
            S => "left-skewed power-method distribution",
            T => "right-skewed power-method distribution",
            U => "Gaussian",
        }
    }
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

impl FromStr for DistributionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Self::from_letter(c),
            _ => Err(Error::invalid(format!("unknown distribution kind '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentFamily {
    Gauss,
    Laplace,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mixture {
    pub family: ComponentFamily,
    /// Normalized to sum to one.
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
}

impl Mixture {
    pub fn mean(&self) -> f64 {
        self.weights.iter().zip(&self.means).map(|(w, m)| w * m).sum()
    }

    /// Central moment of order 2, 3 or 4.
    pub fn central_moment(&self, order: u32) -> f64 {
        let mu = self.mean();
        self.weights
            .iter()
            .zip(self.means.iter().zip(&self.sds))
            .map(|(w, (m, s))| {
                let d = m - mu;
                // component central moments
                let (c2, c3, c4) = match self.family {
                    ComponentFamily::Gauss => (s * s, 0.0, 3.0 * s.powi(4)),
                    ComponentFamily::Laplace => (s * s, 0.0, 6.0 * s.powi(4)),
                };
                w * match order {
                    2 => d * d + c2,
                    3 => d.powi(3) + 3.0 * d * c2 + c3,
                    4 => d.powi(4) + 6.0 * d * d * c2 + 4.0 * d * c3 + c4,
                    _ => f64::NAN,
                }
            })
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixtureEntry {
    pub kind: DistributionKind,
    pub mixture: Mixture,
}

fn parse_list(field: &str, line: usize) -> Result<Vec<f64>> {
    field
        .split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::invalid(format!("mixture table line {line}: bad number '{v}'")))
        })
        .collect()
}

/// Parses a mixture table (`kind family weights means sds`, whitespace separated).
pub fn parse_mixture_table(text: &str) -> Result<Vec<MixtureEntry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let l = raw.trim();
        if l.is_empty() || l.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != 5 {
            return Err(Error::invalid(format!("mixture table line {line}: expected 5 columns")));
        }
        let kind: DistributionKind = fields[0].parse()?;
        let family = match fields[1] {
            "gauss" => ComponentFamily::Gauss,
            "laplace" => ComponentFamily::Laplace,
            other => return Err(Error::invalid(format!("mixture table line {line}: unknown family '{other}'"))),
        };
        let weights = parse_list(fields[2], line)?;
        let means = parse_list(fields[3], line)?;
        let sds = parse_list(fields[4], line)?;
        if weights.len() != means.len() || means.len() != sds.len() || weights.is_empty() {
            return Err(Error::invalid(format!("mixture table line {line}: list lengths differ")));
        }
        if weights.iter().any(|w| !(*w > 0.0)) || sds.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::invalid(format!("mixture table line {line}: weights and sds must be positive")));
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.iter().map(|w| w / total).collect();
        out.push(MixtureEntry { kind, mixture: Mixture { family, weights, means, sds } });
    }
    Ok(out)
}

fn table() -> &'static [MixtureEntry] {
    static TABLE: OnceLock<Vec<MixtureEntry>> = OnceLock::new();
    TABLE.get_or_init(|| parse_mixture_table(MIXTURE_TABLE).expect("bundled mixture table is valid"))
}

/// Mixture parameters for kinds f–r.
pub fn mixture(kind: DistributionKind) -> Option<&'static Mixture> {
    table().iter().find(|e| e.kind == kind).map(|e| &e.mixture)
}

/// Power-method coefficients `(b, c, d)` of `y = −c + b z + c z² + d z³`.
pub fn power_method_coefficients(kind: DistributionKind) -> Option<(f64, f64, f64)> {
    match kind {
        DistributionKind::S => Some((0.75031534111078, -0.02734119591845, 0.07699282409939)),
        DistributionKind::T => Some((1.11251460048528, 0.17363001955694, -0.05033444870926)),
        _ => None,
    }
}

fn laplace(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    let e: f64 = Exp1.sample(rng);
    if rng.random_bool(0.5) {
        scale * e
    } else {
        -scale * e
    }
}

fn draw_mixture(m: &Mixture, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let pick = WeightedIndex::new(&m.weights).expect("weights are positive");
    (0..n)
        .map(|_| {
            let c = pick.sample(rng);
            match m.family {
                ComponentFamily::Gauss => {
                    let z: f64 = StandardNormal.sample(rng);
                    m.means[c] + m.sds[c] * z
                }
                ComponentFamily::Laplace => m.means[c] + laplace(rng, m.sds[c] / std::f64::consts::SQRT_2),
            }
        })
        .collect()
}

/// Raw i.i.d. draws before standardization.
pub fn sample_raw(kind: DistributionKind, n: usize, seed: u64) -> Result<Vec<f64>> {
    use DistributionKind::*;
    if n == 0 {
        return Err(Error::invalid("sample count must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let out = match kind {
        A | D => {
            let dof = if kind == A { 3.0 } else { 5.0 };
            let t = StudentT::new(dof).expect("positive dof");
            (0..n).map(|_| t.sample(&mut rng)).collect()
        }
        B => (0..n).map(|_| laplace(&mut rng, 1.0)).collect(),
        C => {
            let r = 3f64.sqrt();
            (0..n).map(|_| rng.random_range(-r..r)).collect()
        }
        E => (0..n).map(|_| Exp1.sample(&mut rng)).collect(),
        S | T => {
            let (b, c, d) = power_method_coefficients(kind).expect("power-method kind");
            (0..n)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    -c + z * (b + z * (c + z * d))
                })
                .collect()
        }
        U => (0..n).map(|_| StandardNormal.sample(&mut rng)).collect(),
        _ => {
            let m = mixture(kind).ok_or_else(|| Error::invalid(format!("no mixture parameters for kind {kind}")))?;
            draw_mixture(m, n, &mut rng)
        }
    };
    Ok(out)
}

/// `n` i.i.d. draws standardized in-sample to zero mean and unit variance.
pub fn sample(kind: DistributionKind, n: usize, seed: u64) -> Result<Vec<f64>> {
    let raw = sample_raw(kind, n, seed)?;
    if n == 1 {
        return Ok(vec![0.0]);
    }
    standardize(&raw).ok_or(Error::DegenerateComponent { row: 0 })
}

/// Two i.i.d. sources of the same kind drawn from independent streams.
pub fn source_pair(kind: DistributionKind, n: usize, seed: u64) -> Result<SampleMatrix> {
    let a = sample(kind, n, derive_seed(seed, 0))?;
    let b = sample(kind, n, derive_seed(seed, 1))?;
    SampleMatrix::from_rows(vec![a, b])
}

fn uniform01(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

/// Row 1: `U(0, 1)` draws. Row 2: `sin((x / 20) · π)` of row 1.
pub fn dependent_pair(n: usize, seed: u64) -> Result<SampleMatrix> {
    if n < 2 {
        return Err(Error::invalid("dependent pair needs at least 2 samples"));
    }
    let x = uniform01(n, seed);
    let y = x.iter().map(|v| (v / 20.0 * PI).sin()).collect();
    SampleMatrix::from_rows(vec![x, y])
}

/// Row 1 identical to row 1 of [`dependent_pair`] for the same seed; row 2 an
/// independent `U(0, 1)` stream.
pub fn independent_pair(n: usize, seed: u64) -> Result<SampleMatrix> {
    if n < 2 {
        return Err(Error::invalid("independent pair needs at least 2 samples"));
    }
    SampleMatrix::from_rows(vec![uniform01(n, seed), uniform01(n, derive_seed(seed, 1))])
}
