use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fdcontrast::bss::LandscapeOptions;
use fdcontrast::experiments::{independence_test, landscape_experiment, IndependenceTestConfig, LandscapeExperimentConfig};
use fdcontrast::{fit, BandwidthSelector, DistributionKind, EstimatorConfig, EstimatorKind, SampleMatrix};

#[derive(Parser, Debug)]
#[command(name = "fdcontrast", version, about = "Least-squares function-difference independence measures")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Independent vs dependent signal pairs over repeated trials.
    IndependenceTest(IndependenceArgs),
    /// Sweep the rotation angle over whitened mixtures of two i.i.d. sources.
    Landscape(LandscapeArgs),
    /// Fit one estimator to a two-column CSV file.
    Estimate(EstimateArgs),
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Basis points per dimension [default: min(100, n)]
    #[arg(long)]
    b: Option<usize>,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    /// `rot` or `fixed:<h>`
    #[arg(long, default_value = "rot", value_parser = parse_bandwidth)]
    bandwidth: BandwidthSelector,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl FitArgs {
    fn config(&self, kind: EstimatorKind) -> EstimatorConfig {
        let mut c = EstimatorConfig::new(kind)
            .with_lambda(self.lambda)
            .with_bandwidth(self.bandwidth.clone())
            .with_seed(self.seed);
        c.b = self.b;
        c
    }
}

#[derive(Args, Debug)]
struct IndependenceArgs {
    /// Comma-separated subset of lsfd,lsfd2,lsgfd,lsgfd2 [default: all]
    #[arg(long, value_delimiter = ',', value_parser = parse_estimator)]
    estimator: Vec<EstimatorKind>,
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    #[command(flatten)]
    fit: FitArgs,
    /// Output CSV path [default: stdout]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LandscapeArgs {
    /// Source distribution kind, a..u
    #[arg(long, value_parser = parse_dist)]
    dist: DistributionKind,
    #[arg(long, default_value = "lsfd", value_parser = parse_estimator)]
    estimator: EstimatorKind,
    #[arg(long, default_value_t = 300)]
    n: usize,
    #[arg(long, default_value_t = 100)]
    grid: usize,
    /// Mixing rotation in radians
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    theta0: f64,
    /// Keep the same basis samples at every angle
    #[arg(long)]
    freeze_basis: bool,
    #[command(flatten)]
    fit: FitArgs,
    /// Output CSV path [default: stdout, with the summary on stderr]
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EstimateArgs {
    /// CSV file, one sample per row, two numeric columns; an optional header line is skipped
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "lsfd", value_parser = parse_estimator)]
    estimator: EstimatorKind,
    #[command(flatten)]
    fit: FitArgs,
}

fn parse_estimator(s: &str) -> Result<EstimatorKind, String> {
    s.parse().map_err(|e: fdcontrast::Error| e.to_string())
}

fn parse_dist(s: &str) -> Result<DistributionKind, String> {
    s.parse().map_err(|e: fdcontrast::Error| e.to_string())
}

fn parse_bandwidth(s: &str) -> Result<BandwidthSelector, String> {
    if s.eq_ignore_ascii_case("rot") {
        return Ok(BandwidthSelector::Rot);
    }
    let h = s
        .strip_prefix("fixed:")
        .ok_or_else(|| format!("expected 'rot' or 'fixed:<h>', got '{s}'"))?
        .parse::<f64>()
        .map_err(|e| format!("bad bandwidth value: {e}"))?;
    BandwidthSelector::fixed(h).map_err(|e| e.to_string())
}

enum Failure {
    Usage(String),
    Numeric(String),
}

impl From<fdcontrast::Error> for Failure {
    fn from(e: fdcontrast::Error) -> Self {
        use fdcontrast::Error::*;
        match e.root() {
            InvalidInput(_) | Unsupported(_) => Failure::Usage(e.to_string()),
            _ => Failure::Numeric(e.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn open_out(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run_independence(args: &IndependenceArgs) -> Result<(), Failure> {
    let estimators = if args.estimator.is_empty() { EstimatorKind::ALL.to_vec() } else { args.estimator.clone() };
    let config = IndependenceTestConfig {
        estimators,
        n: args.n,
        trials: args.trials,
        b: args.fit.b,
        lambda: args.fit.lambda,
        bandwidth: args.fit.bandwidth.clone(),
        seed: args.fit.seed,
    };
    let res = independence_test(&config)?;
    let mut w = csv::Writer::from_writer(open_out(args.out.as_deref())?);
    w.write_record(["trial", "estimator", "condition", "value"])?;
    for r in &res.records {
        w.write_record([r.trial.to_string(), r.estimator.to_string(), r.condition.to_string(), num(r.value)])?;
    }
    for s in &res.summary {
        w.write_record(["mean".to_string(), s.estimator.to_string(), s.condition.to_string(), num(s.mean)])?;
    }
    w.flush()?;
    Ok(())
}

fn run_landscape(args: &LandscapeArgs) -> Result<(), Failure> {
    let mut config = LandscapeExperimentConfig::new(args.dist, args.estimator);
    config.estimator = args.fit.config(args.estimator);
    config.n = args.n;
    config.theta0 = args.theta0;
    config.seed = args.fit.seed;
    config.options = LandscapeOptions { freeze_basis: args.freeze_basis, ..LandscapeOptions::with_grid(args.grid) };
    let r = landscape_experiment(&config)?;

    let mut w = csv::Writer::from_writer(open_out(args.out.as_deref())?);
    w.write_record(["theta", "value"])?;
    for (t, v) in r.landscape.thetas.iter().zip(&r.landscape.values) {
        w.write_record([num(*t), num(*v)])?;
    }
    w.flush()?;
    drop(w);

    let summary = format!(
        "argmin_theta={}\ntrue_theta={}\nangle_error={}\n",
        num(r.landscape.argmin_theta),
        num(r.true_theta),
        num(r.angle_error)
    );
    if args.out.is_some() {
        io::stdout().write_all(summary.as_bytes())?;
    } else {
        io::stderr().write_all(summary.as_bytes())?;
    }
    Ok(())
}

/// Reads rows of two numbers. A first line that does not parse is treated as a header.
fn read_pairs(path: &Path) -> Result<SampleMatrix, Failure> {
    let file = File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(file);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (k, rec) in reader.records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(k as u64 + 1, |p| p.line());
        let bad = |msg: String| Failure::Usage(format!("{}:{line}: {msg}", path.display()));
        if rec.len() != 2 {
            return Err(bad(format!("expected 2 columns, found {}", rec.len())));
        }
        let parsed: Result<Vec<f64>, _> = rec.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(v) if v.iter().all(|x| x.is_finite()) => {
                xs.push(v[0]);
                ys.push(v[1]);
            }
            Ok(_) => return Err(bad("non-finite value".into())),
            Err(_) if k == 0 => continue,
            Err(e) => return Err(bad(format!("not a number ({e})"))),
        }
    }
    if xs.len() < 2 {
        return Err(Failure::Usage(format!("{}: need at least 2 data rows", path.display())));
    }
    Ok(SampleMatrix::from_rows(vec![xs, ys])?)
}

fn run_estimate(args: &EstimateArgs) -> Result<(), Failure> {
    let samples = read_pairs(&args.input)?;
    let r = fit(&samples, &args.fit.config(args.estimator))?;
    let mut out = io::stdout().lock();
    writeln!(out, "estimator={}", r.kind)?;
    writeln!(out, "n={}", samples.n_samples())?;
    writeln!(out, "value={}", num(r.value()))?;
    writeln!(out, "objective={}", num(r.objective))?;
    writeln!(out, "v2_hat={}", num(r.v2_hat))?;
    writeln!(out, "crip_hat={}", num(r.crip_hat))?;
    writeln!(out, "residual={}", num(r.residual))?;
    writeln!(out, "sigma={}", num(r.sigma))?;
    writeln!(out, "lambda={}", num(r.lambda))?;
    writeln!(out, "b={}", r.b)?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::IndependenceTest(a) => run_independence(a),
        Command::Landscape(a) => run_landscape(a),
        Command::Estimate(a) => run_estimate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Numeric(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
