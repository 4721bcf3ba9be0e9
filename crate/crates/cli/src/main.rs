use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use magwell::lab::{
    count_gaps, default_min_gap, fit_records, landau_check, load_sweep_csv, numeric_landau, run_sweep_with,
    sweep_report, write_quasimode_csv, ExperimentConfig, FitTarget, Prepared,
};
use magwell::modelspectra::{curved_landau_level, groundstate_two_term, lambda_band, miniwell_eigenvalue};
use magwell::operator::SolverOptions;
use magwell::{Error, Result};

#[derive(Parser)]
#[command(name = "magwell", version, about = "Magnetic well eigenvalue asymptotics and their numerical validation")]
struct Cli {
    /// Print the default experiment configuration and exit.
    #[arg(long)]
    print_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an h-sweep; writes the CSV and JSON report named in the config.
    Sweep { config: PathBuf },
    /// Evaluate an asymptotic eigenvalue formula.
    Asymptote(AsymptoteArgs),
    /// Build the order-2 quasimode at every h of a config and measure its residual.
    Quasimode {
        config: PathBuf,
        /// Only this h (must be listed in the config).
        #[arg(long)]
        h: Option<f64>,
        /// Write |Phi| on the grid as s,t,abs rows (needs a single h).
        #[arg(long)]
        dump: Option<PathBuf>,
    },
    /// Fit a sweep column against powers of h.
    Fit {
        csv: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "1,2")]
        powers: Vec<f64>,
        #[arg(long, value_enum, default_value = "lambda0")]
        target: Target,
    },
    /// Count spectral gaps of each sweep row inside an interval.
    Gaps {
        csv: PathBuf,
        #[arg(long, value_parser = parse_interval, allow_hyphen_values = true)]
        interval: (f64, f64),
        /// Defaults to three solver tolerances on the eigenvalue scale.
        #[arg(long)]
        min_gap: Option<f64>,
    },
    /// Check the Landau levels of the three model geometries.
    LandauCheck {
        #[arg(long, default_value_t = 3)]
        k_max: u32,
        /// Also solve the flat problem numerically at this h.
        #[arg(long)]
        numeric: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Target {
    Lambda0,
    Gap,
    Residual,
}

impl From<Target> for FitTarget {
    fn from(t: Target) -> Self {
        match t {
            Target::Lambda0 => FitTarget::Lambda0,
            Target::Gap => FitTarget::Gap,
            Target::Residual => FitTarget::Residual,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    /// (2k+1) h b0 + h^2 [(2k^2+2k+1) beta2 / (4 b0) + (k^2+k) R / 2]
    Band,
    /// h b0 + h^2 mu0 / (4 b0)
    Groundstate,
    /// Band value at the minimum of V_k plus the h^{5/2} ladder term
    Miniwell,
    /// (2k+1) h b0 + h^2 (k^2+k) R / 2
    Landau,
}

#[derive(clap::Args)]
struct AsymptoteArgs {
    #[arg(long, value_enum, default_value = "band")]
    model: Model,
    #[arg(long, default_value_t = 0.1)]
    h: f64,
    #[arg(long, default_value_t = 0)]
    k: u32,
    #[arg(long, default_value_t = 0)]
    j: u32,
    #[arg(long, default_value_t = 1.0)]
    b0: f64,
    #[arg(long, default_value_t = 2.0)]
    beta2: f64,
    #[arg(long, default_value_t = 2.0)]
    mu0: f64,
    /// Scalar curvature along the curve.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    r: f64,
    /// V_k at its minimum.
    #[arg(long, default_value_t = 0.5)]
    vk: f64,
    /// V_k'' at its minimum.
    #[arg(long, default_value_t = 0.5)]
    delta: f64,
    /// Take b0, beta2, R and V_k from a config's field and metric; one
    /// result per h of the config.
    #[arg(long)]
    config: Option<PathBuf>,
}

fn parse_interval(text: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = text.split_once(',').ok_or("expected two numbers as a,b")?;
    let num = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("{v:?}: {e}"));
    Ok((num(a)?, num(b)?))
}

fn print_json<T: Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable output"));
}

fn verdict(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn sweep(path: PathBuf) -> Result<ExitCode> {
    let config = ExperimentConfig::load(&path)?;
    let m = config.sweep.eigenpairs;
    let outcome = run_sweep_with(&config, |r| {
        let lambdas: Vec<String> = r.eigenvalues.iter().map(|v| format!("{v:.10}")).collect();
        eprintln!(
            "h = {:<8} [{}] {} iterations, {:.2}s{}",
            r.h,
            lambdas.join(", "),
            r.iterations,
            r.seconds,
            r.error.as_deref().map(|e| format!(" ({e})")).unwrap_or_default()
        );
    })?;
    eprintln!(
        "{} solved, {} reused, {} eigenpairs each",
        outcome.solved, outcome.reused, m
    );
    let report = sweep_report(&config, &outcome);
    if let Some(out) = &config.sweep.report {
        let file = BufWriter::new(File::create(out)?);
        serde_json::to_writer_pretty(file, &report).map_err(|e| Error::Io(e.to_string()))?;
    }
    print_json(&report);
    Ok(verdict(report.passed))
}

fn asymptote(a: AsymptoteArgs) -> Result<ExitCode> {
    if let Some(path) = a.config {
        let config = ExperimentConfig::load(path)?;
        let prepared = Prepared::new(&config)?;
        let well = prepared.well.as_ref().map_err(|e| e.clone())?;
        let b0 = prepared.field.b0();
        let (k, j) = (config.sweep.k, config.sweep.j);
        let mut out = Vec::new();
        for &h in &config.sweep.h {
            out.push(match well.miniwell {
                Some((vk, delta)) => miniwell_eigenvalue(h, j, k, b0, well.beta2, vk, delta)?,
                None => lambda_band(h, k, b0, well.beta2, well.r)?,
            });
        }
        print_json(&out);
        return Ok(ExitCode::SUCCESS);
    }
    match a.model {
        Model::Band => print_json(&lambda_band(a.h, a.k, a.b0, a.beta2, a.r)?),
        Model::Groundstate => print_json(&groundstate_two_term(a.h, a.b0, a.mu0)?),
        Model::Miniwell => print_json(&miniwell_eigenvalue(a.h, a.j, a.k, a.b0, a.beta2, a.vk, a.delta)?),
        Model::Landau => {
            #[derive(Serialize)]
            struct Level {
                h: f64,
                k: u32,
                value: f64,
            }
            print_json(&Level {
                h: a.h,
                k: a.k,
                value: curved_landau_level(a.h, a.b0, a.r, a.k),
            })
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn quasimode(path: PathBuf, only: Option<f64>, dump: Option<PathBuf>) -> Result<ExitCode> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(h) = only {
        if !config.sweep.h.contains(&h) {
            return Err(Error::Config(format!("h = {h} is not in the config's h list")));
        }
        config.sweep.h = vec![h];
    }
    if dump.is_some() && config.sweep.h.len() != 1 {
        return Err(Error::Config("--dump needs a single h (use --h)".into()));
    }
    let prepared = Prepared::new(&config)?;
    let mut bundles = Vec::new();
    for &h in &config.sweep.h {
        let op = prepared.operator(h)?;
        let bundle = prepared.quasimode(&op)?;
        if let Some(out) = &dump {
            write_quasimode_csv(BufWriter::new(File::create(out)?), &bundle)?;
        }
        bundles.push(bundle);
    }
    print_json(&bundles);
    Ok(ExitCode::SUCCESS)
}

fn fit(path: PathBuf, powers: Vec<f64>, target: Target) -> Result<ExitCode> {
    let (records, _) = load_sweep_csv(path)?;
    let report = fit_records(&records, target.into(), &powers)?;
    print_json(&report);
    Ok(ExitCode::SUCCESS)
}

fn gaps(path: PathBuf, (lo, hi): (f64, f64), min_gap: Option<f64>) -> Result<ExitCode> {
    let (records, _) = load_sweep_csv(path)?;
    #[derive(Serialize)]
    struct Row {
        h: f64,
        #[serde(flatten)]
        gaps: magwell::lab::GapReport<f64>,
    }
    let tol = SolverOptions::<f64>::default().tol;
    let mut rows = Vec::new();
    for r in records.iter().filter(|r| r.is_solved()) {
        let scale = r.eigenvalues.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let delta = min_gap.unwrap_or_else(|| default_min_gap(tol, scale));
        rows.push(Row {
            h: r.h,
            gaps: count_gaps(&r.eigenvalues, (lo, hi), delta)?,
        });
    }
    print_json(&rows);
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    if cli.print_config {
        print!("{}", ExperimentConfig::default().to_toml());
        return Ok(ExitCode::SUCCESS);
    }
    let Some(command) = cli.command else {
        return Err(Error::Config("no subcommand given (try --help)".into()));
    };
    match command {
        Command::Sweep { config } => sweep(config),
        Command::Asymptote(a) => asymptote(a),
        Command::Quasimode { config, h, dump } => quasimode(config, h, dump),
        Command::Fit { csv, powers, target } => fit(csv, powers, target),
        Command::Gaps { csv, interval, min_gap } => gaps(csv, interval, min_gap),
        Command::LandauCheck { k_max, numeric } => {
            let mut check = landau_check(k_max)?;
            if let Some(h) = numeric {
                match numeric_landau(h, 1e-2) {
                    Ok(n) => check.numeric = Some(n),
                    Err(e) => {
                        eprintln!("numeric check: {e}");
                        check.passed = false;
                    }
                }
            }
            print_json(&check);
            Ok(verdict(check.passed))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
