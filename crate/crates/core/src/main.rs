use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use krein::dissipativity::{generate, GenerateKind, GenerateParams};
use krein::error::Error;
use krein::interpolation::Identity;
use krein::report::{
    self, analyze_document, dichotomy_report, interpolation_report, json::to_canonical_string, load_operator_document,
    parse_grid, save_operator, semigroup_report, sweep, sweep_to_csv, write_atomic, AnalyzeOptions, Family, MethodChoice,
    OperatorDocument,
};

#[derive(Parser)]
#[command(name = "krein", version, about = "Invariant maximal semidefinite subspaces of J-dissipative matrices")]
struct Cli {
    /// Halve every tolerance.
    #[arg(long, global = true)]
    strict: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Contour,
    Schur,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Side {
    Plus,
    Minus,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    RandomJDissipative,
    Uniform,
    Block,
    Discretized,
}

#[derive(Subcommand)]
enum Command {
    /// Full pipeline with certificates.
    Analyze {
        file: PathBuf,
        #[arg(long)]
        deflate: bool,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        contour_nodes: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Spectral projections onto M+ and M-.
    Dichotomy {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "both")]
        method: MethodArg,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        contour_nodes: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Interpolation identities; all three when `--identity` is omitted.
    Interp {
        file: PathBuf,
        #[arg(long, value_parser = ["2.6", "2.9", "2.10"])]
        identity: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Semigroup bounds and the energy identity on one invariant subspace.
    Semigroup {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "plus")]
        subspace: Side,
        #[arg(long = "T")]
        horizon: Option<f64>,
        #[arg(long, default_value_t = 1e-9)]
        quad_tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Writes a seeded operator file.
    Generate {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        n: Option<usize>,
        /// `p,q`
        #[arg(long)]
        signature: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.1)]
        delta: f64,
        #[arg(long, default_value_t = 0.3)]
        c12: f64,
        #[arg(long, default_value_t = 0.3)]
        c21: f64,
        #[arg(long, default_value_t = 1.0)]
        coupling: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs `analyze` over a one-parameter family and writes CSV.
    Sweep {
        #[arg(long)]
        family: String,
        /// `a,b,c` or `start:stop:count`
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Skip the contour quadrature.
        #[arg(long)]
        no_contour: bool,
    },
}

/// Input problems exit with 2, failed certificates with 1.
enum Failure {
    Input(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e)
    }
}

fn emit(text: &str, out: Option<&Path>) -> Result<(), Failure> {
    match out {
        Some(p) => write_atomic(p, text.as_bytes())?,
        None => print!("{text}"),
    }
    Ok(())
}

fn signature(spec: Option<&str>, n: Option<usize>) -> Result<(usize, usize), Error> {
    let sig = match spec {
        Some(s) => {
            let parts: Vec<&str> = s.split(',').collect();
            let parse = |x: &str| x.trim().parse::<usize>().ok();
            match (parts.len(), parts.first().and_then(|x| parse(x)), parts.get(1).and_then(|x| parse(x))) {
                (2, Some(p), Some(q)) => (p, q),
                _ => return Err(Error::Parse { location: "--signature".into(), message: format!("expected p,q, got {s:?}") }),
            }
        }
        None => {
            let n = n.ok_or_else(|| Error::InvalidParams("give --n or --signature".into()))?;
            (n.div_ceil(2), n / 2)
        }
    };
    if let Some(n) = n {
        if sig.0 + sig.1 != n {
            return Err(Error::InvalidParams(format!("signature {sig:?} does not add up to n = {n}")));
        }
    }
    Ok(sig)
}

fn run(cli: Cli) -> Result<bool, Failure> {
    let factor = if cli.strict { 0.5 } else { 1.0 };
    match cli.command {
        Command::Analyze { file, deflate, tol, contour_nodes, out, format: Format::Json } => {
            let doc = load_operator_document(&file)?;
            let opts = AnalyzeOptions { tol, deflate, contour_nodes, strict: cli.strict, ..AnalyzeOptions::default() };
            let rep = analyze_document(&doc, &opts);
            if out.is_some() {
                for c in &rep.certificates {
                    println!("{} {:<40} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.stage);
                }
                if let Some(s) = &rep.failure_stage {
                    println!("stopped at {s}");
                }
            }
            emit(&rep.to_json()?, out.as_deref())?;
            Ok(rep.passed)
        }
        Command::Dichotomy { file, method, tol, contour_nodes, out } => {
            let doc = load_operator_document(&file)?;
            let m = match method {
                MethodArg::Contour => MethodChoice::Contour,
                MethodArg::Schur => MethodChoice::Schur,
                MethodArg::Both => MethodChoice::Both,
            };
            let rep = dichotomy_report(&doc.op, m, tol.map(|t| t * factor), contour_nodes)?;
            emit(&to_canonical_string(&rep)?, out.as_deref())?;
            Ok(rep.passed)
        }
        Command::Interp { file, identity, out } => {
            let doc = load_operator_document(&file)?;
            let which: Vec<Identity> = match identity.as_deref() {
                Some(tag) => {
                    vec![Identity::from_tag(tag).ok_or_else(|| Error::InvalidParams(format!("unknown identity {tag}")))?]
                }
                None => Identity::ALL.to_vec(),
            };
            let rep = interpolation_report(&doc.op, &which)?;
            emit(&to_canonical_string(&rep)?, out.as_deref())?;
            Ok(true)
        }
        Command::Semigroup { file, subspace, horizon, quad_tol, out } => {
            let doc = load_operator_document(&file)?;
            let rep = semigroup_report(&doc.op, matches!(subspace, Side::Plus), horizon, quad_tol * factor)?;
            emit(&to_canonical_string(&rep)?, out.as_deref())?;
            Ok(rep.passed)
        }
        Command::Generate { kind, n, signature: sig, seed, delta, c12, c21, coupling, out } => {
            let mut metadata = std::collections::BTreeMap::new();
            let (gk, sig) = match kind {
                KindArg::RandomJDissipative => (GenerateKind::RandomJDissipative, signature(sig.as_deref(), n)?),
                KindArg::Uniform => (GenerateKind::Uniform { delta }, signature(sig.as_deref(), n)?),
                KindArg::Block => {
                    metadata.insert(report::PLANTED_C12.to_string(), c12);
                    metadata.insert(report::PLANTED_C21.to_string(), c21);
                    (GenerateKind::Block { c12, c21 }, signature(sig.as_deref(), n)?)
                }
                KindArg::Discretized => {
                    let n = n.ok_or_else(|| Error::InvalidParams("--n is required for the discretized family".into()))?;
                    (GenerateKind::DiscretizedFamily { n, coupling }, (0, 0))
                }
            };
            let op = generate(&GenerateParams::new(gk, sig, seed))?;
            save_operator(&OperatorDocument { op, metadata }, &out)?;
            Ok(true)
        }
        Command::Sweep { family, grid, seed, out, no_contour } => {
            let fam = Family::parse(&family).ok_or_else(|| Error::InvalidParams(format!("unknown family {family:?}")))?;
            let grid = parse_grid(&grid)?;
            let opts = AnalyzeOptions { strict: cli.strict, contour: !no_contour, ..AnalyzeOptions::default() };
            let res = sweep(fam, &grid, seed, &opts)?;
            write_atomic(&out, sweep_to_csv(&res)?.as_bytes())?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
