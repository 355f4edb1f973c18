mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

/// Build and check standard subproduct systems, their shifts and representations.
#[derive(Parser, Debug)]
#[command(name = "spsys", version)]
struct Cli {
    /// Refuse inputs whose estimated working set exceeds this many MiB.
    #[arg(long, global = true, default_value_t = 2048)]
    budget_mb: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct SystemArgs {
    /// System spec file (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Truncation depth; defaults to the "depth" key of the spec file.
    #[arg(long)]
    pub depth: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a system and check its axioms; optionally write the fibers as JSON.
    Build {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print dim X(0) .. dim X(depth) on one line.
    Dims {
        #[command(flatten)]
        sys: SystemArgs,
    },
    /// Run named checks: axioms, defect, subshift, unit.
    Verify {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, default_value = "axioms,defect", value_delimiter = ',')]
        checks: Vec<String>,
        /// Override every threshold.
        #[arg(long)]
        tol: Option<f64>,
        /// Candidate unit vector for the "unit" check, comma separated reals.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        unit: Option<Vec<f64>>,
    },
    /// Export the truncated shift matrices and the level table.
    Shift {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Test whether a tuple is a representation of the system.
    CheckRep {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        rep: PathBuf,
    },
    /// Poisson kernel and transform of a row contraction against the tail bounds.
    Poisson {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        rep: PathBuf,
        #[arg(long, default_value_t = 0.8)]
        r: f64,
        /// Largest |alpha| + |beta| tested.
        #[arg(long, default_value_t = 2)]
        max_len: usize,
    },
    /// Maximal piece of a representation of the ambient system for the subsystem in --spec.
    Piece {
        #[command(flatten)]
        sys: SystemArgs,
        /// Ambient system spec; the full system when omitted.
        #[arg(long)]
        ambient: Option<PathBuf>,
        #[arg(long)]
        rep: PathBuf,
    },
    /// Isomorphism tests.
    Classify {
        #[command(subcommand)]
        kind: ClassifyKind,
    },
    /// Commuting CP maps.
    Cp {
        #[command(subcommand)]
        kind: CpKind,
    },
}

#[derive(Subcommand, Debug)]
enum ClassifyKind {
    /// Two q-matrices, matrix format.
    Qmat { a: PathBuf, b: PathBuf },
    /// Two 2x2 quadratic relations, matrix format.
    Quad {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Character set of a q-commuting algebra.
    Chars { q: PathBuf },
}

#[derive(Subcommand, Debug)]
enum CpKind {
    /// Strong commutation of two stochastic matrices (CSV or matrix format).
    StrongCommute { p: PathBuf, q: PathBuf },
    /// Choi ranks of the iterates of a Kraus channel.
    AsDims {
        #[arg(long)]
        kraus: PathBuf,
        #[arg(long, default_value_t = 5)]
        n: usize,
        #[arg(long)]
        tol: Option<f64>,
    },
}

fn set_threads() -> anyhow::Result<()> {
    if let Ok(v) = std::env::var("SPSYS_THREADS") {
        let n: usize = v.parse().map_err(|_| anyhow::anyhow!("SPSYS_THREADS must be a positive integer, got {v:?}"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global()?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    set_threads()?;
    let budget = cli.budget_mb.saturating_mul(1 << 20);
    let report = match cli.command {
        Command::Dims { sys } => {
            let line = commands::dims(&sys, budget)?;
            println!("{line}");
            return Ok(0);
        }
        Command::Build { sys, out } => commands::build(&sys, out.as_deref(), budget)?,
        Command::Verify { sys, checks, tol, unit } => commands::verify(&sys, &checks, tol, unit.as_deref(), budget)?,
        Command::Shift { sys, out } => commands::shift(&sys, &out, budget)?,
        Command::CheckRep { sys, rep } => commands::check_rep(&sys, &rep, budget)?,
        Command::Poisson { sys, rep, r, max_len } => commands::poisson(&sys, &rep, r, max_len, budget)?,
        Command::Piece { sys, ambient, rep } => commands::piece(&sys, ambient.as_deref(), &rep, budget)?,
        Command::Classify { kind } => match kind {
            ClassifyKind::Qmat { a, b } => commands::classify_qmat(&a, &b)?,
            ClassifyKind::Quad { a, b, seed } => commands::classify_quad(&a, &b, seed)?,
            ClassifyKind::Chars { q } => commands::classify_chars(&q)?,
        },
        Command::Cp { kind } => match kind {
            CpKind::StrongCommute { p, q } => commands::strong_commute(&p, &q)?,
            CpKind::AsDims { kraus, n, tol } => commands::as_dims(&kraus, n, tol)?,
        },
    };
    println!("{}", serde_json::to_string_pretty(&report)?);
    eprintln!("{}", report.summary());
    Ok(report.exit_code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
