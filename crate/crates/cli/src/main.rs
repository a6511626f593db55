use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use exotic_core::report::{self, Operation, RunOptions};
use exotic_core::{Error, GroupoidModel};

#[derive(Parser)]
#[command(name = "exotic", version, about = "Groupoid convolution algebras, reduced norms and L^p state extension")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sphere and ball growth with certified constants R, R', D
    Growth(Common),
    /// Four-point hyperbolicity constant of the fiber metric
    Delta(Common),
    /// Gram-matrix positivity of a kernel
    Pdcheck(Common),
    /// Truncated GNS construction and matrix-coefficient recovery
    Gns(Common),
    /// Haagerup witness conditions for e^{-l/n}
    Haagerup(Common),
    /// Convolution band lemma on random pairs
    Bandcheck(Common),
    /// Reduced norm by truncated left convolution
    Norm(Common),
    /// Spectral-radius power sequence
    Powerseq(Common),
    /// Check the 2C(k+1)|f|_q norm bound
    Normbound(Common),
    /// Extension criteria for the state of φ_α
    Extend(Common),
    /// Threshold band for exponents q ≤ p
    Band(Common),
    /// Two-leg non-injectivity certificate
    Certify(Common),
}

#[derive(Args)]
struct Common {
    /// Groupoid model JSON
    #[arg(long)]
    model: PathBuf,
    /// Operation parameters JSON; defaults apply to missing keys
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for report.json and tables/*.csv; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Enumeration limit (quadruple budget for `delta`)
    #[arg(long)]
    budget: Option<u64>,
}

impl Command {
    fn split(self) -> (Operation, Common) {
        match self {
            Command::Growth(c) => (Operation::Growth, c),
            Command::Delta(c) => (Operation::Delta, c),
            Command::Pdcheck(c) => (Operation::Pdcheck, c),
            Command::Gns(c) => (Operation::Gns, c),
            Command::Haagerup(c) => (Operation::Haagerup, c),
            Command::Bandcheck(c) => (Operation::Bandcheck, c),
            Command::Norm(c) => (Operation::Norm, c),
            Command::Powerseq(c) => (Operation::Powerseq, c),
            Command::Normbound(c) => (Operation::Normbound, c),
            Command::Extend(c) => (Operation::Extend, c),
            Command::Band(c) => (Operation::Band, c),
            Command::Certify(c) => (Operation::Certify, c),
        }
    }
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn execute(op: Operation, args: Common) -> anyhow::Result<bool> {
    let model = GroupoidModel::from_json(&read(&args.model)?).with_context(|| format!("loading model {}", args.model.display()))?;
    let config: serde_json::Value = match &args.config {
        Some(p) => serde_json::from_str(&read(p)?).with_context(|| format!("parsing config {}", p.display()))?,
        None => serde_json::Value::Null,
    };
    let opts = RunOptions {
        seed: args.seed,
        budget: args.budget,
    };
    let out = report::run(op, model, &config, opts)?;
    match &args.out {
        Some(dir) => {
            out.write_to(dir).with_context(|| format!("writing to {}", dir.display()))?;
            eprintln!("{}: {}", op.name(), out.report.verdict);
        }
        None => print!("{}", out.report_json()?),
    }
    Ok(out.pass)
}

/// 1 when a mathematical property is refuted; 2 for budgets, bad input and I/O.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::NotPositive { .. } | Error::NotHermitian(_) | Error::Subexponential { .. }) => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (op, args) = cli.command.split();
    match execute(op, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
