//! `regnear` command-line harness.
//!
//! Subcommands: `solve` (one noisy instance), `table` (noise × regularizer
//! × seed sweep with medians), `distances` (nearness curves in the order
//! `n`) and `nearest` (nearness projection of a user matrix). All CSV goes
//! to stdout unless `--out` is given; diagnostics go to stderr.
//!
//! Exit status: 0 on success, 2 for bad input or configuration, 3 for a
//! numerical failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use regnear::experiment::{
    distances_csv, run_csv_row, run_single, run_table, ExperimentConfig, RunSpec, RUN_CSV_HEADER,
};
use regnear::io::{read_matrix, write_matrix, write_vector};
use regnear::nearness::{
    nearest_symmetric_with_nullspace, nearest_with_nullspace, nearness_distance,
};
use regnear::{Error, Matrix, NullSpaceBasis};

#[derive(Parser, Debug)]
#[command(
    name = "regnear",
    version,
    about = "Regularization matrices by matrix nearness, solved with RRGMRES"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one noisy test problem and write x_k and x̂.
    Solve(SolveArgs),
    /// Run the full noise × regularizer × seed table.
    Table(TableArgs),
    /// Print nearness distances of L̃₂ for a range of orders.
    Distances(DistanceArgs),
    /// Project a matrix onto the matrices with a prescribed null space.
    Nearest(NearestArgs),
}

/// Settings shared by `solve` and `table`; they override the config file.
#[derive(Args, Debug, Default)]
struct ExperimentArgs {
    /// Flat key=value file with the same keys as the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// phillips or deriv2.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    n: Option<String>,
    /// Relative noise level(s), comma separated.
    #[arg(long)]
    noise: Option<String>,
    /// Regularizer name(s): I, L10, L20, L1dP1, L2tP2, P2L2tP2.
    #[arg(long)]
    reg: Option<String>,
    /// Discrepancy safety factor.
    #[arg(long)]
    eta: Option<String>,
    /// Diagonal entry δ of L1dP1.
    #[arg(long)]
    delta: Option<String>,
    /// Seed list, e.g. `1..10` or `1,4,7`.
    #[arg(long, alias = "seed")]
    seeds: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    /// CSV output file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    common: ExperimentArgs,
    /// Directory for the x_k.txt and x_hat.txt vector files.
    #[arg(long, default_value = ".")]
    vectors: PathBuf,
}

#[derive(Args, Debug)]
struct TableArgs {
    #[command(flatten)]
    common: ExperimentArgs,
}

#[derive(Args, Debug)]
struct DistanceArgs {
    #[arg(long, default_value_t = 4)]
    min_n: usize,
    #[arg(long, default_value_t = 400)]
    max_n: usize,
    #[arg(long, default_value_t = 1)]
    step: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct NearestArgs {
    /// Matrix A in the plain-text matrix format.
    #[arg(long)]
    matrix: PathBuf,
    /// n×ℓ matrix whose columns span the prescribed null space.
    #[arg(long)]
    nullspace: PathBuf,
    /// Use the symmetric projection (I − VVᵀ)A(I − VVᵀ).
    #[arg(long)]
    symmetric: bool,
    /// Output file for Â.
    #[arg(long)]
    out: PathBuf,
}

impl ExperimentArgs {
    fn config(&self) -> Result<(ExperimentConfig, Option<PathBuf>), Error> {
        let (mut cfg, extra) = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                ExperimentConfig::parse_text(&text, &["out"])?
            }
            None => (ExperimentConfig::default(), Vec::new()),
        };
        let mut out = extra
            .into_iter()
            .find(|(k, _)| k == "out")
            .map(|(_, v)| PathBuf::from(v));
        let flags = [
            ("problem", &self.problem),
            ("n", &self.n),
            ("noise", &self.noise),
            ("reg", &self.reg),
            ("eta", &self.eta),
            ("delta", &self.delta),
            ("seeds", &self.seeds),
            ("max_iter", &self.max_iter),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        if self.out.is_some() {
            out = self.out.clone();
        }
        cfg.validate()?;
        Ok((cfg, out))
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Error> {
    match out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn single<T: Copy>(key: &str, values: &[T]) -> Result<T, Error> {
    match values {
        [v] => Ok(*v),
        _ => Err(Error::InvalidConfig(format!(
            "solve takes exactly one {key}, got {} (set it with a flag)",
            values.len()
        ))),
    }
}

fn cmd_solve(args: &SolveArgs) -> Result<(), Error> {
    let (cfg, out) = args.common.config()?;
    let reg = cfg.regularizers.as_slice();
    let reg = match reg {
        [r] => *r,
        _ => {
            return Err(Error::InvalidConfig(format!(
                "solve takes exactly one regularizer, got {} (set it with --reg)",
                reg.len()
            )))
        }
    };
    let spec = RunSpec {
        eta: cfg.eta,
        delta: cfg.delta,
        max_iter: cfg.max_iter,
        ..RunSpec::new(
            cfg.problem,
            cfg.n,
            single("noise level", &cfg.noise_levels)?,
            reg,
            single("seed", &cfg.seeds)?,
        )
    };
    let run = run_single(&spec)?;
    emit(
        out.as_deref(),
        &format!("{RUN_CSV_HEADER}\n{}\n", run_csv_row(&run)),
    )?;
    std::fs::create_dir_all(&args.vectors)
        .map_err(|e| Error::Io(format!("{}: {e}", args.vectors.display())))?;
    write_vector(args.vectors.join("x_k.txt"), &run.x_k)?;
    write_vector(args.vectors.join("x_hat.txt"), &run.x_hat)?;
    eprintln!(
        "matvecs: {} = {} (null space) + {} (Arnoldi, k = {}) + {} (back-transform)",
        run.matvecs, run.matvecs_nullspace, run.matvecs_arnoldi, run.iterations, run.matvecs_back
    );
    Ok(())
}

fn cmd_table(args: &TableArgs) -> Result<(), Error> {
    let (cfg, out) = args.common.config()?;
    let table = run_table(&cfg)?;
    emit(out.as_deref(), &table.to_csv())?;
    eprintln!("nu,regularizer,median_iterations,median_matvecs,median_relative_error,breakdown");
    for (nu, reg) in table.cells() {
        let s = table.summary(nu, reg);
        let breakdown = table
            .cell(nu, reg)
            .find_map(|e| e.outcome.as_ref().ok())
            .map(|r| {
                format!(
                    "{}+{}+{}",
                    r.matvecs_nullspace, r.matvecs_arnoldi, r.matvecs_back
                )
            })
            .unwrap_or_else(|| "-".into());
        eprintln!(
            "{nu:e},{reg},{},{},{:.3e},{breakdown}",
            s.median_iterations, s.median_matvecs, s.median_relative_error
        );
    }
    Ok(())
}

fn cmd_distances(args: &DistanceArgs) -> Result<(), Error> {
    emit(
        args.out.as_deref(),
        &distances_csv(args.min_n, args.max_n, args.step)?,
    )
}

fn cmd_nearest(args: &NearestArgs) -> Result<(), Error> {
    let a: Matrix = read_matrix(&args.matrix)?;
    let v: Matrix = read_matrix(&args.nullspace)?;
    let basis = NullSpaceBasis::from_spanning(v)?;
    let nearest = if args.symmetric {
        nearest_symmetric_with_nullspace(&a, &basis)?
    } else {
        nearest_with_nullspace(&a, &basis)?
    };
    let dist = nearness_distance(&a, &basis, args.symmetric)?;
    write_matrix(&args.out, &nearest)?;
    println!("{dist:.11e}");
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    // shape and symmetry violations here come from user files
    if e.is_config_error() || matches!(e, Error::ShapeMismatch(_) | Error::NotSymmetric(_)) {
        2
    } else {
        3
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => cmd_solve(a),
        Command::Table(a) => cmd_table(a),
        Command::Distances(a) => cmd_distances(a),
        Command::Nearest(a) => cmd_nearest(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
