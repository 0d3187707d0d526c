//! `perptail`: simulate perpetuities R = q + M R and bracket their
//! tail ln P(R >= x) between a survival-path lower bound and a
//! Chernoff upper bound certified through an iteration inequality.
//!
//! Exit codes: 0 success, 1 a verdict failed (certificate or
//! equivalence), 2 usage or configuration error, 3 numeric failure.

// guards like `if alpha == 1.0` stand in for float-literal patterns,
// which carry a future-compatibility lint of their own
#![allow(clippy::redundant_guards)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::Ctx;
use config::{Failure, Settings};

#[derive(Parser)]
#[command(name = "perptail", version, about = "Tail bounds for perpetuities R = q + M R")]
struct Cli {
    /// Base RNG seed for simulation commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files (created if missing).
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads for simulation; 0 or absent picks automatically.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Flat key=value config file; command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CertFlags {
    /// Multiplier law, e.g. beta:a=1,b=2 | genbeta:b=4,eta=2 |
    /// weibull:r=2 | thintail | bernoulli:m=0.5 | point:m=0.5.
    #[arg(long)]
    law: Option<String>,
    /// Constant payment q > 0.
    #[arg(long)]
    q: Option<f64>,
    /// Rate shape, e.g. explinear:b=0.5 | exppower:b=1.1,eta=2 |
    /// power:r=2 | zlogz.
    #[arg(long)]
    phi: Option<String>,
    /// Coefficient B, or "auto" to search the default grid.
    #[arg(long)]
    coeff: Option<String>,
    /// Left end of the certification z grid.
    #[arg(long)]
    z0: Option<f64>,
    /// Grid spans [z0, z0 * z-factor].
    #[arg(long)]
    z_factor: Option<f64>,
    /// Number of geometric z grid points.
    #[arg(long)]
    z_points: Option<usize>,
}

impl CertFlags {
    fn into_args(self) -> commands::VerifyArgs {
        commands::VerifyArgs {
            law: self.law,
            q: self.q,
            phi: self.phi,
            coeff: self.coeff,
            z0: self.z0,
            z_factor: self.z_factor,
            z_points: self.z_points,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Draw Monte Carlo paths of the perpetuity and write samples.csv
    /// plus summary.json.
    Simulate {
        #[arg(long)]
        law: Option<String>,
        #[arg(long)]
        q: Option<f64>,
        /// Backward-recursion depth per path.
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        n_paths: Option<u64>,
        /// Starting value fed into the recursion.
        #[arg(long)]
        r0: Option<f64>,
    },
    /// Certify the iteration inequality and bracket ln P(R >= x);
    /// writes tail_curve.csv and bound_report.csv.
    Bracket {
        #[command(flatten)]
        cert: CertFlags,
        #[arg(long)]
        x_min: Option<f64>,
        #[arg(long)]
        x_max: Option<f64>,
        #[arg(long)]
        x_points: Option<usize>,
        /// Normalizer for the ratio columns: xlogx | xlogx_eta:eta=E |
        /// power:rstar=R | exp:b=B.
        #[arg(long)]
        normalizer: Option<String>,
        /// Monte Carlo paths for the empirical overlay (0 = skip).
        #[arg(long)]
        n_paths: Option<u64>,
        #[arg(long)]
        depth: Option<u32>,
    },
    /// Tabulate density and cdf of a continuous multiplier law on a
    /// geometric grid in w = -ln(1 - t); writes density.csv, cdf.csv.
    Curves {
        #[arg(long)]
        law: Option<String>,
        #[arg(long)]
        n_points: Option<usize>,
    },
    /// Compare tail masses of two laws near 1; writes equiv.csv.
    Equiv {
        #[arg(long)]
        mu: Option<String>,
        #[arg(long)]
        nu: Option<String>,
        /// Largest distance-from-one on the comparison grid.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long)]
        n_grid: Option<usize>,
    },
    /// Solve the survival-path constant-optimization root for a
    /// Weibull-type exponent r.
    C0 {
        #[arg(long)]
        r: Option<f64>,
    },
    /// Ratio of the doubly-exponential tail integral to its limit;
    /// writes hosp.csv.
    Hosp {
        /// Comma-separated list of y values.
        #[arg(long)]
        y_values: Option<String>,
    },
    /// Check the iteration inequality on a z grid without building
    /// curves; writes bound_report.csv.
    Verify {
        #[command(flatten)]
        cert: CertFlags,
    },
}

fn run(cli: Cli) -> Result<i32, Failure> {
    let settings = Settings::load(cli.config.as_deref())?;
    let out_dir = match cli.out_dir {
        Some(d) => d,
        None => settings.resolve(None, "out-dir", Some(PathBuf::from(".")))?,
    };
    std::fs::create_dir_all(&out_dir)?;
    let seed: u64 = settings.resolve(cli.seed, "seed", Some(0))?;
    let threads: usize = settings.resolve(cli.threads, "threads", Some(0))?;
    if threads > 0 {
        // Ignore the error from configuring the pool twice (tests).
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }
    let ctx = Ctx {
        settings,
        out_dir,
        seed,
    };

    match cli.command {
        Command::Simulate {
            law,
            q,
            depth,
            n_paths,
            r0,
        } => commands::cmd_simulate(
            &ctx,
            commands::SimulateArgs {
                law,
                q,
                depth,
                n_paths,
                r0,
            },
        ),
        Command::Bracket {
            cert,
            x_min,
            x_max,
            x_points,
            normalizer,
            n_paths,
            depth,
        } => commands::cmd_bracket(
            &ctx,
            commands::BracketArgs {
                verify: cert.into_args(),
                x_min,
                x_max,
                x_points,
                normalizer,
                n_paths,
                depth,
            },
        ),
        Command::Curves { law, n_points } => {
            commands::cmd_curves(&ctx, commands::CurvesArgs { law, n_points })
        }
        Command::Equiv {
            mu,
            nu,
            epsilon,
            n_grid,
        } => commands::cmd_equiv(
            &ctx,
            commands::EquivArgs {
                mu,
                nu,
                epsilon,
                n_grid,
            },
        ),
        Command::C0 { r } => commands::cmd_c0(&ctx, commands::C0Args { r }),
        Command::Hosp { y_values } => commands::cmd_hosp(&ctx, commands::HospArgs { y_values }),
        Command::Verify { cert } => commands::cmd_verify(&ctx, cert.into_args()),
    }
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            std::process::exit(f.code);
        }
    }
}
