use clap::{Parser, Subcommand};
use mixdat::DEFAULT_BINS;
use mixdat_cli::cmd;
use std::path::PathBuf;
use std::process::ExitCode;

/// MixUp, directional adversarial training, and untied MixUp: policy
/// transforms, equivalence verification, and training sweeps.
#[derive(Parser)]
#[command(name = "mixdat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Apply a policy-space map and write the result as text files.
    Transform {
        /// Which map: D (mix policy to dat policy), U (dat policy to
        /// untied scheme), or Du (untied scheme to dat policy).
        #[arg(long)]
        map: String,
        /// Policy spec: `beta:<a>,<b>`, `point:<l>`, or `file:<path>`,
        /// with an optional `|D`, `|U`, or `|Du:<gamma-file>` suffix.
        #[arg(long)]
        policy: String,
        /// Gamma file for --map Du when the policy spec is plain.
        #[arg(long)]
        gamma: Option<String>,
        /// Grid resolution for analytic policy specs.
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Run the verification suites; exits 1 if any check fails.
    Verify {
        /// Which suite: theorems, concentration, or all.
        #[arg(long, default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Grid resolution for the equivalence cross product.
        #[arg(long, default_value_t = DEFAULT_BINS)]
        bins: usize,
        /// Output directory for the CSV reports.
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// One training run from a config file; writes the per-epoch CSV.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// All schemes x runs from a config file; writes per-run CSVs and the
    /// aggregate table.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = all cores).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Transform {
            map,
            policy,
            gamma,
            bins,
            out,
        } => cmd::run_transform(&map, &policy, gamma.as_deref(), bins, &out).map(|()| true),
        Command::Verify {
            suite,
            seed,
            bins,
            out,
        } => cmd::run_verify(&suite, seed, bins, &out),
        Command::Train { config, seed, out } => cmd::run_train(&config, seed, &out).map(|()| true),
        Command::Sweep {
            config,
            seed,
            jobs,
            out,
        } => cmd::run_sweep(&config, seed, jobs, &out).map(|()| true),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
