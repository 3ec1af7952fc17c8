use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hpd_harness::experiment::{convergence_traces, design, scheme_groups, trial_channel, trial_seeds};
use hpd_harness::output::{format_g, write_results};
use hpd_harness::power::write_power_csv;
use hpd_harness::{power_report, run_experiment, ExperimentSpec, Format, HarnessError, Result, Scheme};

#[derive(Parser)]
#[command(name = "hpd", version, about = "Hybrid precoder design and Monte Carlo evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Design one transmit precoder on trial 0 and dump S_t, P_t and F_BB.
    Design {
        #[command(flatten)]
        common: Common,
        /// Scheme to run; defaults to the first hybrid scheme in the config.
        #[arg(long)]
        scheme: Option<Scheme>,
    },
    /// Monte Carlo sweep over the configured SNR grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Phase-shifter/switch counts and power per architecture.
    Power {
        #[command(flatten)]
        common: Common,
    },
    /// Per-iteration objective of each scheme's transmit design on trial 0.
    Convergence {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// Experiment spec (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides master_seed from the config.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn spec(&self, required: bool) -> Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::load(path)?,
            None if required => return Err(HarnessError::Config("--config is required".into())),
            None => ExperimentSpec::reference(),
        };
        if let Some(seed) = self.seed {
            spec.master_seed = seed;
        }
        Ok(spec)
    }

    fn with_output(&self, f: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<()> {
        match &self.out {
            Some(path) => {
                let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
                let mut w = BufWriter::new(file);
                f(&mut w)
                    .and_then(|_| w.flush())
                    .map_err(|e| HarnessError::io(path, e))
            }
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                f(&mut lock).map_err(|e| HarnessError::io(Path::new("<stdout>"), e))
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Design { common, scheme } => {
            let spec = common.spec(true)?;
            let scheme = match scheme {
                Some(s) => s,
                None => *spec
                    .schemes
                    .iter()
                    .find(|&&s| s != Scheme::FullyDigital)
                    .ok_or_else(|| HarnessError::Config("no hybrid scheme configured".into()))?,
            };
            if scheme == Scheme::FullyDigital {
                return Err(HarnessError::Config("fully_digital has no hybrid precoder to dump".into()));
            }
            let (_, target) = trial_channel(&spec, 0)?;
            let opts = spec.solver_opts.with_seed(trial_seeds(spec.master_seed, 0).tx);
            let cfg = &spec.system;
            let sol = design(scheme, &target.f_opt, &cfg.tx_layout(), scheme_groups(scheme, cfg), &opts, true)?;
            common.with_output(|w| hpd_harness::dump::write_precoder(w, &sol.precoder))
        }
        Command::Sweep { common, format } => {
            let spec = common.spec(true)?;
            let rows = run_experiment(&spec, common.threads)?;
            common.with_output(|w| write_results(&rows, w, format))
        }
        Command::Power { common } => {
            let spec = common.spec(false)?;
            let rows = power_report(&spec.system, &spec.power_model);
            common.with_output(|w| write_power_csv(&rows, w))
        }
        Command::Convergence { common } => {
            let spec = common.spec(true)?;
            let traces = convergence_traces(&spec)?;
            common.with_output(|w| {
                writeln!(w, "scheme,iteration,objective")?;
                for (scheme, trace) in &traces {
                    for (k, v) in trace.iter().enumerate() {
                        writeln!(w, "{scheme},{},{}", k + 1, format_g(*v))?;
                    }
                }
                Ok(())
            })
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("hpd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
