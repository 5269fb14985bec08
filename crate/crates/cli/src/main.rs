use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mmrd::{build_mesh, EigenMethod, Overrides};
use mmrd_cli::commands::{self, Source, EXIT_CONFIG};
use mmrd_cli::CliResult;

#[derive(Parser)]
#[command(
    name = "mmrd",
    version,
    about = "Reaction-diffusion runs with monotone-graph boundary laws"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Input {
    /// Scenario JSON file.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Named preset instead of a scenario file.
    #[arg(long)]
    preset: Option<String>,
    /// Preset parameter override, `key=value` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Input {
    fn source(&self) -> Source {
        Source {
            scenario: self.scenario.clone(),
            preset: self.preset.clone(),
            set: self.set.clone(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Analytic,
    Discrete,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario until t_end, blow-up or solver failure.
    Run {
        #[command(flatten)]
        input: Input,
        /// Output directory for trajectory.csv and summary.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an ordered pair (first <= second) and check the comparison.
    Compare {
        #[command(flatten)]
        input: Input,
        /// Second problem as a preset (overrides the scenario's pair block).
        #[arg(long)]
        pair_preset: Option<String>,
        /// Parameter override for --pair-preset (repeatable).
        #[arg(long = "pair-set", value_name = "KEY=VALUE")]
        pair_set: Vec<String>,
        /// Boundary flux ordering known a priori; skip its check.
        #[arg(long)]
        override_a3: bool,
        /// Reaction ordering known a priori; skip its checks.
        #[arg(long)]
        override_a4: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Principal Dirichlet eigenpair on a scenario's domain or a box.
    Eigen {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_enum, default_value = "discrete")]
        method: Method,
        /// Box dimension when no scenario is given.
        #[arg(long, default_value_t = 1)]
        dim: usize,
        /// Box edge length when no scenario is given.
        #[arg(long, default_value_t = 1.0)]
        length: f64,
        /// Nodes per axis when no scenario is given.
        #[arg(long, default_value_t = 201)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Local existence time, blow-up criteria and Riccati time for the initial data.
    Bound {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a preset as an explicit scenario document.
    Expand {
        name: String,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
}

fn dispatch(cli: Cli, log: &mut dyn Write) -> CliResult<i32> {
    match cli.command {
        Command::Run { input, out } => {
            let (sc, _) = input.source().load()?;
            commands::cmd_run(&sc, out.as_deref(), log)
        }
        Command::Compare {
            input,
            pair_preset,
            pair_set,
            override_a3,
            override_a4,
            out,
        } => {
            let (first, base) = input.source().load()?;
            let (second, mut ov) =
                commands::resolve_second(&first, &base, pair_preset.as_deref(), &pair_set)?;
            ov = Overrides {
                a3: ov.a3 || override_a3,
                a4: ov.a4 || override_a4,
            };
            commands::cmd_compare(&first, &second, ov, out.as_deref(), log)
        }
        Command::Eigen {
            input,
            method,
            dim,
            length,
            n,
            out,
        } => {
            let mesh = if input.source().is_given() {
                input.source().load()?.0.mesh()?
            } else {
                build_mesh(dim, &vec![length; dim], &vec![n; dim])?
            };
            let method = match method {
                Method::Analytic => EigenMethod::Analytic,
                Method::Discrete => EigenMethod::Discrete,
            };
            commands::cmd_eigen(&mesh, method, out.as_deref(), log)
        }
        Command::Bound { input, out } => {
            let (sc, _) = input.source().load()?;
            commands::cmd_bound(&sc, out.as_deref(), log)
        }
        Command::Expand { name, set } => commands::cmd_expand(&name, &set, log),
    }
}

fn main() -> ExitCode {
    // Usage errors must not collide with the blow-up exit code.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_CONFIG as u8 } else { 0 });
        }
    };
    let stdout = io::stdout();
    let code = match dispatch(cli, &mut stdout.lock()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    };
    ExitCode::from(code as u8)
}
