//! `schatten`: Hardy–Schatten norms, covariance-analytic costs and their
//! cross-checks for linear stochastic systems.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use schatten_core::costshape::CostShape;
use schatten_core::fixtures;
use schatten_core::{Error, ErrorKind, NormMethod, NumericSettings, StateSpaceSystem};

use commands::{resolve_system, Report, SimulationConfig};

#[derive(Parser, Debug)]
#[command(name = "schatten", version, about = "Hardy–Schatten norms and covariance-analytic costs of linear stochastic systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// System file (JSON with n, m, p, A, B, C) or `builtin:NAME` for a shipped fixture.
    #[arg(long, default_value = "builtin:mimo4")]
    system: String,
    /// Write the CSV report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    /// JSON file overriding numerical tolerances; missing fields keep their defaults.
    #[arg(long)]
    settings: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MethodArg {
    Wick,
    Riccati,
    Quadrature,
    All,
}

impl MethodArg {
    fn methods(self) -> Vec<NormMethod> {
        match self {
            MethodArg::Wick => vec![NormMethod::Wick],
            MethodArg::Riccati => vec![NormMethod::Riccati],
            MethodArg::Quadrature => vec![NormMethod::Quadrature],
            MethodArg::All => vec![NormMethod::Wick, NormMethod::Riccati, NormMethod::Quadrature],
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// ‖F‖₂ₖ for k = 1..N by one or all methods, with pairwise relative gaps.
    Norms {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        max_order: u64,
        #[arg(long, value_enum, default_value_t = MethodArg::All)]
        method: MethodArg,
    },
    /// Covariance-analytic cost J_φ(F) by series and by quadrature.
    Cost {
        #[command(flatten)]
        common: Common,
        /// risk-sensitive:θ, power:k or coeffs:c1,c2,…[@R].
        #[arg(long)]
        shape: String,
        #[arg(long, default_value_t = 30, value_parser = clap::value_parser!(u64).range(1..))]
        max_order: u64,
    },
    /// Risk-sensitive cost Ξ(θ) from the Riccati equation, the series and quadrature.
    Risk {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        theta: f64,
        #[arg(long, default_value_t = 60, value_parser = clap::value_parser!(u64).range(1..))]
        max_order: u64,
    },
    /// Worst-case output variance over spectral densities within a divergence budget.
    Bound {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "kl")]
        shape: String,
        /// Divergence budget d ≥ 0.
        #[arg(long, default_value_t = 0.0)]
        budget: f64,
    },
    /// Monte-Carlo cumulant rates of the output energy.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200.0)]
        horizon: f64,
        /// Energy quadrature step; defaults to the largest T/N ≤ min(0.01, 0.02/‖A‖).
        #[arg(long)]
        step: Option<f64>,
        #[arg(long, default_value_t = 2000)]
        paths: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Highest cumulant order (at most 3).
        #[arg(long, default_value_t = 2)]
        max_order: usize,
        /// Dump one row per path to this CSV file.
        #[arg(long)]
        samples: Option<PathBuf>,
    },
    /// Cross-method invariant suite; exit code 0 iff every check passes.
    Verify {
        /// System file or `builtin:NAME`; all shipped fixtures when omitted.
        #[arg(long)]
        system: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        settings: Option<PathBuf>,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        max_order: u64,
    },
}

const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;
const EXIT_VERIFICATION: u8 = 4;

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Input => EXIT_INPUT,
        ErrorKind::Numeric => EXIT_NUMERIC,
        ErrorKind::Verification => EXIT_VERIFICATION,
    }
}

fn load_settings(path: Option<&PathBuf>) -> Result<NumericSettings, Error> {
    match path {
        Some(p) => Ok(serde_json::from_str(&std::fs::read_to_string(p)?)?),
        None => Ok(NumericSettings::default()),
    }
}

fn load(common: &Common) -> Result<(StateSpaceSystem, NumericSettings), Error> {
    let (_, sys) = resolve_system(&common.system)?;
    Ok((sys, load_settings(common.settings.as_ref())?))
}

fn run(cli: Cli) -> Result<(Report, Option<PathBuf>), Error> {
    Ok(match cli.command {
        Command::Norms { common, max_order, method } => {
            let (sys, cfg) = load(&common)?;
            (commands::norms(&sys, &method.methods(), max_order as usize, &cfg), common.output)
        }
        Command::Cost { common, shape, max_order } => {
            let (sys, cfg) = load(&common)?;
            let shape = CostShape::parse(&shape)?;
            (commands::cost(&sys, &shape, max_order as usize, &cfg), common.output)
        }
        Command::Risk { common, theta, max_order } => {
            let (sys, cfg) = load(&common)?;
            (commands::risk(&sys, theta, max_order as usize, &cfg), common.output)
        }
        Command::Bound { common, shape, budget } => {
            let (sys, cfg) = load(&common)?;
            (commands::bound(&sys, &shape, budget, &cfg)?, common.output)
        }
        Command::Simulate { common, horizon, step, paths, seed, max_order, samples } => {
            let (sys, cfg) = load(&common)?;
            let sim = SimulationConfig { horizon, step, paths, seed, max_order, samples };
            (commands::simulate(&sys, &sim, &cfg)?, common.output)
        }
        Command::Verify { system, output, settings, max_order } => {
            let cfg = load_settings(settings.as_ref())?;
            let systems = match system {
                Some(s) => vec![resolve_system(&s)?],
                None => fixtures::all().into_iter().map(|(n, s)| (n.to_string(), s)).collect(),
            };
            (commands::verify(&systems, max_order as usize, &cfg), output)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (report, output) = match run(cli) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(exit_code(&e));
        }
    };
    if let Err(e) = report.table.emit(output.as_deref()) {
        eprintln!("error: {e}");
        return ExitCode::from(exit_code(&e));
    }
    for (what, e) in &report.errors {
        eprintln!("error: {what}: {e}");
    }
    if report.verified == Some(false) {
        return ExitCode::from(EXIT_VERIFICATION);
    }
    match report.errors.first() {
        Some((_, e)) => ExitCode::from(exit_code(e)),
        None => ExitCode::SUCCESS,
    }
}
