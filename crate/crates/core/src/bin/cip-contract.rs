use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cip_contract::domain::{validate_ladder, LadderReport, Scenario};
use cip_contract::experiments::{
    default_scenario_seeded, run_experiment, BudgetMode, ExperimentConfig, ExperimentId,
    DEFAULT_SEED,
};
use cip_contract::feasibility::{check_ic_full, check_ir, relaxed_constraints, FeasibilityReport};
use cip_contract::negotiation::{run_negotiation, NegotiationConfig};
use cip_contract::solver::{brute_force_oracle, minimum_budget, solve_optimal};
use cip_contract::Result;

#[derive(Parser)]
#[command(
    name = "cip-contract",
    version,
    about = "Resource allocation contracts for critical infrastructures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Budget {
    Fixed,
    Grow,
    Both,
}

#[derive(clap::Args)]
struct FigArgs {
    /// Largest number of CIs (fig1 only).
    #[arg(long)]
    n_max: Option<usize>,
    #[arg(long, value_enum, default_value = "both")]
    budget: Budget,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// CSV destination; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    Fig1(FigArgs),
    Fig2(FigArgs),
    Fig3(FigArgs),
    /// Print a default scenario as JSON.
    GenScenario {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Check a scenario's ladder and whether its budget admits a menu.
    Validate {
        file: PathBuf,
    },
    /// Design the optimal menu.
    Solve {
        file: PathBuf,
        /// Solve by grid search instead.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = 1.0)]
        step: f64,
    },
    /// Run the design / offer / sign loop.
    Negotiate {
        file: PathBuf,
        #[arg(long)]
        max_rounds: Option<usize>,
    },
}

#[derive(Serialize)]
struct Validation {
    ladder: LadderReport,
    /// Absent when the ladder is invalid; nothing else is checked then.
    relaxed_constraints: Option<usize>,
    minimum_budget: Option<f64>,
    t_max: f64,
    budget_feasible: bool,
    /// IR and full IC of the optimal menu, when there is one.
    optimal_menu: Option<FeasibilityReport>,
}

fn load(path: &PathBuf) -> Result<Scenario> {
    Scenario::from_json(&std::fs::read_to_string(path)?)
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn figure(id: ExperimentId, args: FigArgs) -> Result<()> {
    let mut config = ExperimentConfig::new(id);
    if let Some(n) = args.n_max {
        config.n_max = n;
    }
    config.budget = match args.budget {
        Budget::Fixed => BudgetMode::Fixed,
        Budget::Grow => BudgetMode::Grow,
        Budget::Both => BudgetMode::Both,
    };
    config.seed = args.seed;
    config.out = args.out;
    let table = run_experiment(&config)?;
    match &config.out {
        Some(path) => table.write(path),
        None => {
            print!("{}", table.to_csv()?);
            Ok(())
        }
    }
}

fn validate(s: &Scenario) -> Result<Validation> {
    let ladder = validate_ladder(&s.ladder);
    if !ladder.ok {
        return Ok(Validation {
            ladder,
            relaxed_constraints: None,
            minimum_budget: None,
            t_max: s.t_max,
            budget_feasible: false,
            optimal_menu: None,
        });
    }
    let relaxed = Some(relaxed_constraints(s)?.constraints.len());
    let min_budget = minimum_budget(s)?;
    let optimal_menu = solve_optimal(s)?.menu.map(|m| {
        check_ir(&m, &s.ladder, s.beta, s.v).merge(check_ic_full(&m, &s.ladder, s.beta, s.v))
    });
    Ok(Validation {
        ladder,
        relaxed_constraints: relaxed,
        minimum_budget: min_budget,
        t_max: s.t_max,
        budget_feasible: min_budget.is_some_and(|b| b <= s.t_max + 1e-9),
        optimal_menu,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fig1(a) => figure(ExperimentId::Fig1, a),
        Command::Fig2(a) => figure(ExperimentId::Fig2, a),
        Command::Fig3(a) => figure(ExperimentId::Fig3, a),
        Command::GenScenario { n, seed } => {
            println!("{}", default_scenario_seeded(n, seed)?.to_json());
            Ok(())
        }
        Command::Validate { file } => print_json(&validate(&load(&file)?)?),
        Command::Solve { file, oracle, step } => {
            let s = load(&file)?;
            let result = if oracle {
                brute_force_oracle(&s, step)?
            } else {
                solve_optimal(&s)?
            };
            print_json(&result)
        }
        Command::Negotiate { file, max_rounds } => {
            let s = load(&file)?;
            let trace = run_negotiation(&s, NegotiationConfig { max_rounds })?;
            println!("{}", trace.to_json());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
