//! Command-line front end: scenario files in, equilibria, verification
//! reports, profitability analyses, trajectories, vector fields, sweeps
//! and worked-example reproductions out.
//!
//! Exit codes: 0 success, 2 validation error, 3 solver failure or no
//! interior equilibrium (including failed verification/reproduction).

mod output;
mod reproduce;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use netgame::analysis::{profitability_report, sweep, transit_case_report};
use netgame::dynamics::{integrate, sample_field, DynamicsMode};
use netgame::equilibrium::{solve, verify_nep, Equilibrium, Mode};
use netgame::game::{PricePoint, Scenario, ScenarioFile};
use netgame::oracle::{find_grid_neps, GridSpec};

use output::{csv, round_json, sig};

#[derive(Parser)]
#[command(
    name = "netgame",
    version,
    about = "Pricing games between access and content providers: solve, verify, analyze"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SolveMode {
    Printed,
    Derived,
}

impl From<SolveMode> for Mode {
    fn from(m: SolveMode) -> Mode {
        match m {
            SolveMode::Printed => Mode::AsPrinted,
            SolveMode::Derived => Mode::AsDerived,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    Printed,
    Gradient,
    #[value(name = "best_response_relaxation")]
    BestResponseRelaxation,
}

impl From<RuleArg> for DynamicsMode {
    fn from(m: RuleArg) -> DynamicsMode {
        match m {
            RuleArg::Printed => DynamicsMode::Printed,
            RuleArg::Gradient => DynamicsMode::Gradient,
            RuleArg::BestResponseRelaxation => DynamicsMode::BestResponseRelaxation,
        }
    }
}

#[derive(Args)]
struct OutArg {
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the scenario's interior Nash equilibrium (JSON).
    Solve {
        file: PathBuf,
        /// Closure of the transit-game conditions: as printed or as
        /// re-derived from the stated utilities.
        #[arg(long, value_enum, default_value = "derived")]
        mode: SolveMode,
    },
    /// Check a candidate price pair for profitable unilateral deviations.
    Verify {
        file: PathBuf,
        #[arg(long)]
        p1: f64,
        #[arg(long)]
        p2: f64,
        #[arg(long, default_value_t = 1e-3)]
        grid_step: f64,
        #[arg(long, default_value_t = 1e-6)]
        eps: f64,
    },
    /// Exhaustive epsilon-equilibrium search on a price grid (JSON).
    Oracle {
        file: PathBuf,
        /// Grid step; defaults to 1e-3 of the scenario's zero-demand price.
        #[arg(long)]
        grid_step: Option<f64>,
        /// Deviation-gain threshold; defaults to 1e-6 of the largest
        /// utility over the grid.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Side-payment profitability report (transit scenarios get the
    /// flow-direction case report instead).
    Profit { file: PathBuf },
    /// Integrate price dynamics and emit the trajectory as CSV.
    Dynamics {
        file: PathBuf,
        /// Starting prices "P1,P2".
        #[arg(long, value_parser = parse_pair)]
        init: (f64, f64),
        #[arg(long, value_enum)]
        mode: RuleArg,
        #[arg(long)]
        dt: f64,
        #[arg(long)]
        t_max: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Sample the marginal-utility vector field as CSV.
    Field {
        file: PathBuf,
        /// Box "LO,HI" applied to both axes.
        #[arg(long = "box", value_parser = parse_pair)]
        box_range: (f64, f64),
        /// Nodes per axis.
        #[arg(long)]
        res: usize,
        #[command(flatten)]
        out: OutArg,
    },
    /// Re-solve over a range of one scenario parameter, emitting CSV.
    Sweep {
        file: PathBuf,
        #[arg(long)]
        param: String,
        #[arg(long, allow_negative_numbers = true)]
        from: f64,
        #[arg(long, allow_negative_numbers = true)]
        to: f64,
        #[arg(long)]
        step: f64,
        #[command(flatten)]
        out: OutArg,
    },
    /// Regenerate a worked example and check it against expected values.
    Reproduce {
        #[arg(value_parser = ["thm1", "pwl1", "pwl2", "pwl3", "smooth", "transit"])]
        target: String,
    },
}

fn parse_pair(text: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected two comma-separated numbers, got `{text}`"));
    }
    let a: f64 = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let b: f64 = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok((a, b))
}

/// Validation failures exit 2; solver failures and missing equilibria exit 3.
enum Failure {
    Validation(String),
    Solver(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Validation(_) => 2,
            Failure::Solver(_) => 3,
        }
    }
    fn message(&self) -> &str {
        match self {
            Failure::Validation(m) | Failure::Solver(m) => m,
        }
    }
}

fn classify(e: netgame::Error) -> Failure {
    use netgame::Error::*;
    match e {
        SolverFailure(_) => Failure::Solver(e.to_string()),
        InvalidParameter { .. } | CalibrationInfeasible(_) | GridTooLarge { .. }
        | UnknownParameter(_) | Unsupported(_) | ScenarioFile(_) => {
            Failure::Validation(e.to_string())
        }
    }
}

fn load(file: &PathBuf) -> Result<(ScenarioFile, Scenario), Failure> {
    let text = fs::read_to_string(file)
        .map_err(|e| Failure::Validation(format!("{}: {e}", file.display())))?;
    let with_path = |f: Failure| match f {
        Failure::Validation(m) => Failure::Validation(format!("{}: {m}", file.display())),
        other => other,
    };
    let sf = ScenarioFile::from_json(&text).map_err(|e| with_path(classify(e)))?;
    let scenario = sf.to_scenario().map_err(|e| with_path(classify(e)))?;
    for w in scenario.warnings() {
        eprintln!("warning: {w}");
    }
    Ok((sf, scenario))
}

fn emit(text: String, out: &Option<PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::Validation(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Failure> {
    let mut v = serde_json::to_value(value)
        .map_err(|e| Failure::Validation(format!("serialization: {e}")))?;
    round_json(&mut v);
    println!("{}", serde_json::to_string_pretty(&v).unwrap());
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Solve { file, mode } => {
            let (_, scenario) = load(&file)?;
            let eq = solve(&scenario, mode.into()).map_err(classify)?;
            print_json(&eq)?;
            if let Equilibrium::None { reason } = &eq {
                return Err(Failure::Solver(format!("no interior equilibrium: {reason}")));
            }
            if let (Scenario::EyeballTransit { transit_price, .. }, Some(p)) =
                (&scenario, eq.as_point())
            {
                if *transit_price >= p.p1.min(p.p2) {
                    eprintln!(
                        "warning: volume-discount assumption violated: p_t = {transit_price} \
                         is not below both equilibrium prices"
                    );
                }
            }
            Ok(())
        }
        Command::Verify {
            file,
            p1,
            p2,
            grid_step,
            eps,
        } => {
            let (_, scenario) = load(&file)?;
            let candidate = PricePoint::new(p1, p2).map_err(classify)?;
            let report = verify_nep(&scenario, &candidate, grid_step, eps).map_err(classify)?;
            print_json(&report)?;
            if report.passes {
                Ok(())
            } else {
                Err(Failure::Solver(format!(
                    "candidate ({p1}, {p2}) admits profitable deviations: gains {:?}",
                    report.deviation_gain
                )))
            }
        }
        Command::Oracle {
            file,
            grid_step,
            eps,
        } => {
            let (_, scenario) = load(&file)?;
            let ceiling = scenario.price_ceiling();
            let step = grid_step.unwrap_or(1e-3 * ceiling);
            let grid = GridSpec::new(0.0, ceiling, step).map_err(classify)?;
            let found = find_grid_neps(&scenario, &grid, eps).map_err(classify)?;
            print_json(&found)
        }
        Command::Profit { file } => {
            let (_, scenario) = load(&file)?;
            if matches!(scenario, Scenario::EyeballTransit { .. }) {
                let report = transit_case_report(&scenario).map_err(classify)?;
                for w in &report.warnings {
                    eprintln!("warning: {w}");
                }
                print_json(&report)
            } else {
                let report = profitability_report(&scenario).map_err(classify)?;
                print_json(&report)
            }
        }
        Command::Dynamics {
            file,
            init,
            mode,
            dt,
            t_max,
            out,
        } => {
            let (_, scenario) = load(&file)?;
            let start = PricePoint::new(init.0, init.1).map_err(classify)?;
            let traj = integrate(&scenario, &start, mode.into(), dt, t_max).map_err(classify)?;
            let doc = csv(
                &["t", "p1", "p2", "U1", "U2"],
                traj.times.iter().zip(&traj.points).zip(&traj.utilities).map(
                    |((t, p), (u1, u2))| {
                        vec![sig(*t), sig(p.p1), sig(p.p2), sig(*u1), sig(*u2)]
                    },
                ),
            );
            emit(doc, &out.out)
        }
        Command::Field {
            file,
            box_range,
            res,
            out,
        } => {
            let (_, scenario) = load(&file)?;
            let field =
                sample_field(&scenario, box_range.0, box_range.1, res).map_err(classify)?;
            let doc = csv(
                &["p1", "p2", "dU1_dp1", "dU2_dp2"],
                (0..field.p1.len()).map(|i| {
                    vec![
                        sig(field.p1[i]),
                        sig(field.p2[i]),
                        sig(field.d_u1_d_p1[i]),
                        sig(field.d_u2_d_p2[i]),
                    ]
                }),
            );
            emit(doc, &out.out)
        }
        Command::Sweep {
            file,
            param,
            from,
            to,
            step,
            out,
        } => {
            let (sf, _) = load(&file)?;
            let rows = sweep(&sf, &param, from, to, step).map_err(classify)?;
            let doc = csv(
                &[&param, "p1", "p2", "U1", "U2", "equilibrium_type"],
                rows.iter().map(|r| {
                    let cell = |v: Option<f64>| v.map(sig).unwrap_or_default();
                    vec![
                        sig(r.value),
                        cell(r.p1),
                        cell(r.p2),
                        cell(r.u1),
                        cell(r.u2),
                        r.equilibrium_type.clone(),
                    ]
                }),
            );
            emit(doc, &out.out)
        }
        Command::Reproduce { target } => reproduce::run(&target).map_err(Failure::Solver),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
