use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use uav_beamwidth::geometry::Beamwidth;
use uav_beamwidth::io::{self, ExportFormat};
use uav_beamwidth::presets::{self, sector_count_report};
use uav_beamwidth::simulation::{self, ScenarioConfig, SolverChoice};
use uav_beamwidth::solver::instance;
use uav_beamwidth::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "uavbeam", version, about = "Optimal sector beamwidth for a mm-wave UAV base station")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full Monte Carlo sweep over θ and export the per-θ table.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Output directory.
        #[arg(long, env = "UAVBEAM_OUT_DIR", default_value = "results")]
        out: PathBuf,
        #[arg(long, default_value = "csv")]
        format: ExportFormat,
        /// Also write the per-trial log.
        #[arg(long)]
        per_trial: bool,
    },
    /// Dump one trial (drop, sectors, allocations) as JSON.
    Trial {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Trial index within the beamwidth.
        #[arg(long, default_value_t = 0)]
        index: usize,
    },
    /// List the scenario presets.
    Presets,
    /// Solve a single sector instance file.
    Solve {
        instance: PathBuf,
        #[arg(long, default_value = "auto")]
        solver: SolverChoice,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// TOML configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Named preset used as the configuration.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Monte Carlo trials per beamwidth.
    #[arg(long)]
    trials: Option<usize>,
    /// Comma-separated beamwidths in degrees.
    #[arg(long, value_delimiter = ',')]
    theta: Vec<u32>,
    #[arg(long)]
    solver: Option<SolverChoice>,
    /// Extra `key=value` overrides (dotted paths, TOML values).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig, Error> {
        let mut overrides = self.overrides.clone();
        if let Some(seed) = self.seed {
            overrides.push(format!("master_seed={seed}"));
        }
        if let Some(trials) = self.trials {
            overrides.push(format!("mc_trials={trials}"));
        }
        if !self.theta.is_empty() {
            let list: Vec<String> = self.theta.iter().map(u32::to_string).collect();
            overrides.push(format!("theta_list=[{}]", list.join(",")));
        }
        if let Some(solver) = self.solver {
            let name = match solver {
                SolverChoice::Exact => "exact",
                SolverChoice::Heuristic => "heuristic",
                SolverChoice::Auto => "auto",
            };
            overrides.push(format!("solver=\"{name}\""));
        }
        match (&self.config, &self.preset) {
            (Some(path), _) => io::parse_config(path, &overrides),
            (None, Some(name)) => io::resolve_config(&presets::preset(name)?, &overrides),
            (None, None) => Err(Error::invalid("config", "pass --config <file> or --preset <name>")),
        }
    }
}

fn fail(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_config_error() { EXIT_CONFIG } else { EXIT_RUNTIME })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Presets => {
            for p in presets::catalog() {
                println!("{:<16} {}", p.name, p.description);
            }
            ExitCode::SUCCESS
        }
        Command::Run {
            scenario,
            out,
            format,
            per_trial,
        } => {
            let config = match scenario.resolve() {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let result = match simulation::sweep(&config) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            let path = out.join(format!("sweep.{}", format.extension()));
            let written = match io::export_sweep(&result, &config, format, &path) {
                Ok(w) => w,
                Err(e) => return fail(e),
            };
            if per_trial {
                if let Err(e) = io::export_trials(&result, &out.join("trials.csv")) {
                    return fail(e);
                }
            }
            println!("theta  sectors  sum_rate[Gbps]  avg_rate[Gbps]  jain    infeasible");
            for s in &result.per_theta {
                println!(
                    "{:>5}  {:>7}  {:>14.3}  {:>14.3}  {:.4}  {:.3}",
                    s.theta.degrees(),
                    s.sectors,
                    s.mean_sum_rate / 1e9,
                    s.mean_avg_rate / 1e9,
                    s.mean_jain,
                    s.infeasible_fraction
                );
            }
            match sector_count_report(&result, config.lambda, config.geometry.radius_m) {
                Ok(r) => println!(
                    "theta_opt = {} deg, S = {}, M = {:.2}, N = {} (2/theta = {:.2})",
                    r.theta_opt.degrees(),
                    r.sectors,
                    r.expected_users,
                    r.elements,
                    r.elements_exact
                ),
                Err(e) => return fail(e),
            }
            for w in written {
                eprintln!("wrote {}", w.display());
            }
            ExitCode::SUCCESS
        }
        Command::Trial { scenario, index } => {
            let config = match scenario.resolve() {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            let theta: Beamwidth = config.theta_list[0];
            let report = match simulation::run_trial_detailed(&config, theta, index) {
                Ok(r) => r,
                Err(e) => return fail(e),
            };
            let sectors: Vec<_> = report
                .sectors
                .iter()
                .map(|s| {
                    json!({
                        "sector": s.index,
                        "users": s.users,
                        "power_budget_w": s.problem.power_budget,
                        "solution": s.solution,
                    })
                })
                .collect();
            let dump = json!({
                "config_hash": io::config_hash(&config),
                "result": report.result,
                "users": report.drop.users,
                "per_user_rates_bps": report.per_user_rates,
                "sectors": sectors,
            });
            println!("{}", serde_json::to_string_pretty(&dump).expect("json"));
            ExitCode::SUCCESS
        }
        Command::Solve { instance: path, solver } => {
            let text = match std::fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) => return fail(Error::Io { path, source: e }),
            };
            let problem = match instance::load(&text) {
                Ok(p) => p,
                Err(e) => return fail(e),
            };
            let solution = simulation::solve_sector(&problem, solver);
            let dump = json!({
                "solution": solution,
                "pi": solution.pi_matrix(problem.users()),
                "total_power_w": solution.total_power(),
                "violations": solution.audit(&problem),
            });
            println!("{}", serde_json::to_string_pretty(&dump).expect("json"));
            ExitCode::SUCCESS
        }
    }
}
