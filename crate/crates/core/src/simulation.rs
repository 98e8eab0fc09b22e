//! Monte Carlo sweep over the sector beamwidth.
//!
//! For every `θ` and trial the engine draws a user drop, splits it into
//! `360/θ` sectors, builds each sector's SNR coefficients, solves the sector
//! allocation and sums the sector rates into the cell sum rate. Trials own
//! independent random streams keyed by `(master_seed, θ, trial)`, so results
//! do not depend on execution order or on which other `θ` values are swept.

use serde::{Deserialize, Serialize};

use crate::channel::{
    snr_coefficient, AntennaModel, ChannelOptions, EnvironmentParams, GainPlacement, LinkGains,
    LosMode, RadioParams,
};
use crate::geometry::{assign_sectors, Beamwidth, CellGeometry, TrialSeed, UserDrop};
use crate::solver::{
    solve_exact, solve_heuristic, AllocationSolution, ExactLimits, HeuristicOptions, SectorProblem,
};
use crate::{Error, Result};

/// Which sector solver to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverChoice {
    Exact,
    Heuristic,
    /// Exact for sectors with at most 3 users and 8 subcarriers, heuristic otherwise.
    #[default]
    Auto,
}

impl std::str::FromStr for SolverChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(SolverChoice::Exact),
            "heuristic" => Ok(SolverChoice::Heuristic),
            "auto" => Ok(SolverChoice::Auto),
            other => Err(Error::invalid(
                "solver",
                format!("`{other}` is not one of exact, heuristic, auto"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub geometry: CellGeometry,
    /// User density, users/m².
    pub lambda: f64,
    pub env: EnvironmentParams,
    pub radio: RadioParams,
    /// Total UAV transmit power `P_t`, W.
    pub total_power_w: f64,
    /// Minimum rate per user `R0`, bits/s.
    pub min_rate_bps: f64,
    /// Per-subcarrier rate cap `R_max`, bits/s.
    pub max_rate_bps: f64,
    pub theta_list: Vec<Beamwidth>,
    pub mc_trials: usize,
    pub master_seed: u64,
    pub solver: SolverChoice,
    pub los_mode: LosMode,
    pub gain_placement: GainPlacement,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        crate::geometry::positive("lambda", self.lambda)?;
        self.env.validate()?;
        self.radio.validate()?;
        crate::geometry::positive("total_power_w", self.total_power_w)?;
        if !(self.min_rate_bps >= 0.0 && self.min_rate_bps.is_finite()) {
            return Err(Error::invalid("min_rate_bps", "must be finite and >= 0"));
        }
        if self.max_rate_bps.is_nan() || self.max_rate_bps < self.min_rate_bps {
            return Err(Error::invalid("max_rate_bps", "must be >= min_rate_bps"));
        }
        if self.theta_list.is_empty() {
            return Err(Error::invalid("theta_list", "must not be empty"));
        }
        if self.mc_trials == 0 {
            return Err(Error::invalid("mc_trials", "must be >= 1"));
        }
        if self.mc_trials > u32::MAX as usize {
            return Err(Error::invalid("mc_trials", "must fit in 32 bits"));
        }
        let limits = ExactLimits::default();
        if self.solver == SolverChoice::Exact && self.radio.num_subcarriers > limits.max_subcarriers {
            return Err(Error::invalid(
                "solver",
                format!(
                    "exact enumeration supports at most {} subcarriers, configured {}",
                    limits.max_subcarriers, self.radio.num_subcarriers
                ),
            ));
        }
        Ok(())
    }

    pub fn channel_options(&self) -> ChannelOptions {
        ChannelOptions {
            los_mode: self.los_mode,
            gain_placement: self.gain_placement,
        }
    }

    /// Random stream of trial `trial_index` at beamwidth `theta`.
    pub fn trial_seed(&self, theta: Beamwidth, trial_index: usize) -> TrialSeed {
        TrialSeed::new(
            self.master_seed,
            (u64::from(theta.degrees()) << 32) | trial_index as u64,
        )
    }
}

/// Power budget of one sector, `P_t · θ / 360`.
pub fn sector_budget(total_power_w: f64, theta: Beamwidth) -> f64 {
    total_power_w * f64::from(theta.degrees()) / 360.0
}

/// Jain's fairness index `(Σx)² / (M Σx²)`; 0 for empty or all-zero input.
pub fn jain_index(rates: &[f64]) -> f64 {
    let sum: f64 = rates.iter().sum();
    let sum_sq: f64 = rates.iter().map(|r| r * r).sum();
    if rates.is_empty() || sum_sq == 0.0 {
        return 0.0;
    }
    (sum * sum / (rates.len() as f64 * sum_sq)).min(1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub theta: Beamwidth,
    pub trial_index: usize,
    pub user_count: usize,
    pub sum_rate_cell: f64,
    /// `sum_rate_cell / user_count`, 0 when the cell is empty.
    pub avg_rate_user: f64,
    pub jain_index: f64,
    pub infeasible_sectors: usize,
    pub occupied_sectors: usize,
}

/// Everything one trial produced, for debugging dumps.
#[derive(Debug, Clone)]
pub struct TrialReport {
    pub result: TrialResult,
    pub drop: UserDrop,
    pub sectors: Vec<SectorReport>,
    pub per_user_rates: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SectorReport {
    pub index: usize,
    pub users: Vec<usize>,
    pub problem: SectorProblem,
    pub solution: AllocationSolution,
}

pub fn run_trial(config: &ScenarioConfig, theta: Beamwidth, trial_index: usize) -> Result<TrialResult> {
    run_trial_detailed(config, theta, trial_index).map(|r| r.result)
}

pub fn run_trial_detailed(
    config: &ScenarioConfig,
    theta: Beamwidth,
    trial_index: usize,
) -> Result<TrialReport> {
    config.validate()?;
    let seed = config.trial_seed(theta, trial_index);
    let mut rng = seed.rng();
    let drop = UserDrop::sample(&config.geometry, config.lambda, seed, &mut rng)?;
    let antenna = AntennaModel::for_beamwidth(theta);
    let budget = sector_budget(config.total_power_w, theta);
    let options = config.channel_options();
    let bw = config.radio.subcarrier_bw();

    let mut per_user_rates = vec![0.0; drop.len()];
    let mut sectors = Vec::new();
    let mut sum_rate_cell = 0.0;
    let mut infeasible_sectors = 0;
    for (index, users) in assign_sectors(&drop, theta).into_iter().enumerate() {
        if users.is_empty() {
            continue;
        }
        let columns = users
            .iter()
            .map(|&k| {
                snr_coefficient(&drop.users[k], &config.env, &config.radio, &antenna, options, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        let gains = LinkGains::from_user_columns(&columns)?;
        let problem = SectorProblem::new(gains, budget, config.min_rate_bps, config.max_rate_bps, bw)?;
        let solution = solve_sector(&problem, config.solver);
        if !solution.status.is_feasible() {
            infeasible_sectors += 1;
        }
        for (local, &k) in users.iter().enumerate() {
            per_user_rates[k] = solution.per_user_rates[local];
        }
        sum_rate_cell += solution.sum_rate;
        sectors.push(SectorReport {
            index,
            users,
            problem,
            solution,
        });
    }

    let user_count = drop.len();
    let result = TrialResult {
        theta,
        trial_index,
        user_count,
        sum_rate_cell,
        avg_rate_user: if user_count > 0 {
            sum_rate_cell / user_count as f64
        } else {
            0.0
        },
        jain_index: jain_index(&per_user_rates),
        infeasible_sectors,
        occupied_sectors: sectors.len(),
    };
    Ok(TrialReport {
        result,
        drop,
        sectors,
        per_user_rates,
    })
}

/// Solves one sector with the configured solver.
///
/// `Exact` falls back to the heuristic when a sector exceeds the enumeration bound.
pub fn solve_sector(problem: &SectorProblem, choice: SolverChoice) -> AllocationSolution {
    let limits = ExactLimits::default();
    let exact_fits = problem.subcarriers() <= limits.max_subcarriers
        && problem.users() <= limits.max_users;
    let use_exact = match choice {
        SolverChoice::Exact => exact_fits,
        SolverChoice::Heuristic => false,
        SolverChoice::Auto => problem.users() <= 3 && problem.subcarriers() <= 8,
    };
    if use_exact {
        solve_exact(problem, limits).expect("instance within enumeration bounds")
    } else {
        solve_heuristic(problem, HeuristicOptions::default())
    }
}

/// Aggregates over the Monte Carlo trials of one beamwidth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaSummary {
    pub theta: Beamwidth,
    pub sectors: usize,
    /// Mean cell sum rate over all trials, bits/s.
    pub mean_sum_rate: f64,
    /// Mean of per-trial average user rates over trials with at least one user.
    pub mean_avg_rate: f64,
    /// Mean Jain index over trials with at least one user.
    pub mean_jain: f64,
    /// Infeasible sectors over occupied sectors, across all trials.
    pub infeasible_fraction: f64,
    pub trials: Vec<TrialResult>,
}

impl ThetaSummary {
    /// Deterministic reduction in trial order.
    pub fn from_trials(theta: Beamwidth, trials: Vec<TrialResult>) -> Self {
        let n = trials.len() as f64;
        let mean_sum_rate = trials.iter().map(|t| t.sum_rate_cell).sum::<f64>() / n;
        let populated: Vec<&TrialResult> = trials.iter().filter(|t| t.user_count > 0).collect();
        let mean_over_populated = |f: fn(&TrialResult) -> f64| {
            if populated.is_empty() {
                0.0
            } else {
                populated.iter().map(|t| f(t)).sum::<f64>() / populated.len() as f64
            }
        };
        let occupied: usize = trials.iter().map(|t| t.occupied_sectors).sum();
        let infeasible: usize = trials.iter().map(|t| t.infeasible_sectors).sum();
        ThetaSummary {
            theta,
            sectors: theta.sectors(),
            mean_sum_rate,
            mean_avg_rate: mean_over_populated(|t| t.avg_rate_user),
            mean_jain: mean_over_populated(|t| t.jain_index),
            infeasible_fraction: if occupied > 0 {
                infeasible as f64 / occupied as f64
            } else {
                0.0
            },
            trials,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// One entry per configured θ, ascending.
    pub per_theta: Vec<ThetaSummary>,
    pub theta_opt: Beamwidth,
}

impl SweepResult {
    pub fn from_summaries(mut per_theta: Vec<ThetaSummary>) -> Self {
        per_theta.sort_by_key(|s| s.theta);
        // Ties go to the larger beamwidth.
        let theta_opt = per_theta
            .iter()
            .fold(None::<&ThetaSummary>, |best, s| match best {
                Some(b) if b.mean_sum_rate > s.mean_sum_rate => Some(b),
                _ => Some(s),
            })
            .expect("at least one beamwidth")
            .theta;
        SweepResult {
            per_theta,
            theta_opt,
        }
    }

    pub fn summary(&self, theta: Beamwidth) -> Option<&ThetaSummary> {
        self.per_theta.iter().find(|s| s.theta == theta)
    }

    pub fn optimum(&self) -> &ThetaSummary {
        self.summary(self.theta_opt).expect("theta_opt is swept")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Trials spread over the rayon pool; same bits as `Sequential`.
    #[default]
    Parallel,
}

pub fn sweep(config: &ScenarioConfig) -> Result<SweepResult> {
    sweep_with(config, Execution::default())
}

pub fn sweep_with(config: &ScenarioConfig, execution: Execution) -> Result<SweepResult> {
    config.validate()?;
    let mut thetas = config.theta_list.clone();
    thetas.sort();
    thetas.dedup();
    let jobs: Vec<(Beamwidth, usize)> = thetas
        .iter()
        .flat_map(|&theta| (0..config.mc_trials).map(move |t| (theta, t)))
        .collect();
    let results = run_jobs(config, &jobs, execution)?;

    let mut results = results.into_iter();
    let per_theta = thetas
        .iter()
        .map(|&theta| {
            let trials: Vec<TrialResult> = results.by_ref().take(config.mc_trials).collect();
            ThetaSummary::from_trials(theta, trials)
        })
        .collect();
    Ok(SweepResult::from_summaries(per_theta))
}

#[cfg(feature = "parallel")]
fn run_jobs(
    config: &ScenarioConfig,
    jobs: &[(Beamwidth, usize)],
    execution: Execution,
) -> Result<Vec<TrialResult>> {
    use rayon::prelude::*;
    match execution {
        Execution::Parallel => jobs
            .par_iter()
            .map(|&(theta, t)| run_trial(config, theta, t))
            .collect(),
        Execution::Sequential => run_sequential(config, jobs),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_jobs(
    config: &ScenarioConfig,
    jobs: &[(Beamwidth, usize)],
    _execution: Execution,
) -> Result<Vec<TrialResult>> {
    run_sequential(config, jobs)
}

fn run_sequential(config: &ScenarioConfig, jobs: &[(Beamwidth, usize)]) -> Result<Vec<TrialResult>> {
    jobs.iter()
        .map(|&(theta, t)| run_trial(config, theta, t))
        .collect()
}
