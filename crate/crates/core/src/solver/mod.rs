//! Per-sector subcarrier assignment and power allocation.
//!
//! A sector owns `Nc` subcarriers of bandwidth `B/Nc`, a power budget and a
//! minimum rate `R0` per user. The allocation maximizes
//! `Σ_n (B/Nc)·log2(1 + P_n γ_{n,k(n)})` with each subcarrier used by at most
//! one user, every user reaching `R0`, and each subcarrier rate capped at
//! `R_max`. For a fixed assignment the power problem is convex and solved by
//! [`waterfill_fixed_assignment`]; [`solve_exact`] enumerates assignments and
//! [`solve_heuristic`] builds one greedily and improves it locally.

mod exact;
mod heuristic;
pub mod instance;
mod waterfill;

use serde::{Deserialize, Serialize};

use crate::channel::LinkGains;
use crate::{Error, Result};

pub use exact::{solve_exact, ExactLimits};
pub use heuristic::{solve_heuristic, HeuristicOptions};
pub use waterfill::{waterfill_fixed_assignment, Infeasible};

/// Relative slack allowed on the power budget.
pub const BUDGET_TOLERANCE: f64 = 1e-9;
/// Relative slack allowed on the minimum-rate constraint.
pub const RATE_TOLERANCE: f64 = 1e-6;

/// `bw · log2(1 + P γ)`, bits/s.
#[inline]
pub fn subcarrier_rate(power: f64, gamma: f64, subcarrier_bw: f64) -> f64 {
    subcarrier_bw * (power * gamma).ln_1p() / std::f64::consts::LN_2
}

/// One sector's allocation instance.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorProblem {
    pub gains: LinkGains,
    pub power_budget: f64,
    pub min_rate: f64,
    pub max_rate: f64,
    pub subcarrier_bw: f64,
}

impl SectorProblem {
    pub fn new(
        gains: LinkGains,
        power_budget: f64,
        min_rate: f64,
        max_rate: f64,
        subcarrier_bw: f64,
    ) -> Result<Self> {
        let problem = SectorProblem {
            gains,
            power_budget,
            min_rate,
            max_rate,
            subcarrier_bw,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        crate::geometry::positive("power_budget", self.power_budget)?;
        crate::geometry::positive("subcarrier_bw", self.subcarrier_bw)?;
        if !(self.min_rate >= 0.0 && self.min_rate.is_finite()) {
            return Err(Error::invalid("min_rate", "must be finite and >= 0"));
        }
        if self.max_rate.is_nan() || self.max_rate < self.min_rate {
            return Err(Error::invalid("max_rate", "must be >= min_rate"));
        }
        if self.gains.subcarriers() == 0 {
            return Err(Error::invalid("gains", "need at least one subcarrier"));
        }
        Ok(())
    }

    pub fn subcarriers(&self) -> usize {
        self.gains.subcarriers()
    }

    pub fn users(&self) -> usize {
        self.gains.users()
    }

    /// Largest power on subcarrier `n` for user `k` before its rate exceeds `R_max`.
    pub fn power_cap(&self, n: usize, k: usize) -> f64 {
        (self.max_rate / self.subcarrier_bw * std::f64::consts::LN_2).exp_m1() / self.gains.get(n, k)
    }

    pub fn with_budget(&self, power_budget: f64) -> Self {
        SectorProblem {
            power_budget,
            ..self.clone()
        }
    }

    /// Assignment maximizing the objective when the minimum rate is dropped:
    /// every subcarrier goes to its strongest user, lowest index on ties.
    pub fn strongest_user_assignment(&self) -> Vec<usize> {
        (0..self.subcarriers())
            .map(|n| {
                (0..self.users()).fold(0, |best, k| {
                    if self.gains.get(n, k) > self.gains.get(n, best) {
                        k
                    } else {
                        best
                    }
                })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveStatus {
    /// Globally optimal over all assignments.
    Optimal,
    /// Feasible, found by the greedy/local-search solver.
    Heuristic,
    /// No assignment met the minimum rate; the minimum-rate-free optimum is returned.
    InfeasibleRelaxed,
    /// The sector has no users.
    Empty,
}

impl SolveStatus {
    pub fn is_feasible(self) -> bool {
        matches!(self, SolveStatus::Optimal | SolveStatus::Heuristic)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AllocationSolution {
    /// Owner of each subcarrier, `None` when unused.
    pub assignment: Vec<Option<usize>>,
    /// Transmit power of each subcarrier, W.
    pub powers: Vec<f64>,
    pub per_user_rates: Vec<f64>,
    pub sum_rate: f64,
    pub status: SolveStatus,
    /// `max(0, R0 − rate)` per user; all zeros unless relaxed.
    pub shortfall: Vec<f64>,
}

impl AllocationSolution {
    pub fn empty(subcarriers: usize) -> Self {
        AllocationSolution {
            assignment: vec![None; subcarriers],
            powers: vec![0.0; subcarriers],
            per_user_rates: Vec::new(),
            sum_rate: 0.0,
            status: SolveStatus::Empty,
            shortfall: Vec::new(),
        }
    }

    pub(crate) fn from_powers(
        problem: &SectorProblem,
        assignment: &[usize],
        powers: Vec<f64>,
        status: SolveStatus,
    ) -> Self {
        let mut per_user_rates = vec![0.0; problem.users()];
        for (n, (&k, &p)) in assignment.iter().zip(&powers).enumerate() {
            per_user_rates[k] += subcarrier_rate(p, problem.gains.get(n, k), problem.subcarrier_bw);
        }
        let shortfall = per_user_rates
            .iter()
            .map(|r| (problem.min_rate - r).max(0.0))
            .collect::<Vec<_>>();
        let shortfall = if status == SolveStatus::InfeasibleRelaxed {
            shortfall
        } else {
            vec![0.0; problem.users()]
        };
        AllocationSolution {
            assignment: assignment.iter().map(|&k| Some(k)).collect(),
            sum_rate: per_user_rates.iter().sum(),
            powers,
            per_user_rates,
            status,
            shortfall,
        }
    }

    /// Binary assignment matrix `π[n][k]`.
    pub fn pi_matrix(&self, users: usize) -> Vec<Vec<u8>> {
        self.assignment
            .iter()
            .map(|owner| (0..users).map(|k| u8::from(*owner == Some(k))).collect())
            .collect()
    }

    /// Power matrix `P[n][k]`.
    pub fn power_matrix(&self, users: usize) -> Vec<Vec<f64>> {
        self.assignment
            .iter()
            .zip(&self.powers)
            .map(|(owner, &p)| {
                (0..users)
                    .map(|k| if *owner == Some(k) { p } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    pub fn total_power(&self) -> f64 {
        self.powers.iter().sum()
    }

    /// Checks every allocation invariant against `problem`, returning the violations.
    pub fn audit(&self, problem: &SectorProblem) -> Vec<String> {
        let mut issues = Vec::new();
        let nc = problem.subcarriers();
        let ks = problem.users();
        if self.assignment.len() != nc || self.powers.len() != nc {
            issues.push(format!("expected {nc} subcarriers"));
            return issues;
        }
        if self.per_user_rates.len() != ks {
            issues.push(format!("expected {ks} user rates"));
            return issues;
        }
        let mut recomputed = vec![0.0; ks];
        for n in 0..nc {
            let p = self.powers[n];
            if !(p >= 0.0 && p.is_finite()) {
                issues.push(format!("subcarrier {n}: power {p} not finite and >= 0"));
                continue;
            }
            match self.assignment[n] {
                Some(k) if k < ks => {
                    let r = subcarrier_rate(p, problem.gains.get(n, k), problem.subcarrier_bw);
                    if r > problem.max_rate * (1.0 + 1e-9) {
                        issues.push(format!("subcarrier {n}: rate {r} above R_max"));
                    }
                    recomputed[k] += r;
                }
                Some(k) => issues.push(format!("subcarrier {n}: owner {k} out of range")),
                None if p > 0.0 => issues.push(format!("subcarrier {n}: power without owner")),
                None => {}
            }
        }
        let total = self.total_power();
        if total > problem.power_budget * (1.0 + BUDGET_TOLERANCE) {
            issues.push(format!("total power {total} above budget {}", problem.power_budget));
        }
        let sum: f64 = recomputed.iter().sum();
        if (sum - self.sum_rate).abs() > 1e-9 * sum.abs().max(1.0) {
            issues.push(format!("sum rate {} but recomputed {sum}", self.sum_rate));
        }
        if self.status.is_feasible() {
            for (k, r) in recomputed.iter().enumerate() {
                if *r < problem.min_rate * (1.0 - RATE_TOLERANCE) {
                    issues.push(format!("user {k}: rate {r} below R0 {}", problem.min_rate));
                }
            }
        }
        if self.status == SolveStatus::Empty && ks != 0 {
            issues.push("status Empty with users present".into());
        }
        issues
    }
}

/// Minimum-rate-free optimum, returned when no assignment is feasible.
pub(crate) fn relaxed_solution(problem: &SectorProblem) -> AllocationSolution {
    let assignment = problem.strongest_user_assignment();
    let free = problem_without_min_rate(problem);
    let powers = waterfill_fixed_assignment(&assignment, &free)
        .expect("water-filling without a minimum rate is always feasible");
    AllocationSolution::from_powers(problem, &assignment, powers, SolveStatus::InfeasibleRelaxed)
}

fn problem_without_min_rate(problem: &SectorProblem) -> SectorProblem {
    SectorProblem {
        min_rate: 0.0,
        ..problem.clone()
    }
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;
    use rand::Rng;

    /// Random instance with log-uniform gains over `decades` orders of magnitude.
    pub fn random_problem<R: Rng>(
        rng: &mut R,
        subcarriers: usize,
        users: usize,
        decades: f64,
        min_rate: f64,
    ) -> SectorProblem {
        let rows: Vec<Vec<f64>> = (0..subcarriers)
            .map(|_| {
                (0..users)
                    .map(|_| 10f64.powf(rng.random::<f64>() * decades))
                    .collect()
            })
            .collect();
        SectorProblem::new(LinkGains::from_rows(&rows).unwrap(), 1.0, min_rate, 1e12, 1.0).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_examples() {
        let bw = 1e9 / 30.0;
        assert_eq!(subcarrier_rate(0.0, 123.0, bw), 0.0);
        assert!((subcarrier_rate(1.0, 1.0, bw) - bw).abs() < 1e-6);
        assert!((subcarrier_rate(0.5, 6.0, bw) - 2.0 * bw).abs() < 1e-6);
    }

    #[test]
    fn validation() {
        let g = LinkGains::from_rows(&[vec![1.0]]).unwrap();
        assert!(SectorProblem::new(g.clone(), 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(SectorProblem::new(g.clone(), 1.0, -1.0, 1.0, 1.0).is_err());
        assert!(SectorProblem::new(g.clone(), 1.0, 2.0, 1.0, 1.0).is_err());
        assert!(SectorProblem::new(g, 1.0, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn power_cap_hits_max_rate() {
        let g = LinkGains::from_rows(&[vec![4.0]]).unwrap();
        let p = SectorProblem::new(g, 1.0, 0.0, 3.0, 1.0).unwrap();
        let cap = p.power_cap(0, 0);
        assert!((cap - 7.0 / 4.0).abs() < 1e-15);
        assert!((subcarrier_rate(cap, 4.0, 1.0) - 3.0).abs() < 1e-12);
        let huge = SectorProblem::new(LinkGains::from_rows(&[vec![4.0]]).unwrap(), 1.0, 0.0, 5e10, 1e9 / 30.0)
            .unwrap();
        assert!(huge.power_cap(0, 0).is_infinite());
    }

    #[test]
    fn matrices_follow_assignment() {
        let g = LinkGains::from_rows(&[vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let p = SectorProblem::new(g, 1.0, 0.0, 1e9, 1.0).unwrap();
        let sol = AllocationSolution::from_powers(&p, &[1, 0], vec![0.25, 0.75], SolveStatus::Optimal);
        assert_eq!(sol.pi_matrix(2), vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(sol.power_matrix(2), vec![vec![0.0, 0.25], vec![0.75, 0.0]]);
        assert!(sol.audit(&p).is_empty());
    }

    #[test]
    fn strongest_user_tie_goes_to_lowest_index() {
        let g = LinkGains::from_rows(&[vec![2.0, 2.0], vec![1.0, 3.0]]).unwrap();
        let p = SectorProblem::new(g, 1.0, 0.0, 1e9, 1.0).unwrap();
        assert_eq!(p.strongest_user_assignment(), vec![0, 1]);
    }
}
