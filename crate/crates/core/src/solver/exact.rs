use super::{
    relaxed_solution, waterfill_fixed_assignment, AllocationSolution, SectorProblem, SolveStatus,
};
use crate::{Error, Result};

/// Largest instance the enumerating solver accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactLimits {
    pub max_subcarriers: usize,
    pub max_users: usize,
}

impl Default for ExactLimits {
    fn default() -> Self {
        ExactLimits {
            max_subcarriers: 8,
            max_users: 4,
        }
    }
}

/// Globally optimal allocation by enumerating every subcarrier -> user map.
///
/// Leaving a subcarrier unused is never better than handing it to any user
/// at zero power, so only complete maps are enumerated; maps leaving a user
/// without subcarriers are rejected by the water-filling step when `R0 > 0`.
pub fn solve_exact(problem: &SectorProblem, limits: ExactLimits) -> Result<AllocationSolution> {
    let nc = problem.subcarriers();
    let ks = problem.users();
    if ks == 0 {
        return Ok(AllocationSolution::empty(nc));
    }
    if nc > limits.max_subcarriers || ks > limits.max_users {
        return Err(Error::invalid(
            "problem size",
            format!(
                "{nc} subcarriers x {ks} users exceeds the enumeration bound {} x {}",
                limits.max_subcarriers, limits.max_users
            ),
        ));
    }
    if problem.min_rate > 0.0 && ks > nc {
        return Ok(relaxed_solution(problem));
    }

    let mut assignment = vec![0usize; nc];
    let mut best: Option<(f64, Vec<usize>, Vec<f64>)> = None;
    loop {
        if let Ok(powers) = waterfill_fixed_assignment(&assignment, problem) {
            let value = objective(problem, &assignment, &powers);
            if best.as_ref().is_none_or(|(v, _, _)| value > *v) {
                best = Some((value, assignment.clone(), powers));
            }
        }
        if !advance(&mut assignment, ks) {
            break;
        }
    }

    Ok(match best {
        Some((_, assignment, powers)) => {
            AllocationSolution::from_powers(problem, &assignment, powers, SolveStatus::Optimal)
        }
        None => relaxed_solution(problem),
    })
}

/// Odometer step over `ks^len` maps; false after the last one.
fn advance(assignment: &mut [usize], ks: usize) -> bool {
    for digit in assignment.iter_mut() {
        *digit += 1;
        if *digit < ks {
            return true;
        }
        *digit = 0;
    }
    false
}

pub(super) fn objective(problem: &SectorProblem, assignment: &[usize], powers: &[f64]) -> f64 {
    assignment
        .iter()
        .zip(powers)
        .enumerate()
        .map(|(n, (&k, &p))| super::subcarrier_rate(p, problem.gains.get(n, k), problem.subcarrier_bw))
        .sum()
}
