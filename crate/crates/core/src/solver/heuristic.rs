use super::exact::objective;
use super::waterfill::{minimum_power_bound, owned_by, user_minimum_power};
use super::{
    relaxed_solution, waterfill_fixed_assignment, AllocationSolution, SectorProblem, SolveStatus,
    BUDGET_TOLERANCE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HeuristicOptions {
    /// Local-search passes (reassignments and exchanges) after the greedy build; 0 disables.
    pub local_search_passes: usize,
}

impl Default for HeuristicOptions {
    fn default() -> Self {
        HeuristicOptions {
            local_search_passes: 1,
        }
    }
}

/// Greedy assignment, repair towards feasibility, then water-filling and
/// single-move local search.
///
/// 1. Users, weakest best gain first, each claim their best free subcarrier.
/// 2. The remaining subcarriers go, strongest first, to the user with the
///    largest marginal rate at an equal-power level, preferring users still
///    short of `R0`.
/// 3. While the minimum rates cost more than the budget, the single
///    reassignment or exchange that most reduces that cost is applied.
/// 4. Powers come from water-filling. Local search then tries handing each
///    subcarrier to every other user and exchanging the owners of every pair
///    of subcarriers, keeping any move that raises the sum rate.
pub fn solve_heuristic(problem: &SectorProblem, options: HeuristicOptions) -> AllocationSolution {
    let nc = problem.subcarriers();
    let ks = problem.users();
    if ks == 0 {
        return AllocationSolution::empty(nc);
    }
    if problem.min_rate > 0.0 && ks > nc {
        return relaxed_solution(problem);
    }
    // Giving a user more subcarriers never raises its minimum power, so this
    // bound failing rules out every assignment.
    if minimum_power_bound(problem) > problem.power_budget * (1.0 + BUDGET_TOLERANCE) {
        return relaxed_solution(problem);
    }

    let mut assignment = greedy_assignment(problem);
    if !repair(problem, &mut assignment) {
        return relaxed_solution(problem);
    }
    let Ok(mut powers) = waterfill_fixed_assignment(&assignment, problem) else {
        return relaxed_solution(problem);
    };
    let mut value = objective(problem, &assignment, &powers);

    for _ in 0..options.local_search_passes {
        let mut improved = false;
        let try_candidate = |assignment: &[usize], value: &mut f64, powers: &mut Vec<f64>| {
            if let Ok(candidate) = waterfill_fixed_assignment(assignment, problem) {
                let v = objective(problem, assignment, &candidate);
                if v > *value * (1.0 + 1e-12) {
                    *value = v;
                    *powers = candidate;
                    return true;
                }
            }
            false
        };
        // Reassign one subcarrier.
        for n in 0..nc {
            let owner = assignment[n];
            for k in (0..ks).filter(|&k| k != owner) {
                assignment[n] = k;
                if try_candidate(&assignment, &mut value, &mut powers) {
                    improved = true;
                    break;
                }
                assignment[n] = owner;
            }
        }
        // Exchange the owners of two subcarriers.
        for n in 0..nc {
            for m in n + 1..nc {
                if assignment[n] == assignment[m] {
                    continue;
                }
                assignment.swap(n, m);
                if try_candidate(&assignment, &mut value, &mut powers) {
                    improved = true;
                } else {
                    assignment.swap(n, m);
                }
            }
        }
        if !improved {
            break;
        }
    }

    AllocationSolution::from_powers(problem, &assignment, powers, SolveStatus::Heuristic)
}

fn greedy_assignment(problem: &SectorProblem) -> Vec<usize> {
    let nc = problem.subcarriers();
    let ks = problem.users();
    let gains = &problem.gains;
    let mut owner: Vec<Option<usize>> = vec![None; nc];

    let best_gain = |k: usize| (0..nc).map(|n| gains.get(n, k)).fold(0.0, f64::max);
    let mut order: Vec<usize> = (0..ks).collect();
    order.sort_by(|&a, &b| best_gain(a).total_cmp(&best_gain(b)).then(a.cmp(&b)));

    let equal_power = problem.power_budget / nc as f64;
    let marginal = |n: usize, k: usize| {
        super::subcarrier_rate(equal_power, gains.get(n, k), problem.subcarrier_bw)
            .min(problem.max_rate)
    };
    let mut provisional = vec![0.0; ks];

    for &k in order.iter().take(nc) {
        let pick = (0..nc)
            .filter(|&n| owner[n].is_none())
            .fold(None, |best: Option<usize>, n| match best {
                Some(b) if gains.get(b, k) >= gains.get(n, k) => Some(b),
                _ => Some(n),
            });
        if let Some(n) = pick {
            owner[n] = Some(k);
            provisional[k] += marginal(n, k);
        }
    }

    let mut remaining: Vec<usize> = (0..nc).filter(|&n| owner[n].is_none()).collect();
    let strongest = |n: usize| (0..ks).map(|k| gains.get(n, k)).fold(0.0, f64::max);
    remaining.sort_by(|&a, &b| strongest(b).total_cmp(&strongest(a)).then(a.cmp(&b)));
    for n in remaining {
        let short: Vec<usize> = (0..ks)
            .filter(|&k| provisional[k] < problem.min_rate)
            .collect();
        let candidates: Vec<usize> = if short.is_empty() {
            (0..ks).collect()
        } else {
            short
        };
        // Lowest index wins ties.
        let k = candidates
            .iter()
            .copied()
            .fold(candidates[0], |best, k| if marginal(n, k) > marginal(n, best) { k } else { best });
        owner[n] = Some(k);
        provisional[k] += marginal(n, k);
    }

    owner.into_iter().map(|o| o.expect("every subcarrier assigned")).collect()
}

#[derive(Clone, Copy)]
enum Move {
    Reassign(usize, usize),
    Exchange(usize, usize),
}

/// Moves or exchanges subcarriers until the minimum rates fit in the budget.
/// Returns false if no sequence of improving moves gets there.
fn repair(problem: &SectorProblem, assignment: &mut [usize]) -> bool {
    if problem.min_rate <= 0.0 {
        return true;
    }
    let limit = problem.power_budget * (1.0 + BUDGET_TOLERANCE);
    // A move only changes the cost of the two users it touches.
    let mut costs: Vec<f64> = (0..problem.users())
        .map(|k| user_minimum_power(problem, k, owned_by(assignment, k)))
        .collect();
    let total_with = |costs: &[f64], a: usize, ca: f64, b: usize, cb: f64| -> f64 {
        costs
            .iter()
            .enumerate()
            .map(|(j, &c)| if j == a { ca } else if j == b { cb } else { c })
            .sum()
    };
    let mut cost: f64 = costs.iter().sum();
    let max_moves = problem.subcarriers() * problem.users();
    for _ in 0..max_moves {
        if cost <= limit {
            return true;
        }
        let mut best: Option<(f64, Move, f64, f64)> = None;
        for n in 0..assignment.len() {
            let owner = assignment[n];
            for k in (0..problem.users()).filter(|&k| k != owner) {
                assignment[n] = k;
                let ca = user_minimum_power(problem, owner, owned_by(assignment, owner));
                let cb = user_minimum_power(problem, k, owned_by(assignment, k));
                let c = total_with(&costs, owner, ca, k, cb);
                if c < best.map_or(cost, |b| b.0) {
                    best = Some((c, Move::Reassign(n, k), ca, cb));
                }
            }
            assignment[n] = owner;
            for m in n + 1..assignment.len() {
                let other = assignment[m];
                if other == owner {
                    continue;
                }
                assignment.swap(n, m);
                let ca = user_minimum_power(problem, owner, owned_by(assignment, owner));
                let cb = user_minimum_power(problem, other, owned_by(assignment, other));
                let c = total_with(&costs, owner, ca, other, cb);
                if c < best.map_or(cost, |b| b.0) {
                    best = Some((c, Move::Exchange(n, m), ca, cb));
                }
                assignment.swap(n, m);
            }
        }
        let Some((c, mv, ca, cb)) = best else {
            return false;
        };
        let (a, b) = match mv {
            Move::Reassign(n, k) => {
                let owner = assignment[n];
                assignment[n] = k;
                (owner, k)
            }
            Move::Exchange(n, m) => {
                let pair = (assignment[n], assignment[m]);
                assignment.swap(n, m);
                pair
            }
        };
        costs[a] = ca;
        costs[b] = cb;
        cost = c;
    }
    cost <= limit
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TrialSeed;
    use crate::solver::test_support::random_problem;
    use crate::solver::{solve_exact, ExactLimits};
    use rand::Rng;
    use std::time::Instant;

    #[test]
    fn single_user_matches_exact() {
        let mut rng = TrialSeed::new(10, 0).rng();
        for _ in 0..30 {
            let nc = rng.random_range(1..8);
            let r0 = rng.random_range(0.0..3.0);
            let p = random_problem(&mut rng, nc, 1, 3.0, r0);
            let exact = solve_exact(&p, ExactLimits::default()).unwrap();
            let heur = solve_heuristic(&p, HeuristicOptions::default());
            assert_eq!(exact.status.is_feasible(), heur.status.is_feasible());
            assert_eq!(exact.sum_rate, heur.sum_rate);
        }
    }

    #[test]
    fn close_to_exact_on_small_instances() {
        let mut rng = TrialSeed::new(11, 0).rng();
        let mut good = 0;
        let mut total = 0;
        for _ in 0..200 {
            let nc = rng.random_range(2..7);
            let ks = rng.random_range(1..=nc.min(3));
            let r0 = rng.random_range(0.0..2.0);
            let p = random_problem(&mut rng, nc, ks, 3.0, r0);
            let exact = solve_exact(&p, ExactLimits::default()).unwrap();
            let heur = solve_heuristic(&p, HeuristicOptions::default());
            assert!(heur.audit(&p).is_empty(), "{:?}", heur.audit(&p));
            if heur.status.is_feasible() {
                assert_eq!(exact.status, SolveStatus::Optimal);
                assert!(heur.sum_rate <= exact.sum_rate * (1.0 + 1e-9));
            }
            if exact.status == SolveStatus::Optimal {
                total += 1;
                if heur.status.is_feasible() && heur.sum_rate >= 0.95 * exact.sum_rate {
                    good += 1;
                }
            }
        }
        eprintln!("heuristic within 5%: {good}/{total}");
        assert!(good as f64 >= 0.95 * total as f64, "{good}/{total}");
    }

    #[test]
    fn full_sector_is_fast() {
        let mut rng = TrialSeed::new(12, 0).rng();
        let p = random_problem(&mut rng, 30, 8, 3.0, 5.0);
        let start = Instant::now();
        let sol = solve_heuristic(&p, HeuristicOptions::default());
        let elapsed = start.elapsed();
        assert!(sol.audit(&p).is_empty());
        assert!(elapsed.as_millis() < 50, "{elapsed:?}");
    }
}
