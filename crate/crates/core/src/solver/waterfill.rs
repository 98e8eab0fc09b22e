//! Power allocation for a fixed subcarrier assignment.
//!
//! Stationarity of the Lagrangian with a budget multiplier `ν` and per-user
//! rate multipliers `μ_k ≥ 0` gives
//!
//! ```text
//! P_n = clamp( (1 + μ_k) · bw / (ν ln 2) − 1/γ_n , 0, cap_n )
//! ```
//!
//! Writing `w = bw / (ν ln 2)` for the common water level, user `k` fills to
//! `w_k = (1 + μ_k) w`. Complementary slackness makes `w_k = max(w, L_k)`
//! where `L_k` is the lowest level at which user `k` reaches `R0` on its own
//! subcarriers. Total power is then nondecreasing in `w`, so a single
//! bisection on `w` matches the budget.

use super::{subcarrier_rate, SectorProblem, BUDGET_TOLERANCE};

const MAX_BISECTIONS: usize = 200;

/// Why an assignment cannot meet the minimum rate.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Infeasible {
    #[error("user {user} owns no subcarrier")]
    UncoveredUser { user: usize },
    #[error("user {user} cannot reach the minimum rate below the per-subcarrier rate cap")]
    RateCapped { user: usize },
    #[error("minimum rates need {required} W but the budget is {budget} W")]
    Budget { required: f64, budget: f64 },
}

#[derive(Clone, Copy)]
struct Channel {
    index: usize,
    inv_gain: f64,
    gain: f64,
    cap: f64,
}

impl Channel {
    #[inline]
    fn power_at(&self, level: f64) -> f64 {
        (level - self.inv_gain).clamp(0.0, self.cap)
    }
}

fn rate_at(channels: &[Channel], level: f64, bw: f64) -> f64 {
    channels
        .iter()
        .map(|c| subcarrier_rate(c.power_at(level), c.gain, bw))
        .sum()
}

fn power_at(channels: &[Channel], level: f64) -> f64 {
    channels.iter().map(|c| c.power_at(level)).sum()
}

/// Level at which every channel of the group sits at its cap.
fn saturation_level(channels: &[Channel]) -> f64 {
    channels
        .iter()
        .map(|c| c.inv_gain + c.cap)
        .fold(0.0, f64::max)
}

/// Bisects a nondecreasing `f` for the smallest `x` with `f(x) >= target`,
/// starting from `lo` (where `f < target`). Returns `None` if `f` never gets
/// there before `limit`.
fn lowest_level_reaching(
    f: impl Fn(f64) -> f64,
    target: f64,
    mut lo: f64,
    limit: f64,
) -> Option<f64> {
    let mut hi = (lo * 2.0).max(lo + 1e-300).max(f64::MIN_POSITIVE);
    while f(hi) < target {
        if hi >= limit {
            return None;
        }
        lo = hi;
        hi = (hi * 2.0).min(limit);
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Optimal powers for `assignment` (subcarrier -> user), or why none meet the constraints.
///
/// The result maximizes the sector sum rate subject to the budget, the
/// per-user minimum rate and the per-subcarrier rate cap.
pub fn waterfill_fixed_assignment(
    assignment: &[usize],
    problem: &SectorProblem,
) -> Result<Vec<f64>, Infeasible> {
    assert_eq!(assignment.len(), problem.subcarriers(), "one owner per subcarrier");
    let users = problem.users();
    let bw = problem.subcarrier_bw;
    let budget = problem.power_budget;

    let mut groups: Vec<Vec<Channel>> = vec![Vec::new(); users];
    for (n, &k) in assignment.iter().enumerate() {
        groups[k].push(channel(problem, n, k));
    }

    // Per-user floor level L_k.
    let mut floors = vec![0.0; users];
    if problem.min_rate > 0.0 {
        for (k, channels) in groups.iter().enumerate() {
            if channels.is_empty() {
                return Err(Infeasible::UncoveredUser { user: k });
            }
            let start = channels.iter().map(|c| c.inv_gain).fold(f64::INFINITY, f64::min);
            let limit = saturation_level(channels);
            floors[k] = lowest_level_reaching(
                |level| rate_at(channels, level, bw),
                problem.min_rate,
                start,
                limit,
            )
            .ok_or(Infeasible::RateCapped { user: k })?;
        }
    }

    let total_at = |w: f64| -> f64 {
        groups
            .iter()
            .zip(&floors)
            .map(|(channels, &floor)| power_at(channels, w.max(floor)))
            .sum()
    };

    let required = total_at(0.0);
    if required > budget * (1.0 + BUDGET_TOLERANCE) {
        return Err(Infeasible::Budget { required, budget });
    }

    let saturation = groups
        .iter()
        .map(|g| saturation_level(g))
        .fold(0.0, f64::max);
    let level = if required >= budget {
        0.0
    } else if total_at(saturation) <= budget {
        saturation
    } else {
        // Largest level whose total power stays within the budget.
        let mut lo = 0.0;
        let mut hi = 1.0;
        while total_at(hi) <= budget {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..MAX_BISECTIONS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if total_at(mid) <= budget {
                lo = mid;
            } else {
                hi = mid;
            }
            if budget - total_at(lo) <= BUDGET_TOLERANCE * 0.1 * budget {
                break;
            }
        }
        lo
    };

    let mut powers = vec![0.0; assignment.len()];
    for (channels, &floor) in groups.iter().zip(&floors) {
        let user_level = level.max(floor);
        for c in channels {
            powers[c.index] = c.power_at(user_level);
        }
    }
    Ok(powers)
}

fn channel(problem: &SectorProblem, n: usize, k: usize) -> Channel {
    let gain = problem.gains.get(n, k);
    Channel {
        index: n,
        inv_gain: 1.0 / gain,
        gain,
        cap: problem.power_cap(n, k),
    }
}

/// Smallest power with which user `k` reaches `R0` alone on `subcarriers`;
/// infinite if it cannot.
pub(crate) fn user_minimum_power(
    problem: &SectorProblem,
    k: usize,
    subcarriers: impl IntoIterator<Item = usize>,
) -> f64 {
    if problem.min_rate <= 0.0 {
        return 0.0;
    }
    let channels: Vec<Channel> = subcarriers.into_iter().map(|n| channel(problem, n, k)).collect();
    if channels.is_empty() {
        return f64::INFINITY;
    }
    let start = channels.iter().map(|c| c.inv_gain).fold(f64::INFINITY, f64::min);
    match lowest_level_reaching(
        |level| rate_at(&channels, level, problem.subcarrier_bw),
        problem.min_rate,
        start,
        saturation_level(&channels),
    ) {
        Some(level) => power_at(&channels, level),
        None => f64::INFINITY,
    }
}

/// Smallest total power that lets every user reach `R0` on its current subcarriers.
#[cfg(test)]
pub(crate) fn minimum_power(assignment: &[usize], problem: &SectorProblem) -> f64 {
    (0..problem.users())
        .map(|k| user_minimum_power(problem, k, owned_by(assignment, k)))
        .sum()
}

pub(crate) fn owned_by(assignment: &[usize], k: usize) -> impl Iterator<Item = usize> + '_ {
    assignment
        .iter()
        .enumerate()
        .filter(move |(_, &owner)| owner == k)
        .map(|(n, _)| n)
}

/// Lower bound on the power any assignment needs: each user alone on every subcarrier.
pub(crate) fn minimum_power_bound(problem: &SectorProblem) -> f64 {
    (0..problem.users())
        .map(|k| user_minimum_power(problem, k, 0..problem.subcarriers()))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::LinkGains;
    use crate::geometry::TrialSeed;
    use crate::solver::test_support::random_problem;
    use crate::solver::{subcarrier_rate, RATE_TOLERANCE};
    use proptest::prelude::*;

    fn problem(rows: &[Vec<f64>], budget: f64, min_rate: f64) -> SectorProblem {
        SectorProblem::new(LinkGains::from_rows(rows).unwrap(), budget, min_rate, 1e12, 1.0).unwrap()
    }

    fn objective(p: &SectorProblem, assignment: &[usize], powers: &[f64]) -> f64 {
        assignment
            .iter()
            .enumerate()
            .map(|(n, &k)| subcarrier_rate(powers[n], p.gains.get(n, k), p.subcarrier_bw))
            .sum()
    }

    fn user_rates(p: &SectorProblem, assignment: &[usize], powers: &[f64]) -> Vec<f64> {
        let mut rates = vec![0.0; p.users()];
        for (n, &k) in assignment.iter().enumerate() {
            rates[k] += subcarrier_rate(powers[n], p.gains.get(n, k), p.subcarrier_bw);
        }
        rates
    }

    #[test]
    fn equal_gains_split_evenly() {
        let p = problem(&[vec![5.0], vec![5.0]], 2.0, 0.0);
        let powers = waterfill_fixed_assignment(&[0, 0], &p).unwrap();
        assert!((powers[0] - 1.0).abs() < 1e-9);
        assert!((powers[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tiny_budget_goes_to_strong_subcarrier() {
        let p = problem(&[vec![100.0], vec![1.0]], 0.01, 0.0);
        let powers = waterfill_fixed_assignment(&[0, 0], &p).unwrap();
        assert!((powers[0] - 0.01).abs() < 1e-11);
        assert_eq!(powers[1], 0.0);
    }

    #[test]
    fn classic_waterfilling_levels() {
        // Gains 1, 1/2, 1/4 with budget 2: level 2.5 leaves the weakest off.
        let p = problem(&[vec![1.0], vec![0.5], vec![0.25]], 2.0, 0.0);
        let powers = waterfill_fixed_assignment(&[0, 0, 0], &p).unwrap();
        assert!((powers[0] - 1.5).abs() < 1e-8);
        assert!((powers[1] - 0.5).abs() < 1e-8);
        assert_eq!(powers[2], 0.0);
    }

    #[test]
    fn minimum_rate_lifts_weak_user() {
        // User 1 is weak; without R0 it would get nothing.
        let p = problem(&[vec![100.0, 0.1], vec![100.0, 0.1]], 1.0, 0.0);
        let free = waterfill_fixed_assignment(&[0, 1], &p).unwrap();
        let constrained_problem = problem(&[vec![100.0, 0.1], vec![100.0, 0.1]], 1.0, 0.05);
        let constrained = waterfill_fixed_assignment(&[0, 1], &constrained_problem).unwrap();
        let rates = user_rates(&constrained_problem, &[0, 1], &constrained);
        assert!(rates[1] >= 0.05 * (1.0 - RATE_TOLERANCE));
        assert!(rates[1] <= 0.05 * (1.0 + 1e-6));
        assert!(constrained[1] > free[1]);
        assert!((constrained.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn reports_infeasibility() {
        let p = problem(&[vec![1.0, 1.0], vec![1.0, 1.0]], 1.0, 5.0);
        assert_eq!(
            waterfill_fixed_assignment(&[0, 0], &p),
            Err(Infeasible::UncoveredUser { user: 1 })
        );
        assert!(matches!(
            waterfill_fixed_assignment(&[0, 1], &p),
            Err(Infeasible::Budget { .. })
        ));
        let capped = SectorProblem::new(
            LinkGains::from_rows(&[vec![1.0]]).unwrap(),
            100.0,
            2.0,
            2.0,
            1.0,
        )
        .unwrap();
        assert!(waterfill_fixed_assignment(&[0], &capped).is_ok());
        let capped = SectorProblem { min_rate: 2.0, max_rate: 1.5, ..capped };
        assert_eq!(
            waterfill_fixed_assignment(&[0], &capped),
            Err(Infeasible::RateCapped { user: 0 })
        );
    }

    #[test]
    fn rate_cap_leaves_budget_unused() {
        let p = SectorProblem::new(LinkGains::from_rows(&[vec![1.0], vec![1.0]]).unwrap(), 100.0, 0.0, 1.0, 1.0)
            .unwrap();
        let powers = waterfill_fixed_assignment(&[0, 0], &p).unwrap();
        assert!((powers[0] - 1.0).abs() < 1e-12 && (powers[1] - 1.0).abs() < 1e-12);
    }

    /// Fine grid over the power split of a 4-subcarrier, 2-user instance.
    fn grid_oracle(p: &SectorProblem, assignment: &[usize]) -> Option<f64> {
        let steps = 60usize;
        let mut best: Option<(f64, [usize; 3])> = None;
        let eval = |q: [f64; 4]| -> Option<f64> {
            let rates = user_rates(p, assignment, &q);
            if rates.iter().all(|r| *r >= p.min_rate) {
                Some(objective(p, assignment, &q))
            } else {
                None
            }
        };
        for a in 0..=steps {
            for b in 0..=steps - a {
                for c in 0..=steps - a - b {
                    let d = steps - a - b - c;
                    let q = [a, b, c, d].map(|x| x as f64 / steps as f64 * p.power_budget);
                    if let Some(v) = eval(q) {
                        if best.is_none_or(|(bv, _)| v > bv) {
                            best = Some((v, [a, b, c]));
                        }
                    }
                }
            }
        }
        // Local refinement around the best grid point.
        let (mut value, idx) = best?;
        let mut x = idx.map(|i| i as f64 / steps as f64 * p.power_budget);
        let mut step = p.power_budget / steps as f64;
        while step > 1e-9 * p.power_budget {
            let mut improved = false;
            for da in [-1.0, 0.0, 1.0] {
                for db in [-1.0, 0.0, 1.0] {
                    for dc in [-1.0, 0.0, 1.0] {
                        let y = [x[0] + da * step, x[1] + db * step, x[2] + dc * step];
                        let rest = p.power_budget - y.iter().sum::<f64>();
                        if y.iter().any(|v| *v < 0.0) || rest < 0.0 {
                            continue;
                        }
                        if let Some(v) = eval([y[0], y[1], y[2], rest]) {
                            if v > value {
                                value = v;
                                x = y;
                                improved = true;
                            }
                        }
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        Some(value)
    }

    #[test]
    fn matches_grid_oracle_on_random_instances() {
        let mut rng = TrialSeed::new(2024, 0).rng();
        let mut compared = 0;
        for _ in 0..40 {
            let min_rate = rand::Rng::random_range(&mut rng, 0.2..2.5);
            let p = random_problem(&mut rng, 4, 2, 2.0, min_rate);
            let assignment = [0, 1, 1, 0];
            let oracle = grid_oracle(&p, &assignment);
            match waterfill_fixed_assignment(&assignment, &p) {
                Ok(powers) => {
                    let got = objective(&p, &assignment, &powers);
                    if let Some(o) = oracle {
                        assert!((got - o).abs() <= 1e-3 * o, "got {got}, oracle {o}");
                        compared += 1;
                    }
                }
                Err(e) => assert!(oracle.is_none(), "{e} but grid found {oracle:?}"),
            }
        }
        assert!(compared > 10);
    }

    proptest! {
        #[test]
        fn solutions_respect_constraints(seed in any::<u64>(), nc in 1usize..8, ks in 1usize..4) {
            let ks = ks.min(nc);
            let mut rng = TrialSeed::new(seed, 0).rng();
            let min_rate = rand::Rng::random_range(&mut rng, 0.0..2.0);
            let p = random_problem(&mut rng, nc, ks, 4.0, min_rate);
            let assignment: Vec<usize> = (0..nc).map(|n| n % ks).collect();
            if let Ok(powers) = waterfill_fixed_assignment(&assignment, &p) {
                let total: f64 = powers.iter().sum();
                prop_assert!(total <= p.power_budget * (1.0 + BUDGET_TOLERANCE));
                prop_assert!((total - p.power_budget).abs() <= 1e-9 * p.power_budget);
                for r in user_rates(&p, &assignment, &powers) {
                    prop_assert!(r >= min_rate * (1.0 - RATE_TOLERANCE));
                }
                // Doubling the budget never lowers the objective.
                let doubled = waterfill_fixed_assignment(&assignment, &p.with_budget(2.0)).unwrap();
                prop_assert!(objective(&p, &assignment, &doubled) >= objective(&p, &assignment, &powers));
                let min = minimum_power(&assignment, &p);
                prop_assert!(min <= p.power_budget * (1.0 + BUDGET_TOLERANCE));
            } else {
                prop_assert!(minimum_power(&assignment, &p) > p.power_budget * (1.0 - 1e-9));
            }
        }

        #[test]
        fn bound_never_exceeds_assignment_cost(seed in any::<u64>(), nc in 1usize..8, ks in 1usize..4) {
            let mut rng = TrialSeed::new(seed, 1).rng();
            let min_rate = rand::Rng::random_range(&mut rng, 0.0..3.0);
            let p = random_problem(&mut rng, nc, ks, 4.0, min_rate);
            let assignment: Vec<usize> =
                (0..nc).map(|_| rand::Rng::random_range(&mut rng, 0..ks)).collect();
            let bound = minimum_power_bound(&p);
            prop_assert!(bound <= minimum_power(&assignment, &p) * (1.0 + 1e-9));
        }
    }
}
