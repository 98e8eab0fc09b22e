//! User drops over the cell disk and their partition into angular sectors.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Disk of radius `radius_m` served by a UAV hovering at `uav_height_m` above its center.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellGeometry {
    pub radius_m: f64,
    pub uav_height_m: f64,
}

impl CellGeometry {
    pub fn new(radius_m: f64, uav_height_m: f64) -> Result<Self> {
        let cell = CellGeometry {
            radius_m,
            uav_height_m,
        };
        cell.validate()?;
        Ok(cell)
    }

    pub fn validate(&self) -> Result<()> {
        positive("geometry.radius_m", self.radius_m)?;
        positive("geometry.uav_height_m", self.uav_height_m)
    }
}

/// Sector beamwidth in whole degrees. Always divides 360.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct Beamwidth(u32);

impl Beamwidth {
    pub fn from_degrees(degrees: u32) -> Result<Self> {
        if degrees == 0 || 360 % degrees != 0 {
            return Err(Error::invalid(
                "theta",
                format!("{degrees} degrees does not divide 360"),
            ));
        }
        Ok(Beamwidth(degrees))
    }

    pub fn degrees(self) -> u32 {
        self.0
    }

    pub fn radians(self) -> f64 {
        f64::from(self.0).to_radians()
    }

    /// Number of sectors `S = 360 / θ`.
    pub fn sectors(self) -> usize {
        (360 / self.0) as usize
    }

    /// Every divisor of 360 in `[min, max]`, ascending.
    pub fn divisors_between(min: u32, max: u32) -> Vec<Beamwidth> {
        (min.max(1)..=max.min(360))
            .filter(|d| 360 % d == 0)
            .map(Beamwidth)
            .collect()
    }
}

impl TryFrom<u32> for Beamwidth {
    type Error = Error;

    fn try_from(degrees: u32) -> Result<Self> {
        Beamwidth::from_degrees(degrees)
    }
}

impl From<Beamwidth> for u32 {
    fn from(b: Beamwidth) -> u32 {
        b.0
    }
}

impl std::fmt::Display for Beamwidth {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}°", self.0)
    }
}

/// Position of one ground user relative to the UAV foot point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserPosition {
    /// Horizontal distance, in `(0, R]`.
    pub d: f64,
    /// Azimuth measured counterclockwise, in `[0, 2π)`.
    pub phi: f64,
    /// Slant distance `sqrt(h² + d²)`.
    pub l: f64,
    /// Elevation angle `asin(h / l)`, in `(0, π/2]`.
    pub psi: f64,
}

impl UserPosition {
    pub fn new(d: f64, phi: f64, uav_height_m: f64) -> Self {
        let l = uav_height_m.hypot(d);
        let psi = (uav_height_m / l).min(1.0).asin();
        UserPosition { d, phi, l, psi }
    }
}

/// Identifies the random stream of one Monte Carlo trial.
///
/// ChaCha supports 2^64 independent streams per key; the stream id keeps
/// trials disjoint under a single master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrialSeed {
    pub master: u64,
    pub stream: u64,
}

impl TrialSeed {
    pub fn new(master: u64, stream: u64) -> Self {
        TrialSeed { master, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

/// One realization of the user point process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserDrop {
    pub users: Vec<UserPosition>,
    pub trial_seed: TrialSeed,
}

impl UserDrop {
    /// Draws the count and then the positions from `rng`, leaving it positioned
    /// after the last position draw.
    pub fn sample<R: Rng + ?Sized>(
        cell: &CellGeometry,
        density: f64,
        trial_seed: TrialSeed,
        rng: &mut R,
    ) -> Result<Self> {
        cell.validate()?;
        let count = sample_user_count(density, cell.radius_m, rng)?;
        let users = (0..count)
            .map(|_| sample_user_position(cell, rng))
            .collect();
        Ok(UserDrop { users, trial_seed })
    }

    /// Rebuilds the drop of `trial_seed` from scratch.
    pub fn from_seed(cell: &CellGeometry, density: f64, trial_seed: TrialSeed) -> Result<Self> {
        let mut rng = trial_seed.rng();
        UserDrop::sample(cell, density, trial_seed, &mut rng)
    }

    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }
}

/// Mean user count `π R² λ`.
pub fn expected_users(density: f64, radius_m: f64) -> Result<f64> {
    if !(density >= 0.0 && density.is_finite()) {
        return Err(Error::invalid("lambda", "must be a finite value >= 0"));
    }
    positive("radius_m", radius_m)?;
    Ok(PI * radius_m * radius_m * density)
}

/// Poisson-distributed user count with mean `π R² λ`.
pub fn sample_user_count<R: Rng + ?Sized>(density: f64, radius_m: f64, rng: &mut R) -> Result<usize> {
    positive("lambda", density)?;
    positive("radius_m", radius_m)?;
    let mean = PI * radius_m * radius_m * density;
    let poisson = Poisson::new(mean)
        .map_err(|e| Error::invalid("lambda", format!("poisson mean {mean}: {e}")))?;
    Ok(poisson.sample(rng) as usize)
}

/// Inverse CDF of the radial law `f(d) = 2d/R²` on `(0, R]`.
pub fn radial_inverse_cdf(radius_m: f64, u: f64) -> f64 {
    radius_m * u.sqrt()
}

/// Uniform position over the disk: `φ ~ U[0, 2π)`, `d = R·sqrt(u)` with `u ~ U(0, 1]`.
pub fn sample_user_position<R: Rng + ?Sized>(cell: &CellGeometry, rng: &mut R) -> UserPosition {
    let mut phi = rng.random::<f64>() * TAU;
    if phi >= TAU {
        phi = 0.0;
    }
    // 1 - [0, 1) keeps d away from zero.
    let u = 1.0 - rng.random::<f64>();
    let d = radial_inverse_cdf(cell.radius_m, u);
    UserPosition::new(d, phi, cell.uav_height_m)
}

/// Index of the half-open sector `[s·θ, (s+1)·θ)` containing azimuth `phi`.
pub fn sector_of(phi: f64, theta: Beamwidth) -> usize {
    let sectors = theta.sectors();
    let s = (phi.rem_euclid(TAU) * sectors as f64 / TAU).floor() as usize;
    s.min(sectors - 1)
}

/// Partitions user indices of `drop` into `360/θ` sectors, preserving drop order.
pub fn assign_sectors(drop: &UserDrop, theta: Beamwidth) -> Vec<Vec<usize>> {
    let mut sectors = vec![Vec::new(); theta.sectors()];
    for (k, user) in drop.users.iter().enumerate() {
        sectors[sector_of(user.phi, theta)].push(k);
    }
    sectors
}

pub(crate) fn positive(field: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(field, format!("must be finite and > 0, got {value}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rural() -> CellGeometry {
        CellGeometry::new(100.0, 100.0).unwrap()
    }

    #[test]
    fn beamwidth_must_divide_360() {
        assert!(Beamwidth::from_degrees(7).is_err());
        assert!(Beamwidth::from_degrees(0).is_err());
        assert_eq!(Beamwidth::from_degrees(45).unwrap().sectors(), 8);
        let grid: Vec<u32> = Beamwidth::divisors_between(2, 120)
            .into_iter()
            .map(u32::from)
            .collect();
        assert_eq!(
            grid,
            vec![2, 3, 4, 5, 6, 8, 9, 10, 12, 15, 18, 20, 24, 30, 36, 40, 45, 60, 72, 90, 120]
        );
    }

    #[test]
    fn expected_users_values() {
        assert!((expected_users(0.0005, 100.0).unwrap() - 15.707_963_267_948_966).abs() < 1e-12);
        assert_eq!(expected_users(0.0, 100.0).unwrap(), 0.0);
        assert!((expected_users(0.002, 100.0).unwrap() - 62.83).abs() < 5e-3);
        assert!(expected_users(-1.0, 100.0).is_err());
    }

    #[test]
    fn count_rejects_bad_inputs() {
        let mut rng = TrialSeed::new(1, 0).rng();
        assert!(sample_user_count(0.0, 100.0, &mut rng).is_err());
        assert!(sample_user_count(0.001, -5.0, &mut rng).is_err());
    }

    #[test]
    fn vanishing_density_gives_no_users() {
        let mut rng = TrialSeed::new(3, 0).rng();
        let n: usize = (0..1000)
            .map(|_| sample_user_count(1e-15, 100.0, &mut rng).unwrap())
            .sum();
        assert_eq!(n, 0);
    }

    #[test]
    fn count_sample_mean() {
        // λ=0.05, R=10: mean 15.708, standard error sqrt(15.708/1e4).
        let mut rng = TrialSeed::new(11, 0).rng();
        let n = 10_000;
        let mean = (0..n)
            .map(|_| sample_user_count(0.05, 10.0, &mut rng).unwrap() as f64)
            .sum::<f64>()
            / n as f64;
        let se = (15.707_963 / n as f64).sqrt();
        assert!((mean - 15.707_963).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn radial_inverse_cdf_points() {
        assert_eq!(radial_inverse_cdf(100.0, 1.0), 100.0);
        assert_eq!(radial_inverse_cdf(100.0, 0.25), 50.0);
    }

    #[test]
    fn boundary_sector_convention() {
        let theta = Beamwidth::from_degrees(90).unwrap();
        let drop = UserDrop {
            users: vec![UserPosition::new(10.0, 0.0, 100.0)],
            trial_seed: TrialSeed::new(0, 0),
        };
        assert_eq!(assign_sectors(&drop, theta), vec![vec![0], vec![], vec![], vec![]]);
        // Exactly on a boundary belongs to the upper sector.
        assert_eq!(sector_of(std::f64::consts::FRAC_PI_2, theta), 1);
        assert_eq!(sector_of(TAU - 1e-12, theta), 3);
    }

    #[test]
    fn empty_drop_gives_empty_sectors() {
        let drop = UserDrop {
            users: vec![],
            trial_seed: TrialSeed::new(0, 0),
        };
        let sectors = assign_sectors(&drop, Beamwidth::from_degrees(45).unwrap());
        assert_eq!(sectors.len(), 8);
        assert!(sectors.iter().all(Vec::is_empty));
    }

    #[test]
    fn fifty_users_thirty_degrees_partition() {
        let cell = rural();
        let mut rng = TrialSeed::new(5, 9).rng();
        let drop = UserDrop {
            users: (0..50).map(|_| sample_user_position(&cell, &mut rng)).collect(),
            trial_seed: TrialSeed::new(5, 9),
        };
        let sectors = assign_sectors(&drop, Beamwidth::from_degrees(30).unwrap());
        assert_eq!(sectors.len(), 12);
        let mut all: Vec<usize> = sectors.concat();
        all.sort_unstable();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
    }

    #[test]
    fn position_invariants_hold_near_foot_point() {
        let p = UserPosition::new(1e-9, 1.0, 100.0);
        assert!((p.psi - std::f64::consts::FRAC_PI_2).abs() < 1e-10);
        let q = UserPosition::new(100.0, 1.0, 100.0);
        assert!((q.psi - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn drop_reconstructs_from_seed() {
        let cell = rural();
        let seed = TrialSeed::new(42, 17);
        let a = UserDrop::from_seed(&cell, 0.002, seed).unwrap();
        let b = UserDrop::from_seed(&cell, 0.002, seed).unwrap();
        assert_eq!(a, b);
        let c = UserDrop::from_seed(&cell, 0.002, TrialSeed::new(42, 18)).unwrap();
        assert_ne!(a, c);
    }

    proptest! {
        #[test]
        fn sectors_partition_every_drop(
            master in any::<u64>(),
            stream in any::<u64>(),
            theta_idx in 0usize..24,
        ) {
            let divisors = Beamwidth::divisors_between(1, 360);
            let theta = divisors[theta_idx % divisors.len()];
            let drop = UserDrop::from_seed(&rural(), 0.002, TrialSeed::new(master, stream)).unwrap();
            let sectors = assign_sectors(&drop, theta);
            prop_assert_eq!(sectors.len(), theta.sectors());
            let mut seen = vec![0u32; drop.len()];
            for (s, list) in sectors.iter().enumerate() {
                for &k in list {
                    seen[k] += 1;
                    let lo = s as f64 * theta.radians();
                    prop_assert!(drop.users[k].phi >= lo - 1e-12);
                    prop_assert!(drop.users[k].phi < lo + theta.radians() + 1e-12);
                }
            }
            prop_assert!(seen.iter().all(|&c| c == 1));
        }

        #[test]
        fn positions_satisfy_link_geometry(master in any::<u64>(), h in 1.0f64..500.0, r in 1.0f64..500.0) {
            let cell = CellGeometry::new(r, h).unwrap();
            let mut rng = TrialSeed::new(master, 0).rng();
            for _ in 0..32 {
                let p = sample_user_position(&cell, &mut rng);
                prop_assert!(p.d > 0.0 && p.d <= r);
                prop_assert!(p.phi >= 0.0 && p.phi < TAU);
                prop_assert!((p.l - (h * h + p.d * p.d).sqrt()).abs() <= 1e-12 * p.l);
                prop_assert!((p.psi - (h / p.l).asin()).abs() <= 1e-12);
                prop_assert!(p.psi > 0.0 && p.psi <= std::f64::consts::FRAC_PI_2);
            }
        }
    }
}
