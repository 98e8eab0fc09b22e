use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use uav_beamwidth::geometry::Beamwidth;
use uav_beamwidth::presets;
use uav_beamwidth::simulation::{sweep_with, Execution, ScenarioConfig};
use uav_beamwidth::solver::{solve_heuristic, HeuristicOptions};

fn bench_config(lambda: f64) -> ScenarioConfig {
    let mut c = presets::preset("rural").unwrap();
    c.lambda = lambda;
    c.mc_trials = 16;
    c.theta_list = [5, 10, 30, 90].map(|d| Beamwidth::from_degrees(d).unwrap()).to_vec();
    c
}

fn sweep_execution(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for lambda in [0.0005, 0.002] {
        let config = bench_config(lambda);
        for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
            group.bench_with_input(BenchmarkId::new(name, lambda), &config, |b, cfg| {
                b.iter(|| sweep_with(cfg, exec).unwrap())
            });
        }
    }
    group.finish();
}

fn sector_solver(c: &mut Criterion) {
    let config = bench_config(0.002);
    let theta = Beamwidth::from_degrees(60).unwrap();
    let report = uav_beamwidth::simulation::run_trial_detailed(&config, theta, 0).unwrap();
    let problem = report
        .sectors
        .iter()
        .max_by_key(|s| s.users.len())
        .map(|s| s.problem.clone())
        .unwrap();
    c.bench_function("heuristic_sector", |b| {
        b.iter(|| solve_heuristic(&problem, HeuristicOptions::default()))
    });
}

criterion_group!(benches, sweep_execution, sector_solver);
criterion_main!(benches);
