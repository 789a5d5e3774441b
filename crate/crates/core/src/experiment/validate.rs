//! Self-checks run by the `validate` verb.

use std::path::{Path, PathBuf};

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::estimate::shots::{self, ShotPlan};
use crate::estimate::trajectory::TrajectoryEngine;
use crate::estimate::{analytic, oracle, Engine, Estimates, Problem};
use crate::experiment::config::{ExperimentConfig, OutputFormat, Scenario, Shots};
use crate::experiment::record::{finish_csv, write_files};
use crate::experiment::scenario::{stream_rng, RESAMPLE_STREAM, SHOT_STREAM};
use crate::fit::TARGET_NAMES;
use crate::noise::NoiseSpec;
use crate::protocol::{teleport_branch, BellState, InputState, ResourceState, TeleportMode};
use crate::shor::{encode_logical, standard, ShorCode, CODE_QUBITS};
use crate::sim::Pauli;

/// Characterization values checked for error-bar coverage.
pub const CALIBRATED: [&str; 5] = ["f_raw", "f_cs", "p_cs", "chsh_raw", "chsh_cs"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
    /// Offending values, one line each.
    pub failures: Vec<String>,
}

impl CheckResult {
    fn new(name: &str, detail: String, failures: Vec<String>) -> Self {
        CheckResult { name: name.into(), passed: failures.is_empty(), detail, failures }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn from_checks(checks: Vec<CheckResult>) -> Self {
        ValidationReport { passed: checks.iter().all(|c| c.passed), checks }
    }

    pub fn write(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        let mut files = Vec::new();
        if format.json() {
            let mut s = serde_json::to_string_pretty(self)?;
            s.push('\n');
            files.push(("validation.json".to_string(), s));
        }
        if format.csv() {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["check", "passed", "detail", "failures"])?;
            for c in &self.checks {
                w.write_record([c.name.clone(), c.passed.to_string(), c.detail.clone(), c.failures.join("; ")])?;
            }
            files.push(("validation.csv".to_string(), finish_csv(w)?));
        }
        write_files(dir, &files)
    }
}

fn random_logical(rng: &mut ChaCha8Rng) -> Result<crate::sim::StateVector> {
    let input = InputState::custom(rng.random::<f64>() * std::f64::consts::PI, rng.random::<f64>() * std::f64::consts::TAU);
    let (a, b) = input.amplitudes();
    encode_logical(a, b)
}

/// Detection and correction of every weight-1 error, detection of every
/// nontrivial weight-2 error, and projection rejecting weight-1 errors.
pub fn check_distance(code: &ShorCode, seed: u64) -> Result<CheckResult> {
    let mut failures: Vec<String> = code.structural_problems();
    let n = code.num_qubits();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut single = 0;
    for q in 0..CODE_QUBITS {
        for l in Pauli::ERRORS {
            single += 1;
            let e = code.code_qubit_pauli(q, l)?;
            let syn = code.syndrome_of(&e);
            if syn.is_trivial() {
                failures.push(format!("{e} is undetected"));
                continue;
            }
            let rec = code.decode_correction(&syn).recovery;
            if code.logical_class(&rec.mul(&e)?) != Pauli::I {
                failures.push(format!("{e} is miscorrected by {rec}"));
            }
            if n == CODE_QUBITS {
                let psi = random_logical(&mut rng)?;
                let mut bad = psi.clone();
                bad.apply_pauli(&e)?;
                let p = code.code_space_probability(&bad)?;
                if p > 1e-10 {
                    failures.push(format!("{e} leaves code-space weight {p:.3e}"));
                }
                bad.apply_pauli(&rec)?;
                let f = bad.fidelity(&psi)?;
                if (f - 1.0).abs() > 1e-10 {
                    failures.push(format!("{e} corrected to fidelity {f}"));
                }
            }
        }
    }
    let mut pairs = 0;
    for q1 in 0..CODE_QUBITS {
        for q2 in q1 + 1..CODE_QUBITS {
            for l1 in Pauli::ERRORS {
                for l2 in Pauli::ERRORS {
                    pairs += 1;
                    let e = code.code_qubit_pauli(q1, l1)?.mul(&code.code_qubit_pauli(q2, l2)?)?;
                    if code.syndrome_of(&e).is_trivial() && code.logical_class(&e) != Pauli::I {
                        failures.push(format!("{e} is an undetected logical error"));
                    }
                }
            }
        }
    }
    Ok(CheckResult::new("distance", format!("{single} weight-1 and {pairs} weight-2 errors"), failures))
}

/// Zero noise gives perfect values on every route and perfect teleportation in
/// every Bell branch.
pub fn check_ideal(seed: u64) -> Result<CheckResult> {
    let mut failures = Vec::new();
    let problem = Problem::new(NoiseSpec::ideal()).with_active(true);
    for engine in [Engine::Analytic, Engine::Density] {
        let est = Estimates::exact(&crate::estimate::exact_observables(engine, &problem)?, &problem.layout());
        for e in &est.entries {
            let want = if e.name.starts_with("chsh") { 2.0 * std::f64::consts::SQRT_2 } else { 1.0 };
            if (e.value - want).abs() > 1e-9 {
                failures.push(format!("{engine:?} {} = {}", e.name, e.value));
            }
        }
    }
    let resource = ResourceState::from_state(crate::protocol::target_resource())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..10 {
        let input = InputState::custom(rng.random::<f64>() * std::f64::consts::PI, rng.random::<f64>() * std::f64::consts::TAU);
        for bell in BellState::ALL {
            let out = teleport_branch(&input.state(), &resource, bell, true)?;
            let f = out.state.fidelity(&input.logical_target())?;
            if (f - 1.0).abs() > 1e-9 {
                failures.push(format!("{} via {}: fidelity {f}", input.name, bell.label()));
            }
        }
    }
    Ok(CheckResult::new("ideal", "analytic, density and 10 random inputs × 4 branches".into(), failures))
}

fn grid_points(values: &[f64]) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    for &p in values {
        for &pi in values {
            for &q in values {
                out.push([p, pi, q]);
            }
        }
    }
    out
}

/// Closed form against the density oracle, every reported value, both modes.
pub fn check_exact_routes(grid: &[f64]) -> Result<CheckResult> {
    let mut failures = Vec::new();
    let points = grid_points(grid);
    for p in &points {
        let noise = NoiseSpec::depolarizing(p[0], p[1], p[2])?;
        for mode in [TeleportMode::PostselectPhiPlus, TeleportMode::Feedforward] {
            let problem = Problem::new(noise).with_mode(mode).with_active(true).with_inputs(vec![
                InputState::zero(),
                InputState::plus(),
                InputState::right(),
                InputState::magic(),
            ]);
            let layout = problem.layout();
            let a = Estimates::exact(&analytic::observables(&problem)?, &layout);
            let d = Estimates::exact(&oracle::observables(&problem)?, &layout);
            for (x, y) in a.entries.iter().zip(&d.entries) {
                if (x.value - y.value).abs() > 1e-9 {
                    failures.push(format!("{p:?} {mode:?} {}: {} vs {}", x.name, x.value, y.value));
                }
            }
        }
    }
    Ok(CheckResult::new("exact_routes", format!("{} noise points, tolerance 1e-9", points.len()), failures))
}

/// Trajectory estimates against the density oracle. The tolerance is four
/// standard errors, floored at `1/n` so an all-identical sample is not
/// held to zero width.
pub fn check_trajectories(grid: &[f64], n: usize, seed: u64) -> Result<CheckResult> {
    let mut failures = Vec::new();
    let mut engine = TrajectoryEngine::new();
    let points = grid_points(grid);
    for (i, p) in points.iter().enumerate() {
        let noise = NoiseSpec::depolarizing(p[0], p[1], p[2])?;
        let problem = Problem::new(noise);
        let exact = Estimates::exact(&oracle::observables(&problem)?, &problem.layout());
        let est = engine.estimates(&problem, n, seed.wrapping_add(i as u64 * n as u64))?;
        for name in TARGET_NAMES {
            let (e, x) = (est.get(name).expect("listed"), exact.get(name).expect("listed"));
            let tol = 4.0 * e.stderr.max(1.0 / n as f64);
            if (e.value - x.value).abs() > tol {
                failures.push(format!("{p:?} {name}: {} ± {} vs {}", e.value, e.stderr, x.value));
            }
        }
    }
    Ok(CheckResult::new("trajectories", format!("{} noise points, n = {n}", points.len()), failures))
}

/// Fraction of (run, value) pairs whose ±1σ Poisson error bar covers the exact value.
pub fn calibration_coverage(noise: &NoiseSpec, plan: &ShotPlan, runs: usize, seed: u64) -> Result<(f64, Vec<(String, f64)>)> {
    let problem = Problem::new(*noise).with_inputs(vec![]);
    let layout = problem.layout();
    let obs = analytic::observables(&problem)?;
    let exact = Estimates::exact(&obs, &layout);
    let mut hits = vec![0usize; CALIBRATED.len()];
    for r in 0..runs {
        let s = seed.wrapping_add(r as u64);
        let data = shots::simulate(&obs, &layout, plan, &mut stream_rng(s, SHOT_STREAM))?;
        let est = shots::estimate(&data, &layout, plan.resamples, &mut stream_rng(s, RESAMPLE_STREAM))?;
        for (h, name) in hits.iter_mut().zip(CALIBRATED) {
            let e = est.get(name).expect("listed");
            if (e.value - exact.value(name)?).abs() <= e.stderr {
                *h += 1;
            }
        }
    }
    let per: Vec<(String, f64)> = CALIBRATED.iter().zip(&hits).map(|(n, h)| (n.to_string(), *h as f64 / runs as f64)).collect();
    let pooled = hits.iter().sum::<usize>() as f64 / (runs * CALIBRATED.len()) as f64;
    Ok((pooled, per))
}

pub fn check_calibration(noise: &NoiseSpec, plan: &ShotPlan, runs: usize, seed: u64) -> Result<CheckResult> {
    let (pooled, per) = calibration_coverage(noise, plan, runs, seed)?;
    let mut failures = Vec::new();
    if (pooled - 0.68).abs() > 0.07 {
        failures.push(format!("pooled coverage {pooled:.3} outside 0.68 ± 0.07"));
    }
    let per_text: Vec<String> = per.iter().map(|(n, c)| format!("{n} {c:.3}")).collect();
    Ok(CheckResult::new("calibration", format!("{runs} runs, pooled coverage {pooled:.3} ({})", per_text.join(", ")), failures))
}

/// Noise point used by the calibration check when the config is noiseless.
pub fn calibration_noise(config: &ExperimentConfig) -> Result<NoiseSpec> {
    let n = config.noise;
    if n.p_phys.is_zero() && n.q_logical == 0.0 {
        Ok(NoiseSpec::depolarizing(0.03, 0.02, 0.05)?.with_seed(n.seed))
    } else {
        Ok(n)
    }
}

pub fn run_validate(config: &ExperimentConfig) -> Result<ValidationReport> {
    config.validate()?;
    if config.scenario != Scenario::Validate {
        return Err(crate::Error::Config(format!("configuration is for scenario {}, not validate", config.scenario.as_str())));
    }
    let seed = config.noise.seed;
    let v = &config.validate;
    let plan = match config.shots {
        Shots::Sampled { resource, teleport } => {
            ShotPlan { resource_shots: resource, teleport_shots: teleport, resamples: config.resamples }
        }
        Shots::Exact => ShotPlan { resamples: config.resamples.max(100), ..ShotPlan::default() },
    };
    let checks = vec![
        check_ideal(seed)?,
        check_distance(standard(), seed)?,
        check_exact_routes(&v.grid)?,
        check_trajectories(&v.grid, v.trajectories, seed)?,
        check_calibration(&calibration_noise(config)?, &plan, v.calibration_runs, seed)?,
    ];
    Ok(ValidationReport::from_checks(checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pristine_code_passes_distance() {
        let c = check_distance(standard(), 1).unwrap();
        assert!(c.passed, "{:?}", c.failures);
    }

    #[test]
    fn corrupted_generators_fail_distance() {
        let code = standard();
        let mut gens = code.generators().to_vec();
        gens[0] = "ZIIIIIIII".parse().unwrap();
        let broken = code.with_generators(gens).unwrap();
        let c = check_distance(&broken, 1).unwrap();
        assert!(!c.passed);
    }

    #[test]
    fn ideal_and_exact_routes() {
        assert!(check_ideal(2).unwrap().passed);
        let c = check_exact_routes(&[0.0, 0.07]).unwrap();
        assert!(c.passed, "{:?}", c.failures);
    }

    #[test]
    fn small_trajectory_counts_still_pass() {
        let c = check_trajectories(&[0.0, 0.1], 100, 5).unwrap();
        assert!(c.passed, "{:?}", c.failures);
    }
}
