//! Scenario runners.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::estimate::shots::{self, ShotPlan};
use crate::estimate::trajectory::TrajectoryEngine;
use crate::estimate::{exact_observables, Engine, Estimates, Problem};
use crate::experiment::config::{ExperimentConfig, OutputFormat, Scenario, Shots};
use crate::experiment::record::{finish_csv, fmt, write_files, ExperimentRecord, Metadata};
use crate::fit::{run_fit as fit_targets, FitResult};

/// Random stream used for shot sampling.
pub const SHOT_STREAM: u64 = 1;
/// Random stream used for Poisson resampling.
pub const RESAMPLE_STREAM: u64 = 2;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn problem_for(config: &ExperimentConfig, with_inputs: bool) -> Result<Problem> {
    let inputs = if with_inputs { config.resolved_inputs()? } else { Vec::new() };
    Ok(Problem::new(config.noise).with_inputs(inputs).with_mode(config.mode).with_active(config.correction.includes_active()))
}

/// Headline estimates for `problem` following the config's engine and shot settings.
pub fn measure(config: &ExperimentConfig, problem: &Problem) -> Result<Estimates> {
    let seed = config.noise.seed;
    let layout = problem.layout();
    let est = match (config.engine, config.shots) {
        (Engine::Trajectory, Shots::Exact) => TrajectoryEngine::new().estimates(problem, config.trajectories, seed)?,
        (Engine::Trajectory, _) => return Err(Error::Config("the trajectory engine needs shots = \"exact\"".into())),
        (engine, Shots::Exact) => Estimates::exact(&exact_observables(engine, problem)?, &layout),
        (engine, Shots::Sampled { resource, teleport }) => {
            let obs = exact_observables(engine, problem)?;
            let plan = ShotPlan { resource_shots: resource, teleport_shots: teleport, resamples: config.resamples };
            let data = shots::simulate(&obs, &layout, &plan, &mut stream_rng(seed, SHOT_STREAM))?;
            shots::estimate(&data, &layout, plan.resamples, &mut stream_rng(seed, RESAMPLE_STREAM))?
        }
    };
    est.check_defined()?;
    Ok(est)
}

fn metadata(config: &ExperimentConfig) -> Metadata {
    Metadata {
        noise: config.noise,
        shots: config.shots,
        engine: config.engine,
        trajectories: (config.engine == Engine::Trajectory).then_some(config.trajectories),
        mode: config.mode,
        correction: config.correction,
        seed: config.noise.seed,
    }
}

fn expect(config: &ExperimentConfig, scenario: Scenario) -> Result<()> {
    config.validate()?;
    if config.scenario != scenario {
        return Err(Error::Config(format!(
            "configuration is for scenario {}, not {}",
            config.scenario.as_str(),
            scenario.as_str()
        )));
    }
    Ok(())
}

/// Resource characterization: fidelity, projection probability and CHSH.
pub fn run_characterize(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    expect(config, Scenario::Characterize)?;
    let problem = problem_for(config, false)?;
    let est = measure(config, &problem)?;
    ExperimentRecord::from_estimates(Scenario::Characterize, &est, &[], metadata(config))
}

/// Teleportation of every configured input, plus the resource values.
pub fn run_teleport(config: &ExperimentConfig) -> Result<ExperimentRecord> {
    expect(config, Scenario::Teleport)?;
    let problem = problem_for(config, true)?;
    let est = measure(config, &problem)?;
    let names: Vec<String> = problem.inputs.iter().map(|i| i.name.clone()).collect();
    ExperimentRecord::from_estimates(Scenario::Teleport, &est, &names, metadata(config))
}

pub fn run_fit(config: &ExperimentConfig) -> Result<FitResult> {
    expect(config, Scenario::Fit)?;
    fit_targets(&config.fit.targets, &config.fit.search)
}

/// `fit.json`, `fit.csv` (one row per target) and `fit_trace.csv`.
pub fn write_fit(result: &FitResult, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    if format.json() {
        let mut s = serde_json::to_string_pretty(result)?;
        s.push('\n');
        files.push(("fit.json".to_string(), s));
    }
    if format.csv() {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "target", "model", "residual", "held_out"])?;
        for (r, held) in result.residuals.iter().map(|r| (r, false)).chain(result.held_out.iter().map(|r| (r, true))) {
            w.write_record([r.name.clone(), fmt(r.target), fmt(r.model), fmt(r.residual), held.to_string()])?;
        }
        files.push(("fit.csv".to_string(), finish_csv(w)?));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["iteration", "p_phys", "p_input", "q_logical", "objective"])?;
        for s in &result.trace {
            w.write_record([s.iteration.to_string(), fmt(s.params[0]), fmt(s.params[1]), fmt(s.params[2]), fmt(s.objective)])?;
        }
        files.push(("fit_trace.csv".to_string(), finish_csv(w)?));
    }
    write_files(dir, &files)
}
