//! Monte-Carlo over Pauli error patterns on pure states.
//!
//! Each trajectory draws the resource errors (ten physical letters, then the
//! logical letter) and one input error per input. Pure-state results depend on
//! the drawn letters only, so they are memoized by pattern; the cache lives on
//! the engine and is shared by every noise point it runs.

use std::collections::hash_map::Entry;
use std::collections::HashMap;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::estimate::{Estimate, Estimates, Layout, Problem};
use crate::metrics::{ResourceTerms, TeleportTerms};
use crate::noise::{ResourceErrors, TrajectoryBatch};
use crate::protocol::{
    bsm_branches, prepare_resource_circuit, resource_code, BellState, InputState, ResourceState, TeleportMode, INPUT_QUBIT,
    PHYSICAL_QUBIT,
};
use crate::shor::standard;
use crate::sim::{Pauli, PauliString, StateVector};

/// Letters drawn in one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryErrors {
    pub resource: ResourceErrors,
    /// One letter per input.
    pub inputs: Vec<Pauli>,
    /// Sampled BSM outcome per input (feedforward only).
    pub outcomes: Vec<Option<BellState>>,
}

#[derive(Debug, Clone)]
struct CachedResource {
    terms: ResourceTerms,
    active_terms: ResourceTerms,
    state: ResourceState,
    active_state: ResourceState,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct BranchKey {
    resource: u32,
    theta: u64,
    phi: u64,
    error: usize,
    active: bool,
}

#[derive(Debug, Clone, Copy)]
struct Branch {
    prob: f64,
    bloch: [f64; 4],
    corrected: [f64; 4],
}

/// Memoizing trajectory sampler.
#[derive(Debug, Default)]
pub struct TrajectoryEngine {
    resources: HashMap<u32, CachedResource>,
    branches: HashMap<BranchKey, [Branch; 4]>,
}

impl TrajectoryEngine {
    pub fn new() -> Self {
        Self::default()
    }

    /// Cached resource patterns and teleport branch sets.
    pub fn cache_sizes(&self) -> (usize, usize) {
        (self.resources.len(), self.branches.len())
    }

    fn resource(&mut self, errors: &ResourceErrors) -> Result<&CachedResource> {
        let key = errors.key();
        if let Entry::Vacant(e) = self.resources.entry(key) {
            let mut r = prepare_resource_circuit();
            errors.apply(&mut r)?;
            let active_state = correct_actively(&r)?;
            let entry = CachedResource {
                terms: ResourceTerms::from_state(r.state())?,
                active_terms: ResourceTerms::from_state(active_state.state())?,
                state: r,
                active_state,
            };
            e.insert(entry);
        }
        Ok(&self.resources[&key])
    }

    fn branches(&mut self, errors: &ResourceErrors, input: &InputState, error: Pauli, active: bool) -> Result<[Branch; 4]> {
        let key = BranchKey {
            resource: errors.key(),
            theta: input.theta.to_bits(),
            phi: input.phi.to_bits(),
            error: error.index(),
            active,
        };
        if let Some(b) = self.branches.get(&key) {
            return Ok(*b);
        }
        let cached = self.resource(errors)?;
        let resource = if active { &cached.active_state } else { &cached.state };
        let b = teleport_branches(resource, input, error)?;
        self.branches.insert(key, b);
        Ok(b)
    }

    /// Runs `n` trajectories seeded from `base_seed`. Values follow `problem.layout()`.
    pub fn sample(&mut self, problem: &Problem, n: usize, base_seed: u64) -> Result<TrajectoryBatch<TrajectoryErrors>> {
        problem.noise.validate()?;
        let layout = problem.layout();
        TrajectoryBatch::collect(
            |rng| {
                let resource = ResourceErrors::sample(&problem.noise, rng);
                let mut values = Vec::with_capacity(layout.len());
                let cached = self.resource(&resource)?;
                values.extend(cached.terms.flat());
                if problem.active {
                    values.extend(cached.active_terms.flat());
                }
                let mut errors = TrajectoryErrors { resource, inputs: Vec::new(), outcomes: Vec::new() };
                for input in &problem.inputs {
                    let e = problem.noise.p_input.sample(rng);
                    let u = match problem.mode {
                        TeleportMode::Feedforward => Some(rng.random::<f64>()),
                        TeleportMode::PostselectPhiPlus => None,
                    };
                    let plain = self.branches(&resource, input, e, false)?;
                    errors.outcomes.push(push_teleport(&mut values, &plain, u));
                    if problem.active {
                        let act = self.branches(&resource, input, e, true)?;
                        push_teleport(&mut values, &act, u);
                    }
                    errors.inputs.push(e);
                }
                Ok((errors, values))
            },
            n,
            base_seed,
        )
    }

    /// Headline values with delta-method standard errors.
    pub fn estimates(&mut self, problem: &Problem, n: usize, base_seed: u64) -> Result<Estimates> {
        let batch = self.sample(problem, n, base_seed)?;
        Ok(batch_estimates(&batch, &problem.layout()))
    }
}

/// Applies every headline metric of `layout` to the batch means.
pub fn batch_estimates<E>(batch: &TrajectoryBatch<E>, layout: &Layout) -> Estimates {
    Estimates {
        entries: layout
            .metrics()
            .into_iter()
            .map(|(name, f)| {
                let (value, stderr) = batch.estimate(&f);
                Estimate { name, value, stderr }
            })
            .collect(),
    }
}

/// Syndrome extraction on the code block followed by the decoder's recovery.
/// Pauli-corrupted code states are syndrome eigenstates, so the measurement
/// record does not depend on the generator seed.
fn correct_actively(resource: &ResourceState) -> Result<ResourceState> {
    let code = resource_code();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (syndrome, mut state) = code.extract_syndrome(resource.state(), &mut rng)?;
    state.apply_pauli(&code.decode_correction(&syndrome).recovery)?;
    ResourceState::from_state(state)
}

fn teleport_branches(resource: &ResourceState, input: &InputState, error: Pauli) -> Result<[Branch; 4]> {
    let mut psi = input.state();
    psi.apply_pauli(&PauliString::single(1, 0, error)?)?;
    let joint = resource.state().tensor(&psi)?;
    let mut out = [Branch { prob: 0.0, bloch: [0.0; 4], corrected: [0.0; 4] }; 4];
    for ((bell, p, amps), slot) in bsm_branches(&joint, INPUT_QUBIT, PHYSICAL_QUBIT)?.into_iter().zip(&mut out) {
        slot.prob = p;
        if p < 1e-12 {
            continue;
        }
        let mut state = StateVector::from_unnormalized(amps)?;
        slot.bloch = TeleportTerms::from_state(&state)?.bloch;
        state.apply_pauli(&bell.correction(standard()))?;
        slot.corrected = TeleportTerms::from_state(&state)?.bloch;
    }
    Ok(out)
}

/// Postselection stores the Φ⁺ weight; feedforward samples a branch with `u`.
fn push_teleport(values: &mut Vec<f64>, branches: &[Branch; 4], u: Option<f64>) -> Option<BellState> {
    let (weight, bloch, outcome) = match u {
        None => (branches[0].prob, branches[0].bloch, None),
        Some(u) => {
            let mut acc = 0.0;
            let mut k = 3;
            for (i, b) in branches.iter().enumerate() {
                acc += b.prob;
                if u < acc {
                    k = i;
                    break;
                }
            }
            (1.0, branches[k].corrected, Some(BellState::ALL[k]))
        }
    };
    values.push(weight);
    values.extend(bloch.iter().map(|b| b * weight));
    outcome
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::analytic;
    use crate::noise::NoiseSpec;

    #[test]
    fn ideal_trajectories_are_exact() {
        let problem = Problem::new(NoiseSpec::ideal()).with_active(true);
        let est = TrajectoryEngine::new().estimates(&problem, 20, 3).unwrap();
        for e in &est.entries {
            let expect = if e.name.starts_with("chsh") { 2.0 * std::f64::consts::SQRT_2 } else { 1.0 };
            assert!((e.value - expect).abs() < 1e-10, "{} = {}", e.name, e.value);
            assert!(e.stderr < 1e-9);
        }
    }

    #[test]
    fn agrees_with_closed_form() {
        let noise = NoiseSpec::depolarizing(0.05, 0.05, 0.05).unwrap();
        for mode in [TeleportMode::PostselectPhiPlus, TeleportMode::Feedforward] {
            let problem = Problem::new(noise).with_mode(mode).with_active(true);
            let est = TrajectoryEngine::new().estimates(&problem, 4000, 11).unwrap();
            let exact = Estimates::exact(&analytic::observables(&problem).unwrap(), &problem.layout());
            for (e, x) in est.entries.iter().zip(&exact.entries) {
                assert_eq!(e.name, x.name);
                assert!(
                    (e.value - x.value).abs() <= 5.0 * e.stderr + 1e-9,
                    "{}: {} vs {} ± {}",
                    e.name,
                    e.value,
                    x.value,
                    e.stderr
                );
            }
        }
    }

    #[test]
    fn seeded_runs_repeat_and_cache_is_transparent() {
        let problem = Problem::new(NoiseSpec::depolarizing(0.1, 0.0, 0.02).unwrap());
        let mut warm = TrajectoryEngine::new();
        warm.sample(&Problem::new(NoiseSpec::depolarizing(0.2, 0.1, 0.0).unwrap()), 300, 99).unwrap();
        let a = warm.sample(&problem, 200, 5).unwrap();
        let b = TrajectoryEngine::new().sample(&problem, 200, 5).unwrap();
        assert_eq!(a, b);
        assert!(warm.cache_sizes().0 > 1);
    }
}
