//! Pauli-channel noise on the resource and input, a logical channel inside the
//! code space, and seeded trajectory sampling.
//!
//! Each trajectory `i` draws from its own generator seeded with `base_seed + i`,
//! so results do not depend on evaluation order.

use rand::{Rng, RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{prepare_resource_circuit, resource_code, ResourceState, RESOURCE_QUBITS};
use crate::shor::ShorCode;
use crate::sim::{Pauli, PauliString, StateVector};

const PROB_TOL: f64 = 1e-12;

/// Single-qubit Pauli channel. In config files a bare number `p` means
/// depolarizing noise with `px = py = pz = p/3`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProbsRepr")]
pub struct PauliProbs {
    pub px: f64,
    pub py: f64,
    pub pz: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplicitProbs {
    px: f64,
    py: f64,
    pz: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ProbsRepr {
    Depolarizing(f64),
    Explicit(ExplicitProbs),
}

impl TryFrom<ProbsRepr> for PauliProbs {
    type Error = Error;

    fn try_from(r: ProbsRepr) -> Result<Self> {
        match r {
            ProbsRepr::Depolarizing(p) => PauliProbs::depolarizing(p),
            ProbsRepr::Explicit(e) => PauliProbs::new(e.px, e.py, e.pz),
        }
    }
}

impl Default for PauliProbs {
    fn default() -> Self {
        Self::none()
    }
}

impl PauliProbs {
    pub fn new(px: f64, py: f64, pz: f64) -> Result<Self> {
        let p = PauliProbs { px, py, pz };
        p.validate()?;
        Ok(p)
    }

    pub fn none() -> Self {
        PauliProbs { px: 0.0, py: 0.0, pz: 0.0 }
    }

    /// Total error probability `p`, split evenly.
    pub fn depolarizing(p: f64) -> Result<Self> {
        Self::new(p / 3.0, p / 3.0, p / 3.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("px", self.px), ("py", self.py), ("pz", self.pz)] {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::InvalidProbability(format!("{name} = {v}")));
            }
        }
        if self.total() > 1.0 + PROB_TOL {
            return Err(Error::InvalidProbability(format!("px+py+pz = {} exceeds 1", self.total())));
        }
        Ok(())
    }

    pub fn total(&self) -> f64 {
        self.px + self.py + self.pz
    }

    pub fn is_zero(&self) -> bool {
        self.total() == 0.0
    }

    pub fn weight(&self, letter: Pauli) -> f64 {
        match letter {
            Pauli::I => (1.0 - self.total()).max(0.0),
            Pauli::X => self.px,
            Pauli::Y => self.py,
            Pauli::Z => self.pz,
        }
    }

    /// Factor by which the channel scales ⟨letter⟩.
    pub fn transfer(&self, letter: Pauli) -> f64 {
        match letter {
            Pauli::I => 1.0,
            Pauli::X => 1.0 - 2.0 * (self.py + self.pz),
            Pauli::Y => 1.0 - 2.0 * (self.px + self.pz),
            Pauli::Z => 1.0 - 2.0 * (self.px + self.py),
        }
    }

    /// Draws one letter; always consumes exactly one uniform variate.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Pauli {
        let u = rng.random::<f64>();
        if u < self.px {
            Pauli::X
        } else if u < self.px + self.py {
            Pauli::Y
        } else if u < self.total() {
            Pauli::Z
        } else {
            Pauli::I
        }
    }
}

/// Noise acting on the teleportation experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    /// Channel on each of the ten resource qubits after preparation.
    #[serde(default)]
    pub p_phys: PauliProbs,
    /// Channel on the input qubit.
    #[serde(default)]
    pub p_input: PauliProbs,
    /// Probability of a uniformly chosen logical X, Y or Z on the code block.
    #[serde(default)]
    pub q_logical: f64,
    #[serde(default)]
    pub seed: u64,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self::ideal()
    }
}

impl NoiseSpec {
    pub fn ideal() -> Self {
        NoiseSpec { p_phys: PauliProbs::none(), p_input: PauliProbs::none(), q_logical: 0.0, seed: 0 }
    }

    pub fn depolarizing(p_phys: f64, p_input: f64, q_logical: f64) -> Result<Self> {
        let spec = NoiseSpec {
            p_phys: PauliProbs::depolarizing(p_phys)?,
            p_input: PauliProbs::depolarizing(p_input)?,
            q_logical,
            seed: 0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.p_phys.validate()?;
        self.p_input.validate()?;
        if !(0.0..=1.0).contains(&self.q_logical) || !self.q_logical.is_finite() {
            return Err(Error::InvalidProbability(format!("q_logical = {}", self.q_logical)));
        }
        Ok(())
    }

    /// Weights of logical I, X, Y, Z.
    pub fn logical_weights(&self) -> [f64; 4] {
        let q = self.q_logical;
        [1.0 - q, q / 3.0, q / 3.0, q / 3.0]
    }

    /// Factor by which the logical channel scales an operator that anticommutes
    /// with two of the three logical representatives.
    pub fn logical_transfer(&self) -> f64 {
        1.0 - 4.0 * self.q_logical / 3.0
    }

    pub fn sample_logical<R: Rng + ?Sized>(&self, rng: &mut R) -> Pauli {
        let u = rng.random::<f64>();
        if u >= self.q_logical {
            return Pauli::I;
        }
        Pauli::ERRORS[((u / self.q_logical * 3.0) as usize).min(2)]
    }
}

/// Applies a sampled Pauli to `qubit` in place and returns the letter drawn.
pub fn apply_pauli_channel<R: Rng + ?Sized>(
    state: &mut StateVector,
    qubit: usize,
    probs: &PauliProbs,
    rng: &mut R,
) -> Result<Pauli> {
    probs.validate()?;
    if qubit >= state.num_qubits() {
        return Err(Error::QubitOutOfRange { index: qubit, num_qubits: state.num_qubits() });
    }
    let letter = probs.sample(rng);
    if letter != Pauli::I {
        state.apply_pauli(&PauliString::single(state.num_qubits(), qubit, letter)?)?;
    }
    Ok(letter)
}

/// Errors drawn for one noisy resource.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResourceErrors {
    pub physical: [Pauli; RESOURCE_QUBITS],
    pub logical: Pauli,
}

impl ResourceErrors {
    pub fn none() -> Self {
        ResourceErrors { physical: [Pauli::I; RESOURCE_QUBITS], logical: Pauli::I }
    }

    /// Ten physical draws in qubit order, then the logical draw.
    pub fn sample<R: Rng + ?Sized>(spec: &NoiseSpec, rng: &mut R) -> Self {
        let mut physical = [Pauli::I; RESOURCE_QUBITS];
        for p in &mut physical {
            *p = spec.p_phys.sample(rng);
        }
        ResourceErrors { physical, logical: spec.sample_logical(rng) }
    }

    /// Two bits per letter, physical qubits first.
    pub fn key(&self) -> u32 {
        self.physical
            .iter()
            .chain(std::iter::once(&self.logical))
            .enumerate()
            .fold(0u32, |k, (i, p)| k | (p.index() as u32) << (2 * i))
    }

    /// The combined error operator on the resource register.
    pub fn operator(&self, code: &ShorCode) -> Result<PauliString> {
        let phys = PauliString::from_letters(&self.physical)?;
        phys.mul(&code.logical(self.logical))
    }

    pub fn apply(&self, resource: &mut ResourceState) -> Result<()> {
        let op = self.operator(resource_code())?;
        resource.state_mut().apply_pauli(&op)
    }
}

/// Ideal circuit output followed by the physical channels and the logical channel.
pub fn noisy_resource<R: Rng + ?Sized>(spec: &NoiseSpec, rng: &mut R) -> Result<ResourceState> {
    spec.validate()?;
    let errors = ResourceErrors::sample(spec, rng);
    let mut r = prepare_resource_circuit();
    errors.apply(&mut r)?;
    Ok(r)
}

/// Generator for trajectory `index`.
pub fn trajectory_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(index))
}

/// Mean and standard error of `experiment` over `n` seeded trajectories.
pub fn run_trajectories<F>(mut experiment: F, n: usize, base_seed: u64) -> Result<(f64, f64)>
where
    F: FnMut(&mut ChaCha8Rng) -> Result<f64>,
{
    if n == 0 {
        return Err(Error::domain("at least one trajectory is required"));
    }
    let values = (0..n).map(|i| experiment(&mut trajectory_rng(base_seed, i as u64))).collect::<Result<Vec<_>>>()?;
    Ok(mean_stderr(&values))
}

/// Sample mean and `std/√n` (zero for a single sample).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord<E> {
    pub errors: E,
    pub values: Vec<f64>,
}

/// Per-trajectory errors and observable contributions.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryBatch<E> {
    pub base_seed: u64,
    pub records: Vec<TrajectoryRecord<E>>,
}

impl<E> TrajectoryBatch<E> {
    pub fn collect<F>(mut trajectory: F, n: usize, base_seed: u64) -> Result<Self>
    where
        F: FnMut(&mut ChaCha8Rng) -> Result<(E, Vec<f64>)>,
    {
        if n == 0 {
            return Err(Error::domain("at least one trajectory is required"));
        }
        let records = (0..n)
            .map(|i| {
                let (errors, values) = trajectory(&mut trajectory_rng(base_seed, i as u64))?;
                Ok(TrajectoryRecord { errors, values })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(TrajectoryBatch { base_seed, records })
    }

    pub fn n_trajectories(&self) -> usize {
        self.records.len()
    }

    pub fn means(&self) -> Vec<f64> {
        let d = self.records.first().map_or(0, |r| r.values.len());
        let mut m = vec![0.0; d];
        for r in &self.records {
            for (a, v) in m.iter_mut().zip(&r.values) {
                *a += v;
            }
        }
        let n = self.records.len() as f64;
        m.iter_mut().for_each(|a| *a /= n);
        m
    }

    /// Estimate `g(means)` with a delta-method standard error.
    pub fn estimate<G>(&self, g: G) -> (f64, f64)
    where
        G: Fn(&[f64]) -> f64,
    {
        let m = self.means();
        let value = g(&m);
        let n = self.records.len();
        if n < 2 {
            return (value, 0.0);
        }
        let mut grad = vec![0.0; m.len()];
        let mut probe = m.clone();
        for (i, gi) in grad.iter_mut().enumerate() {
            let h = 1e-6 * m[i].abs().max(1.0);
            probe[i] = m[i] + h;
            let up = g(&probe);
            probe[i] = m[i] - h;
            let down = g(&probe);
            probe[i] = m[i];
            *gi = (up - down) / (2.0 * h);
        }
        let active: Vec<usize> = (0..m.len()).filter(|&i| grad[i] != 0.0).collect();
        let z: Vec<f64> = self.records.iter().map(|r| active.iter().map(|&i| grad[i] * (r.values[i] - m[i])).sum()).collect();
        let var = z.iter().map(|v| v * v).sum::<f64>() / (n as f64 - 1.0);
        (value, (var / n as f64).sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{ChannelOp, DensityOperator};

    #[test]
    fn channel_edge_cases() {
        let mut rng = trajectory_rng(0, 0);
        let mut s = StateVector::zero(1).unwrap();
        for _ in 0..100 {
            assert_eq!(apply_pauli_channel(&mut s, 0, &PauliProbs::none(), &mut rng).unwrap(), Pauli::I);
        }
        let flip = PauliProbs::new(1.0, 0.0, 0.0).unwrap();
        for _ in 0..10 {
            let mut s = StateVector::zero(1).unwrap();
            apply_pauli_channel(&mut s, 0, &flip, &mut rng).unwrap();
            assert!((s.amplitudes()[1].re - 1.0).abs() < 1e-15);
        }
        assert!(PauliProbs::new(0.5, 0.4, 0.2).is_err());
        assert!(PauliProbs::new(-0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn depolarizing_matches_density_oracle() {
        let p = 0.12;
        let probs = PauliProbs::depolarizing(p).unwrap();
        let z = PauliString::single(1, 0, Pauli::Z).unwrap();
        let rho = DensityOperator::from_pure(&StateVector::zero(1).unwrap()).unwrap();
        let channel: Vec<_> =
            Pauli::ALL.iter().map(|&l| (probs.weight(l), ChannelOp::Pauli(PauliString::single(1, 0, l).unwrap()))).collect();
        let oracle = rho.evolve(&channel).unwrap().expectation(&z).unwrap();
        let (mean, se) = run_trajectories(
            |rng| {
                let mut s = StateVector::zero(1)?;
                apply_pauli_channel(&mut s, 0, &probs, rng)?;
                s.expectation(&z)
            },
            100_000,
            17,
        )
        .unwrap();
        assert!((mean - oracle).abs() < 4.0 * se, "{mean} vs {oracle} ± {se}");
        assert!((probs.transfer(Pauli::Z) - oracle).abs() < 1e-12);
    }

    #[test]
    fn trajectories_are_reproducible() {
        let f = |rng: &mut ChaCha8Rng| Ok(rng.random::<f64>());
        assert_eq!(run_trajectories(f, 50, 3).unwrap(), run_trajectories(f, 50, 3).unwrap());
        assert_ne!(run_trajectories(f, 50, 3).unwrap(), run_trajectories(f, 50, 4).unwrap());
        assert_eq!(run_trajectories(|_| Ok(0.5), 20, 0).unwrap(), (0.5, 0.0));
        assert!(run_trajectories(|_| Ok(0.0), 0, 0).is_err());
    }

    #[test]
    fn ideal_resource_zz_is_exact() {
        let code = resource_code();
        let zz = PauliString::single(10, 9, Pauli::Z).unwrap().mul(&code.logical(Pauli::Z)).unwrap();
        let (m, se) = run_trajectories(|rng| noisy_resource(&NoiseSpec::ideal(), rng)?.state().expectation(&zz), 100, 1).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn logical_noise_stays_in_code_space() {
        let spec = NoiseSpec::depolarizing(0.0, 0.0, 1.0).unwrap();
        let code = resource_code();
        for i in 0..50 {
            let r = noisy_resource(&spec, &mut trajectory_rng(2, i)).unwrap();
            assert!((code.code_space_probability(r.state()).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn logical_draw_is_uniform() {
        let spec = NoiseSpec::depolarizing(0.0, 0.0, 0.6).unwrap();
        let mut counts = [0usize; 4];
        let mut rng = trajectory_rng(0, 0);
        for _ in 0..60_000 {
            counts[spec.sample_logical(&mut rng).index()] += 1;
        }
        for (k, w) in spec.logical_weights().iter().enumerate() {
            let expect = w * 60_000.0;
            assert!((counts[k] as f64 - expect).abs() < 4.0 * (expect * (1.0 - w)).sqrt() + 1.0);
        }
    }

    #[test]
    fn config_forms() {
        let p: PauliProbs = serde_json::from_str("0.03").unwrap();
        assert!((p.px - 0.01).abs() < 1e-15);
        let p: PauliProbs = serde_json::from_str(r#"{"px":0.1,"py":0,"pz":0.2}"#).unwrap();
        assert_eq!(p.pz, 0.2);
        assert!(serde_json::from_str::<PauliProbs>(r#"{"px":0.1,"py":0,"pz":0.2,"pw":1}"#).is_err());
        assert!(serde_json::from_str::<PauliProbs>("1.5").is_err());
        let s: NoiseSpec = serde_json::from_str(r#"{"p_phys":0.05,"q_logical":0.1,"seed":4}"#).unwrap();
        assert_eq!(s.p_input, PauliProbs::none());
        assert!(serde_json::from_str::<NoiseSpec>(r#"{"p_phys":0.05,"extra":1}"#).is_err());
    }

    #[test]
    fn delta_method_on_linear_and_ratio() {
        let batch = TrajectoryBatch::collect(
            |rng| {
                let a: f64 = rng.random();
                Ok(((), vec![a, 1.0]))
            },
            10_000,
            0,
        )
        .unwrap();
        let (m, se) = batch.estimate(|v| v[0]);
        let col: Vec<f64> = batch.records.iter().map(|r| r.values[0]).collect();
        let (m2, se2) = mean_stderr(&col);
        assert!((m - m2).abs() < 1e-12);
        assert!((se - se2).abs() < 1e-9);
        // dividing by a constant column leaves the error unchanged
        let (_, se3) = batch.estimate(|v| v[0] / v[1]);
        assert!((se3 - se2).abs() < 1e-7);
    }

    #[test]
    fn error_keys_are_distinct() {
        let mut a = ResourceErrors::none();
        assert_eq!(a.key(), 0);
        a.physical[9] = Pauli::Z;
        let mut b = ResourceErrors::none();
        b.logical = Pauli::X;
        assert_ne!(a.key(), b.key());
    }
}
