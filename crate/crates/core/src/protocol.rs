//! Resource preparation, Bell-state measurement and teleportation.
//!
//! Register layout: qubits 0..8 hold the code block, qubit 9 is the physical half
//! of the resource, and during teleportation qubit 10 carries the input.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::{Rng, RngExt};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shor::{encode_logical, logical_basis, standard, ShorCode, CODE_QUBITS};
use crate::sim::{Gate, Pauli, PauliString, StateVector, PROB_FLOOR};

pub const RESOURCE_QUBITS: usize = 10;
pub const PHYSICAL_QUBIT: usize = 9;
pub const INPUT_QUBIT: usize = 10;
/// Upper bound on BSM repetitions while waiting for Φ⁺ in post-selection mode.
pub const MAX_POSTSELECT_ATTEMPTS: usize = 10_000;

/// The code embedded in the ten-qubit resource register.
pub fn resource_code() -> &'static ShorCode {
    static CODE: OnceLock<ShorCode> = OnceLock::new();
    CODE.get_or_init(|| ShorCode::embedded(RESOURCE_QUBITS, 0).expect("code fits the resource register"))
}

/// Physical ⊗ logical Bell pair, physical qubit 9.
#[derive(Debug, Clone, PartialEq)]
pub struct ResourceState {
    state: StateVector,
}

impl ResourceState {
    pub fn from_state(state: StateVector) -> Result<Self> {
        if state.num_qubits() != RESOURCE_QUBITS {
            return Err(Error::domain(format!("resource state needs {RESOURCE_QUBITS} qubits, got {}", state.num_qubits())));
        }
        Ok(ResourceState { state })
    }

    pub fn state(&self) -> &StateVector {
        &self.state
    }

    pub fn state_mut(&mut self) -> &mut StateVector {
        &mut self.state
    }

    pub fn into_state(self) -> StateVector {
        self.state
    }
}

/// (|0000⟩+|1111⟩)/√2.
pub fn prepare_ghz4() -> StateVector {
    let mut s = StateVector::zero(4).expect("4 qubits");
    s.apply_gate(&Gate::H(0)).expect("valid");
    for t in 1..4 {
        s.apply_gate(&Gate::Cnot { control: 0, target: t }).expect("valid");
    }
    s
}

/// GHZ₄ on the polarization qubits 0, 3, 6 and the physical qubit 9, Hadamards on
/// the three polarizations, then polarization→path and polarization→OAM CNOTs.
pub fn prepare_resource_circuit() -> ResourceState {
    let full = prepare_ghz4().tensor(&StateVector::zero(6).expect("6 qubits")).expect("10 qubits");
    let mut s = full.permute_qubits(&[0, 3, 6, 9, 1, 2, 4, 5, 7, 8]).expect("valid permutation");
    for pol in [0, 3, 6] {
        s.apply_gate(&Gate::H(pol)).expect("valid");
        s.apply_gate(&Gate::Cnot { control: pol, target: pol + 1 }).expect("valid");
        s.apply_gate(&Gate::Cnot { control: pol, target: pol + 2 }).expect("valid");
    }
    ResourceState { state: s }
}

/// (|0⟩|0_L⟩ + |1⟩|1_L⟩)/√2 assembled directly from the code words.
pub fn target_resource() -> StateVector {
    let zero = logical_basis(0);
    let one = logical_basis(1);
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let mut amps = Vec::with_capacity(1 << RESOURCE_QUBITS);
    amps.extend(zero.amplitudes().iter().map(|a| a * h));
    amps.extend(one.amplitudes().iter().map(|a| a * h));
    StateVector::from_amplitudes(amps).expect("normalized")
}

/// cos(θ/2)|0⟩ + e^{iφ} sin(θ/2)|1⟩.
pub fn prepare_input(theta: f64, phi: f64) -> StateVector {
    let (a, b) = input_amplitudes(theta, phi);
    StateVector::from_amplitudes(vec![a, b]).expect("normalized by construction")
}

fn input_amplitudes(theta: f64, phi: f64) -> (Complex64, Complex64) {
    (Complex64::new((theta / 2.0).cos(), 0.0), Complex64::from_polar((theta / 2.0).sin(), phi))
}

/// A named single-qubit input on the Bloch sphere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputState {
    pub name: String,
    pub theta: f64,
    pub phi: f64,
}

impl InputState {
    pub fn custom(theta: f64, phi: f64) -> Self {
        InputState { name: format!("theta={theta},phi={phi}"), theta, phi }
    }

    fn with_name(name: &str, theta: f64, phi: f64) -> Self {
        InputState { name: name.to_string(), theta, phi }
    }

    pub fn zero() -> Self {
        Self::with_name("zero", 0.0, 0.0)
    }

    pub fn plus() -> Self {
        Self::with_name("plus", FRAC_PI_2, 0.0)
    }

    /// (|0⟩ + i|1⟩)/√2.
    pub fn right() -> Self {
        Self::with_name("right", FRAC_PI_2, FRAC_PI_2)
    }

    /// (|0⟩ + e^{iπ/4}|1⟩)/√2.
    pub fn magic() -> Self {
        Self::with_name("magic", FRAC_PI_2, FRAC_PI_4)
    }

    /// The three inputs of the teleportation benchmark.
    pub fn benchmark() -> Vec<Self> {
        vec![Self::zero(), Self::plus(), Self::right()]
    }

    pub fn named(name: &str) -> Result<Self> {
        Ok(match name.trim() {
            "zero" | "0" => Self::zero(),
            "one" | "1" => Self::with_name("one", PI, 0.0),
            "plus" | "+" => Self::plus(),
            "minus" | "-" => Self::with_name("minus", FRAC_PI_2, PI),
            "right" | "R" => Self::right(),
            "left" | "L" => Self::with_name("left", FRAC_PI_2, -FRAC_PI_2),
            "magic" | "A" => Self::magic(),
            other => return Err(Error::Parse(format!("unknown input state {other:?}"))),
        })
    }

    pub fn amplitudes(&self) -> (Complex64, Complex64) {
        input_amplitudes(self.theta, self.phi)
    }

    pub fn state(&self) -> StateVector {
        prepare_input(self.theta, self.phi)
    }

    /// Bloch vector (⟨X⟩, ⟨Y⟩, ⟨Z⟩).
    pub fn bloch(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        [st * self.phi.cos(), st * self.phi.sin(), ct]
    }

    /// The encoded target α|0_L⟩ + β|1_L⟩.
    pub fn logical_target(&self) -> StateVector {
        let (a, b) = self.amplitudes();
        encode_logical(a, b).expect("normalized")
    }
}

/// Bell states with the input qubit first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellState {
    #[serde(rename = "phi+")]
    PhiPlus,
    #[serde(rename = "phi-")]
    PhiMinus,
    #[serde(rename = "psi+")]
    PsiPlus,
    #[serde(rename = "psi-")]
    PsiMinus,
}

impl BellState {
    pub const ALL: [BellState; 4] = [BellState::PhiPlus, BellState::PhiMinus, BellState::PsiPlus, BellState::PsiMinus];

    pub fn label(self) -> &'static str {
        match self {
            BellState::PhiPlus => "phi+",
            BellState::PhiMinus => "phi-",
            BellState::PsiPlus => "psi+",
            BellState::PsiMinus => "psi-",
        }
    }

    /// Real amplitudes `β[a][b]`, `a` the input bit and `b` the physical bit.
    pub fn amplitudes(self) -> [[f64; 2]; 2] {
        let h = FRAC_1_SQRT_2;
        match self {
            BellState::PhiPlus => [[h, 0.0], [0.0, h]],
            BellState::PhiMinus => [[h, 0.0], [0.0, -h]],
            BellState::PsiPlus => [[0.0, h], [h, 0.0]],
            BellState::PsiMinus => [[0.0, h], [-h, 0.0]],
        }
    }

    /// Signs `s` with |B⟩⟨B| = ¼ Σ_σ s_σ σ⊗σ, indexed I, X, Y, Z.
    pub fn pauli_signs(self) -> [f64; 4] {
        match self {
            BellState::PhiPlus => [1.0, 1.0, -1.0, 1.0],
            BellState::PhiMinus => [1.0, -1.0, 1.0, 1.0],
            BellState::PsiPlus => [1.0, 1.0, 1.0, -1.0],
            BellState::PsiMinus => [1.0, -1.0, -1.0, -1.0],
        }
    }

    /// Logical class of the feedforward correction.
    pub fn correction_class(self) -> Pauli {
        match self {
            BellState::PhiPlus => Pauli::I,
            BellState::PhiMinus => Pauli::Z,
            BellState::PsiPlus => Pauli::X,
            BellState::PsiMinus => Pauli::Y,
        }
    }

    /// Feedforward correction: I, Z_L, X_L or X_L·Z_L.
    pub fn correction(self, code: &ShorCode) -> PauliString {
        match self {
            BellState::PsiMinus => code.logical(Pauli::X).mul(&code.logical(Pauli::Z)).expect("same register"),
            other => code.logical(other.correction_class()),
        }
    }
}

/// Sign picked up by each logical Pauli (I, X, Y, Z) under conjugation by the class `c`.
pub fn conjugation_signs(c: Pauli) -> [f64; 4] {
    let mut s = [1.0; 4];
    for t in Pauli::ERRORS {
        if !t.commutes_with(c) {
            s[t.index()] = -1.0;
        }
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct BsmOutcome {
    pub bell: BellState,
    pub probability: f64,
    /// Normalized state of the remaining qubits.
    pub state: StateVector,
}

/// Branch probabilities and unnormalized remainders for all four Bell outcomes.
pub fn bsm_branches(
    joint: &StateVector,
    input_qubit: usize,
    physical_qubit: usize,
) -> Result<Vec<(BellState, f64, Vec<Complex64>)>> {
    let n = joint.num_qubits();
    for q in [input_qubit, physical_qubit] {
        if q >= n {
            return Err(Error::QubitOutOfRange { index: q, num_qubits: n });
        }
    }
    if input_qubit == physical_qubit {
        return Err(Error::DuplicateQubit(input_qubit));
    }
    let (lo, hi) = (input_qubit.min(physical_qubit), input_qubit.max(physical_qubit));
    let amps = joint.amplitudes();
    let rest_dim = 1usize << (n - 2);
    let insert = |r: usize, va: usize, vb: usize| -> usize {
        // open a gap at `lo`, then at `hi`
        let low_mask = (1usize << lo) - 1;
        let x = (r & low_mask) | ((r & !low_mask) << 1);
        let high_mask = (1usize << hi) - 1;
        let x = (x & high_mask) | ((x & !high_mask) << 1);
        x | va << input_qubit | vb << physical_qubit
    };
    BellState::ALL
        .iter()
        .map(|&bell| {
            let beta = bell.amplitudes();
            let mut out = vec![Complex64::new(0.0, 0.0); rest_dim];
            for (r, o) in out.iter_mut().enumerate() {
                for (a, row) in beta.iter().enumerate() {
                    for (b, &w) in row.iter().enumerate() {
                        if w != 0.0 {
                            *o += amps[insert(r, a, b)] * w;
                        }
                    }
                }
            }
            let p = out.iter().map(|c| c.norm_sqr()).sum();
            Ok((bell, p, out))
        })
        .collect()
}

/// Bell-state measurement on `(input_qubit, physical_qubit)`. With `forced_outcome`
/// the named branch is selected instead of sampled.
pub fn bsm<R: Rng + ?Sized>(
    joint: &StateVector,
    input_qubit: usize,
    physical_qubit: usize,
    rng: &mut R,
    forced_outcome: Option<BellState>,
) -> Result<BsmOutcome> {
    let branches = bsm_branches(joint, input_qubit, physical_qubit)?;
    let k = match forced_outcome {
        Some(b) => BellState::ALL.iter().position(|&x| x == b).expect("listed"),
        None => sample_branch(&branches, rng),
    };
    let (bell, p, amps) = branches.into_iter().nth(k).expect("four branches");
    finish_branch(bell, p, amps)
}

fn sample_branch<R: Rng + ?Sized>(branches: &[(BellState, f64, Vec<Complex64>)], rng: &mut R) -> usize {
    let total: f64 = branches.iter().map(|b| b.1).sum();
    let mut u = rng.random::<f64>() * total;
    for (k, b) in branches.iter().enumerate() {
        if u < b.1 {
            return k;
        }
        u -= b.1;
    }
    branches.iter().rposition(|b| b.1 > 0.0).unwrap_or(0)
}

fn finish_branch(bell: BellState, p: f64, mut amps: Vec<Complex64>) -> Result<BsmOutcome> {
    if p < PROB_FLOOR {
        return Err(Error::OrthogonalSubspace(p));
    }
    let f = 1.0 / p.sqrt();
    for a in &mut amps {
        *a *= f;
    }
    Ok(BsmOutcome { bell, probability: p, state: StateVector::from_amplitudes(amps)? })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TeleportMode {
    /// Keep only Φ⁺ outcomes.
    PostselectPhiPlus,
    /// Apply the outcome's logical correction.
    Feedforward,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TeleportOutcome {
    pub bell: BellState,
    pub probability: f64,
    /// BSM repetitions used; 1 outside post-selection.
    pub attempts: usize,
    /// Nine-qubit logical output.
    pub state: StateVector,
}

fn joint_state(input: &StateVector, resource: &ResourceState) -> Result<StateVector> {
    if input.num_qubits() != 1 {
        return Err(Error::domain("teleportation input must be a single qubit"));
    }
    resource.state().tensor(input)
}

/// Teleports `input` through `resource`, sampling the BSM outcome.
pub fn teleport<R: Rng + ?Sized>(
    input: &StateVector,
    resource: &ResourceState,
    mode: TeleportMode,
    rng: &mut R,
) -> Result<TeleportOutcome> {
    let branches = bsm_branches(&joint_state(input, resource)?, INPUT_QUBIT, PHYSICAL_QUBIT)?;
    let mut attempts = 0;
    let k = loop {
        attempts += 1;
        let k = sample_branch(&branches, rng);
        if mode == TeleportMode::Feedforward || branches[k].0 == BellState::PhiPlus {
            break k;
        }
        if attempts >= MAX_POSTSELECT_ATTEMPTS {
            return Err(Error::domain(format!("no phi+ outcome after {attempts} attempts")));
        }
    };
    let (bell, p, amps) = branches.into_iter().nth(k).expect("four branches");
    let mut out = finish_branch(bell, p, amps)?;
    if mode == TeleportMode::Feedforward {
        out.state.apply_pauli(&bell.correction(standard()))?;
    }
    Ok(TeleportOutcome { bell, probability: p, attempts, state: out.state })
}

/// Teleports through a chosen BSM branch, optionally applying its correction.
pub fn teleport_branch(
    input: &StateVector,
    resource: &ResourceState,
    bell: BellState,
    apply_correction: bool,
) -> Result<TeleportOutcome> {
    let joint = joint_state(input, resource)?;
    let branches = bsm_branches(&joint, INPUT_QUBIT, PHYSICAL_QUBIT)?;
    let (bell, p, amps) = branches.into_iter().find(|b| b.0 == bell).expect("listed");
    let mut out = finish_branch(bell, p, amps)?;
    if apply_correction {
        out.state.apply_pauli(&bell.correction(standard()))?;
    }
    debug_assert_eq!(out.state.num_qubits(), CODE_QUBITS);
    Ok(TeleportOutcome { bell, probability: p, attempts: 1, state: out.state })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn ghz4_stabilizers() {
        let g = prepare_ghz4();
        for i in 0..4 {
            for j in i + 1..4 {
                let p = PauliString::from_sparse(4, &[(i, Pauli::Z), (j, Pauli::Z)]).unwrap();
                assert!((g.expectation(&p).unwrap() - 1.0).abs() < 1e-12);
            }
            let x = PauliString::single(4, i, Pauli::X).unwrap();
            assert!(g.expectation(&x).unwrap().abs() < 1e-12);
        }
        assert!((g.expectation(&ps("XXXX")).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circuit_matches_direct_construction() {
        let r = prepare_resource_circuit();
        let target = target_resource();
        assert!((r.state().fidelity(&target).unwrap() - 1.0).abs() < 1e-10);
        // no stray global phase either
        for (a, b) in r.state().amplitudes().iter().zip(target.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn resource_expectations() {
        let r = prepare_resource_circuit();
        let code = resource_code();
        let phys = |l| PauliString::single(10, PHYSICAL_QUBIT, l).unwrap();
        let e = |l: Pauli| r.state().expectation(&phys(l).mul(&code.logical(l)).unwrap()).unwrap();
        assert!((e(Pauli::X) - 1.0).abs() < 1e-12);
        assert!((e(Pauli::Y) + 1.0).abs() < 1e-12);
        assert!((e(Pauli::Z) - 1.0).abs() < 1e-12);
        assert!((code.code_space_probability(r.state()).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn input_examples() {
        let z = prepare_input(0.0, 1.3);
        assert!((z.amplitudes()[0].re - 1.0).abs() < 1e-15);
        let r = InputState::right();
        assert!((r.state().expectation(&ps("Y")).unwrap() - 1.0).abs() < 1e-12);
        let a = InputState::magic().state();
        assert!((a.amplitudes()[1] - Complex64::from_polar(FRAC_1_SQRT_2, FRAC_PI_4)).norm() < 1e-12);
        assert_eq!(InputState::named("R").unwrap(), InputState::right());
        assert!(InputState::named("W").is_err());
    }

    #[test]
    fn bsm_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let r = prepare_resource_circuit();
        let joint = r.state().tensor(&prepare_input(0.0, 0.0)).unwrap();
        let out = bsm(&joint, INPUT_QUBIT, PHYSICAL_QUBIT, &mut rng, Some(BellState::PhiPlus)).unwrap();
        assert!((out.probability - 0.25).abs() < 1e-12);
        assert!((out.state.fidelity(&logical_basis(0)).unwrap() - 1.0).abs() < 1e-12);

        let input = InputState::custom(1.1, 0.4);
        let (a, b) = input.amplitudes();
        let joint = r.state().tensor(&input.state()).unwrap();
        let out = bsm(&joint, INPUT_QUBIT, PHYSICAL_QUBIT, &mut rng, Some(BellState::PsiPlus)).unwrap();
        let twisted = encode_logical(b, a).unwrap();
        assert!((out.state.fidelity(&twisted).unwrap() - 1.0).abs() < 1e-12);

        assert!(matches!(bsm(&joint, 3, 3, &mut rng, None), Err(Error::DuplicateQubit(3))));
    }

    #[test]
    fn forced_orthogonal_branch_errors() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        // |00⟩ has no Ψ component
        let s = StateVector::zero(3).unwrap();
        assert!(matches!(bsm(&s, 0, 1, &mut rng, Some(BellState::PsiMinus)), Err(Error::OrthogonalSubspace(_))));
    }

    #[test]
    fn bsm_outcomes_equiprobable() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let r = prepare_resource_circuit();
        let joint = r.state().tensor(&InputState::magic().state()).unwrap();
        let branches = bsm_branches(&joint, INPUT_QUBIT, PHYSICAL_QUBIT).unwrap();
        let n = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[sample_branch(&branches, &mut rng)] += 1;
        }
        let sigma = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 / 4.0).abs() < 4.0 * sigma, "{counts:?}");
        }
    }

    #[test]
    fn teleport_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = prepare_resource_circuit();
        let zero = InputState::zero();
        for mode in [TeleportMode::PostselectPhiPlus, TeleportMode::Feedforward] {
            let out = teleport(&zero.state(), &r, mode, &mut rng).unwrap();
            assert!((out.state.fidelity(&logical_basis(0)).unwrap() - 1.0).abs() < 1e-12);
        }
        let plus = InputState::plus();
        for bell in BellState::ALL {
            let out = teleport_branch(&plus.state(), &r, bell, true).unwrap();
            assert!((out.state.fidelity(&plus.logical_target()).unwrap() - 1.0).abs() < 1e-12);
        }
        let code = ShorCode::new();
        let out = teleport_branch(&InputState::magic().state(), &r, BellState::PhiPlus, false).unwrap();
        let ex = code.logical_expectation(&out.state, Pauli::X, false).unwrap();
        let ey = code.logical_expectation(&out.state, Pauli::Y, false).unwrap();
        assert!((ex - FRAC_PI_4.cos()).abs() < 1e-12);
        assert!((ey - FRAC_PI_4.sin()).abs() < 1e-12);
    }

    #[test]
    fn postselection_counts_attempts() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = prepare_resource_circuit();
        let total: usize = (0..400)
            .map(|_| teleport(&InputState::plus().state(), &r, TeleportMode::PostselectPhiPlus, &mut rng).unwrap().attempts)
            .sum();
        // geometric with mean 4
        assert!((total as f64 / 400.0 - 4.0).abs() < 0.7);
    }

    #[test]
    fn conjugation_sign_table() {
        assert_eq!(conjugation_signs(Pauli::I), [1.0, 1.0, 1.0, 1.0]);
        assert_eq!(conjugation_signs(Pauli::Z), [1.0, -1.0, -1.0, 1.0]);
        assert_eq!(conjugation_signs(Pauli::X), [1.0, 1.0, -1.0, -1.0]);
        assert_eq!(conjugation_signs(Pauli::Y), [1.0, -1.0, 1.0, -1.0]);
    }
}
