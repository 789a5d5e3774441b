use num_complex::Complex64;
use rand::{Rng, RngExt};

use crate::error::{Error, Result};

use super::gate::Gate;
use super::pauli::{PauliString, PauliSum};
use super::{NORM_TOL, ONE, PROB_FLOOR, ZERO};

/// Largest register a [`StateVector`] may hold.
pub const MAX_QUBITS: usize = 20;

/// Pure state of `n` qubits as 2ⁿ amplitudes (qubit 0 = least significant bit).
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Complex64>,
}

/// Result of a projective Pauli measurement.
#[derive(Debug, Clone)]
pub struct Measurement {
    /// +1 or −1.
    pub outcome: i8,
    /// Born probability of `outcome`.
    pub probability: f64,
    pub state: StateVector,
}

/// A Hermitian projector, either as an explicit Pauli sum or as a product of
/// commuting `(I ± g)/2` factors.
#[derive(Debug, Clone)]
pub enum Projector {
    Sum(PauliSum),
    Product(Vec<(PauliString, f64)>),
}

impl Projector {
    pub fn num_qubits(&self) -> usize {
        match self {
            Projector::Sum(s) => s.num_qubits(),
            Projector::Product(f) => f.first().map_or(0, |(p, _)| p.num_qubits()),
        }
    }

    /// Checks Π² = Π. For the product form this means every factor is a
    /// Hermitian Pauli with sign ±1 and all factors commute.
    pub fn validate(&self) -> Result<()> {
        match self {
            Projector::Sum(s) => {
                if !s.is_idempotent(NORM_TOL)? {
                    return Err(Error::domain("Pauli sum is not idempotent"));
                }
            }
            Projector::Product(factors) => {
                for (i, (p, sign)) in factors.iter().enumerate() {
                    p.sign()?;
                    if (sign.abs() - 1.0).abs() > 0.0 {
                        return Err(Error::domain("projector factor sign must be ±1"));
                    }
                    if let Some((q, _)) = factors[..i].iter().find(|(q, _)| !q.commutes_with(p)) {
                        return Err(Error::domain(format!("projector factors {q} and {p} anticommute")));
                    }
                }
            }
        }
        Ok(())
    }
}

impl StateVector {
    pub fn new_basis_state(num_qubits: usize, basis_index: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_QUBITS {
            return Err(Error::domain(format!("num_qubits must be in 1..={MAX_QUBITS}, got {num_qubits}")));
        }
        let dim = 1usize << num_qubits;
        if basis_index >= dim {
            return Err(Error::domain(format!("basis index {basis_index} out of range for {num_qubits} qubits")));
        }
        let mut amps = vec![ZERO; dim];
        amps[basis_index] = ONE;
        Ok(StateVector { num_qubits, amps })
    }

    pub fn zero(num_qubits: usize) -> Result<Self> {
        Self::new_basis_state(num_qubits, 0)
    }

    /// Takes ownership of `amps`; length must be a power of two and the norm 1.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let s = Self::from_amplitudes_unchecked(amps)?;
        let n2 = s.norm_sqr();
        if (n2 - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(n2));
        }
        Ok(s)
    }

    /// Normalizes `amps` first; fails for a zero vector.
    pub fn from_unnormalized(amps: Vec<Complex64>) -> Result<Self> {
        let mut s = Self::from_amplitudes_unchecked(amps)?;
        let n2 = s.norm_sqr();
        if n2 < PROB_FLOOR {
            return Err(Error::OrthogonalSubspace(n2));
        }
        s.scale(1.0 / n2.sqrt());
        Ok(s)
    }

    fn from_amplitudes_unchecked(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() || dim > 1 << MAX_QUBITS {
            return Err(Error::domain(format!("amplitude count {dim} is not 2ⁿ with 1 ≤ n ≤ {MAX_QUBITS}")));
        }
        Ok(StateVector { num_qubits: dim.trailing_zeros() as usize, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    fn scale(&mut self, f: f64) {
        for a in &mut self.amps {
            *a *= f;
        }
    }

    fn check_qubits(&self, p: &PauliString) -> Result<()> {
        if p.num_qubits() != self.num_qubits {
            return Err(Error::domain(format!("operator acts on {} qubits, state has {}", p.num_qubits(), self.num_qubits)));
        }
        Ok(())
    }

    /// Applies `gate` in place.
    pub fn apply_gate(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.num_qubits)?;
        match gate.single_qubit_matrix() {
            Some(m) => apply_single(&mut self.amps, gate.targets()[0], &m),
            None => {
                if let Gate::Cnot { control, target } = *gate {
                    let (cm, tm) = (1usize << control, 1usize << target);
                    for i in 0..self.amps.len() {
                        if i & cm != 0 && i & tm == 0 {
                            self.amps.swap(i, i | tm);
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Consuming variant of [`apply_gate`](Self::apply_gate).
    pub fn with_gate(mut self, gate: &Gate) -> Result<Self> {
        self.apply_gate(gate)?;
        Ok(self)
    }

    /// Applies a Pauli string (any phase; it is unitary).
    pub fn apply_pauli(&mut self, p: &PauliString) -> Result<()> {
        self.check_qubits(p)?;
        self.amps = pauli_image(&self.amps, p);
        Ok(())
    }

    /// ⟨ψ|P|ψ⟩ for a Hermitian Pauli string.
    pub fn expectation(&self, observable: &PauliString) -> Result<f64> {
        self.check_qubits(observable)?;
        observable.sign()?;
        Ok(pauli_expectation(&self.amps, observable))
    }

    /// Samples a ±1 outcome of `observable` and collapses onto that eigenspace.
    pub fn measure<R: Rng + ?Sized>(&self, observable: &PauliString, rng: &mut R) -> Result<Measurement> {
        let e = self.expectation(observable)?;
        let p_plus = ((1.0 + e) / 2.0).clamp(0.0, 1.0);
        let outcome: i8 = if rng.random::<f64>() < p_plus { 1 } else { -1 };
        let (probability, state) = self.project_eigenspace(observable, outcome)?;
        Ok(Measurement { outcome, probability, state })
    }

    /// Projects onto the `outcome` (±1) eigenspace of a Hermitian Pauli.
    pub fn project_eigenspace(&self, observable: &PauliString, outcome: i8) -> Result<(f64, StateVector)> {
        self.check_qubits(observable)?;
        observable.sign()?;
        let mut amps = self.amps.clone();
        apply_half_projector(&mut amps, observable, f64::from(outcome.signum()));
        finish_projection(amps)
    }

    /// Returns `(⟨ψ|Π|ψ⟩, Π|ψ⟩/‖Π|ψ⟩‖)`.
    pub fn project(&self, projector: &Projector) -> Result<(f64, StateVector)> {
        if projector.num_qubits() != self.num_qubits {
            return Err(Error::domain("projector size does not match state"));
        }
        let amps = match projector {
            Projector::Sum(sum) => {
                let mut out = vec![ZERO; self.amps.len()];
                for (c, p) in sum.terms() {
                    let (flip, base) = p.action();
                    let base = base * *c;
                    for (b, a) in self.amps.iter().enumerate() {
                        out[b ^ flip] += base * (p.z_sign(b) * a);
                    }
                }
                out
            }
            Projector::Product(factors) => {
                let mut amps = self.amps.clone();
                for (p, sign) in factors {
                    p.sign()?;
                    apply_half_projector(&mut amps, p, *sign);
                }
                amps
            }
        };
        finish_projection(amps)
    }

    /// Kronecker product; `other`'s qubits take the higher indices.
    pub fn tensor(&self, other: &StateVector) -> Result<StateVector> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_QUBITS {
            return Err(Error::domain(format!("tensor product of {n} qubits exceeds {MAX_QUBITS}")));
        }
        let mut amps = Vec::with_capacity(1 << n);
        for hi in &other.amps {
            for lo in &self.amps {
                amps.push(hi * lo);
            }
        }
        Ok(StateVector { num_qubits: n, amps })
    }

    /// ⟨self|other⟩.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::domain("inner product of states with different sizes"));
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// |⟨self|other⟩|².
    pub fn fidelity(&self, other: &StateVector) -> Result<f64> {
        Ok(self.inner(other)?.norm_sqr())
    }

    /// Relabels qubits: qubit `k` of `self` becomes qubit `perm[k]` of the result.
    pub fn permute_qubits(&self, perm: &[usize]) -> Result<StateVector> {
        let n = self.num_qubits;
        if perm.len() != n {
            return Err(Error::domain("permutation length must equal qubit count"));
        }
        let mut seen = vec![false; n];
        for &t in perm {
            if t >= n {
                return Err(Error::QubitOutOfRange { index: t, num_qubits: n });
            }
            if std::mem::replace(&mut seen[t], true) {
                return Err(Error::DuplicateQubit(t));
            }
        }
        let mut amps = vec![ZERO; self.amps.len()];
        for (b, a) in self.amps.iter().enumerate() {
            let mut nb = 0usize;
            for (k, &t) in perm.iter().enumerate() {
                nb |= (b >> k & 1) << t;
            }
            amps[nb] = *a;
        }
        Ok(StateVector { num_qubits: n, amps })
    }
}

fn finish_projection(mut amps: Vec<Complex64>) -> Result<(f64, StateVector)> {
    let prob: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    if prob < PROB_FLOOR {
        return Err(Error::OrthogonalSubspace(prob));
    }
    let f = 1.0 / prob.sqrt();
    for a in &mut amps {
        *a *= f;
    }
    Ok((prob.min(1.0), StateVector::from_amplitudes_unchecked(amps)?))
}

pub(crate) fn apply_single(amps: &mut [Complex64], q: usize, m: &[[Complex64; 2]; 2]) {
    let bit = 1usize << q;
    for i in 0..amps.len() {
        if i & bit == 0 {
            let (a0, a1) = (amps[i], amps[i | bit]);
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i | bit] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

pub(crate) fn pauli_image(amps: &[Complex64], p: &PauliString) -> Vec<Complex64> {
    let (flip, base) = p.action();
    let mut out = vec![ZERO; amps.len()];
    for (b, a) in amps.iter().enumerate() {
        out[b ^ flip] = base * (p.z_sign(b) * a);
    }
    out
}

/// `Re ⟨a|P|a⟩` without normalization checks; `a` may be unnormalized.
pub(crate) fn pauli_expectation(amps: &[Complex64], p: &PauliString) -> f64 {
    let (flip, base) = p.action();
    let mut acc = ZERO;
    for (b, a) in amps.iter().enumerate() {
        acc += amps[b ^ flip].conj() * (p.z_sign(b) * a);
    }
    (base * acc).re
}

/// `a ← (a + sign·P a)/2`.
pub(crate) fn apply_half_projector(amps: &mut [Complex64], p: &PauliString, sign: f64) {
    let (flip, base) = p.action();
    let base = base * sign;
    if flip == 0 {
        for (b, a) in amps.iter_mut().enumerate() {
            *a = (*a + base * (p.z_sign(b) * *a)) * 0.5;
        }
        return;
    }
    // pair each b with b ^ flip and update both at once
    let low = flip & flip.wrapping_neg();
    for b in 0..amps.len() {
        if b & low == 0 {
            let c = b ^ flip;
            let (ab, ac) = (amps[b], amps[c]);
            amps[b] = (ab + base * (p.z_sign(c) * ac)) * 0.5;
            amps[c] = (ac + base * (p.z_sign(b) * ab)) * 0.5;
        }
    }
}
