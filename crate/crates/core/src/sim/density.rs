use num_complex::Complex64;

use crate::error::{Error, Result};

use super::gate::Gate;
use super::pauli::PauliString;
use super::state::StateVector;
use super::{EIGEN_FLOOR, NORM_TOL, ZERO};

/// Density operators are an oracle only; 10 qubits is the full resource register.
pub const MAX_DENSITY_QUBITS: usize = 10;

/// Dense mixed state, row-major 2ⁿ×2ⁿ.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    num_qubits: usize,
    m: Vec<Complex64>,
}

/// One Kraus-like term of a mixed-unitary channel.
#[derive(Debug, Clone)]
pub enum ChannelOp {
    Pauli(PauliString),
    Gate(Gate),
}

impl DensityOperator {
    pub fn from_pure(state: &StateVector) -> Result<Self> {
        let n = state.num_qubits();
        if n > MAX_DENSITY_QUBITS {
            return Err(Error::domain(format!("density operators are capped at {MAX_DENSITY_QUBITS} qubits")));
        }
        let a = state.amplitudes();
        let dim = a.len();
        let mut m = vec![ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                m[r * dim + c] = a[r] * a[c].conj();
            }
        }
        Ok(DensityOperator { num_qubits: n, m })
    }

    /// Builds from a row-major matrix and checks trace, hermiticity and positivity.
    pub fn from_matrix(num_qubits: usize, m: Vec<Complex64>) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_DENSITY_QUBITS {
            return Err(Error::domain(format!("num_qubits must be in 1..={MAX_DENSITY_QUBITS}")));
        }
        let dim = 1usize << num_qubits;
        if m.len() != dim * dim {
            return Err(Error::domain("matrix size does not match qubit count"));
        }
        let rho = DensityOperator { num_qubits, m };
        rho.validate()?;
        Ok(rho)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn matrix(&self) -> &[Complex64] {
        &self.m
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.m[r * self.dim() + c]
    }

    pub fn trace(&self) -> Complex64 {
        let d = self.dim();
        (0..d).map(|i| self.m[i * d + i]).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let tr = self.trace();
        if (tr.re - 1.0).abs() > NORM_TOL || tr.im.abs() > NORM_TOL {
            return Err(Error::domain(format!("trace {tr} ≠ 1")));
        }
        let d = self.dim();
        for r in 0..d {
            for c in r..d {
                if (self.m[r * d + c] - self.m[c * d + r].conj()).norm() > NORM_TOL {
                    return Err(Error::domain(format!("not Hermitian at ({r},{c})")));
                }
            }
        }
        let min = self.min_eigenvalue();
        if min < EIGEN_FLOOR {
            return Err(Error::domain(format!("negative eigenvalue {min:e}")));
        }
        Ok(())
    }

    /// Smallest eigenvalue via a Hermitian eigendecomposition. O(d³).
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let mat = nalgebra::DMatrix::from_fn(d, d, |r, c| self.m[r * d + c]);
        let eig = nalgebra::SymmetricEigen::new(mat);
        eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn check_size(&self, p: &PauliString) -> Result<()> {
        if p.num_qubits() != self.num_qubits {
            return Err(Error::domain("operator size does not match density operator"));
        }
        Ok(())
    }

    /// Tr(Pρ) for a Hermitian Pauli string.
    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        self.check_size(p)?;
        p.sign()?;
        Ok(self.trace_with(p).re)
    }

    /// Tr(Pρ) for any Pauli string.
    pub(crate) fn trace_with(&self, p: &PauliString) -> Complex64 {
        let d = self.dim();
        let (flip, base) = p.action();
        let mut acc = ZERO;
        for c in 0..d {
            acc += p.z_sign(c) * self.m[c * d + (c ^ flip)];
        }
        base * acc
    }

    /// ρ ← PρP†.
    pub fn conjugate_pauli(&self, p: &PauliString) -> Result<Self> {
        self.check_size(p)?;
        let d = self.dim();
        let (flip, _) = p.action();
        // the global phase cancels against its conjugate
        let mut out = vec![ZERO; d * d];
        for r in 0..d {
            let sr = p.z_sign(r);
            for c in 0..d {
                out[(r ^ flip) * d + (c ^ flip)] = self.m[r * d + c] * (sr * p.z_sign(c));
            }
        }
        Ok(DensityOperator { num_qubits: self.num_qubits, m: out })
    }

    /// ρ ← UρU†.
    pub fn conjugate_gate(&self, gate: &Gate) -> Result<Self> {
        gate.validate(self.num_qubits)?;
        let d = self.dim();
        let mut m = self.m.clone();
        // U acting on the row index of every column, then U* on the column index of every row
        let mut col = vec![ZERO; d];
        for c in 0..d {
            for r in 0..d {
                col[r] = m[r * d + c];
            }
            apply_gate_raw(&mut col, gate, false);
            for r in 0..d {
                m[r * d + c] = col[r];
            }
        }
        for row in m.chunks_mut(d) {
            apply_gate_raw(row, gate, true);
        }
        Ok(DensityOperator { num_qubits: self.num_qubits, m })
    }

    /// ρ ← Σ pᵢ Kᵢ ρ Kᵢ†. Probabilities must be non-negative and sum to 1.
    pub fn evolve(&self, channel: &[(f64, ChannelOp)]) -> Result<Self> {
        if channel.is_empty() {
            return Err(Error::InvalidProbability("empty channel".into()));
        }
        let total: f64 = channel.iter().map(|(p, _)| *p).sum();
        if channel.iter().any(|(p, _)| p.is_nan() || *p < 0.0) || (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidProbability(format!("channel weights sum to {total}")));
        }
        let d = self.dim();
        let mut out = vec![ZERO; d * d];
        for (p, op) in channel {
            if *p == 0.0 {
                continue;
            }
            let term = match op {
                ChannelOp::Pauli(k) => self.conjugate_pauli(k)?,
                ChannelOp::Gate(g) => self.conjugate_gate(g)?,
            };
            for (o, t) in out.iter_mut().zip(&term.m) {
                *o += t * *p;
            }
        }
        Ok(DensityOperator { num_qubits: self.num_qubits, m: out })
    }

    /// ⟨ψ|ρ|ψ⟩.
    pub fn fidelity_with(&self, psi: &StateVector) -> Result<f64> {
        if psi.num_qubits() != self.num_qubits {
            return Err(Error::domain("state size does not match density operator"));
        }
        Ok(self.sandwich(psi.amplitudes(), psi.amplitudes()).re)
    }

    /// ⟨a|ρ|b⟩ for raw amplitude vectors.
    pub(crate) fn sandwich(&self, a: &[Complex64], b: &[Complex64]) -> Complex64 {
        let d = self.dim();
        let mut acc = ZERO;
        for (r, ar) in a.iter().enumerate() {
            if *ar == ZERO {
                continue;
            }
            let row = &self.m[r * d..(r + 1) * d];
            let mut s = ZERO;
            for (x, y) in row.iter().zip(b) {
                s += x * y;
            }
            acc += ar.conj() * s;
        }
        acc
    }
}

fn apply_gate_raw(amps: &mut [Complex64], gate: &Gate, conjugate: bool) {
    match gate.single_qubit_matrix() {
        Some(mut m) => {
            if conjugate {
                for row in &mut m {
                    for v in row.iter_mut() {
                        *v = v.conj();
                    }
                }
            }
            super::state::apply_single(amps, gate.targets()[0], &m);
        }
        None => {
            if let Gate::Cnot { control, target } = *gate {
                let (cm, tm) = (1usize << control, 1usize << target);
                for i in 0..amps.len() {
                    if i & cm != 0 && i & tm == 0 {
                        amps.swap(i, i | tm);
                    }
                }
            }
        }
    }
}
