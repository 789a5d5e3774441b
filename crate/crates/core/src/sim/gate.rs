use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Elementary gates used by the resource-preparation circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H(usize),
    X(usize),
    Y(usize),
    Z(usize),
    S(usize),
    T(usize),
    /// `diag(e^{-iφ/2}, e^{iφ/2})`, angle in radians.
    Rz(usize, f64),
    Cnot {
        control: usize,
        target: usize,
    },
}

impl Gate {
    pub fn targets(&self) -> Vec<usize> {
        match *self {
            Gate::H(q) | Gate::X(q) | Gate::Y(q) | Gate::Z(q) | Gate::S(q) | Gate::T(q) => vec![q],
            Gate::Rz(q, _) => vec![q],
            Gate::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn validate(&self, num_qubits: usize) -> Result<()> {
        let t = self.targets();
        for (i, &q) in t.iter().enumerate() {
            if q >= num_qubits {
                return Err(Error::QubitOutOfRange { index: q, num_qubits });
            }
            if t[..i].contains(&q) {
                return Err(Error::DuplicateQubit(q));
            }
        }
        Ok(())
    }

    /// 2×2 matrix for single-qubit gates, `None` for CNOT.
    pub fn single_qubit_matrix(&self) -> Option<[[Complex64; 2]; 2]> {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
        Some(match *self {
            Gate::H(_) => [[h, h], [h, -h]],
            Gate::X(_) => [[o, l], [l, o]],
            Gate::Y(_) => [[o, -i], [i, o]],
            Gate::Z(_) => [[l, o], [o, -l]],
            Gate::S(_) => [[l, o], [o, i]],
            Gate::T(_) => [[l, o], [o, Complex64::from_polar(1.0, std::f64::consts::FRAC_PI_4)]],
            Gate::Rz(_, phi) => [[Complex64::from_polar(1.0, -phi / 2.0), o], [o, Complex64::from_polar(1.0, phi / 2.0)]],
            Gate::Cnot { .. } => return None,
        })
    }

    /// Full matrix on the gate's own targets (2×2 or 4×4, row-major). For CNOT the
    /// control is the low bit of the local index.
    pub fn matrix(&self) -> Vec<Complex64> {
        match self.single_qubit_matrix() {
            Some(m) => vec![m[0][0], m[0][1], m[1][0], m[1][1]],
            None => {
                let mut m = vec![Complex64::new(0.0, 0.0); 16];
                for b in 0..4usize {
                    let out = if b & 1 == 1 { b ^ 2 } else { b };
                    m[out * 4 + b] = Complex64::new(1.0, 0.0);
                }
                m
            }
        }
    }
}
