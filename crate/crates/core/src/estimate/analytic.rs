//! Closed-form expectations under Pauli noise.
//!
//! Expanding Π over its 256 stabilizer-group elements writes each `T[σ][τ]` as a
//! sum of Pauli expectations on the ideal resource. A Pauli channel rescales
//! ⟨P⟩ by a per-qubit transfer factor, and the logical channel by `1 − 4q/3`
//! whenever P anticommutes with the logical representatives. Terms are grouped
//! by their letter counts, so evaluating a noise point costs a few hundred
//! multiplications.
//!
//! Active correction is reduced to an effective logical channel by enumerating
//! all 4⁹ error patterns on the code block.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use crate::error::Result;
use crate::estimate::{Observables, Problem};
use crate::metrics::{ResourceTerms, TeleportTerms};
use crate::noise::{NoiseSpec, PauliProbs};
use crate::protocol::{conjugation_signs, resource_code, target_resource, BellState, InputState, TeleportMode};
use crate::shor::{standard, CODE_QUBITS};
use crate::sim::{Pauli, PauliString};

#[derive(Debug, Clone, Copy)]
struct Term {
    sigma: usize,
    tau: usize,
    counts: [i32; 3],
    anti: bool,
    coeff: f64,
}

fn resource_model() -> &'static [Term] {
    static MODEL: OnceLock<Vec<Term>> = OnceLock::new();
    MODEL.get_or_init(|| {
        let psi = target_resource();
        let code = resource_code();
        let group = code.stabilizer_group();
        let (lx, lz) = (code.logical(Pauli::X), code.logical(Pauli::Z));
        let scale = 1.0 / group.len() as f64;
        let mut acc: BTreeMap<(usize, usize, [i32; 3], bool), f64> = BTreeMap::new();
        for s in Pauli::ALL {
            let phys = PauliString::single(10, 9, s).expect("in range");
            for t in Pauli::ALL {
                let base = phys.mul(&code.logical(t)).expect("same register");
                for g in &group {
                    let p = base.mul(g).expect("same register");
                    let c = psi.expectation(&p).expect("commuting Hermitian product");
                    if c.abs() < 1e-12 {
                        continue;
                    }
                    let mut counts = [0i32; 3];
                    for l in p.letters() {
                        if l != Pauli::I {
                            counts[l.index() - 1] += 1;
                        }
                    }
                    let anti = !p.commutes_with(&lx) || !p.commutes_with(&lz);
                    *acc.entry((s.index(), t.index(), counts, anti)).or_default() += c * scale;
                }
            }
        }
        acc.into_iter()
            .filter(|(_, c)| c.abs() > 1e-15)
            .map(|((sigma, tau, counts, anti), coeff)| Term { sigma, tau, counts, anti, coeff })
            .collect()
    })
}

/// `T[σ][τ]` of the noisy resource.
pub fn resource_terms(noise: &NoiseSpec) -> ResourceTerms {
    let f = [noise.p_phys.transfer(Pauli::X), noise.p_phys.transfer(Pauli::Y), noise.p_phys.transfer(Pauli::Z)];
    let lambda = noise.logical_transfer();
    let mut t = [[0.0; 4]; 4];
    for term in resource_model() {
        let mut v = term.coeff;
        for (fk, &n) in f.iter().zip(&term.counts) {
            v *= fk.powi(n);
        }
        if term.anti {
            v *= lambda;
        }
        t[term.sigma][term.tau] += v;
    }
    ResourceTerms { t }
}

/// Multiplicities of (net logical class, X/Y/Z letter counts) over all 4⁹ code
/// error patterns after syndrome decoding.
fn active_model() -> &'static [(usize, [i32; 3], f64)] {
    static MODEL: OnceLock<Vec<(usize, [i32; 3], f64)>> = OnceLock::new();
    MODEL.get_or_init(|| {
        let code = standard();
        let mut acc: BTreeMap<(usize, [i32; 3]), f64> = BTreeMap::new();
        let mut letters = [Pauli::I; CODE_QUBITS];
        for pattern in 0..1usize << (2 * CODE_QUBITS) {
            let mut counts = [0i32; 3];
            for (q, l) in letters.iter_mut().enumerate() {
                *l = Pauli::ALL[pattern >> (2 * q) & 3];
                if *l != Pauli::I {
                    counts[l.index() - 1] += 1;
                }
            }
            let e = PauliString::from_letters(&letters).expect("nine letters");
            let rec = code.decode_correction(&code.syndrome_of(&e)).recovery;
            let class = code.logical_class(&rec.mul(&e).expect("same register"));
            *acc.entry((class.index(), counts)).or_default() += 1.0;
        }
        acc.into_iter().map(|((c, n), m)| (c, n, m)).collect()
    })
}

/// Probability of each net logical class (I, X, Y, Z) after decoding errors
/// drawn from `probs` on every code qubit.
pub fn effective_logical_channel(probs: &PauliProbs) -> [f64; 4] {
    let w = [probs.px, probs.py, probs.pz];
    let w0 = probs.weight(Pauli::I);
    let mut out = [0.0; 4];
    for (class, counts, mult) in active_model() {
        let n: i32 = counts.iter().sum();
        let mut p = mult * w0.powi(CODE_QUBITS as i32 - n);
        for (wk, &c) in w.iter().zip(counts) {
            p *= wk.powi(c);
        }
        out[*class] += p;
    }
    out
}

/// Class of the product of two logical Paulis, phases dropped.
fn class_mul(a: usize, b: usize) -> usize {
    // I, X, Y, Z as (x, z) bit pairs
    const BITS: [usize; 4] = [0b00, 0b10, 0b11, 0b01];
    let c = BITS[a] ^ BITS[b];
    BITS.iter().position(|&x| x == c).expect("closed")
}

/// Actively corrected resource terms.
pub fn active_resource_terms(noise: &NoiseSpec) -> ResourceTerms {
    let eff = effective_logical_channel(&noise.p_phys);
    let q = noise.logical_weights();
    let mut total = [0.0; 4];
    for (a, pa) in eff.iter().enumerate() {
        for (b, pb) in q.iter().enumerate() {
            total[class_mul(a, b)] += pa * pb;
        }
    }
    let ideal = ResourceTerms::ideal();
    let mut t = [[0.0; 4]; 4];
    for s in Pauli::ALL {
        for tau in Pauli::ALL {
            let lambda: f64 = Pauli::ALL.iter().map(|&l| total[l.index()] * if tau.commutes_with(l) { 1.0 } else { -1.0 }).sum();
            t[s.index()][tau.index()] = noise.p_phys.transfer(s) * lambda * ideal.t[s.index()][tau.index()];
        }
    }
    ResourceTerms { t }
}

/// Teleportation output for one input given the resource terms.
pub fn teleport_terms(t: &ResourceTerms, input: &InputState, p_input: &PauliProbs, mode: TeleportMode) -> TeleportTerms {
    let r = input.bloch();
    let ideal_in = [1.0, r[0], r[1], r[2]];
    let noisy_in: Vec<f64> = Pauli::ALL.iter().map(|&s| p_input.transfer(s) * ideal_in[s.index()]).collect();
    let branches: &[BellState] = match mode {
        TeleportMode::PostselectPhiPlus => &[BellState::PhiPlus],
        TeleportMode::Feedforward => &BellState::ALL,
    };
    let mut bloch = [0.0; 4];
    for bell in branches {
        let s = bell.pauli_signs();
        let eps = if mode == TeleportMode::Feedforward { conjugation_signs(bell.correction_class()) } else { [1.0; 4] };
        for (tau, b) in bloch.iter_mut().enumerate() {
            let v: f64 = (0..4).map(|sigma| s[sigma] * noisy_in[sigma] * t.t[sigma][tau]).sum();
            *b += eps[tau] * v / branches.len() as f64;
        }
    }
    // each Bell branch occurs with probability ¼ under Pauli noise
    let weight = 0.25 * branches.len() as f64;
    TeleportTerms { weight, bloch }
}

pub fn observables(problem: &Problem) -> Result<Observables> {
    let noise = &problem.noise;
    let resource = resource_terms(noise);
    let tele = |t: &ResourceTerms| -> Vec<TeleportTerms> {
        problem.inputs.iter().map(|i| teleport_terms(t, i, &noise.p_input, problem.mode)).collect()
    };
    let teleport = tele(&resource);
    let (active, teleport_active) = if problem.active {
        let a = active_resource_terms(noise);
        (Some(a), Some(tele(&a)))
    } else {
        (None, None)
    };
    Ok(Observables { resource, active, teleport, teleport_active })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ideal_point() {
        let t = resource_terms(&NoiseSpec::ideal());
        for (a, b) in t.flat().iter().zip(ResourceTerms::ideal().flat()) {
            assert!((a - b).abs() < 1e-12);
        }
        let a = active_resource_terms(&NoiseSpec::ideal());
        assert!((a.f_raw() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn logical_noise_only() {
        let noise = NoiseSpec::depolarizing(0.0, 0.0, 0.3).unwrap();
        let t = resource_terms(&noise);
        assert!((t.p_cs() - 1.0).abs() < 1e-12);
        assert!((t.f_raw() - t.f_cs().unwrap()).abs() < 1e-12);
        // Bell fidelity under a uniform logical channel of strength q is 1 − q
        assert!((t.f_raw() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn single_qubit_errors_are_always_corrected() {
        let eff = effective_logical_channel(&PauliProbs::depolarizing(0.01).unwrap());
        let total: f64 = eff.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        // failure needs two errors: O(p²)
        assert!(1.0 - eff[0] < 5e-3);
        assert!(1.0 - eff[0] > 1e-5);
        // a certain error pattern lands in exactly one class
        let flip = effective_logical_channel(&PauliProbs::new(1.0, 0.0, 0.0).unwrap());
        assert_eq!(flip.iter().filter(|&&p| p == 1.0).count(), 1);
    }

    #[test]
    fn class_products() {
        assert_eq!(class_mul(1, 3), 2);
        assert_eq!(class_mul(2, 2), 0);
        assert_eq!(class_mul(0, 3), 3);
    }

    #[test]
    fn ideal_teleport_in_every_mode() {
        let t = ResourceTerms::ideal();
        for mode in [TeleportMode::PostselectPhiPlus, TeleportMode::Feedforward] {
            for input in InputState::benchmark().into_iter().chain([InputState::magic()]) {
                let tt = teleport_terms(&t, &input, &PauliProbs::none(), mode);
                assert!((tt.overlap(&input.bloch()) - 1.0).abs() < 1e-12);
            }
        }
    }
}
