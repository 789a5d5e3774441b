//! Brute-force density-operator route.
//!
//! The ideal resource is built from the code words, every channel is applied to
//! the full 1024×1024 matrix, and all observables are read from the 4×4 block
//! `M[(k,j),(k',j')] = ⟨k, j_L|ρ|k', j'_L⟩` with `k` the physical qubit.
//! Teleportation only needs `M` and the physical qubit's reduced state:
//! the Φ⁺-conditioned output is `Σ β_ab β_a'b' ρ_in[a][a'] ⟨b|ρ_R|b'⟩`.

use num_complex::Complex64;

use crate::error::Result;
use crate::estimate::{Observables, Problem};
use crate::metrics::{ResourceTerms, TeleportTerms};
use crate::noise::{NoiseSpec, PauliProbs};
use crate::protocol::{resource_code, target_resource, BellState, InputState, TeleportMode, RESOURCE_QUBITS};
use crate::shor::{logical_basis, Syndrome, CODE_QUBITS};
use crate::sim::{pauli_image, ChannelOp, DensityOperator, Pauli, PauliString};

type C = Complex64;

fn c0() -> C {
    C::new(0.0, 0.0)
}

/// Channel list for `probs` on one qubit of an `n`-qubit register.
pub fn pauli_channel(n: usize, qubit: usize, probs: &PauliProbs) -> Result<Vec<(f64, ChannelOp)>> {
    Pauli::ALL.iter().map(|&l| Ok((probs.weight(l), ChannelOp::Pauli(PauliString::single(n, qubit, l)?)))).collect()
}

/// The noisy resource as a density operator.
pub fn resource_density(noise: &NoiseSpec) -> Result<DensityOperator> {
    noise.validate()?;
    let mut rho = DensityOperator::from_pure(&target_resource())?;
    if !noise.p_phys.is_zero() {
        for q in 0..RESOURCE_QUBITS {
            rho = rho.evolve(&pauli_channel(RESOURCE_QUBITS, q, &noise.p_phys)?)?;
        }
    }
    if noise.q_logical > 0.0 {
        let code = resource_code();
        let ops: Vec<_> =
            Pauli::ALL.iter().map(|&l| (noise.logical_weights()[l.index()], ChannelOp::Pauli(code.logical(l)))).collect();
        rho = rho.evolve(&ops)?;
    }
    Ok(rho)
}

/// Code-space block of a resource density operator plus the reduced state of
/// the physical qubit.
#[derive(Debug, Clone, PartialEq)]
pub struct LogicalBlock {
    /// Row/column index `2k + j`.
    pub m: [[C; 4]; 4],
    pub reduced: [[C; 2]; 2],
}

fn basis_vectors() -> Vec<Vec<C>> {
    let words = [logical_basis(0), logical_basis(1)];
    let half = 1usize << CODE_QUBITS;
    let mut out = Vec::with_capacity(4);
    for k in 0..2 {
        for word in &words {
            let mut v = vec![c0(); 2 * half];
            v[k * half..(k + 1) * half].copy_from_slice(word.amplitudes());
            out.push(v);
        }
    }
    out
}

fn reduced_physical(rho: &DensityOperator) -> [[C; 2]; 2] {
    let half = 1usize << CODE_QUBITS;
    let mut r = [[c0(); 2]; 2];
    for (b, row) in r.iter_mut().enumerate() {
        for (b2, x) in row.iter_mut().enumerate() {
            *x = (0..half).map(|i| rho.get(b * half + i, b2 * half + i)).sum();
        }
    }
    r
}

fn block_of(rho: &DensityOperator, vecs: &[Vec<C>]) -> [[C; 4]; 4] {
    let mut m = [[c0(); 4]; 4];
    for (a, va) in vecs.iter().enumerate() {
        for (b, vb) in vecs.iter().enumerate() {
            m[a][b] = rho.sandwich(va, vb);
        }
    }
    m
}

pub fn logical_block(rho: &DensityOperator) -> LogicalBlock {
    LogicalBlock { m: block_of(rho, &basis_vectors()), reduced: reduced_physical(rho) }
}

/// Block after measuring every syndrome and applying the decoder's recovery:
/// `Σ_s ⟨R_s v|ρ|R_s v'⟩` over the 256 syndromes.
pub fn active_block(rho: &DensityOperator) -> LogicalBlock {
    let code = resource_code();
    let basis = basis_vectors();
    let mut m = [[c0(); 4]; 4];
    for mask in 0..=255u8 {
        let rec = code.decode_correction(&Syndrome::from_mask(mask)).recovery;
        let moved: Vec<Vec<C>> = basis.iter().map(|v| pauli_image(v, &rec)).collect();
        let part = block_of(rho, &moved);
        for (row, prow) in m.iter_mut().zip(&part) {
            for (x, y) in row.iter_mut().zip(prow) {
                *x += y;
            }
        }
    }
    LogicalBlock { m, reduced: reduced_physical(rho) }
}

fn pauli2(p: Pauli) -> [[C; 2]; 2] {
    p.matrix()
}

/// `T[σ][τ] = Re Tr[(σ ⊗ τ) M]`.
pub fn terms_from_block(block: &LogicalBlock) -> ResourceTerms {
    let mut t = [[0.0; 4]; 4];
    for s in Pauli::ALL {
        let ms = pauli2(s);
        for tau in Pauli::ALL {
            let mt = pauli2(tau);
            let mut acc = c0();
            for a in 0..4 {
                for b in 0..4 {
                    let op = ms[a / 2][b / 2] * mt[a % 2][b % 2];
                    acc += op * block.m[b][a];
                }
            }
            t[s.index()][tau.index()] = acc.re;
        }
    }
    ResourceTerms { t }
}

/// Input density matrix after its Pauli channel.
pub fn input_density(input: &InputState, probs: &PauliProbs) -> Result<[[C; 2]; 2]> {
    let rho = DensityOperator::from_pure(&input.state())?.evolve(&pauli_channel(1, 0, probs)?)?;
    Ok([[rho.get(0, 0), rho.get(0, 1)], [rho.get(1, 0), rho.get(1, 1)]])
}

/// Weight and normalized logical terms of one BSM branch, optionally corrected.
pub fn branch_terms(block: &LogicalBlock, rho_in: &[[C; 2]; 2], bell: BellState, correct: bool) -> TeleportTerms {
    let beta = bell.amplitudes();
    let mut n = [[c0(); 2]; 2];
    let mut w = c0();
    for a in 0..2 {
        for b in 0..2 {
            for a2 in 0..2 {
                for b2 in 0..2 {
                    let coef = rho_in[a][a2] * (beta[a][b] * beta[a2][b2]);
                    if coef == c0() {
                        continue;
                    }
                    w += coef * block.reduced[b][b2];
                    for (j, row) in n.iter_mut().enumerate() {
                        for (j2, x) in row.iter_mut().enumerate() {
                            *x += coef * block.m[2 * b + j][2 * b2 + j2];
                        }
                    }
                }
            }
        }
    }
    let weight = w.re;
    if correct {
        let c = pauli2(bell.correction_class());
        n = conj2(&c, &n);
    }
    let mut bloch = [0.0; 4];
    for tau in Pauli::ALL {
        let m = pauli2(tau);
        let tr: C = (0..2).flat_map(|i| (0..2).map(move |k| (i, k))).map(|(i, k)| m[i][k] * n[k][i]).sum();
        bloch[tau.index()] = if weight > 0.0 { tr.re / weight } else { 0.0 };
    }
    TeleportTerms { weight, bloch }
}

fn conj2(c: &[[C; 2]; 2], n: &[[C; 2]; 2]) -> [[C; 2]; 2] {
    let mut out = [[c0(); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    out[i][j] += c[i][k] * n[k][l] * c[j][l].conj();
                }
            }
        }
    }
    out
}

/// Teleportation terms for one input, combining branches as `mode` dictates.
pub fn teleport_terms(block: &LogicalBlock, rho_in: &[[C; 2]; 2], mode: TeleportMode) -> TeleportTerms {
    match mode {
        TeleportMode::PostselectPhiPlus => branch_terms(block, rho_in, BellState::PhiPlus, false),
        TeleportMode::Feedforward => {
            let mut weight = 0.0;
            let mut bloch = [0.0; 4];
            for bell in BellState::ALL {
                let t = branch_terms(block, rho_in, bell, true);
                weight += t.weight;
                for (b, x) in bloch.iter_mut().zip(t.bloch) {
                    *b += t.weight * x;
                }
            }
            bloch.iter_mut().for_each(|b| *b /= weight);
            TeleportTerms { weight, bloch }
        }
    }
}

pub fn observables(problem: &Problem) -> Result<Observables> {
    let rho = resource_density(&problem.noise)?;
    let block = logical_block(&rho);
    let inputs = problem.inputs.iter().map(|i| input_density(i, &problem.noise.p_input)).collect::<Result<Vec<_>>>()?;
    let tele = |b: &LogicalBlock| inputs.iter().map(|r| teleport_terms(b, r, problem.mode)).collect::<Vec<_>>();
    let teleport = tele(&block);
    let (active, teleport_active) = if problem.active {
        let ab = active_block(&rho);
        (Some(terms_from_block(&ab)), Some(tele(&ab)))
    } else {
        (None, None)
    };
    Ok(Observables { resource: terms_from_block(&block), active, teleport, teleport_active })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::analytic;

    fn close(a: &ResourceTerms, b: &ResourceTerms, tol: f64) {
        for (x, y) in a.flat().iter().zip(b.flat()) {
            assert!((x - y).abs() < tol, "{a:?}\n{b:?}");
        }
    }

    #[test]
    fn ideal_block() {
        let rho = resource_density(&NoiseSpec::ideal()).unwrap();
        close(&terms_from_block(&logical_block(&rho)), &ResourceTerms::ideal(), 1e-12);
    }

    #[test]
    fn matches_closed_form() {
        let noise = NoiseSpec {
            p_phys: PauliProbs::new(0.03, 0.01, 0.05).unwrap(),
            p_input: PauliProbs::depolarizing(0.04).unwrap(),
            q_logical: 0.07,
            seed: 0,
        };
        let problem = Problem::new(noise).with_active(true).with_inputs(vec![InputState::magic(), InputState::zero()]);
        let a = analytic::observables(&problem).unwrap();
        let d = observables(&problem).unwrap();
        close(&a.resource, &d.resource, 1e-10);
        close(&a.active.unwrap(), &d.active.unwrap(), 1e-10);
        for (x, y) in
            a.teleport.iter().zip(&d.teleport).chain(a.teleport_active.iter().flatten().zip(d.teleport_active.iter().flatten()))
        {
            assert!((x.weight - y.weight).abs() < 1e-10);
            for (p, q) in x.bloch.iter().zip(y.bloch) {
                assert!((p - q).abs() < 1e-10);
            }
        }
        let ff = Problem { mode: TeleportMode::Feedforward, ..problem };
        let a = analytic::observables(&ff).unwrap();
        let d = observables(&ff).unwrap();
        for (x, y) in a.teleport.iter().zip(&d.teleport) {
            for (p, q) in x.bloch.iter().zip(y.bloch) {
                assert!((p - q).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn raw_fidelity_is_bell_overlap() {
        let noise = NoiseSpec::depolarizing(0.08, 0.0, 0.05).unwrap();
        let rho = resource_density(&noise).unwrap();
        let t = terms_from_block(&logical_block(&rho));
        let overlap = rho.fidelity_with(&target_resource()).unwrap();
        assert!((t.f_raw() - overlap).abs() < 1e-12);
    }
}
