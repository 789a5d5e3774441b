//! The (9,1,3) Shor code.
//!
//! Code words are three repetitions of a GHZ₃ block,
//! `|0_L⟩ = (|000⟩+|111⟩)^⊗3 / 2√2` and `|1_L⟩ = (|000⟩−|111⟩)^⊗3 / 2√2`.
//! Block `b` holds qubits `3b, 3b+1, 3b+2` (polarization, path, OAM of photon `b+1`).
//!
//! Generator order is fixed: the six Z-pairs `Z₀Z₁, Z₁Z₂, Z₃Z₄, Z₄Z₅, Z₆Z₇, Z₇Z₈`
//! followed by `X₀…X₅` and `X₃…X₈`. Logical representatives are
//! `X_L = Z₀Z₃Z₆` (flips the sign of every block), `Z_L = X₀X₁X₂` (reads the sign of
//! block 0) and `Y_L = i·X_L·Z_L`.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::sim::{Pauli, PauliString, PauliSum, Projector, StateVector, NORM_TOL};

pub const CODE_QUBITS: usize = 9;
pub const NUM_GENERATORS: usize = 8;

/// Default block layout of the nine code qubits.
pub const BLOCKS: [[usize; 3]; 3] = [[0, 1, 2], [3, 4, 5], [6, 7, 8]];

/// Stabilizer measurement outcomes in generator order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Syndrome {
    pub bits: [i8; NUM_GENERATORS],
}

impl Syndrome {
    pub fn trivial() -> Self {
        Syndrome { bits: [1; NUM_GENERATORS] }
    }

    pub fn from_mask(mask: u8) -> Self {
        let mut bits = [1i8; NUM_GENERATORS];
        for (k, b) in bits.iter_mut().enumerate() {
            if mask >> k & 1 == 1 {
                *b = -1;
            }
        }
        Syndrome { bits }
    }

    /// Bit `k` set iff generator `k` read −1.
    pub fn mask(&self) -> u8 {
        self.bits.iter().enumerate().filter(|(_, &b)| b < 0).fold(0u8, |m, (k, _)| m | 1 << k)
    }

    pub fn is_trivial(&self) -> bool {
        self.bits.iter().all(|&b| b > 0)
    }
}

/// Output of the lookup decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub recovery: PauliString,
    /// `true` when the syndrome is explained by an error of weight ≤ 1.
    pub confident: bool,
}

#[derive(Debug, Clone)]
struct TableEntry {
    recovery: PauliString,
    weight: usize,
}

#[derive(Debug, Clone)]
pub struct ShorCode {
    num_qubits: usize,
    offset: usize,
    generators: Vec<PauliString>,
    logical_x: PauliString,
    logical_y: PauliString,
    logical_z: PauliString,
    table: Vec<Option<TableEntry>>,
}

/// Shared nine-qubit instance.
pub fn standard() -> &'static ShorCode {
    static CODE: OnceLock<ShorCode> = OnceLock::new();
    CODE.get_or_init(ShorCode::new)
}

impl Default for ShorCode {
    fn default() -> Self {
        Self::new()
    }
}

impl ShorCode {
    /// The code on a bare nine-qubit register.
    pub fn new() -> Self {
        Self::embedded(CODE_QUBITS, 0).expect("nine qubits always fit")
    }

    /// The code on qubits `offset..offset+9` of a `num_qubits` register.
    pub fn embedded(num_qubits: usize, offset: usize) -> Result<Self> {
        if offset + CODE_QUBITS > num_qubits {
            return Err(Error::domain(format!("code block at offset {offset} does not fit {num_qubits} qubits")));
        }
        let at = |terms: &[(usize, Pauli)]| -> Result<PauliString> {
            let shifted: Vec<_> = terms.iter().map(|&(q, l)| (q + offset, l)).collect();
            PauliString::from_sparse(num_qubits, &shifted)
        };
        let mut generators = Vec::with_capacity(NUM_GENERATORS);
        for block in BLOCKS {
            generators.push(at(&[(block[0], Pauli::Z), (block[1], Pauli::Z)])?);
            generators.push(at(&[(block[1], Pauli::Z), (block[2], Pauli::Z)])?);
        }
        generators.push(at(&(0..6).map(|q| (q, Pauli::X)).collect::<Vec<_>>())?);
        generators.push(at(&(3..9).map(|q| (q, Pauli::X)).collect::<Vec<_>>())?);

        let logical_x = at(&[(0, Pauli::Z), (3, Pauli::Z), (6, Pauli::Z)])?;
        let logical_z = at(&[(0, Pauli::X), (1, Pauli::X), (2, Pauli::X)])?;
        let logical_y = logical_x.mul(&logical_z)?.scale_i();
        Ok(Self::assemble(num_qubits, offset, generators, logical_x, logical_y, logical_z))
    }

    /// Replaces the generator list without checking it. Used to inject faults
    /// into the structural checks.
    pub fn with_generators(&self, generators: Vec<PauliString>) -> Result<Self> {
        if generators.iter().any(|g| g.num_qubits() != self.num_qubits) {
            return Err(Error::domain("generator size does not match register"));
        }
        Ok(Self::assemble(
            self.num_qubits,
            self.offset,
            generators,
            self.logical_x.clone(),
            self.logical_y.clone(),
            self.logical_z.clone(),
        ))
    }

    fn assemble(
        num_qubits: usize,
        offset: usize,
        generators: Vec<PauliString>,
        logical_x: PauliString,
        logical_y: PauliString,
        logical_z: PauliString,
    ) -> Self {
        let mut code = ShorCode { num_qubits, offset, generators, logical_x, logical_y, logical_z, table: Vec::new() };
        code.table = code.build_table();
        code
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn offset(&self) -> usize {
        self.offset
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    /// Logical Pauli representative; `Pauli::I` gives the identity.
    pub fn logical(&self, which: Pauli) -> PauliString {
        match which {
            Pauli::I => PauliString::identity(self.num_qubits),
            Pauli::X => self.logical_x.clone(),
            Pauli::Y => self.logical_y.clone(),
            Pauli::Z => self.logical_z.clone(),
        }
    }

    /// Single-qubit Pauli on code qubit `q` (0..9), sized to the register.
    pub fn code_qubit_pauli(&self, q: usize, letter: Pauli) -> Result<PauliString> {
        if q >= CODE_QUBITS {
            return Err(Error::QubitOutOfRange { index: q, num_qubits: CODE_QUBITS });
        }
        PauliString::single(self.num_qubits, q + self.offset, letter)
    }

    /// All 256 elements of the stabilizer group, indexed by generator subset.
    pub fn stabilizer_group(&self) -> Vec<PauliString> {
        let n = self.generators.len();
        (0..1usize << n)
            .map(|subset| {
                (0..n).filter(|k| subset >> k & 1 == 1).fold(PauliString::identity(self.num_qubits), |acc, k| {
                    acc.mul(&self.generators[k]).expect("same register size")
                })
            })
            .collect()
    }

    /// Π_cs as the expanded sum `(1/256) Σ_{g ∈ S} g`.
    pub fn code_space_projector(&self) -> PauliSum {
        let group = self.stabilizer_group();
        let c = 1.0 / group.len() as f64;
        PauliSum::new(self.num_qubits, group.into_iter().map(|g| (c, g)).collect())
            .expect("group elements share the register size")
    }

    /// Π_cs as the product of `(I + g)/2` over the generators.
    pub fn code_space_product(&self) -> Projector {
        Projector::Product(self.generators.iter().map(|g| (g.clone(), 1.0)).collect())
    }

    /// Projects onto the code space, returning `(⟨Π⟩, Π|ψ⟩/‖Π|ψ⟩‖)`.
    pub fn project_code_space(&self, state: &StateVector) -> Result<(f64, StateVector)> {
        state.project(&self.code_space_product())
    }

    /// ⟨ψ|Π|ψ⟩, zero when the state is orthogonal to the code space.
    pub fn code_space_probability(&self, state: &StateVector) -> Result<f64> {
        match self.project_code_space(state) {
            Ok((p, _)) => Ok(p),
            Err(Error::OrthogonalSubspace(_)) => Ok(0.0),
            Err(e) => Err(e),
        }
    }

    /// Syndrome an error operator would produce on a code word.
    pub fn syndrome_of(&self, error: &PauliString) -> Syndrome {
        let mut bits = [1i8; NUM_GENERATORS];
        for (b, g) in bits.iter_mut().zip(&self.generators) {
            if !g.commutes_with(error) {
                *b = -1;
            }
        }
        Syndrome { bits }
    }

    /// Measures the generators one after another.
    pub fn extract_syndrome<R: Rng + ?Sized>(&self, state: &StateVector, rng: &mut R) -> Result<(Syndrome, StateVector)> {
        let mut bits = [1i8; NUM_GENERATORS];
        let mut current = state.clone();
        for (b, g) in bits.iter_mut().zip(&self.generators) {
            let m = current.measure(g, rng)?;
            *b = m.outcome;
            current = m.state;
        }
        Ok((Syndrome { bits }, current))
    }

    fn build_table(&self) -> Vec<Option<TableEntry>> {
        let mut table: Vec<Option<TableEntry>> = vec![None; 1 << NUM_GENERATORS.min(self.generators.len())];
        // weight 3 covers every syndrome of the standard code
        for weight in 0..=3 {
            for qubits in combinations(CODE_QUBITS, weight) {
                for letters in letter_tuples(weight) {
                    let terms: Vec<_> = qubits.iter().zip(&letters).map(|(&q, &l)| (q + self.offset, l)).collect();
                    let e = PauliString::from_sparse(self.num_qubits, &terms).expect("distinct in-range qubits");
                    let m = self.syndrome_of(&e).mask() as usize;
                    if m < table.len() && table[m].is_none() {
                        table[m] = Some(TableEntry { recovery: e, weight });
                    }
                }
            }
        }
        table
    }

    /// Minimum-weight recovery for `syndrome`. Ties go to the lexicographically
    /// smallest qubit tuple, then letter order X < Y < Z.
    pub fn decode_correction(&self, syndrome: &Syndrome) -> Decoded {
        match self.table.get(syndrome.mask() as usize).and_then(|e| e.as_ref()) {
            Some(entry) => Decoded { recovery: entry.recovery.clone(), confident: entry.weight <= 1 },
            None => Decoded { recovery: PauliString::identity(self.num_qubits), confident: false },
        }
    }

    /// Logical class of an operator that commutes with every generator, read off
    /// from its commutation with the logical representatives.
    pub fn logical_class(&self, op: &PauliString) -> Pauli {
        let has_x = !op.commutes_with(&self.logical_z);
        let has_z = !op.commutes_with(&self.logical_x);
        match (has_x, has_z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// ⟨P_L⟩ (bare) or ⟨Π P_L Π⟩ (restricted, unnormalized).
    pub fn logical_expectation(&self, state: &StateVector, which: Pauli, code_space_restricted: bool) -> Result<f64> {
        let op = self.logical(which);
        if !code_space_restricted {
            return state.expectation(&op);
        }
        match self.project_code_space(state) {
            Ok((p, s)) => Ok(p * s.expectation(&op)?),
            Err(Error::OrthogonalSubspace(_)) => Ok(0.0),
            Err(e) => Err(e),
        }
    }

    /// Structural problems with the current generator list, empty when sound.
    pub fn structural_problems(&self) -> Vec<String> {
        let mut problems = Vec::new();
        if self.generators.len() != NUM_GENERATORS {
            problems.push(format!("expected {NUM_GENERATORS} generators, found {}", self.generators.len()));
        }
        for (i, g) in self.generators.iter().enumerate() {
            if !g.is_hermitian() {
                problems.push(format!("generator {i} ({g}) is not Hermitian"));
            }
            for (j, h) in self.generators[..i].iter().enumerate() {
                if !g.commutes_with(h) {
                    problems.push(format!("generators {j} and {i} anticommute"));
                }
            }
            for l in [Pauli::X, Pauli::Y, Pauli::Z] {
                if !g.commutes_with(&self.logical(l)) {
                    problems.push(format!("generator {i} anticommutes with logical {l:?}"));
                }
            }
        }
        if self.logical_x.commutes_with(&self.logical_z) {
            problems.push("X_L commutes with Z_L".into());
        }
        match self.logical_x.mul(&self.logical_z) {
            Ok(xz) if xz.scale_i() == self.logical_y => {}
            _ => problems.push("Y_L ≠ i·X_L·Z_L".into()),
        }
        problems
    }

    /// Weight-1 errors that leave the syndrome trivial.
    pub fn undetected_single_errors(&self) -> Vec<PauliString> {
        (0..CODE_QUBITS)
            .flat_map(|q| Pauli::ERRORS.map(move |l| (q, l)))
            .map(|(q, l)| self.code_qubit_pauli(q, l).expect("in range"))
            .filter(|e| self.syndrome_of(e).is_trivial())
            .collect()
    }
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for q in start..n {
            cur.push(q);
            rec(q + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

fn letter_tuples(k: usize) -> Vec<Vec<Pauli>> {
    (0..3usize.pow(k as u32))
        .map(|mut i| {
            let mut v = vec![Pauli::X; k];
            for slot in v.iter_mut().rev() {
                *slot = Pauli::ERRORS[i % 3];
                i /= 3;
            }
            v
        })
        .collect()
}

/// `|0_L⟩` or `|1_L⟩` on nine qubits, built directly from the block expansion.
pub fn logical_basis(bit: u8) -> StateVector {
    let amp = 1.0 / (2.0 * std::f64::consts::SQRT_2);
    let mut amps = vec![Complex64::new(0.0, 0.0); 1 << CODE_QUBITS];
    for pattern in 0..8usize {
        // bit b of `pattern` selects |111⟩ for block b
        let mut index = 0usize;
        for (b, block) in BLOCKS.iter().enumerate() {
            if pattern >> b & 1 == 1 {
                index |= block.iter().fold(0, |acc, &q| acc | 1 << q);
            }
        }
        let sign = if bit == 1 && pattern.count_ones() % 2 == 1 { -1.0 } else { 1.0 };
        amps[index] = Complex64::new(sign * amp, 0.0);
    }
    StateVector::from_amplitudes(amps).expect("code words are normalized")
}

/// `α|0_L⟩ + β|1_L⟩`.
pub fn encode_logical(alpha: Complex64, beta: Complex64) -> Result<StateVector> {
    let n2 = alpha.norm_sqr() + beta.norm_sqr();
    if (n2 - 1.0).abs() > NORM_TOL {
        return Err(Error::NotNormalized(n2));
    }
    let (zero, one) = (logical_basis(0), logical_basis(1));
    let amps = zero.amplitudes().iter().zip(one.amplitudes()).map(|(a, b)| alpha * a + beta * b).collect();
    StateVector::from_amplitudes(amps)
}

/// Logical |+_L⟩.
pub fn logical_plus() -> StateVector {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    encode_logical(h, h).expect("normalized")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn code_words_have_eight_terms() {
        let zero = logical_basis(0);
        let nz: Vec<_> = zero.amplitudes().iter().filter(|a| a.norm() > 0.0).collect();
        assert_eq!(nz.len(), 8);
        let amp = 1.0 / (2.0 * 2f64.sqrt());
        assert!(nz.iter().all(|a| (a.re - amp).abs() < 1e-15));

        let one = logical_basis(1);
        // |111⟩ in block 0 only → index 0b111, odd parity → negative
        assert!((one.amplitudes()[0b111].re + amp).abs() < 1e-15);
        assert!((one.amplitudes()[0b111_111].re - amp).abs() < 1e-15);
        assert!((one.amplitudes()[0].re - amp).abs() < 1e-15);
        assert!(zero.inner(&one).unwrap().norm() < 1e-15);
    }

    #[test]
    fn generator_order_and_structure() {
        let code = ShorCode::new();
        let names: Vec<_> = code.generators().iter().map(|g| g.to_string()).collect();
        assert_eq!(names[0], "+ZZIIIIIII");
        assert_eq!(names[5], "+IIIIIIIZZ");
        assert_eq!(names[6], "+XXXXXXIII");
        assert_eq!(names[7], "+IIIXXXXXX");
        assert_eq!(code.logical(Pauli::X).to_string(), "+ZIIZIIZII");
        assert_eq!(code.logical(Pauli::Z).to_string(), "+XXXIIIIII");
        assert!(code.structural_problems().is_empty());
        assert!(code.undetected_single_errors().is_empty());
    }

    #[test]
    fn logical_operators_act_on_code_words() {
        let code = ShorCode::new();
        let (zero, one) = (logical_basis(0), logical_basis(1));
        let mut x0 = zero.clone();
        x0.apply_pauli(&code.logical(Pauli::X)).unwrap();
        assert!((x0.fidelity(&one).unwrap() - 1.0).abs() < 1e-12);
        assert!((code.logical_expectation(&zero, Pauli::Z, false).unwrap() - 1.0).abs() < 1e-12);
        assert!((code.logical_expectation(&one, Pauli::Z, false).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn encode_examples() {
        let code = ShorCode::new();
        assert_eq!(encode_logical(c(1.0, 0.0), c(0.0, 0.0)).unwrap(), logical_basis(0));
        let plus = logical_plus();
        assert!(code.logical_expectation(&plus, Pauli::Z, false).unwrap().abs() < 1e-12);
        assert!((code.logical_expectation(&plus, Pauli::X, false).unwrap() - 1.0).abs() < 1e-12);
        let h = FRAC_1_SQRT_2;
        let magic = encode_logical(c(h, 0.0), Complex64::from_polar(h, std::f64::consts::FRAC_PI_4)).unwrap();
        let ex = code.logical_expectation(&magic, Pauli::X, false).unwrap();
        let ey = code.logical_expectation(&magic, Pauli::Y, false).unwrap();
        assert!((ex - std::f64::consts::FRAC_PI_4.cos()).abs() < 1e-12);
        assert!((ey - std::f64::consts::FRAC_PI_4.sin()).abs() < 1e-12);
        assert!(matches!(encode_logical(c(1.0, 0.0), c(1.0, 0.0)), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn projector_examples() {
        let code = ShorCode::new();
        let zero = logical_basis(0);
        let (p, _) = code.project_code_space(&zero).unwrap();
        assert!((p - 1.0).abs() < 1e-12);
        let mut err = zero.clone();
        err.apply_pauli(&code.code_qubit_pauli(0, Pauli::X).unwrap()).unwrap();
        assert!(matches!(code.project_code_space(&err), Err(Error::OrthogonalSubspace(_))));
        assert_eq!(code.code_space_probability(&err).unwrap(), 0.0);
        assert_eq!(code.logical_expectation(&err, Pauli::Z, true).unwrap(), 0.0);
        // both forms agree
        let sum = Projector::Sum(code.code_space_projector());
        let (p2, s2) = zero.project(&sum).unwrap();
        assert!((p2 - 1.0).abs() < 1e-12);
        assert!((s2.fidelity(&zero).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn syndrome_examples() {
        let code = ShorCode::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let zero = logical_basis(0);
        let (s, post) = code.extract_syndrome(&zero, &mut rng).unwrap();
        assert!(s.is_trivial());
        assert!((post.fidelity(&zero).unwrap() - 1.0).abs() < 1e-12);

        let mut x4 = zero.clone();
        x4.apply_pauli(&code.code_qubit_pauli(4, Pauli::X).unwrap()).unwrap();
        let (s, _) = code.extract_syndrome(&x4, &mut rng).unwrap();
        assert_eq!(s.bits, [1, 1, -1, -1, 1, 1, 1, 1]);

        let mut z2 = zero;
        z2.apply_pauli(&code.code_qubit_pauli(2, Pauli::Z).unwrap()).unwrap();
        let (s, _) = code.extract_syndrome(&z2, &mut rng).unwrap();
        assert_eq!(s.bits, [1, 1, 1, 1, 1, 1, -1, 1]);
    }

    #[test]
    fn decoder_examples() {
        let code = ShorCode::new();
        let d = code.decode_correction(&Syndrome::trivial());
        assert_eq!(d.recovery, PauliString::identity(9));
        assert!(d.confident);
        let d = code.decode_correction(&Syndrome { bits: [1, 1, -1, -1, 1, 1, 1, 1] });
        assert_eq!(d.recovery, code.code_qubit_pauli(4, Pauli::X).unwrap());
        let d = code.decode_correction(&Syndrome { bits: [1, 1, 1, 1, 1, 1, -1, 1] });
        assert_eq!(d.recovery, code.code_qubit_pauli(0, Pauli::Z).unwrap());
        assert!(d.confident);
    }

    #[test]
    fn every_syndrome_has_a_recovery() {
        let code = ShorCode::new();
        for mask in 0..=255u8 {
            let s = Syndrome::from_mask(mask);
            let d = code.decode_correction(&s);
            assert_eq!(code.syndrome_of(&d.recovery), s, "mask {mask:08b}");
            assert!(d.recovery.weight() <= 3);
            assert_eq!(d.confident, d.recovery.weight() <= 1);
        }
    }

    #[test]
    fn z_on_a_block_acts_identically() {
        let code = ShorCode::new();
        for bit in 0..2 {
            let w = logical_basis(bit);
            let mut a = w.clone();
            a.apply_pauli(&code.code_qubit_pauli(0, Pauli::Z).unwrap()).unwrap();
            let mut b = w;
            b.apply_pauli(&code.code_qubit_pauli(1, Pauli::Z).unwrap()).unwrap();
            assert!((a.fidelity(&b).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn corrupted_generators_are_flagged() {
        let code = ShorCode::new();
        let mut gens = code.generators().to_vec();
        gens[6] = PauliString::from_sparse(9, &[(0, Pauli::X), (1, Pauli::X)]).unwrap();
        let bad = code.with_generators(gens).unwrap();
        assert!(!bad.structural_problems().is_empty());
        // Z on qubit 2 no longer trips any X-type check
        assert!(!bad.undetected_single_errors().is_empty());
    }

    #[test]
    fn embedded_code_shifts_qubits() {
        let code = ShorCode::embedded(10, 0).unwrap();
        assert_eq!(code.generators()[0].num_qubits(), 10);
        let code = ShorCode::embedded(11, 2).unwrap();
        assert_eq!(code.logical(Pauli::X).to_string(), "+IIZIIZIIZII");
        assert!(ShorCode::embedded(9, 1).is_err());
    }
}
