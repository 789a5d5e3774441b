use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

use super::state::MAX_QUBITS;

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    pub const ERRORS: [Pauli; 3] = [Pauli::X, Pauli::Y, Pauli::Z];

    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    /// Index in `I, X, Y, Z` order.
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn commutes_with(self, other: Pauli) -> bool {
        self == Pauli::I || other == Pauli::I || self == other
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    /// Dense 2×2 matrix, row-major.
    pub fn matrix(self) -> [[Complex64; 2]; 2] {
        let o = Complex64::new(0.0, 0.0);
        let l = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            Pauli::I => [[l, o], [o, l]],
            Pauli::X => [[o, l], [l, o]],
            Pauli::Y => [[o, -i], [i, o]],
            Pauli::Z => [[l, o], [o, -l]],
        }
    }
}

/// Exponent of `i` in the single-qubit product `a·b` (e.g. X·Y = iZ → 1).
fn product_phase(a: Pauli, b: Pauli) -> u8 {
    use Pauli::*;
    match (a, b) {
        (X, Y) | (Y, Z) | (Z, X) => 1,
        (Y, X) | (Z, Y) | (X, Z) => 3,
        _ => 0,
    }
}

/// Global phase of a Pauli string.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    PlusOne,
    PlusI,
    MinusOne,
    MinusI,
}

impl Phase {
    fn from_exponent(e: u8) -> Self {
        match e % 4 {
            0 => Phase::PlusOne,
            1 => Phase::PlusI,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    fn exponent(self) -> u8 {
        match self {
            Phase::PlusOne => 0,
            Phase::PlusI => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    pub fn to_complex(self) -> Complex64 {
        i_pow(self.exponent())
    }
}

pub(crate) fn i_pow(e: u8) -> Complex64 {
    match e % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Signed tensor product of Pauli letters, `i^k · P_0 ⊗ P_1 ⊗ …`.
///
/// Letters are stored as X/Z bit masks over at most [`MAX_QUBITS`] qubits;
/// a qubit with both bits set carries the letter Y (not XZ).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    num_qubits: usize,
    x: u32,
    z: u32,
    phase: u8,
}

impl PauliString {
    pub fn identity(num_qubits: usize) -> Self {
        assert!(num_qubits <= MAX_QUBITS, "at most {MAX_QUBITS} qubits");
        PauliString { num_qubits, x: 0, z: 0, phase: 0 }
    }

    pub fn from_letters(letters: &[Pauli]) -> Result<Self> {
        if letters.len() > MAX_QUBITS {
            return Err(Error::domain(format!("Pauli string longer than {MAX_QUBITS} qubits")));
        }
        let mut p = PauliString::identity(letters.len());
        for (q, &l) in letters.iter().enumerate() {
            p.set(q, l);
        }
        Ok(p)
    }

    /// Identity everywhere except the listed `(qubit, letter)` pairs.
    pub fn from_sparse(num_qubits: usize, terms: &[(usize, Pauli)]) -> Result<Self> {
        if num_qubits > MAX_QUBITS {
            return Err(Error::domain(format!("Pauli string longer than {MAX_QUBITS} qubits")));
        }
        let mut p = PauliString::identity(num_qubits);
        for &(q, l) in terms {
            if q >= num_qubits {
                return Err(Error::QubitOutOfRange { index: q, num_qubits });
            }
            if p.letter(q) != Pauli::I {
                return Err(Error::DuplicateQubit(q));
            }
            p.set(q, l);
        }
        Ok(p)
    }

    pub fn single(num_qubits: usize, qubit: usize, letter: Pauli) -> Result<Self> {
        Self::from_sparse(num_qubits, &[(qubit, letter)])
    }

    pub fn with_phase(mut self, phase: Phase) -> Self {
        self.phase = phase.exponent();
        self
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn phase(&self) -> Phase {
        Phase::from_exponent(self.phase)
    }

    pub fn x_mask(&self) -> u32 {
        self.x
    }

    pub fn z_mask(&self) -> u32 {
        self.z
    }

    pub fn letter(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x >> q & 1 == 1, self.z >> q & 1 == 1)
    }

    pub fn letters(&self) -> Vec<Pauli> {
        (0..self.num_qubits).map(|q| self.letter(q)).collect()
    }

    fn set(&mut self, q: usize, l: Pauli) {
        let (bx, bz) = l.bits();
        let m = 1u32 << q;
        self.x = if bx { self.x | m } else { self.x & !m };
        self.z = if bz { self.z | m } else { self.z & !m };
    }

    /// Number of non-identity letters.
    pub fn weight(&self) -> usize {
        (self.x | self.z).count_ones() as usize
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_multiple_of(2)
    }

    /// ±1 for Hermitian strings.
    pub fn sign(&self) -> Result<f64> {
        match self.phase {
            0 => Ok(1.0),
            2 => Ok(-1.0),
            _ => Err(Error::NonHermitian(format!("{:?}", self.phase()))),
        }
    }

    /// Same letters with phase +1.
    pub fn unsigned(&self) -> Self {
        PauliString { phase: 0, ..self.clone() }
    }

    pub fn negate(&self) -> Self {
        PauliString { phase: (self.phase + 2) % 4, ..self.clone() }
    }

    pub fn scale_i(&self) -> Self {
        PauliString { phase: (self.phase + 1) % 4, ..self.clone() }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        // symplectic form: x1·z2 + z1·x2 mod 2
        let s = (self.x & other.z).count_ones() + (self.z & other.x).count_ones();
        s.is_multiple_of(2)
    }

    /// Operator product `self · other`.
    pub fn mul(&self, other: &PauliString) -> Result<PauliString> {
        if self.num_qubits != other.num_qubits {
            return Err(Error::domain(format!("Pauli length mismatch: {} vs {}", self.num_qubits, other.num_qubits)));
        }
        let mut phase = self.phase + other.phase;
        let active = (self.x | self.z) & (other.x | other.z);
        for q in 0..self.num_qubits {
            if active >> q & 1 == 1 {
                phase += product_phase(self.letter(q), other.letter(q));
            }
        }
        Ok(PauliString { num_qubits: self.num_qubits, x: self.x ^ other.x, z: self.z ^ other.z, phase: phase % 4 })
    }

    /// Embed into a larger register, shifting qubit `k` to `k + offset`.
    pub fn embed(&self, num_qubits: usize, offset: usize) -> Result<PauliString> {
        if offset + self.num_qubits > num_qubits || num_qubits > MAX_QUBITS {
            return Err(Error::domain(format!("cannot embed {} qubits at offset {offset} into {num_qubits}", self.num_qubits)));
        }
        Ok(PauliString { num_qubits, x: self.x << offset, z: self.z << offset, phase: self.phase })
    }

    /// Tensor product; `other` occupies the higher qubit indices.
    pub fn tensor(&self, other: &PauliString) -> Result<PauliString> {
        let n = self.num_qubits + other.num_qubits;
        if n > MAX_QUBITS {
            return Err(Error::domain(format!("tensor product exceeds {MAX_QUBITS} qubits")));
        }
        let shift = self.num_qubits;
        Ok(PauliString {
            num_qubits: n,
            x: self.x | other.x << shift,
            z: self.z | other.z << shift,
            phase: (self.phase + other.phase) % 4,
        })
    }

    /// Action on a basis state: `P|b⟩ = coeff(b)·|b ⊕ x⟩`. Returns `(flip mask, base)`
    /// where `coeff(b) = base · (−1)^{|b ∧ z|}`.
    pub(crate) fn action(&self) -> (usize, Complex64) {
        let ys = (self.x & self.z).count_ones() as u8;
        (self.x as usize, i_pow(self.phase + ys))
    }

    #[inline]
    pub(crate) fn z_sign(&self, b: usize) -> f64 {
        if (b as u32 & self.z).count_ones().is_multiple_of(2) {
            1.0
        } else {
            -1.0
        }
    }

    /// Dense matrix, row-major, dimension 2ⁿ. Intended for small oracle checks.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let dim = 1usize << self.num_qubits;
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        let (flip, base) = self.action();
        for b in 0..dim {
            m[(b ^ flip) * dim + b] = base * self.z_sign(b);
        }
        m
    }
}

impl fmt::Display for PauliString {
    /// Leftmost letter is qubit 0, e.g. `-XIZ` or `+iYY`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let prefix = match self.phase() {
            Phase::PlusOne => "+",
            Phase::PlusI => "+i",
            Phase::MinusOne => "-",
            Phase::MinusI => "-i",
        };
        f.write_str(prefix)?;
        for q in 0..self.num_qubits {
            write!(f, "{}", self.letter(q).as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts an optional sign (`+`, `-`, `+i`, `-i`, `i`) followed by letters
    /// `I X Y Z` (case-insensitive; `_` is accepted as identity). Qubit 0 first.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (phase, rest) = if let Some(r) = s.strip_prefix("+i") {
            (Phase::PlusI, r)
        } else if let Some(r) = s.strip_prefix("-i") {
            (Phase::MinusI, r)
        } else if let Some(r) = s.strip_prefix('+') {
            (Phase::PlusOne, r)
        } else if let Some(r) = s.strip_prefix('-') {
            (Phase::MinusOne, r)
        } else if let Some(r) = s.strip_prefix('i') {
            (Phase::PlusI, r)
        } else {
            (Phase::PlusOne, s)
        };
        if rest.is_empty() {
            return Err(Error::Parse("empty Pauli string".into()));
        }
        let letters = rest
            .chars()
            .map(|c| match c.to_ascii_uppercase() {
                'I' | '_' => Ok(Pauli::I),
                'X' => Ok(Pauli::X),
                'Y' => Ok(Pauli::Y),
                'Z' => Ok(Pauli::Z),
                other => Err(Error::Parse(format!("invalid Pauli letter {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if letters.len() > MAX_QUBITS {
            return Err(Error::Parse(format!("more than {MAX_QUBITS} letters")));
        }
        Ok(PauliString::from_letters(&letters)?.with_phase(phase))
    }
}

/// Real linear combination of Pauli strings, used for projectors.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    num_qubits: usize,
    terms: Vec<(f64, PauliString)>,
}

impl PauliSum {
    pub fn new(num_qubits: usize, terms: Vec<(f64, PauliString)>) -> Result<Self> {
        if let Some((_, p)) = terms.iter().find(|(_, p)| p.num_qubits() != num_qubits) {
            return Err(Error::domain(format!("term {p} does not act on {num_qubits} qubits")));
        }
        Ok(PauliSum { num_qubits, terms })
    }

    /// `(I + sign·P)/2`.
    pub fn half_projector(p: &PauliString, sign: f64) -> Result<Self> {
        let n = p.num_qubits();
        PauliSum::new(n, vec![(0.5, PauliString::identity(n)), (0.5 * sign, p.clone())])
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn terms(&self) -> &[(f64, PauliString)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Product of two sums with like terms collected; coefficients may become
    /// complex, so the result is a map from unsigned string to coefficient.
    fn product_map(&self, other: &PauliSum) -> Result<BTreeMap<(u32, u32), Complex64>> {
        let mut acc: BTreeMap<(u32, u32), Complex64> = BTreeMap::new();
        for (a, p) in &self.terms {
            for (b, q) in &other.terms {
                let r = p.mul(q)?;
                let c = r.phase().to_complex() * (a * b);
                *acc.entry((r.x, r.z)).or_default() += c;
            }
        }
        Ok(acc)
    }

    fn collected(&self) -> BTreeMap<(u32, u32), Complex64> {
        let mut acc: BTreeMap<(u32, u32), Complex64> = BTreeMap::new();
        for (a, p) in &self.terms {
            *acc.entry((p.x, p.z)).or_default() += p.phase().to_complex() * *a;
        }
        acc
    }

    /// Checks Π² = Π coefficient-wise within `tol`.
    pub fn is_idempotent(&self, tol: f64) -> Result<bool> {
        let sq = self.product_map(self)?;
        let lin = self.collected();
        let keys: std::collections::BTreeSet<_> = sq.keys().chain(lin.keys()).collect();
        let ok = keys.into_iter().all(|k| {
            let a = sq.get(k).copied().unwrap_or_default();
            let b = lin.get(k).copied().unwrap_or_default();
            (a - b).norm() <= tol
        });
        Ok(ok)
    }

    /// Dense matrix (row-major). Small registers only.
    pub fn to_dense(&self) -> Vec<Complex64> {
        let dim = 1usize << self.num_qubits;
        let mut m = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (c, p) in &self.terms {
            let (flip, base) = p.action();
            for b in 0..dim {
                m[(b ^ flip) * dim + b] += base * (p.z_sign(b) * c);
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn single_qubit_table() {
        assert_eq!(p("X").mul(&p("Y")).unwrap(), p("+iZ"));
        assert_eq!(p("Y").mul(&p("X")).unwrap(), p("-iZ"));
        assert_eq!(p("Z").mul(&p("X")).unwrap(), p("+iY"));
        assert_eq!(p("Y").mul(&p("Y")).unwrap(), p("I"));
    }

    #[test]
    fn commutation_counts_anticommuting_positions() {
        assert!(p("XX").commutes_with(&p("ZZ")));
        assert!(!p("XI").commutes_with(&p("ZI")));
        assert!(p("XYZ").commutes_with(&p("XYZ")));
        assert!(!p("XYZ").commutes_with(&p("YII")));
    }

    #[test]
    fn parse_and_display() {
        let s = p("-iXYZI");
        assert_eq!(s.to_string(), "-iXYZI");
        assert_eq!(s.num_qubits(), 4);
        assert_eq!(s.letter(1), Pauli::Y);
        assert!(!s.is_hermitian());
        assert!("".parse::<PauliString>().is_err());
        assert!("XQ".parse::<PauliString>().is_err());
        assert!("+".parse::<PauliString>().is_err());
    }

    #[test]
    fn sparse_rejects_duplicates_and_range() {
        assert!(matches!(PauliString::from_sparse(3, &[(0, Pauli::X), (0, Pauli::Z)]), Err(Error::DuplicateQubit(0))));
        assert!(matches!(PauliString::from_sparse(3, &[(3, Pauli::X)]), Err(Error::QubitOutOfRange { .. })));
    }

    #[test]
    fn half_projector_is_idempotent() {
        let pr = PauliSum::half_projector(&p("ZZ"), 1.0).unwrap();
        assert!(pr.is_idempotent(1e-12).unwrap());
        let bad = PauliSum::new(2, vec![(1.0, p("ZZ"))]).unwrap();
        assert!(!bad.is_idempotent(1e-12).unwrap());
    }
}
