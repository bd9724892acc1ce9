//! Bit-packed Pauli operators with exact phases.
//!
//! An operator is stored as `i^phase * X^x Z^z` (tensor product over qubits,
//! X factor before Z on each qubit). With this convention `Y = i X Z`, so a
//! Hermitian `Y` carries phase 1.

use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::qla::{CMatrix, CVector, ONE, ZERO};

const WORD: usize = 64;

fn words(n: usize) -> usize {
    n.div_ceil(WORD).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SinglePauli {
    I,
    X,
    Y,
    Z,
}

impl SinglePauli {
    pub const ALL: [SinglePauli; 4] = [SinglePauli::I, SinglePauli::X, SinglePauli::Z, SinglePauli::Y];

    fn bits(self) -> (bool, bool) {
        match self {
            SinglePauli::I => (false, false),
            SinglePauli::X => (true, false),
            SinglePauli::Z => (false, true),
            SinglePauli::Y => (true, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => SinglePauli::I,
            (true, false) => SinglePauli::X,
            (false, true) => SinglePauli::Z,
            (true, true) => SinglePauli::Y,
        }
    }

    fn letter(self) -> char {
        match self {
            SinglePauli::I => 'I',
            SinglePauli::X => 'X',
            SinglePauli::Y => 'Y',
            SinglePauli::Z => 'Z',
        }
    }
}

/// `i^phase` as a complex number.
pub fn phase_value(phase: u8) -> Complex64 {
    match phase & 3 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliOperator {
    n: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    /// Power of `i` multiplying `X^x Z^z`.
    phase: u8,
}

impl PauliOperator {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x: vec![0; words(n)],
            z: vec![0; words(n)],
            phase: 0,
        }
    }

    /// Hermitian single-qubit Pauli `p` on qubit `q`.
    pub fn single(n: usize, q: usize, p: SinglePauli) -> Self {
        let mut op = Self::identity(n);
        op.set(q, p);
        op
    }

    /// Builds from a product of letters, e.g. `[X, Z, Z]`, each letter taken
    /// Hermitian.
    pub fn from_letters(letters: &[SinglePauli]) -> Self {
        let mut op = Self::identity(letters.len());
        for (q, &p) in letters.iter().enumerate() {
            op.set(q, p);
        }
        op
    }

    /// Sets qubit `q` to the Hermitian single-qubit Pauli `p`, keeping the
    /// operator's overall sign relative to the letter representation.
    pub fn set(&mut self, q: usize, p: SinglePauli) {
        assert!(q < self.n, "qubit {q} out of range for n = {}", self.n);
        let old = self.get(q);
        let (x, z) = p.bits();
        let (w, b) = (q / WORD, q % WORD);
        self.x[w] = (self.x[w] & !(1 << b)) | ((x as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((z as u64) << b);
        let y_delta = (p == SinglePauli::Y) as i8 - (old == SinglePauli::Y) as i8;
        self.phase = ((self.phase as i8 + y_delta).rem_euclid(4)) as u8;
    }

    pub fn get(&self, q: usize) -> SinglePauli {
        SinglePauli::from_bits(self.x_bit(q), self.z_bit(q))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn x_bit(&self, q: usize) -> bool {
        self.x[q / WORD] >> (q % WORD) & 1 == 1
    }

    pub fn z_bit(&self, q: usize) -> bool {
        self.z[q / WORD] >> (q % WORD) & 1 == 1
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    /// Exponent of `i` in the `i^phase X^x Z^z` form.
    pub fn phase(&self) -> u8 {
        self.phase
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase & 3;
        self
    }

    fn y_count(&self) -> u32 {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x & z).count_ones())
            .sum()
    }

    /// Sign in front of the letter string: `i^sign_phase * (letters)`.
    pub fn sign_phase(&self) -> u8 {
        ((self.phase as u32 + 4 - self.y_count() % 4) % 4) as u8
    }

    pub fn weight(&self) -> usize {
        self.x
            .iter()
            .zip(&self.z)
            .map(|(x, z)| (x | z).count_ones() as usize)
            .sum()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.x_bit(q) || self.z_bit(q)).collect()
    }

    pub fn is_identity_up_to_phase(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    /// True when the operator squares to `+I`.
    pub fn is_hermitian(&self) -> bool {
        // (i^p X^x Z^z)^2 = i^(2p) (-1)^(x.z)
        (self.phase as u32 + self.y_count()).is_multiple_of(2)
    }

    /// Zero-phase symplectic bits agree.
    pub fn same_up_to_phase(&self, other: &Self) -> bool {
        self.n == other.n && self.x == other.x && self.z == other.z
    }

    pub fn commutes(&self, other: &Self) -> Result<bool> {
        if self.n != other.n {
            return Err(Error::Shape(format!(
                "Pauli operators on {} and {} qubits",
                self.n, other.n
            )));
        }
        Ok(self.symplectic_product(other) == 0)
    }

    /// Symplectic inner product `x.z' + z.x'` over GF(2).
    pub fn symplectic_product(&self, other: &Self) -> u32 {
        let mut acc = 0u32;
        for w in 0..self.x.len() {
            acc ^= ((self.x[w] & other.z[w]).count_ones() ^ (self.z[w] & other.x[w]).count_ones()) & 1;
        }
        acc
    }

    /// Operator product `self * other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        if self.n != other.n {
            return Err(Error::Shape(format!(
                "Pauli operators on {} and {} qubits",
                self.n, other.n
            )));
        }
        // Z^z1 X^x2 = (-1)^(z1.x2) X^x2 Z^z1
        let swaps: u32 = self
            .z
            .iter()
            .zip(&other.x)
            .map(|(z, x)| (z & x).count_ones())
            .sum();
        let phase = ((self.phase as u32 + other.phase as u32 + 2 * swaps) % 4) as u8;
        Ok(Self {
            n: self.n,
            x: self.x.iter().zip(&other.x).map(|(a, b)| a ^ b).collect(),
            z: self.z.iter().zip(&other.z).map(|(a, b)| a ^ b).collect(),
            phase,
        })
    }

    pub fn adjoint(&self) -> Self {
        // (i^p X^x Z^z)^dagger = i^-p Z^z X^x = i^-p (-1)^(x.z) X^x Z^z
        let phase = ((4 - self.phase as u32) + 2 * self.y_count()) % 4;
        Self {
            phase: phase as u8,
            ..self.clone()
        }
    }

    /// Copies this operator onto `n_total` qubits, qubit `q` landing on
    /// `positions[q]`.
    pub fn embed(&self, n_total: usize, positions: &[usize]) -> Self {
        assert_eq!(positions.len(), self.n);
        let mut out = Self::identity(n_total);
        for (q, &p) in positions.iter().enumerate() {
            let (w, b) = (p / WORD, p % WORD);
            out.x[w] |= (self.x_bit(q) as u64) << b;
            out.z[w] |= (self.z_bit(q) as u64) << b;
        }
        out.phase = self.phase;
        out
    }

    /// Appends `extra` identity qubits on the right.
    pub fn extend(&self, extra: usize) -> Self {
        let positions: Vec<usize> = (0..self.n).collect();
        self.embed(self.n + extra, &positions)
    }

    /// Sub-operator on `qubits` (in the listed order) with the same sign in
    /// front of its letters.
    pub fn restrict(&self, qubits: &[usize]) -> Self {
        let mut out = Self::identity(qubits.len());
        for (j, &q) in qubits.iter().enumerate() {
            let (w, b) = (j / WORD, j % WORD);
            out.x[w] |= (self.x_bit(q) as u64) << b;
            out.z[w] |= (self.z_bit(q) as u64) << b;
        }
        out.phase = ((self.sign_phase() as u32 + out.y_count()) % 4) as u8;
        out
    }

    /// Masks over basis-state indices (qubit 0 is the most significant bit).
    pub fn basis_masks(&self) -> (usize, usize) {
        assert!(self.n < usize::BITS as usize);
        let mut xm = 0usize;
        let mut zm = 0usize;
        for q in 0..self.n {
            let bit = 1usize << (self.n - 1 - q);
            if self.x_bit(q) {
                xm |= bit;
            }
            if self.z_bit(q) {
                zm |= bit;
            }
        }
        (xm, zm)
    }

    /// `self |v>` without building the matrix.
    pub fn apply(&self, v: &CVector) -> CVector {
        assert_eq!(v.len(), 1 << self.n, "state dimension mismatch");
        let (xm, zm) = self.basis_masks();
        let ph = phase_value(self.phase);
        let mut out = CVector::zeros(v.len());
        for (y, amp) in v.iter().enumerate() {
            let sign = if (y & zm).count_ones() % 2 == 1 { -ph } else { ph };
            out[y ^ xm] = amp * sign;
        }
        out
    }

    pub fn to_matrix(&self) -> CMatrix {
        let dim = 1usize << self.n;
        let (xm, zm) = self.basis_masks();
        let ph = phase_value(self.phase);
        let mut m = CMatrix::zeros(dim, dim);
        for y in 0..dim {
            m[(y ^ xm, y)] = if (y & zm).count_ones() % 2 == 1 { -ph } else { ph };
        }
        m
    }

    /// Letter string without the sign, e.g. `XZZXI`.
    pub fn letters(&self) -> String {
        (0..self.n).map(|q| self.get(q).letter()).collect()
    }

    /// All Paulis of weight exactly `w` supported inside `support`, each
    /// letter Hermitian.
    pub fn enumerate_weight(n: usize, support: &[usize], w: usize) -> Box<dyn Iterator<Item = Self> + '_> {
        if w == 0 {
            return Box::new(std::iter::once(Self::identity(n)));
        }
        Box::new(support.iter().copied().combinations(w).flat_map(move |qs| {
            (0..qs.len())
                .map(|_| [SinglePauli::X, SinglePauli::Y, SinglePauli::Z].into_iter())
                .multi_cartesian_product()
                .map(move |choice| {
                    let mut op = Self::identity(n);
                    for (&q, &p) in qs.iter().zip(&choice) {
                        op.set(q, p);
                    }
                    op
                })
        }))
    }
}

fn sign_str(phase: u8) -> &'static str {
    match phase & 3 {
        0 => "+",
        1 => "+i",
        2 => "-",
        _ => "-i",
    }
}

pub fn parse_sign(s: &str) -> Result<u8> {
    match s.trim() {
        "" | "+" | "+1" => Ok(0),
        "i" | "+i" => Ok(1),
        "-" | "-1" => Ok(2),
        "-i" => Ok(3),
        other => Err(Error::Parse(format!("unknown phase {other:?}"))),
    }
}

impl fmt::Display for PauliOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = self.sign_phase();
        if sign != 0 {
            write!(f, "{}", sign_str(sign))?;
        }
        write!(f, "{}", self.letters())
    }
}

impl FromStr for PauliOperator {
    type Err = Error;

    /// Accepts an optional sign prefix (`+`, `-`, `+i`, `-i`, `i`) followed by
    /// letters `I X Y Z`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let split = s
            .find(|ch: char| matches!(ch.to_ascii_uppercase(), 'X' | 'Y' | 'Z') || ch == 'I')
            .unwrap_or(s.len());
        let (sign, body) = s.split_at(split);
        let sign = parse_sign(sign)?;
        let letters = body
            .chars()
            .map(|ch| match ch.to_ascii_uppercase() {
                'I' => Ok(SinglePauli::I),
                'X' => Ok(SinglePauli::X),
                'Y' => Ok(SinglePauli::Y),
                'Z' => Ok(SinglePauli::Z),
                other => Err(Error::Parse(format!("bad Pauli letter {other:?} in {s:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if letters.is_empty() {
            return Err(Error::Parse(format!("empty Pauli string {s:?}")));
        }
        let op = Self::from_letters(&letters);
        let phase = (op.phase + sign) % 4;
        Ok(op.with_phase(phase))
    }
}

/// Dense single-qubit matrix for `X^x Z^z`.
fn local_matrix(x: bool, z: bool) -> CMatrix {
    let xz = match (x, z) {
        (false, false) => [ONE, ZERO, ZERO, ONE],
        (true, false) => [ZERO, ONE, ONE, ZERO],
        (false, true) => [ONE, ZERO, ZERO, -ONE],
        // XZ = [[0,-1],[1,0]]
        (true, true) => [ZERO, -ONE, ONE, ZERO],
    };
    CMatrix::from_row_slice(2, 2, &xz)
}

/// Dense matrix built as `phase * (tensor product of per-qubit X^x Z^z)`.
pub fn pauli_to_matrix(p: &PauliOperator) -> CMatrix {
    let mut m = CMatrix::identity(1, 1);
    for q in 0..p.n() {
        m = m.kronecker(&local_matrix(p.x_bit(q), p.z_bit(q)));
    }
    m * phase_value(p.phase())
}
