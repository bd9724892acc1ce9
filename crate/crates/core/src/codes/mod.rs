//! Explicit-basis quantum codes, their JSON form, paper fixtures and
//! brute-force minimum distance.

pub mod fixtures;
pub mod pauli;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qla::{self, c, CMatrix, CVector, Tolerances};

pub use fixtures::{fixture, Fixture};
pub use pauli::{pauli_to_matrix, PauliOperator, SinglePauli};

/// Deviation above which `PEP` is treated as not proportional to `P`.
pub const DETECTION_TOL: f64 = 1e-8;

const ORTHONORMALITY_TOL: f64 = 1e-10;

/// A `K`-dimensional subspace of `n` qubits, given by an orthonormal basis.
#[derive(Clone, Debug)]
pub struct QuantumCode {
    n: usize,
    basis: Vec<CVector>,
    label: String,
}

impl QuantumCode {
    pub fn new(n: usize, basis: Vec<CVector>, label: impl Into<String>) -> Result<Self> {
        qla::check_dims(1 << n, 1, qla::DEFAULT_DIM_CAP)?;
        if basis.is_empty() {
            return Err(Error::Contract("a code needs at least one codeword".into()));
        }
        if let Some(v) = basis.iter().find(|v| v.len() != 1 << n) {
            return Err(Error::Shape(format!(
                "codeword of length {} in a {n}-qubit code",
                v.len()
            )));
        }
        let gram = gram(&basis);
        let defect = (&gram - CMatrix::identity(basis.len(), basis.len())).camax();
        if defect > ORTHONORMALITY_TOL {
            return Err(Error::Contract(format!(
                "basis is not orthonormal (max Gram deviation {defect:.3e})"
            )));
        }
        Ok(Self {
            n,
            basis,
            label: label.into(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[CVector] {
        &self.basis
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    /// Applies a qubit relabeling: qubit `q` of `self` becomes qubit
    /// `perm[q]` of the result.
    pub fn permute_qubits(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.n];
        if perm.len() != self.n || perm.iter().any(|&p| p >= self.n || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::Shape(format!("{perm:?} is not a permutation of {} qubits", self.n)));
        }
        let n = self.n;
        let map = |idx: usize| {
            (0..n).fold(0usize, |acc, q| {
                if idx >> (n - 1 - q) & 1 == 1 {
                    acc | 1 << (n - 1 - perm[q])
                } else {
                    acc
                }
            })
        };
        let basis = self
            .basis
            .iter()
            .map(|v| {
                let mut out = CVector::zeros(v.len());
                for (idx, amp) in v.iter().enumerate() {
                    out[map(idx)] = *amp;
                }
                out
            })
            .collect();
        Self::new(n, basis, format!("{} (permuted)", self.label))
    }

    /// `K x K` matrix `<i|E|j>` of a Pauli restricted to the code.
    pub fn logical_matrix(&self, e: &PauliOperator) -> CMatrix {
        let images: Vec<CVector> = self.basis.iter().map(|v| e.apply(v)).collect();
        CMatrix::from_fn(self.k_dim(), self.k_dim(), |i, j| self.basis[i].dotc(&images[j]))
    }

    /// `||PEP - (Tr(PEP)/K) P||_F`, computed in the code basis.
    pub fn detection_deviation(&self, e: &PauliOperator) -> f64 {
        let g = self.logical_matrix(e);
        let k = self.k_dim();
        let mean = qla::trace(&g) / c(k as f64, 0.0);
        (g - CMatrix::identity(k, k) * mean).norm()
    }
}

fn gram(vs: &[CVector]) -> CMatrix {
    CMatrix::from_fn(vs.len(), vs.len(), |i, j| vs[i].dotc(&vs[j]))
}

/// Orthogonal projector `sum_i |i><i|` onto the code space.
pub fn projector(code: &QuantumCode) -> CMatrix {
    let mut p = CMatrix::zeros(code.dim(), code.dim());
    for v in code.basis() {
        p += v * v.adjoint();
    }
    p
}

/// Result of a bounded distance search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum Distance {
    Exact(usize),
    /// No detectable-failure Pauli up to the searched weight.
    AtLeast(usize),
}

impl Distance {
    /// The exact value, or the lower bound.
    pub fn value(self) -> usize {
        match self {
            Distance::Exact(d) | Distance::AtLeast(d) => d,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Exact(d) => write!(f, "{d}"),
            Distance::AtLeast(d) => write!(f, ">= {d}"),
        }
    }
}

/// Smallest weight of a Pauli `E` with `PEP` not proportional to `P`,
/// searched exhaustively up to `max_weight`.
pub fn min_distance(code: &QuantumCode, max_weight: usize) -> Result<Distance> {
    let all: Vec<usize> = (0..code.n()).collect();
    min_distance_on(code, &all, max_weight)
}

/// [`min_distance`] with errors confined to `support`, e.g. the sender's
/// qubits of an entanglement-assisted code.
pub fn min_distance_on(code: &QuantumCode, support: &[usize], max_weight: usize) -> Result<Distance> {
    if max_weight > support.len() {
        return Err(Error::Contract(format!(
            "max_weight {max_weight} exceeds the {} available qubits",
            support.len()
        )));
    }
    if support.iter().any(|&q| q >= code.n()) {
        return Err(Error::Shape(format!("support {support:?} outside {} qubits", code.n())));
    }
    qla::check_dims(code.dim(), 1, Tolerances::default().dim_cap)?;
    for w in 1..=max_weight {
        let errors: Vec<PauliOperator> = PauliOperator::enumerate_weight(code.n(), support, w).collect();
        let detected = errors
            .par_iter()
            .any(|e| code.detection_deviation(e) > DETECTION_TOL);
        if detected {
            return Ok(Distance::Exact(w));
        }
    }
    Ok(Distance::AtLeast(max_weight + 1))
}

/// Dicke state `|D_i^n>`: uniform superposition of weight-`i` bitstrings.
pub fn dicke(n: usize, i: usize) -> Result<CVector> {
    if i > n {
        return Err(Error::Contract(format!("Dicke weight {i} exceeds n = {n}")));
    }
    qla::check_dims(1 << n, 1, qla::DEFAULT_DIM_CAP)?;
    let count = binomial(n, i) as f64;
    let amp = c(1.0 / count.sqrt(), 0.0);
    Ok(CVector::from_fn(1 << n, |idx, _| {
        if idx.count_ones() as usize == i {
            amp
        } else {
            qla::ZERO
        }
    }))
}

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u64, |acc, j| acc * (n - j) as u64 / (j + 1) as u64)
}

/// EA part of a parameter tuple `((n_sent, K, d; C))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EaParameters {
    pub n_sent: usize,
    pub k_dim: usize,
    pub d: usize,
    /// Dimension of the receiver's share.
    pub c_dim: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeParameters {
    pub n: usize,
    pub k_dim: usize,
    pub d: usize,
    pub ea: Option<EaParameters>,
}

fn log2_exact(x: usize) -> Option<usize> {
    x.is_power_of_two().then(|| x.trailing_zeros() as usize)
}

impl CodeParameters {
    /// `[[n,k,d;c]]` form when both `K` and `C` are powers of two.
    pub fn stabilizer_form(&self) -> Option<String> {
        match self.ea {
            Some(ea) => Some(format!(
                "[[{},{},{};{}]]",
                ea.n_sent,
                log2_exact(ea.k_dim)?,
                ea.d,
                log2_exact(ea.c_dim)?
            )),
            None => Some(format!("[[{},{},{}]]", self.n, log2_exact(self.k_dim)?, self.d)),
        }
    }
}

impl fmt::Display for CodeParameters {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ea {
            Some(ea) => write!(f, "(({},{},{};{}))", ea.n_sent, ea.k_dim, ea.d, ea.c_dim),
            None => write!(f, "(({},{},{}))", self.n, self.k_dim, self.d),
        }
    }
}

/// One sparse amplitude in the code JSON format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeJson {
    pub bits: String,
    pub re: f64,
    pub im: f64,
}

/// `{ "n", "k_dim", "label", "basis": [[{bits, re, im}, ...], ...] }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CodeJson {
    pub n: usize,
    pub k_dim: usize,
    #[serde(default)]
    pub label: String,
    pub basis: Vec<Vec<AmplitudeJson>>,
}

impl CodeJson {
    pub fn from_code(code: &QuantumCode) -> Self {
        let n = code.n();
        let basis = code
            .basis()
            .iter()
            .map(|v| {
                v.iter()
                    .enumerate()
                    .filter(|(_, a)| a.norm() > 0.0)
                    .map(|(idx, a)| AmplitudeJson {
                        bits: format!("{idx:0n$b}"),
                        re: a.re,
                        im: a.im,
                    })
                    .collect()
            })
            .collect();
        Self {
            n,
            k_dim: code.k_dim(),
            label: code.label().to_string(),
            basis,
        }
    }

    pub fn to_code(&self) -> Result<QuantumCode> {
        if self.basis.len() != self.k_dim {
            return Err(Error::Parse(format!(
                "k_dim = {} but {} codewords listed",
                self.k_dim,
                self.basis.len()
            )));
        }
        qla::check_dims(1 << self.n.min(63), 1, qla::DEFAULT_DIM_CAP)?;
        let basis = self
            .basis
            .iter()
            .map(|amps| {
                let mut v = CVector::zeros(1 << self.n);
                for a in amps {
                    if a.bits.len() != self.n || !a.bits.chars().all(|ch| ch == '0' || ch == '1') {
                        return Err(Error::Parse(format!(
                            "bits {:?} is not a length-{} bitstring",
                            a.bits, self.n
                        )));
                    }
                    let idx = usize::from_str_radix(&a.bits, 2).expect("validated bitstring");
                    v[idx] += c(a.re, a.im);
                }
                Ok(v)
            })
            .collect::<Result<Vec<_>>>()?;
        QuantumCode::new(self.n, basis, self.label.clone())
    }
}

pub fn code_to_json(code: &QuantumCode) -> Result<String> {
    Ok(serde_json::to_string_pretty(&CodeJson::from_code(code))?)
}

pub fn code_from_json(text: &str) -> Result<QuantumCode> {
    let parsed: CodeJson = serde_json::from_str(text)?;
    parsed.to_code()
}
