//! Stabilizer groups over GF(2): symplectic Gram-Schmidt, restriction to
//! qubit subsets, erasure correctability, the entanglement-assisted
//! extension and codeword synthesis.

use serde::{Deserialize, Serialize};

use crate::codes::pauli::{parse_sign, PauliOperator};
use crate::codes::{self, CodeParameters, EaParameters, QuantumCode};
use crate::error::{Error, Result};
use crate::qla::{self, CVector, Tolerances};

/// Qubit count up to which logical operators are enumerated explicitly.
pub const LOGICAL_ENUMERATION_CAP: usize = 12;

/// Dense GF(2) matrix with rows packed into `u64` words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<Vec<u64>>,
}

fn word_count(bits: usize) -> usize {
    bits.div_ceil(64).max(1)
}

impl BitMatrix {
    pub fn new(cols: usize) -> Self {
        Self { cols, rows: Vec::new() }
    }

    pub fn from_rows(cols: usize, rows: impl IntoIterator<Item = Vec<bool>>) -> Self {
        let mut m = Self::new(cols);
        for r in rows {
            m.push_bools(&r);
        }
        m
    }

    pub fn push_bools(&mut self, bits: &[bool]) {
        assert_eq!(bits.len(), self.cols, "row length mismatch");
        let mut row = vec![0u64; word_count(self.cols)];
        for (j, &b) in bits.iter().enumerate() {
            if b {
                row[j / 64] |= 1 << (j % 64);
            }
        }
        self.rows.push(row);
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.rows[i][j / 64] >> (j % 64) & 1 == 1
    }

    /// Row-reduces and returns the pivot columns, one per nonzero row.
    fn eliminate(rows: &mut [Vec<u64>], cols: usize, mut track: Option<&mut [Vec<u64>]>) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for j in 0..cols {
            let (w, b) = (j / 64, j % 64);
            let Some(p) = (r..rows.len()).find(|&i| rows[i][w] >> b & 1 == 1) else {
                continue;
            };
            rows.swap(r, p);
            if let Some(t) = track.as_deref_mut() {
                t.swap(r, p);
            }
            for i in 0..rows.len() {
                if i != r && rows[i][w] >> b & 1 == 1 {
                    let (src, dst) = if i < r {
                        let (lo, hi) = rows.split_at_mut(r);
                        (&hi[0], &mut lo[i])
                    } else {
                        let (lo, hi) = rows.split_at_mut(i);
                        (&lo[r], &mut hi[0])
                    };
                    dst.iter_mut().zip(src).for_each(|(d, s)| *d ^= s);
                    if let Some(t) = track.as_deref_mut() {
                        let src = t[r].clone();
                        t[i].iter_mut().zip(&src).for_each(|(d, s)| *d ^= s);
                    }
                }
            }
            pivots.push(j);
            r += 1;
            if r == rows.len() {
                break;
            }
        }
        pivots
    }

    pub fn rank(&self) -> usize {
        let mut rows = self.rows.clone();
        Self::eliminate(&mut rows, self.cols, None).len()
    }

    /// Basis of `{c : c^T M = 0}`, each vector of length `n_rows`.
    pub fn left_kernel(&self) -> Vec<Vec<bool>> {
        let m = self.rows.len();
        let mut rows = self.rows.clone();
        let mut track: Vec<Vec<u64>> = (0..m)
            .map(|i| {
                let mut t = vec![0u64; word_count(m)];
                t[i / 64] |= 1 << (i % 64);
                t
            })
            .collect();
        let rank = Self::eliminate(&mut rows, self.cols, Some(&mut track)).len();
        track[rank..]
            .iter()
            .map(|t| (0..m).map(|i| t[i / 64] >> (i % 64) & 1 == 1).collect())
            .collect()
    }

    pub fn in_row_space(&self, bits: &[bool]) -> bool {
        let mut with = self.clone();
        with.push_bools(bits);
        with.rank() == self.rank()
    }
}

/// Symplectic bit vector `(x_q for q in qubits) ++ (z_q for q in qubits)`.
pub fn symplectic_bits(p: &PauliOperator, qubits: &[usize]) -> Vec<bool> {
    qubits
        .iter()
        .map(|&q| p.x_bit(q))
        .chain(qubits.iter().map(|&q| p.z_bit(q)))
        .collect()
}

fn symplectic_matrix(ops: &[PauliOperator], qubits: &[usize]) -> BitMatrix {
    BitMatrix::from_rows(2 * qubits.len(), ops.iter().map(|p| symplectic_bits(p, qubits)))
}

/// Drops an `i` from the sign of a product that came out anti-Hermitian.
fn hermitianize(p: PauliOperator) -> PauliOperator {
    if p.is_hermitian() {
        p
    } else {
        let phase = p.phase();
        p.with_phase(phase + 3)
    }
}

/// A Pauli group given by independent Hermitian generators, possibly
/// nonabelian.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StabilizerGroup {
    n: usize,
    generators: Vec<PauliOperator>,
    abelian: bool,
}

impl StabilizerGroup {
    pub fn new(n: usize, generators: Vec<PauliOperator>) -> Result<Self> {
        if let Some(g) = generators.iter().find(|g| g.n() != n) {
            return Err(Error::Shape(format!("generator {g} is not on {n} qubits")));
        }
        if let Some(g) = generators.iter().find(|g| !g.is_hermitian()) {
            return Err(Error::InvalidStabilizer(format!("generator {g} is not Hermitian")));
        }
        let all: Vec<usize> = (0..n).collect();
        let bits = symplectic_matrix(&generators, &all);
        if bits.rank() < generators.len() {
            let kernel = bits.left_kernel();
            let product = combine(n, &generators, &kernel[0]);
            let reason = match product.phase() {
                2 => "a product of generators equals -I",
                1 | 3 => "a product of generators equals a multiple of iI",
                _ => "generators are dependent",
            };
            return Err(Error::InvalidStabilizer(reason.into()));
        }
        let abelian = generators
            .iter()
            .enumerate()
            .all(|(i, g)| generators[i + 1..].iter().all(|h| g.symplectic_product(h) == 0));
        Ok(Self { n, generators, abelian })
    }

    /// Parses generator strings such as `XZZXI` or `-ZYYZI`.
    pub fn from_strings<S: AsRef<str>>(gens: &[S]) -> Result<Self> {
        let ops = gens
            .iter()
            .map(|s| s.as_ref().parse::<PauliOperator>())
            .collect::<Result<Vec<_>>>()?;
        let n = ops.first().map(PauliOperator::n).ok_or_else(|| {
            Error::Parse("at least one generator is required".into())
        })?;
        Self::new(n, ops)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliOperator] {
        &self.generators
    }

    /// Number of independent generators.
    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn is_abelian(&self) -> bool {
        self.abelian
    }

    /// All `2^m` generator products; only meaningful for small groups.
    pub fn elements(&self) -> Result<Vec<PauliOperator>> {
        let m = self.generators.len();
        if m > 20 {
            return Err(Error::Size(format!("refusing to list 2^{m} group elements")));
        }
        Ok((0..1usize << m)
            .map(|mask| {
                let pick: Vec<bool> = (0..m).map(|i| mask >> i & 1 == 1).collect();
                combine(self.n, &self.generators, &pick)
            })
            .collect())
    }

    /// Whether `p` equals a group element up to phase.
    pub fn contains_up_to_phase(&self, p: &PauliOperator) -> bool {
        let all: Vec<usize> = (0..self.n).collect();
        symplectic_matrix(&self.generators, &all).in_row_space(&symplectic_bits(p, &all))
    }

    /// Same GF(2) row space as `other`, ignoring phases.
    pub fn same_row_space(&self, other: &Self) -> bool {
        if self.n != other.n {
            return false;
        }
        let all: Vec<usize> = (0..self.n).collect();
        let a = symplectic_matrix(&self.generators, &all);
        let mut both = a.clone();
        for g in &other.generators {
            both.push_bools(&symplectic_bits(g, &all));
        }
        let r = both.rank();
        r == a.rank() && r == other.generators.len()
    }

    fn require_abelian(&self, what: &str) -> Result<()> {
        if self.abelian {
            Ok(())
        } else {
            Err(Error::Contract(format!("{what} needs an abelian group")))
        }
    }
}

/// Product of the generators selected by `pick`, in order.
fn combine(n: usize, gens: &[PauliOperator], pick: &[bool]) -> PauliOperator {
    gens.iter()
        .zip(pick)
        .filter(|(_, &b)| b)
        .fold(PauliOperator::identity(n), |acc, (g, _)| {
            acc.compose(g).expect("generators share n")
        })
}

/// Commutation of two Paulis on the same number of qubits.
pub fn commutes(p: &PauliOperator, q: &PauliOperator) -> Result<bool> {
    p.commutes(q)
}

/// Generators regrouped into anticommuting pairs `(X~_i, Z~_i)` and
/// commuting isotropic generators.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymplecticForm {
    pub pairs: Vec<(PauliOperator, PauliOperator)>,
    pub isotropic: Vec<PauliOperator>,
}

impl SymplecticForm {
    pub fn c(&self) -> usize {
        self.pairs.len()
    }

    pub fn s(&self) -> usize {
        self.isotropic.len()
    }

    /// Pairs flattened as `X~_1, Z~_1, X~_2, ...` followed by the isotropic part.
    pub fn generators(&self) -> Vec<PauliOperator> {
        self.pairs
            .iter()
            .flat_map(|(x, z)| [x.clone(), z.clone()])
            .chain(self.isotropic.iter().cloned())
            .collect()
    }

    /// Checks the canonical commutation relations exactly.
    pub fn relations_hold(&self) -> bool {
        let gens = self.generators();
        let c = self.c();
        gens.iter().enumerate().all(|(i, a)| {
            gens.iter().enumerate().all(|(j, b)| {
                let paired = i < 2 * c && j < 2 * c && i / 2 == j / 2 && i != j;
                (a.symplectic_product(b) == 1) == paired
            })
        })
    }
}

/// Scans generators in input order; the first anticommuting partner of the
/// leading generator forms a pair and the rest are cleaned against it.
pub fn symplectic_gram_schmidt(g: &StabilizerGroup) -> SymplecticForm {
    let mut remaining: Vec<PauliOperator> = g.generators.clone();
    let mut pairs = Vec::new();
    let mut isotropic = Vec::new();
    while !remaining.is_empty() {
        let head = remaining.remove(0);
        let Some(pos) = remaining.iter().position(|h| head.symplectic_product(h) == 1) else {
            isotropic.push(head);
            continue;
        };
        let partner = remaining.remove(pos);
        for k in remaining.iter_mut() {
            let mut cleaned = k.clone();
            if cleaned.symplectic_product(&head) == 1 {
                cleaned = cleaned.compose(&partner).expect("same n");
            }
            if k.symplectic_product(&partner) == 1 {
                cleaned = cleaned.compose(&head).expect("same n");
            }
            *k = hermitianize(cleaned);
        }
        pairs.push((head, partner));
    }
    SymplecticForm { pairs, isotropic }
}

/// Elements of an abelian group supported inside `subset` (0-based), as a
/// group of their own.
pub fn subgroup_on(g: &StabilizerGroup, subset: &[usize]) -> Result<StabilizerGroup> {
    g.require_abelian("subgroup_on")?;
    check_subset(g.n, subset)?;
    let outside: Vec<usize> = (0..g.n).filter(|q| !subset.contains(q)).collect();
    let kernel = symplectic_matrix(&g.generators, &outside).left_kernel();
    let gens = kernel
        .iter()
        .map(|pick| combine(g.n, &g.generators, pick))
        .collect();
    StabilizerGroup::new(g.n, gens)
}

/// `s_B`: log2 of the number of group elements supported inside `subset`.
pub fn subgroup_rank_on(g: &StabilizerGroup, subset: &[usize]) -> Result<usize> {
    check_subset(g.n, subset)?;
    let outside: Vec<usize> = (0..g.n).filter(|q| !subset.contains(q)).collect();
    Ok(g.rank() - symplectic_matrix(&g.generators, &outside).rank())
}

fn check_subset(n: usize, subset: &[usize]) -> Result<()> {
    let mut seen = vec![false; n];
    for &q in subset {
        if q >= n || std::mem::replace(&mut seen[q], true) {
            return Err(Error::Shape(format!("subset {subset:?} is not a set of qubits below {n}")));
        }
    }
    Ok(())
}

/// Erasure of `subset` is correctable iff every normalizer element supported
/// there is already a stabilizer. Both counts come from GF(2) ranks.
pub fn is_correctable_stab(g: &StabilizerGroup, subset: &[usize]) -> Result<bool> {
    g.require_abelian("is_correctable_stab")?;
    let normalizer_on_b = 2 * subset.len() - symplectic_matrix(&g.generators, subset).rank();
    Ok(normalizer_on_b == subgroup_rank_on(g, subset)?)
}

/// Every nontrivial logical operator supported inside `subset`, by direct
/// enumeration. Capped at [`LOGICAL_ENUMERATION_CAP`] qubits.
pub fn logicals_on(g: &StabilizerGroup, subset: &[usize]) -> Result<Vec<PauliOperator>> {
    g.require_abelian("logicals_on")?;
    check_subset(g.n, subset)?;
    if g.n > LOGICAL_ENUMERATION_CAP {
        return Err(Error::Size(format!(
            "logical enumeration is limited to {LOGICAL_ENUMERATION_CAP} qubits"
        )));
    }
    Ok((1..=subset.len())
        .flat_map(|w| PauliOperator::enumerate_weight(g.n, subset, w))
        .filter(|p| g.generators.iter().all(|s| s.symplectic_product(p) == 0))
        .filter(|p| !g.contains_up_to_phase(p))
        .collect())
}

/// Appends one qubit per anticommuting pair, carrying `X` on `X~_i` and `Z`
/// on `Z~_i`. Returns the abelian extension together with `(c, s)`.
pub fn ea_extend(g: &StabilizerGroup) -> Result<(StabilizerGroup, usize, usize)> {
    let form = symplectic_gram_schmidt(g);
    let (c, s) = (form.c(), form.s());
    let n_ext = g.n + c;
    let mut gens = Vec::with_capacity(2 * c + s);
    for (i, (x, z)) in form.pairs.iter().enumerate() {
        let mut xe = x.extend(c);
        xe.set(g.n + i, crate::codes::SinglePauli::X);
        let mut ze = z.extend(c);
        ze.set(g.n + i, crate::codes::SinglePauli::Z);
        gens.push(xe);
        gens.push(ze);
    }
    gens.extend(form.isotropic.iter().map(|p| p.extend(c)));
    let ext = StabilizerGroup::new(n_ext, gens)?;
    if !ext.abelian {
        return Err(Error::Consistency("extended group is not abelian".into()));
    }
    Ok((ext, c, s))
}

/// Logical `Z` and `X` operators fixing a labeling of the code basis.
#[derive(Clone, Debug)]
pub struct LogicalBasis {
    pub z: Vec<PauliOperator>,
    pub x: Vec<PauliOperator>,
}

impl LogicalBasis {
    fn validate(&self, g: &StabilizerGroup) -> Result<()> {
        let k = g.n - g.rank();
        if self.z.len() != k || self.x.len() != k {
            return Err(Error::Contract(format!("need {k} logical Z and X operators")));
        }
        for p in self.z.iter().chain(&self.x) {
            if p.n() != g.n || !p.is_hermitian() {
                return Err(Error::Contract(format!(
                    "logical {p} is not a Hermitian operator on {} qubits",
                    g.n
                )));
            }
            if g.generators.iter().any(|s| s.symplectic_product(p) == 1) {
                return Err(Error::Contract(format!("logical {p} does not commute with the stabilizers")));
            }
        }
        let relations = (0..k).all(|i| {
            (0..k).all(|j| {
                self.z[i].symplectic_product(&self.z[j]) == 0
                    && self.x[i].symplectic_product(&self.x[j]) == 0
                    && (self.z[i].symplectic_product(&self.x[j]) == 1) == (i == j)
            })
        });
        if !relations {
            return Err(Error::Contract("logical operators violate the Pauli relations".into()));
        }
        Ok(())
    }
}

fn project(gens: &[PauliOperator], v: &CVector) -> CVector {
    gens.iter().fold(v.clone(), |acc, s| (&acc + s.apply(&acc)) * qla::c(0.5, 0.0))
}

fn joint_eigenspace(n: usize, gens: &[PauliOperator], expected: usize) -> Result<Vec<CVector>> {
    let dim = 1usize << n;
    qla::check_dims(dim, 1, qla::DEFAULT_DIM_CAP)?;
    let tol = Tolerances::default().rank;
    let columns = (0..dim).map(|j| {
        let mut e = CVector::zeros(dim);
        e[j] = qla::ONE;
        project(gens, &e)
    });
    let basis = qla::canonical_basis_from_columns(columns, expected, tol);
    if basis.len() != expected {
        return Err(Error::InvalidStabilizer(format!(
            "joint +1 eigenspace has dimension {} instead of {expected}",
            basis.len()
        )));
    }
    Ok(basis)
}

/// Orthonormal basis of the joint `+1` eigenspace. With a logical basis,
/// `|x~>` is `X~^x` applied to the state fixed by all logical `Z`s, logical
/// qubit 0 being the most significant bit of `x`.
pub fn codewords(g: &StabilizerGroup, logical_basis: Option<&LogicalBasis>) -> Result<QuantumCode> {
    g.require_abelian("codewords")?;
    let k = g.n - g.rank();
    let label = format!("stabilizer code on {} qubits", g.n);
    let Some(lb) = logical_basis else {
        let basis = joint_eigenspace(g.n, &g.generators, 1 << k)?;
        return QuantumCode::new(g.n, basis, label);
    };
    lb.validate(g)?;
    let mut with_z = g.generators.clone();
    with_z.extend(lb.z.iter().cloned());
    let zero = joint_eigenspace(g.n, &with_z, 1)?.remove(0);
    let basis = (0..1usize << k)
        .map(|x| {
            (0..k)
                .filter(|&q| x >> (k - 1 - q) & 1 == 1)
                .fold(zero.clone(), |v, q| lb.x[q].apply(&v))
        })
        .collect();
    QuantumCode::new(g.n, basis, label)
}

/// `[[n-b, k, d; b-s_B]]` for a correctable erasure set.
pub fn ea_params_stab(g: &StabilizerGroup, subset: &[usize]) -> Result<CodeParameters> {
    if !is_correctable_stab(g, subset)? {
        return Err(Error::NotCorrectable {
            subset: subset.iter().map(|q| q + 1).collect(),
        });
    }
    let code = codewords(g, None)?;
    let d = stabilizer_distance(&code)?;
    let b = subset.len();
    let s_b = subgroup_rank_on(g, subset)?;
    Ok(CodeParameters {
        n: g.n,
        k_dim: code.k_dim(),
        d,
        ea: Some(EaParameters {
            n_sent: g.n - b,
            k_dim: code.k_dim(),
            d,
            c_dim: 1 << (b - s_b),
        }),
    })
}

/// Exhaustive distance, reported as `n` when nothing up to weight `n` is
/// detected (e.g. a one-dimensional code).
fn stabilizer_distance(code: &QuantumCode) -> Result<usize> {
    Ok(codes::min_distance(code, code.n())?.value().min(code.n()))
}

/// `{ "n", "generators": ["XZZXI", ...], "phases": ["+", "-", ...] }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilizerJson {
    pub n: usize,
    pub generators: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<String>>,
}

impl StabilizerJson {
    pub fn from_group(g: &StabilizerGroup) -> Self {
        let phases: Vec<String> = g
            .generators
            .iter()
            .map(|p| match p.sign_phase() {
                0 => "+",
                1 => "+i",
                2 => "-",
                _ => "-i",
            }
            .to_string())
            .collect();
        Self {
            n: g.n,
            generators: g.generators.iter().map(PauliOperator::letters).collect(),
            phases: phases.iter().any(|s| s != "+").then_some(phases),
        }
    }

    pub fn to_group(&self) -> Result<StabilizerGroup> {
        if let Some(ph) = &self.phases {
            if ph.len() != self.generators.len() {
                return Err(Error::Parse(format!(
                    "{} phases for {} generators",
                    ph.len(),
                    self.generators.len()
                )));
            }
        }
        let ops = self
            .generators
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if s.len() != self.n {
                    return Err(Error::Parse(format!("generator {s:?} does not have {} letters", self.n)));
                }
                if s.starts_with(['+', '-']) {
                    return Err(Error::Parse(format!("generator {s:?}: put signs in \"phases\"")));
                }
                let p: PauliOperator = s.parse()?;
                let sign = match &self.phases {
                    Some(ph) => parse_sign(&ph[i])?,
                    None => 0,
                };
                let phase = p.phase();
                Ok(p.with_phase(phase + sign))
            })
            .collect::<Result<Vec<_>>>()?;
        StabilizerGroup::new(self.n, ops)
    }
}

pub fn stabilizer_from_json(text: &str) -> Result<StabilizerGroup> {
    serde_json::from_str::<StabilizerJson>(text)?.to_group()
}

pub fn stabilizer_to_json(g: &StabilizerGroup) -> Result<String> {
    Ok(serde_json::to_string_pretty(&StabilizerJson::from_group(g))?)
}
