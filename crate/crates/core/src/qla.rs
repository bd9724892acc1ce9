//! Dense complex linear algebra for few-qubit Hilbert spaces.
//!
//! Basis convention: computational basis states are indexed by bitstrings with
//! qubit 0 as the most significant bit, so `|q0 q1 ... q(n-1)>` reads left to
//! right like a Pauli string. Matrices are `nalgebra` types; Hermitian
//! eigensolves go through `faer`, whose solver stays finite on the highly
//! structured matrices codes produce. This module adds the qubit bookkeeping (tensoring, subsystem splits, partial
//! traces) and a deterministic gauge for degenerate spectra.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);
pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest row or column count any kernel routine will build.
pub const DEFAULT_DIM_CAP: usize = 1 << 20;

/// Numerical tolerances shared by the whole crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// Relative Hermiticity / unitarity slack.
    pub hermiticity: f64,
    /// Numerical-rank cutoff relative to the largest singular value.
    pub rank: f64,
    /// Absolute Frobenius slack for Knill-Laflamme and reconstruction residuals.
    pub residual: f64,
    pub dim_cap: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hermiticity: 1e-10,
            rank: 1e-9,
            residual: 1e-8,
            dim_cap: DEFAULT_DIM_CAP,
        }
    }
}

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Which side of a [`SubsystemSplit`] an operation refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// The erased / receiver set `B`.
    Erased,
    /// The complement of `B`, kept by the sender.
    Complement,
}

/// Bipartition of `n` qubits into a set `B` and its complement.
///
/// Qubit indices are 0-based. Both sides are stored ascending; the split
/// order used by reshapes is complement qubits first, then `B`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubsystemSplit {
    n: usize,
    erased: Vec<usize>,
    complement: Vec<usize>,
}

impl SubsystemSplit {
    pub fn new(n: usize, erased: &[usize]) -> Result<Self> {
        let mut b: Vec<usize> = erased.to_vec();
        b.sort_unstable();
        if b.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Shape(format!("duplicate qubit in subset {erased:?}")));
        }
        if let Some(&q) = b.iter().find(|&&q| q >= n) {
            return Err(Error::Shape(format!("qubit {q} out of range for n = {n}")));
        }
        let complement = (0..n).filter(|q| b.binary_search(q).is_err()).collect();
        Ok(Self { n, erased: b, complement })
    }

    /// Builds a split from 1-based qubit labels.
    pub fn from_one_based(n: usize, erased: &[usize]) -> Result<Self> {
        if erased.contains(&0) {
            return Err(Error::Shape("qubit labels are 1-based".into()));
        }
        let zero: Vec<usize> = erased.iter().map(|q| q - 1).collect();
        Self::new(n, &zero)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn erased(&self) -> &[usize] {
        &self.erased
    }

    pub fn complement(&self) -> &[usize] {
        &self.complement
    }

    pub fn side(&self, side: Side) -> &[usize] {
        match side {
            Side::Erased => &self.erased,
            Side::Complement => &self.complement,
        }
    }

    pub fn b(&self) -> usize {
        self.erased.len()
    }

    pub fn erased_dim(&self) -> usize {
        1 << self.erased.len()
    }

    pub fn complement_dim(&self) -> usize {
        1 << self.complement.len()
    }

    pub fn one_based_erased(&self) -> Vec<usize> {
        self.erased.iter().map(|q| q + 1).collect()
    }

    /// Full basis index of the state whose bits on `qubits` are `local`
    /// (first listed qubit most significant) and zero elsewhere.
    fn scatter(&self, qubits: &[usize], local: usize) -> usize {
        let m = qubits.len();
        qubits.iter().enumerate().fold(0, |acc, (j, &q)| {
            if (local >> (m - 1 - j)) & 1 == 1 {
                acc | (1 << (self.n - 1 - q))
            } else {
                acc
            }
        })
    }

    fn offsets(&self, side: Side) -> Vec<usize> {
        let qs = self.side(side);
        (0..1usize << qs.len()).map(|l| self.scatter(qs, l)).collect()
    }

    /// `perm[s] = original index` of split-order index `s`.
    pub fn permutation(&self) -> Vec<usize> {
        let keep = self.offsets(Side::Complement);
        let trace = self.offsets(Side::Erased);
        let mut perm = Vec::with_capacity(1 << self.n);
        for &k in &keep {
            for &t in &trace {
                perm.push(k | t);
            }
        }
        perm
    }

    /// Reorders amplitudes from the natural qubit order into split order.
    pub fn to_split_order(&self, v: &CVector) -> CVector {
        let perm = self.permutation();
        CVector::from_iterator(perm.len(), perm.iter().map(|&p| v[p]))
    }

    /// Inverse of [`Self::to_split_order`].
    pub fn from_split_order(&self, v: &CVector) -> CVector {
        let perm = self.permutation();
        let mut out = CVector::zeros(perm.len());
        for (s, &p) in perm.iter().enumerate() {
            out[p] = v[s];
        }
        out
    }

    /// Conjugates an operator in split order back to the natural qubit order.
    pub fn operator_from_split_order(&self, m: &CMatrix) -> CMatrix {
        let perm = self.permutation();
        let mut out = CMatrix::zeros(perm.len(), perm.len());
        for (r, &pr) in perm.iter().enumerate() {
            for (s, &ps) in perm.iter().enumerate() {
                out[(pr, ps)] = m[(r, s)];
            }
        }
        out
    }

    /// Reshapes a state into the `2^(n-b) x 2^b` coefficient matrix under the
    /// split order.
    pub fn reshape(&self, v: &CVector) -> Result<CMatrix> {
        if v.len() != 1 << self.n {
            return Err(Error::Shape(format!(
                "vector of length {} on a {}-qubit split",
                v.len(),
                self.n
            )));
        }
        let keep = self.offsets(Side::Complement);
        let trace = self.offsets(Side::Erased);
        Ok(CMatrix::from_fn(keep.len(), trace.len(), |r, s| {
            v[keep[r] | trace[s]]
        }))
    }
}

pub fn check_dims(rows: usize, cols: usize, cap: usize) -> Result<()> {
    if rows > cap || cols > cap {
        return Err(Error::Size(format!(
            "{rows}x{cols} exceeds the dimension cap {cap}"
        )));
    }
    Ok(())
}

/// Kronecker product with `a` as the left (more significant) factor.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    tensor_capped(a, b, DEFAULT_DIM_CAP)
}

pub fn tensor_capped(a: &CMatrix, b: &CMatrix, cap: usize) -> Result<CMatrix> {
    let rows = a.nrows().checked_mul(b.nrows());
    let cols = a.ncols().checked_mul(b.ncols());
    match (rows, cols) {
        (Some(r), Some(c)) => check_dims(r, c, cap)?,
        _ => return Err(Error::Size("tensor dimension overflow".into())),
    }
    Ok(a.kronecker(b))
}

pub fn tensor_vec(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// Reduced operator on the side not named by `traced`, kept qubits ascending.
pub fn partial_trace(rho: &CMatrix, split: &SubsystemSplit, traced: Side) -> Result<CMatrix> {
    let dim = 1usize << split.n();
    if !rho.is_square() || rho.nrows() != dim {
        return Err(Error::Shape(format!(
            "expected a {dim}x{dim} operator, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let kept_side = match traced {
        Side::Erased => Side::Complement,
        Side::Complement => Side::Erased,
    };
    let keep = split.offsets(kept_side);
    let trace = split.offsets(traced);
    Ok(CMatrix::from_fn(keep.len(), keep.len(), |r, s| {
        trace
            .iter()
            .map(|&t| rho[(keep[r] | t, keep[s] | t)])
            .sum()
    }))
}

/// Reduced state of a pure state, `Tr_traced |v><v|`, without forming `|v><v|`.
pub fn reduced_state(v: &CVector, split: &SubsystemSplit, traced: Side) -> Result<CMatrix> {
    let m = split.reshape(v)?;
    Ok(match traced {
        Side::Erased => &m * m.adjoint(),
        Side::Complement => (m.adjoint() * &m).transpose(),
    })
}

/// Frobenius distance of `m` from its adjoint.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

pub fn is_hermitian(m: &CMatrix, rel_tol: f64) -> bool {
    m.is_square() && hermiticity_defect(m) <= rel_tol * m.norm().max(1.0)
}

pub fn is_unitary(m: &CMatrix, rel_tol: f64) -> bool {
    m.is_square() && is_isometry(m, rel_tol)
}

pub fn is_isometry(m: &CMatrix, tol: f64) -> bool {
    let g = m.adjoint() * m;
    (g - CMatrix::identity(m.ncols(), m.ncols())).norm() <= tol * (m.ncols() as f64).max(1.0)
}

/// Multiplies `v` by the phase that makes its first entry of magnitude above
/// `tol` real and positive.
pub fn fix_phase(v: &mut CVector, tol: f64) {
    if let Some(p) = v.iter().find(|z| z.norm() > tol).copied() {
        let phase = p.conj() / p.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

/// Canonical orthonormal basis of the column space of an orthogonal projector.
///
/// Columns of `projector` are visited in index order; each one with a residual
/// above `tol` after removing the basis found so far joins the basis, then gets
/// its phase fixed. The result depends only on the subspace, not on how it was
/// computed.
pub fn canonical_basis(projector: &CMatrix, expected: usize, tol: f64) -> Vec<CVector> {
    canonical_basis_from_columns(
        projector.column_iter().map(|c| c.into_owned()),
        expected,
        tol,
    )
}

/// Streaming form of [`canonical_basis`]; stops pulling columns once
/// `expected` vectors are found.
pub fn canonical_basis_from_columns<It>(columns: It, expected: usize, tol: f64) -> Vec<CVector>
where
    It: IntoIterator<Item = CVector>,
{
    let mut basis: Vec<CVector> = Vec::with_capacity(expected);
    for mut v in columns {
        if basis.len() == expected {
            break;
        }
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dotc(&v);
                v -= b * overlap;
            }
        }
        let norm = v.norm();
        if norm > tol {
            v /= real(norm);
            fix_phase(&mut v, 1e-12);
            basis.push(v);
        }
    }
    basis
}

/// Replaces the columns of `vecs` within each run of equal `values` by the
/// canonical basis of the subspace they span.
fn canonicalize_blocks(values: &[f64], vecs: &mut CMatrix, block_tol: f64) {
    let mut start = 0;
    while start < values.len() {
        let mut end = start + 1;
        while end < values.len() && (values[start] - values[end]).abs() <= block_tol {
            end += 1;
        }
        let block = vecs.columns(start, end - start).into_owned();
        let proj = &block * block.adjoint();
        let basis = canonical_basis(&proj, end - start, 1e-6);
        if basis.len() == end - start {
            for (k, b) in basis.iter().enumerate() {
                vecs.set_column(start + k, b);
            }
        }
        start = end;
    }
}

/// Hermitian eigendecomposition.
#[derive(Clone, Debug)]
pub struct Eigen {
    /// Descending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors, column `k` for `values[k]`.
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn rank(&self, rel_tol: f64) -> usize {
        numerical_rank(&self.values.iter().map(|v| v.abs()).collect::<Vec<_>>(), rel_tol)
    }
}

pub fn eig_hermitian(m: &CMatrix) -> Result<Eigen> {
    eig_hermitian_tol(m, Tolerances::default().hermiticity)
}

fn check_hermitian(m: &CMatrix, herm_tol: f64) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!("{}x{} is not square", m.nrows(), m.ncols())));
    }
    let defect = hermiticity_defect(m);
    let scale = m.norm();
    if defect > herm_tol * scale.max(f64::MIN_POSITIVE) && defect > 1e-14 {
        return Err(Error::Contract(format!(
            "matrix is not Hermitian (defect {defect:.3e}, norm {scale:.3e})"
        )));
    }
    Ok(())
}

fn to_faer(m: &CMatrix) -> faer::Mat<Complex64> {
    // average with the adjoint so the solver sees an exactly Hermitian input
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5)
}

fn finite(values: &[f64]) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Consistency("eigensolver returned non-finite values".into()))
    }
}

/// Eigenpairs in descending order, before any gauge fixing.
fn raw_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let dim = m.nrows();
    if dim == 0 {
        return Ok((vec![], CMatrix::zeros(0, 0)));
    }
    let evd = to_faer(m)
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Consistency(format!("eigensolver failed: {e:?}")))?;
    let (w, u) = (evd.S().column_vector(), evd.U());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| w[b].re.total_cmp(&w[a].re));
    let values: Vec<f64> = order.iter().map(|&k| w[k].re).collect();
    finite(&values)?;
    let vectors = CMatrix::from_fn(dim, dim, |i, col| u[(i, order[col])]);
    Ok((values, vectors))
}

pub fn eig_hermitian_tol(m: &CMatrix, herm_tol: f64) -> Result<Eigen> {
    check_hermitian(m, herm_tol)?;
    let (values, mut vectors) = raw_eigen(m)?;
    let block_tol = 1e-9 * values.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1e-300);
    canonicalize_blocks(&values, &mut vectors, block_tol);
    Ok(Eigen { values, vectors })
}

/// Eigenvalues only, descending; much cheaper than [`eig_hermitian`] for
/// large matrices.
pub fn eigvals_hermitian_tol(m: &CMatrix, herm_tol: f64) -> Result<Vec<f64>> {
    check_hermitian(m, herm_tol)?;
    if m.nrows() == 0 {
        return Ok(vec![]);
    }
    let mut values: Vec<f64> = to_faer(m)
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Consistency(format!("eigensolver failed: {e:?}")))?;
    values.sort_by(|a, b| b.total_cmp(a));
    finite(&values)?;
    Ok(values)
}

/// Thin singular value decomposition `m = u diag(s) v^dagger`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMatrix,
    /// Descending.
    pub s: Vec<f64>,
    pub v: CMatrix,
    /// Number of singular values above the rank cutoff; the rest are reported
    /// but numerically zero.
    pub rank: usize,
}

pub fn numerical_rank(values: &[f64], rel_tol: f64) -> usize {
    let max = values.iter().fold(0.0f64, |a, &v| a.max(v));
    if max == 0.0 {
        return 0;
    }
    values.iter().filter(|&&v| v > rel_tol * max).count()
}

pub fn svd(m: &CMatrix) -> Result<Svd> {
    svd_tol(m, &Tolerances::default())
}

/// Thin SVD from `faer`; the right singular vectors of each cluster of
/// equal singular values are then put in a canonical gauge and `u` is
/// rebuilt from them as `m v / s`.
pub fn svd_tol(m: &CMatrix, tol: &Tolerances) -> Result<Svd> {
    check_dims(m.nrows(), m.ncols(), tol.dim_cap)?;
    let (rows, cols) = (m.nrows(), m.ncols());
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd {
            u: CMatrix::zeros(rows, 0),
            s: vec![],
            v: CMatrix::zeros(cols, 0),
            rank: 0,
        });
    }
    let fm = faer::Mat::from_fn(rows, cols, |i, j| m[(i, j)]);
    let dec = fm
        .thin_svd()
        .map_err(|e| Error::Consistency(format!("SVD failed: {e:?}")))?;
    let (sv, fv) = (dec.S().column_vector(), dec.V());
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| sv[b].re.total_cmp(&sv[a].re));
    let s: Vec<f64> = order.iter().map(|&j| sv[j].re.max(0.0)).collect();
    finite(&s)?;
    let rank = numerical_rank(&s, tol.rank);

    let mut v_head = CMatrix::from_fn(cols, rank, |i, col| fv[(i, order[col])]);
    if rank > 0 {
        let block_tol = tol.rank * s[0];
        canonicalize_blocks(&s[..rank], &mut v_head, block_tol);
    }
    let mv = m * &v_head;
    let mut u = CMatrix::zeros(rows, k);
    let mut v = CMatrix::zeros(cols, k);
    for j in 0..rank {
        v.set_column(j, &v_head.column(j));
        u.set_column(j, &(mv.column(j) / real(s[j])));
    }
    if rank < k {
        let complete = |head: CMatrix, dim: usize| -> Vec<CVector> {
            let proj = CMatrix::identity(dim, dim) - &head * head.adjoint();
            canonical_basis(&proj, k - rank, 1e-6)
        };
        let tail_v = complete(v.columns(0, rank).into_owned(), cols);
        let tail_u = complete(u.columns(0, rank).into_owned(), rows);
        for j in rank..k {
            v.set_column(j, &tail_v[j - rank]);
            u.set_column(j, &tail_u[j - rank]);
        }
    }
    Ok(Svd { u, s, v, rank })
}

impl Svd {
    pub fn reconstruct(&self) -> CMatrix {
        let sigma = CMatrix::from_diagonal(&CVector::from_iterator(
            self.s.len(),
            self.s.iter().map(|&x| real(x)),
        ));
        &self.u * sigma * self.v.adjoint()
    }
}

/// Moore-Penrose pseudoinverse, truncating singular values at
/// `rank_tol * s_max`.
pub fn pinv(m: &CMatrix, rank_tol: f64) -> Result<CMatrix> {
    if rank_tol.partial_cmp(&0.0) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::Contract(format!("rank_tol must be positive, got {rank_tol}")));
    }
    let tol = Tolerances {
        rank: rank_tol,
        ..Tolerances::default()
    };
    let d = svd_tol(m, &tol)?;
    let mut out = CMatrix::zeros(m.ncols(), m.nrows());
    for j in 0..d.rank {
        let vj = d.v.column(j);
        let uj = d.u.column(j);
        out += vj * uj.adjoint() * real(1.0 / d.s[j]);
    }
    Ok(out)
}

/// Principal square root of a positive semidefinite Hermitian matrix;
/// negative eigenvalues from round-off are clamped to zero.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let e = eig_hermitian(m)?;
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for (k, &w) in e.values.iter().enumerate() {
        if w > 0.0 {
            let v = e.vectors.column(k);
            out += v * v.adjoint() * real(w.sqrt());
        }
    }
    Ok(out)
}

pub fn ket(bits: &str) -> Result<CVector> {
    let n = bits.len();
    let idx = usize::from_str_radix(bits, 2)
        .map_err(|_| Error::Parse(format!("not a bitstring: {bits:?}")))?;
    let mut v = CVector::zeros(1 << n);
    v[idx] = ONE;
    Ok(v)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pauli_x() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
    }

    fn pauli_z() -> CMatrix {
        CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
    }

    fn lcg_matrix(rows: usize, cols: usize, seed: u64) -> CMatrix {
        let mut s = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
        let mut next = move || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        CMatrix::from_fn(rows, cols, |_, _| c(next(), next()))
    }

    fn random_density(n: usize, seed: u64) -> CMatrix {
        let a = lcg_matrix(1 << n, 1 << n, seed);
        let rho = &a * a.adjoint();
        let t = trace(&rho);
        rho / t
    }

    #[test]
    fn tensor_identity_and_definition() {
        let i2 = CMatrix::identity(2, 2);
        assert_eq!(tensor(&i2, &i2).unwrap(), CMatrix::identity(4, 4));
        let xz = tensor(&pauli_x(), &pauli_z()).unwrap();
        let (x, z) = (pauli_x(), pauli_z());
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        assert_eq!(xz[(2 * i + k, 2 * j + l)], x[(i, j)] * z[(k, l)]);
                    }
                }
            }
        }
    }

    #[test]
    fn tensor_vector_ordering() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let phi = CVector::from_vec(vec![real(h), ZERO, ZERO, real(h)]);
        let v = tensor_vec(&ket("0").unwrap(), &phi);
        assert_eq!(v.len(), 8);
        assert!((v[0b000] - real(h)).norm() < 1e-15);
        assert!((v[0b011] - real(h)).norm() < 1e-15);
        assert!(v.iter().filter(|z| z.norm() > 0.0).count() == 2);
    }

    #[test]
    fn tensor_cap() {
        let a = CMatrix::identity(8, 8);
        assert!(matches!(tensor_capped(&a, &a, 32), Err(Error::Size(_))));
    }

    #[test]
    fn split_rejects_bad_subsets() {
        assert!(SubsystemSplit::new(3, &[3]).is_err());
        assert!(SubsystemSplit::new(3, &[1, 1]).is_err());
        assert!(SubsystemSplit::from_one_based(3, &[0]).is_err());
        let s = SubsystemSplit::from_one_based(4, &[4, 2]).unwrap();
        assert_eq!(s.erased(), &[1, 3]);
        assert_eq!(s.complement(), &[0, 2]);
    }

    #[test]
    fn split_order_roundtrip() {
        let s = SubsystemSplit::new(4, &[0, 2]).unwrap();
        let v = CVector::from_fn(16, |i, _| real(i as f64));
        let w = s.to_split_order(&v);
        // split index 0b01_10: complement (q1,q3) = 01, erased (q0,q2) = 10
        // natural bits q0 q1 q2 q3 = 1 0 0 1
        assert_eq!(w[0b0110], real(0b1001 as f64));
        assert_eq!(s.from_split_order(&w), v);
    }

    #[test]
    fn partial_trace_product_state() {
        let ra = random_density(2, 1);
        let sb = random_density(1, 2) * real(3.0);
        let rho = tensor(&ra, &sb).unwrap();
        let split = SubsystemSplit::new(3, &[2]).unwrap();
        let red = partial_trace(&rho, &split, Side::Erased).unwrap();
        assert!((red - &ra * trace(&sb)).norm() < 1e-14);
        let red_b = partial_trace(&rho, &split, Side::Complement).unwrap();
        assert!((red_b - &sb).norm() < 1e-14);
    }

    #[test]
    fn partial_trace_rational_exact() {
        // entries are dyadic rationals, so the factorization is exact
        let ra = CMatrix::from_row_slice(2, 2, &[real(0.75), c(0.125, -0.25), c(0.125, 0.25), real(0.25)]);
        let sb = CMatrix::from_row_slice(2, 2, &[real(0.5), real(0.5), real(0.5), real(0.5)]);
        let rho = tensor(&ra, &sb).unwrap();
        let split = SubsystemSplit::new(2, &[1]).unwrap();
        assert_eq!(partial_trace(&rho, &split, Side::Erased).unwrap(), &ra * trace(&sb));
    }

    #[test]
    fn partial_trace_shape_errors() {
        let split = SubsystemSplit::new(2, &[1]).unwrap();
        assert!(partial_trace(&CMatrix::zeros(4, 2), &split, Side::Erased).is_err());
        assert!(partial_trace(&CMatrix::zeros(8, 8), &split, Side::Erased).is_err());
    }

    #[test]
    fn reduced_state_matches_partial_trace() {
        let split = SubsystemSplit::new(4, &[1, 3]).unwrap();
        let v = lcg_matrix(16, 1, 9).column(0).into_owned();
        let rho = &v * v.adjoint();
        for side in [Side::Erased, Side::Complement] {
            let a = partial_trace(&rho, &split, side).unwrap();
            let b = reduced_state(&v, &split, side).unwrap();
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn eig_examples() {
        let e = eig_hermitian(&(CMatrix::identity(2, 2) * real(0.5))).unwrap();
        assert_eq!(e.values, vec![0.5, 0.5]);
        let e = eig_hermitian(&pauli_x()).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14 && (e.values[1] + 1.0).abs() < 1e-14);
        let bad = CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        assert!(matches!(eig_hermitian(&bad), Err(Error::Contract(_))));
    }

    #[test]
    fn eig_degenerate_gauge_is_canonical() {
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![real(2.0), real(1.0), real(1.0), real(0.0)]));
        let q = lcg_matrix(4, 4, 3).qr().q();
        let h = &q * &d * q.adjoint();
        let e = eig_hermitian(&h).unwrap();
        let block = q.columns(1, 2).into_owned();
        let want = canonical_basis(&(&block * block.adjoint()), 2, 1e-9);
        for k in 0..2 {
            assert!((e.vectors.column(1 + k) - &want[k]).norm() < 1e-9);
        }
    }

    #[test]
    fn svd_examples() {
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![real(1.0), real(2.0)]));
        let d = svd(&m).unwrap();
        assert!((d.s[0] - 2.0).abs() < 1e-14 && (d.s[1] - 1.0).abs() < 1e-14);
        let m = lcg_matrix(6, 3, 5);
        let d = svd(&m).unwrap();
        assert!((d.reconstruct() - &m).norm() <= 1e-10);
    }

    #[test]
    fn pinv_examples() {
        let i3 = CMatrix::identity(3, 3);
        assert!((pinv(&i3, 1e-9).unwrap() - &i3).norm() < 1e-14);
        let m = CMatrix::from_diagonal(&CVector::from_vec(vec![real(2.0), ZERO]));
        let p = pinv(&m, 1e-9).unwrap();
        let want = CMatrix::from_diagonal(&CVector::from_vec(vec![real(0.5), ZERO]));
        assert!((p - want).norm() < 1e-14);
        assert!(pinv(&m, 0.0).is_err());
        assert!(pinv(&m, f64::NAN).is_err());
    }

    #[test]
    fn psd_sqrt_squares_back() {
        let rho = random_density(2, 11);
        let r = psd_sqrt(&rho).unwrap();
        assert!((&r * &r - &rho).norm() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn partial_trace_preserves_trace(n in 1usize..=6, mask in 0u32..64, seed in any::<u64>()) {
            let rho = random_density(n, seed);
            let b: Vec<usize> = (0..n).filter(|q| mask >> q & 1 == 1).collect();
            let split = SubsystemSplit::new(n, &b).unwrap();
            for side in [Side::Erased, Side::Complement] {
                let red = partial_trace(&rho, &split, side).unwrap();
                prop_assert!((trace(&red) - trace(&rho)).norm() < 1e-12);
            }
        }

        #[test]
        fn eig_reconstructs(dim in 1usize..=24, seed in any::<u64>()) {
            let a = lcg_matrix(dim, dim, seed);
            let h = &a + a.adjoint();
            let e = eig_hermitian(&h).unwrap();
            let w = CMatrix::from_diagonal(&CVector::from_iterator(dim, e.values.iter().map(|&x| real(x))));
            let rec = &e.vectors * w * e.vectors.adjoint();
            prop_assert!((rec - &h).norm() <= 1e-10 * h.norm());
            prop_assert!((e.vectors.adjoint() * &e.vectors - CMatrix::identity(dim, dim)).norm() <= 1e-10);
            prop_assert!(e.values.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn svd_reconstructs(rows in 1usize..=128, cols in 1usize..=128, seed in any::<u64>()) {
            let m = lcg_matrix(rows, cols, seed);
            let d = svd(&m).unwrap();
            prop_assert!((d.reconstruct() - &m).norm() <= 1e-10 * m.norm().max(1.0));
            let k = rows.min(cols);
            prop_assert!((d.u.adjoint() * &d.u - CMatrix::identity(k, k)).norm() <= 1e-10);
            prop_assert!((d.v.adjoint() * &d.v - CMatrix::identity(k, k)).norm() <= 1e-10);
            prop_assert!(d.s.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn svd_rank_deficient(rows in 1usize..=40, cols in 1usize..=40, r in 0usize..=5, seed in any::<u64>()) {
            let r = r.min(rows).min(cols);
            let m = lcg_matrix(rows, r, seed) * lcg_matrix(r, cols, seed.rotate_left(17));
            let d = svd(&m).unwrap();
            prop_assert_eq!(d.rank, r);
            prop_assert!((d.reconstruct() - &m).norm() <= 1e-10 * m.norm().max(1.0));
            let k = rows.min(cols);
            prop_assert!((d.u.adjoint() * &d.u - CMatrix::identity(k, k)).norm() <= 1e-10);
            prop_assert!((d.v.adjoint() * &d.v - CMatrix::identity(k, k)).norm() <= 1e-10);
        }

        #[test]
        fn pinv_penrose_identities(rows in 2usize..=12, cols in 2usize..=12, r in 1usize..=4, seed in any::<u64>()) {
            let r = r.min(rows).min(cols);
            let m = lcg_matrix(rows, r, seed) * lcg_matrix(r, cols, seed ^ 0x5bd1e995);
            let p = pinv(&m, 1e-9).unwrap();
            let scale = m.norm() * p.norm();
            prop_assert!((&m * &p * &m - &m).norm() <= 1e-9 * m.norm().max(1.0));
            prop_assert!((&p * &m * &p - &p).norm() <= 1e-9 * p.norm().max(1.0));
            let mp = &m * &p;
            let pm = &p * &m;
            prop_assert!((mp.adjoint() - &mp).norm() <= 1e-9 * scale.max(1.0));
            prop_assert!((pm.adjoint() - &pm).norm() <= 1e-9 * scale.max(1.0));
        }
    }

    #[test]
    fn structured_dilation_stays_finite() {
        // a sparse real codeword-like vector split 6:1; the dilation has many
        // exactly repeated entries
        let code = crate::codes::fixture(crate::codes::Fixture::Steane).unwrap();
        let split = SubsystemSplit::new(7, &[0]).unwrap();
        let m = split.reshape(&code.basis()[0]).unwrap();
        let d = svd(&m).unwrap();
        assert_eq!(d.rank, 2);
        assert!(d.s.iter().all(|x| x.is_finite()));
        assert!((d.reconstruct() - &m).norm() < 1e-12);
    }
}
