//! Knill-Laflamme analysis of an erasure set: the lambda matrix over the
//! Pauli basis on `B`, the correctability verdict and the
//! pure / impure-nondegenerate / degenerate classification.

use itertools::Itertools;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::{PauliOperator, QuantumCode, SinglePauli};
use crate::error::{Error, Result};
use crate::qla::{self, c, CMatrix, CVector, Side, SubsystemSplit, Tolerances};

/// Largest `|B|` for which the `4^b x 4^b` lambda matrix is built.
pub const MAX_SUBSET: usize = 5;
/// Largest code for which [`find_correctable_sets`] runs.
pub const MAX_SCAN_QUBITS: usize = 12;

/// All `4^b` Hermitian Paulis supported on `subset`, embedded in `n` qubits.
/// Letters per qubit run `I, X, Z, Y`, the first listed qubit most
/// significant, so the identity comes first.
pub fn pauli_basis_on(n: usize, subset: &[usize]) -> Result<Vec<PauliOperator>> {
    if subset.len() > MAX_SUBSET {
        return Err(Error::Size(format!(
            "|B| = {} exceeds the cap of {MAX_SUBSET}",
            subset.len()
        )));
    }
    if subset.iter().any(|&q| q >= n) {
        return Err(Error::Shape(format!("subset {subset:?} outside {n} qubits")));
    }
    let b = subset.len();
    Ok((0..1usize << (2 * b))
        .map(|idx| {
            let mut op = PauliOperator::identity(n);
            for (j, &q) in subset.iter().enumerate() {
                let digit = idx >> (2 * (b - 1 - j)) & 3;
                op.set(q, SinglePauli::ALL[digit]);
            }
            op
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trichotomy {
    Pure,
    ImpureNondegenerate,
    Degenerate,
}

impl Trichotomy {
    pub fn as_str(self) -> &'static str {
        match self {
            Trichotomy::Pure => "pure",
            Trichotomy::ImpureNondegenerate => "impure_nondegenerate",
            Trichotomy::Degenerate => "degenerate",
        }
    }
}

/// Knill-Laflamme data for one erasure set.
#[derive(Clone, Debug)]
pub struct KlReport {
    pub split: SubsystemSplit,
    /// `Tr(rho_B E_i^dagger E_j)` over [`pauli_basis_on`], with
    /// `rho_B = Tr_{B-bar}(P / K)`.
    pub lambda: CMatrix,
    pub lambda_spectrum: Vec<f64>,
    pub lambda_rank: usize,
    /// Orthonormal coefficient vectors `f` with `sum_j f_j E_j P = 0`;
    /// filled in only once a set is classified degenerate.
    pub degeneracy_kernel: Vec<CVector>,
    /// Largest `||P Q P - (Tr(PQ)/K) P||_F` over Paulis `Q` on `B`.
    pub max_residual: f64,
    pub correctable: bool,
    pub rho_b: CMatrix,
    pub rho_b_spectrum: Vec<f64>,
    pub rho_b_rank: usize,
    /// Rank of `Tr_B |i~><i~|` for every codeword.
    pub codeword_marginal_ranks: Vec<usize>,
    /// Set by [`classify`]; absent for a plain [`kl_matrix`] report.
    pub trichotomy: Option<Trichotomy>,
}

impl KlReport {
    pub fn subset(&self) -> &[usize] {
        self.split.erased()
    }

    pub fn b(&self) -> usize {
        self.split.b()
    }

    /// Minimal receiver dimension, the rank of `rho_B`.
    pub fn schmidt_rank(&self) -> usize {
        self.rho_b_rank
    }
}

/// Matrix of `<k~|Q|l~>` over the code basis.
fn logical_block(code: &QuantumCode, q: &PauliOperator) -> CMatrix {
    code.logical_matrix(q)
}

/// `Tr(rho Q)` for a `b`-qubit Pauli given as an operator on `b` qubits.
fn pauli_expectation(rho: &CMatrix, q: &PauliOperator) -> Complex64 {
    let (xm, zm) = q.basis_masks();
    let ph = crate::codes::pauli::phase_value(q.phase());
    (0..rho.nrows())
        .map(|y| {
            let sign = if (y & zm).count_ones() % 2 == 1 { -ph } else { ph };
            rho[(y, y ^ xm)] * sign
        })
        .sum()
}

fn spectrum_and_rank(m: &CMatrix, tol: &Tolerances) -> Result<(Vec<f64>, usize)> {
    let values = qla::eigvals_hermitian_tol(m, tol.hermiticity.max(1e-12))?;
    let abs: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    let rank = qla::numerical_rank(&abs, tol.rank);
    Ok((values, rank))
}

/// `Tr(rho E_i E_j)` for Hermitian `b`-qubit Paulis `E = i^p X^x Z^z`, via
/// `E_i E_j = i^(p_i + p_j + 2 z_i.x_j) X^(x_i ^ x_j) Z^(z_i ^ z_j)`.
fn lambda_from_marginal(rho: &CMatrix, local: &[PauliOperator]) -> CMatrix {
    let dim = local.len();
    let masks: Vec<(usize, usize)> = local.iter().map(PauliOperator::basis_masks).collect();
    let side = rho.nrows();
    let mut slot = vec![usize::MAX; side * side];
    for (idx, &(x, z)) in masks.iter().enumerate() {
        slot[x * side + z] = idx;
    }
    let expectations: Vec<Complex64> = local.iter().map(|q| pauli_expectation(rho, q)).collect();
    let phase = |p: u32| crate::codes::pauli::phase_value((p % 4) as u8);
    CMatrix::from_fn(dim, dim, |i, j| {
        let ((xi, zi), (xj, zj)) = (masks[i], masks[j]);
        let (x, z) = (xi ^ xj, zi ^ zj);
        let p = local[i].phase() as u32 + local[j].phase() as u32 + 2 * (zi & xj).count_ones()
            + 4
            - (x & z).count_ones() % 4;
        phase(p) * expectations[slot[x * side + z]]
    })
}

pub fn kl_matrix(code: &QuantumCode, subset: &[usize]) -> Result<KlReport> {
    kl_matrix_with(code, subset, &Tolerances::default())
}

pub fn kl_matrix_with(code: &QuantumCode, subset: &[usize], tol: &Tolerances) -> Result<KlReport> {
    let n = code.n();
    let split = SubsystemSplit::new(n, subset)?;
    let b = split.b();
    let basis = pauli_basis_on(n, split.erased())?;
    let k = code.k_dim();

    let mut rho_b = CMatrix::zeros(1 << b, 1 << b);
    let mut codeword_marginal_ranks = Vec::with_capacity(k);
    for v in code.basis() {
        let marginal = qla::reduced_state(v, &split, Side::Complement)?;
        codeword_marginal_ranks.push(spectrum_and_rank(&marginal, tol)?.1);
        rho_b += marginal;
    }
    rho_b /= c(k as f64, 0.0);

    let max_residual = basis
        .par_iter()
        .map(|q| {
            let g = logical_block(code, q);
            let mean = qla::trace(&g) / c(k as f64, 0.0);
            (g - CMatrix::identity(k, k) * mean).norm()
        })
        .reduce(|| 0.0, f64::max);

    let local: Vec<PauliOperator> = basis.iter().map(|p| p.restrict(split.erased())).collect();
    let lambda = lambda_from_marginal(&rho_b, &local);
    let (lambda_spectrum, lambda_rank) = spectrum_and_rank(&lambda, tol)?;
    let (rho_b_spectrum, rho_b_rank) = spectrum_and_rank(&rho_b, tol)?;

    Ok(KlReport {
        split,
        lambda,
        lambda_spectrum,
        lambda_rank,
        degeneracy_kernel: Vec::new(),
        max_residual,
        correctable: max_residual <= tol.residual,
        rho_b,
        rho_b_spectrum,
        rho_b_rank,
        codeword_marginal_ranks,
        trichotomy: None,
    })
}

/// Knill-Laflamme test without lambda, valid for any `|B|`: `B` is
/// correctable iff `Tr_{B-bar} |i~><j~| = delta_ij rho_B`. Returns the verdict
/// and the largest Frobenius deviation.
pub fn correctable_by_marginals(code: &QuantumCode, subset: &[usize], tol: &Tolerances) -> Result<(bool, f64)> {
    let split = SubsystemSplit::new(code.n(), subset)?;
    let k = code.k_dim();
    let mats: Vec<CMatrix> = code
        .basis()
        .iter()
        .map(|v| split.reshape(v))
        .collect::<Result<_>>()?;
    // Tr_{B-bar} |i~><j~| = M_i^T conj(M_j) with B-bar as the row index
    let cross = |i: usize, j: usize| mats[i].transpose() * mats[j].map(|z| z.conj());
    let rho = (0..k).fold(CMatrix::zeros(split.erased_dim(), split.erased_dim()), |acc, i| acc + cross(i, i))
        / c(k as f64, 0.0);
    let worst = (0..k)
        .flat_map(|i| (0..k).map(move |j| (i, j)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(i, j)| {
            let m = cross(i, j);
            if i == j { (m - &rho).norm() } else { m.norm() }
        })
        .reduce(|| 0.0, f64::max);
    Ok((worst <= tol.residual, worst))
}

pub fn classify(code: &QuantumCode, subset: &[usize]) -> Result<KlReport> {
    classify_with(code, subset, &Tolerances::default())
}

/// Full report for a correctable set; non-correctable input is an error.
pub fn classify_with(code: &QuantumCode, subset: &[usize], tol: &Tolerances) -> Result<KlReport> {
    let report = kl_matrix_with(code, subset, tol)?;
    if !report.correctable {
        return Err(Error::NotCorrectable {
            subset: report.split.one_based_erased(),
        });
    }
    complete_classification(report, tol)
}

/// Trichotomy and consistency checks for a report already known to be
/// correctable.
pub fn complete_classification(mut report: KlReport, tol: &Tolerances) -> Result<KlReport> {
    let b = report.b();
    let full_b = 1usize << b;
    let mixed = CMatrix::identity(full_b, full_b) / c(full_b as f64, 0.0);
    let class = if (&report.rho_b - mixed).norm() <= tol.residual {
        Trichotomy::Pure
    } else if report.rho_b_rank < full_b {
        Trichotomy::Degenerate
    } else {
        Trichotomy::ImpureNondegenerate
    };
    let lambda_full = report.lambda_rank == full_b * full_b;
    let rho_full = report.rho_b_rank == full_b;
    if lambda_full != rho_full || report.lambda_rank != full_b * report.rho_b_rank {
        return Err(Error::Consistency(format!(
            "rank(lambda) = {} but rank(rho_B) = {} for |B| = {b}",
            report.lambda_rank, report.rho_b_rank
        )));
    }
    if class == Trichotomy::Degenerate {
        let eig = qla::eig_hermitian_tol(&report.lambda, tol.hermiticity.max(1e-12))?;
        let dim = report.lambda.nrows();
        report.degeneracy_kernel = (report.lambda_rank..dim)
            .map(|col| eig.vectors.column(col).into_owned())
            .collect();
    }
    report.trichotomy = Some(class);
    Ok(report)
}

/// Reports for every `b`-subset in lexicographic order, classified when
/// correctable.
pub fn find_correctable_sets(code: &QuantumCode, b: usize) -> Result<Vec<KlReport>> {
    find_correctable_sets_with(code, b, &Tolerances::default())
}

pub fn find_correctable_sets_with(code: &QuantumCode, b: usize, tol: &Tolerances) -> Result<Vec<KlReport>> {
    if code.n() > MAX_SCAN_QUBITS {
        return Err(Error::Size(format!(
            "subset scans are limited to {MAX_SCAN_QUBITS} qubits"
        )));
    }
    if b > MAX_SUBSET || b > code.n() {
        return Err(Error::Size(format!("cannot scan subsets of size {b}")));
    }
    let subsets: Vec<Vec<usize>> = (0..code.n()).combinations(b).collect();
    subsets
        .par_iter()
        .map(|s| {
            let report = kl_matrix_with(code, s, tol)?;
            if report.correctable {
                complete_classification(report, tol)
            } else {
                Ok(report)
            }
        })
        .collect()
}

/// Serializable view of a [`KlReport`]; qubits are 1-based.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KlSummary {
    pub subset: Vec<usize>,
    pub correctable: bool,
    pub trichotomy: Option<Trichotomy>,
    pub rho_b_spectrum: Vec<f64>,
    pub rho_b_rank: usize,
    pub lambda_spectrum: Vec<f64>,
    pub lambda_rank: usize,
    pub max_residual: f64,
    pub codeword_marginal_ranks: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<Vec<[f64; 2]>>>,
}

impl KlSummary {
    pub fn new(report: &KlReport, full: bool) -> Self {
        let lambda = full.then(|| {
            report
                .lambda
                .row_iter()
                .map(|row| row.iter().map(|z| [z.re, z.im]).collect())
                .collect()
        });
        Self {
            subset: report.split.one_based_erased(),
            correctable: report.correctable,
            trichotomy: report.trichotomy,
            rho_b_spectrum: report.rho_b_spectrum.clone(),
            rho_b_rank: report.rho_b_rank,
            lambda_spectrum: report.lambda_spectrum.clone(),
            lambda_rank: report.lambda_rank,
            max_residual: report.max_residual,
            codeword_marginal_ranks: report.codeword_marginal_ranks.clone(),
            lambda,
        }
    }
}
