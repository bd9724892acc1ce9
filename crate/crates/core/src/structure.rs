//! Constructive decomposition `|i~> = (U ⊗ I_B)(|i>_R ⊗ |psi>_AB)` of a code
//! over an erasure set `B`, and the entanglement-assisted codes built on it.
//!
//! Codewords are reshaped into `2^(n-b) x 2^b` matrices `M_i`. The SVD of
//! `M_0 = V S W^dagger` fixes the shared state: `Psi = S_r W_r^dagger`, that
//! is `|psi> = sum_a s_a |a>_A |conj(w_a)>_B`. Every other block of the
//! isometry follows from `U_i = M_i Psi^+`. Nothing is assumed about `B`;
//! the result is certified by checking `U^dagger U = I` and the
//! reconstruction of every codeword.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codes::{CodeParameters, EaParameters, QuantumCode};
use crate::error::{Error, Result};
use crate::qla::{self, real, CMatrix, CVector, Side, SubsystemSplit, Tolerances};

#[derive(Clone, Debug)]
pub struct StructureDecomposition {
    pub split: SubsystemSplit,
    pub k_dim: usize,
    /// Schmidt rank of every codeword across `B-bar : B`.
    pub dim_a: usize,
    /// Isometry `R ⊗ A -> B-bar`, columns indexed `i * dim_a + a`.
    pub u: CMatrix,
    /// `diag(s_a^2)`.
    pub gamma_a: CMatrix,
    /// Descending.
    pub gamma_spectrum: Vec<f64>,
    /// `|psi>_AB`, index `a * 2^b + y`.
    pub psi_ab: CVector,
    /// Leading right singular vectors `W_r` of `M_0`, `2^b x dim_a`.
    pub w_r: CMatrix,
    /// Largest codeword reconstruction error.
    pub residual: f64,
    /// `||U^dagger U - I||_F`.
    pub isometry_defect: f64,
}

impl StructureDecomposition {
    pub fn b(&self) -> usize {
        self.split.b()
    }

    /// `|psi>_AB` as a `dim_a x 2^b` matrix.
    pub fn psi_matrix(&self) -> CMatrix {
        let side = self.split.erased_dim();
        CMatrix::from_fn(self.dim_a, side, |a, y| self.psi_ab[a * side + y])
    }

    /// Block `U_i` of the isometry.
    pub fn block(&self, i: usize) -> CMatrix {
        self.u.columns(i * self.dim_a, self.dim_a).into_owned()
    }

    /// `(U ⊗ I_B)(|i>_R ⊗ |psi>)` in split order, `B-bar` major.
    pub fn reconstruct_split(&self, i: usize) -> CVector {
        let m = self.block(i) * self.psi_matrix();
        let side = self.split.erased_dim();
        CVector::from_fn(m.nrows() * side, |idx, _| m[(idx / side, idx % side)])
    }
}

pub fn decompose(code: &QuantumCode, subset: &[usize]) -> Result<StructureDecomposition> {
    decompose_with(code, subset, &Tolerances::default())
}

pub fn decompose_with(code: &QuantumCode, subset: &[usize], tol: &Tolerances) -> Result<StructureDecomposition> {
    let split = SubsystemSplit::new(code.n(), subset)?;
    let k = code.k_dim();
    let ms: Vec<CMatrix> = code
        .basis()
        .iter()
        .map(|v| split.reshape(v))
        .collect::<Result<_>>()?;

    let svd0 = qla::svd_tol(&ms[0], tol)?;
    let r = svd0.rank;
    if r * k > split.complement_dim() {
        return Err(Error::StructureViolation(format!(
            "K * dim_A = {} exceeds dim(B-bar) = {}",
            r * k,
            split.complement_dim()
        )));
    }
    let w_r = svd0.v.columns(0, r).into_owned();
    let sigma = CMatrix::from_diagonal(&CVector::from_iterator(r, svd0.s[..r].iter().map(|&x| real(x))));
    let psi = &sigma * w_r.adjoint();
    let psi_pinv = qla::pinv(&psi, tol.rank)?;

    let blocks: Vec<(CMatrix, usize)> = ms
        .par_iter()
        .map(|m| {
            let rank = qla::svd_tol(m, tol).map(|s| s.rank)?;
            Ok((m * &psi_pinv, rank))
        })
        .collect::<Result<_>>()?;
    if let Some((i, (_, rank))) = blocks.iter().enumerate().find(|(_, (_, rank))| *rank != r) {
        return Err(Error::Consistency(format!(
            "codeword {i} has Schmidt rank {rank} across the cut, codeword 0 has {r}"
        )));
    }

    let mut u = CMatrix::zeros(split.complement_dim(), k * r);
    for (i, (ui, _)) in blocks.iter().enumerate() {
        u.view_mut((0, i * r), (ui.nrows(), r)).copy_from(ui);
    }
    let isometry_defect = (u.adjoint() * &u - CMatrix::identity(k * r, k * r)).norm();
    let residual = blocks
        .iter()
        .zip(&ms)
        .map(|((ui, _), m)| (m - ui * &psi).norm())
        .fold(0.0, f64::max);
    if residual > tol.residual || isometry_defect > tol.residual {
        return Err(Error::StructureViolation(format!(
            "reconstruction residual {residual:.3e}, isometry defect {isometry_defect:.3e}"
        )));
    }

    let side = split.erased_dim();
    let psi_ab = CVector::from_fn(r * side, |idx, _| psi[(idx / side, idx % side)]);
    let gamma_spectrum: Vec<f64> = svd0.s[..r].iter().map(|x| x * x).collect();
    let gamma_a = CMatrix::from_diagonal(&CVector::from_iterator(r, gamma_spectrum.iter().map(|&g| real(g))));
    Ok(StructureDecomposition {
        split,
        k_dim: k,
        dim_a: r,
        u,
        gamma_a,
        gamma_spectrum,
        psi_ab,
        w_r,
        residual,
        isometry_defect,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// The receiver is sent the physical qubits `B` ahead of time.
    Presend,
    /// Shared state `|psi>_AB` on the full `2^b`-dimensional receiver space.
    Structure,
    /// Receiver share reduced to the Schmidt rank of `|psi>`.
    Compressed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelValidity {
    NoiselessAndNoisy,
    NoiselessOnly,
}

#[derive(Clone, Debug)]
pub struct EaCode {
    pub params: CodeParameters,
    pub strategy: Strategy,
    pub split: SubsystemSplit,
    /// Sender-side index major, receiver index minor.
    pub shared_state: CVector,
    pub receiver_dim: usize,
    pub schmidt_rank: usize,
    /// `V: B' -> B` with `(I ⊗ V)|psi'> = |psi>`, compressed codes only.
    pub compress_isometry: Option<CMatrix>,
    pub model_validity: ModelValidity,
    pub ebit_cost: usize,
    /// Presend only: unitaries `V_i` on `B-bar` with `(V_i ⊗ I_B)|0~> = |i~>`.
    pub presend_encoders: Vec<CMatrix>,
}

impl EaCode {
    pub fn c_dim(&self) -> usize {
        self.params.ea.map_or(1, |ea| ea.c_dim)
    }
}

fn ceil_log2(x: usize) -> usize {
    x.next_power_of_two().trailing_zeros() as usize
}

fn ea_params(split: &SubsystemSplit, k: usize, d: usize, c_dim: usize) -> CodeParameters {
    CodeParameters {
        n: split.n(),
        k_dim: k,
        d,
        ea: Some(EaParameters {
            n_sent: split.n() - split.b(),
            k_dim: k,
            d,
            c_dim,
        }),
    }
}

fn schmidt_rank(state: &CVector, rows: usize, cols: usize) -> Result<usize> {
    let m = CMatrix::from_fn(rows, cols, |a, y| state[a * cols + y]);
    Ok(qla::svd(&m)?.rank)
}

/// `((n-b, K, d; 2^b))` with `|psi>_AB` as the shared state.
pub fn ea_from_structure(dec: &StructureDecomposition, d: usize) -> EaCode {
    let receiver_dim = dec.split.erased_dim();
    EaCode {
        params: ea_params(&dec.split, dec.k_dim, d, receiver_dim),
        strategy: Strategy::Structure,
        split: dec.split.clone(),
        shared_state: dec.psi_ab.clone(),
        receiver_dim,
        schmidt_rank: dec.dim_a,
        compress_isometry: None,
        model_validity: ModelValidity::NoiselessAndNoisy,
        ebit_cost: dec.b(),
        presend_encoders: Vec::new(),
    }
}

/// Minimal purification `sum_a s_a |a>|a>` of `Gamma_A` on a receiver space of
/// dimension `C = rank(Gamma_A)`.
pub fn compress(dec: &StructureDecomposition, d: usize) -> Result<EaCode> {
    let c_dim = dec.dim_a;
    let mut shared_state = CVector::zeros(c_dim * c_dim);
    for (a, g) in dec.gamma_spectrum.iter().enumerate() {
        shared_state[a * c_dim + a] = real(g.sqrt());
    }
    let v = dec.w_r.map(|z| z.conj());
    if !qla::is_isometry(&v, 1e-9) {
        return Err(Error::Consistency("compression map is not an isometry".into()));
    }
    let mut lifted = CVector::zeros(dec.psi_ab.len());
    let side = dec.split.erased_dim();
    for a in 0..c_dim {
        for y in 0..side {
            lifted[a * side + y] = shared_state[a * c_dim + a] * v[(y, a)];
        }
    }
    let defect = (lifted - &dec.psi_ab).norm();
    if defect > 1e-9 {
        return Err(Error::Consistency(format!("(I ⊗ V)psi' misses psi by {defect:.3e}")));
    }
    Ok(EaCode {
        params: ea_params(&dec.split, dec.k_dim, d, c_dim),
        strategy: Strategy::Compressed,
        split: dec.split.clone(),
        shared_state,
        receiver_dim: c_dim,
        schmidt_rank: c_dim,
        compress_isometry: Some(v),
        model_validity: ModelValidity::NoiselessOnly,
        ebit_cost: ceil_log2(c_dim),
        presend_encoders: Vec::new(),
    })
}

/// The receiver holds `B` of `|0~>`; the sender encodes with logical
/// unitaries supported on `B-bar`.
pub fn ea_presend(code: &QuantumCode, subset: &[usize], d: usize) -> Result<EaCode> {
    let dec = match decompose(code, subset) {
        Ok(dec) => dec,
        Err(Error::StructureViolation(_) | Error::Consistency(_)) => {
            return Err(Error::NotCorrectable {
                subset: subset.iter().map(|q| q + 1).collect(),
            })
        }
        Err(e) => return Err(e),
    };
    let k = dec.k_dim;
    let presend_encoders = (0..k)
        .map(|i| {
            let mut swap = CMatrix::identity(k, k);
            swap.swap_columns(0, i);
            logical_unitary_on_complement(&dec, &swap)
        })
        .collect::<Result<Vec<_>>>()?;
    let shared_state = dec.split.to_split_order(&code.basis()[0]);
    let receiver_dim = dec.split.erased_dim();
    Ok(EaCode {
        params: ea_params(&dec.split, k, d, receiver_dim),
        strategy: Strategy::Presend,
        split: dec.split.clone(),
        schmidt_rank: schmidt_rank(&shared_state, dec.split.complement_dim(), receiver_dim)?,
        shared_state,
        receiver_dim,
        compress_isometry: None,
        model_validity: ModelValidity::NoiselessAndNoisy,
        ebit_cost: dec.b(),
        presend_encoders,
    })
}

/// `U (V_R ⊗ I_A) U^dagger + (I - U U^dagger)`, a unitary on `B-bar` acting
/// as `V_R` on the code.
pub fn logical_unitary_on_complement(dec: &StructureDecomposition, v_r: &CMatrix) -> Result<CMatrix> {
    if v_r.nrows() != dec.k_dim || !qla::is_unitary(v_r, 1e-9) {
        return Err(Error::Contract(format!(
            "logical operator must be a {0}x{0} unitary",
            dec.k_dim
        )));
    }
    let lifted = qla::tensor(v_r, &CMatrix::identity(dec.dim_a, dec.dim_a))?;
    let dim = dec.u.nrows();
    Ok(&dec.u * lifted * dec.u.adjoint() + CMatrix::identity(dim, dim) - &dec.u * dec.u.adjoint())
}

/// `op ⊗ I_B` for an operator on `B-bar`, in the original qubit order.
pub fn embed_on_complement(split: &SubsystemSplit, op: &CMatrix) -> Result<CMatrix> {
    let full = qla::tensor(op, &CMatrix::identity(split.erased_dim(), split.erased_dim()))?;
    Ok(split.operator_from_split_order(&full))
}

/// The `B`-marginal spectra of each codeword, nonzero part, descending.
pub fn codeword_marginal_spectra(code: &QuantumCode, split: &SubsystemSplit, tol: &Tolerances) -> Result<Vec<Vec<f64>>> {
    code.basis()
        .iter()
        .map(|v| {
            let rho = qla::reduced_state(v, split, Side::Complement)?;
            let values = qla::eigvals_hermitian_tol(&rho, 1e-10)?;
            let max = values.first().copied().unwrap_or(0.0);
            Ok(values.into_iter().filter(|&x| x > tol.rank * max).collect())
        })
        .collect()
}

fn complex_pairs<'a>(it: impl Iterator<Item = &'a num_complex::Complex64>) -> Vec<[f64; 2]> {
    it.map(|z| [z.re, z.im]).collect()
}

fn columns(m: &CMatrix) -> Vec<Vec<[f64; 2]>> {
    m.column_iter().map(|c| complex_pairs(c.iter())).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub n: usize,
    pub subset: Vec<usize>,
    pub k_dim: usize,
    pub dim_a: usize,
    pub complement_dim: usize,
    pub receiver_dim: usize,
    pub gamma_spectrum: Vec<f64>,
    pub psi_ab: Vec<[f64; 2]>,
    pub u_columns: Vec<Vec<[f64; 2]>>,
    pub residual: f64,
    pub isometry_defect: f64,
}

impl DecompositionJson {
    pub fn new(dec: &StructureDecomposition) -> Self {
        Self {
            n: dec.split.n(),
            subset: dec.split.one_based_erased(),
            k_dim: dec.k_dim,
            dim_a: dec.dim_a,
            complement_dim: dec.split.complement_dim(),
            receiver_dim: dec.split.erased_dim(),
            gamma_spectrum: dec.gamma_spectrum.clone(),
            psi_ab: complex_pairs(dec.psi_ab.iter()),
            u_columns: columns(&dec.u),
            residual: dec.residual,
            isometry_defect: dec.isometry_defect,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EaCodeJson {
    pub parameters: String,
    pub stabilizer_form: Option<String>,
    pub n_sent: usize,
    pub k_dim: usize,
    pub d: usize,
    pub c_dim: usize,
    pub subset: Vec<usize>,
    pub strategy: Strategy,
    pub model_validity: ModelValidity,
    pub receiver_dim: usize,
    pub schmidt_rank: usize,
    pub ebit_cost: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_columns: Option<Vec<Vec<[f64; 2]>>>,
}

impl EaCodeJson {
    pub fn new(ea: &EaCode) -> Self {
        let p = ea.params.ea.expect("EA parameters");
        Self {
            parameters: ea.params.to_string(),
            stabilizer_form: ea.params.stabilizer_form(),
            n_sent: p.n_sent,
            k_dim: p.k_dim,
            d: p.d,
            c_dim: p.c_dim,
            subset: ea.split.one_based_erased(),
            strategy: ea.strategy,
            model_validity: ea.model_validity,
            receiver_dim: ea.receiver_dim,
            schmidt_rank: ea.schmidt_rank,
            ebit_cost: ea.ebit_cost,
            v_columns: ea.compress_isometry.as_ref().map(columns),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{fixture, Fixture};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn pi_4_2_2_ebit() {
        let code = fixture(Fixture::Pi422).unwrap();
        let dec = decompose(&code, &[3]).unwrap();
        assert!(close(&dec.gamma_spectrum, &[0.5, 0.5], 1e-10));
        assert!(dec.residual <= 1e-9);
        let ea = ea_from_structure(&dec, 2);
        assert_eq!(ea.params.to_string(), "((3,2,2;2))");
        // |psi> is maximally entangled: both marginals are I/2
        let psi = dec.psi_matrix();
        let rho = &psi * psi.adjoint();
        assert!((rho - CMatrix::identity(2, 2) * real(0.5)).norm() < 1e-10);
    }

    #[test]
    fn codewords_reconstruct() {
        for (f, subset) in [(Fixture::Pi723, vec![5, 6]), (Fixture::Xp782, vec![6]), (Fixture::Steane, vec![3, 4, 5, 6])] {
            let code = fixture(f).unwrap();
            let dec = decompose(&code, &subset).unwrap();
            for (i, v) in code.basis().iter().enumerate() {
                let back = dec.split.from_split_order(&dec.reconstruct_split(i));
                assert!((back - v).norm() < 1e-9, "{f} codeword {i}");
            }
            assert!(qla::is_isometry(&dec.u, 1e-9));
            assert!((qla::trace(&dec.gamma_a).re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gamma_matches_marginals() {
        let code = fixture(Fixture::Pi723).unwrap();
        let dec = decompose(&code, &[5, 6]).unwrap();
        assert_eq!(dec.dim_a, 3);
        assert!(close(&dec.gamma_spectrum, &[1.0 / 3.0; 3], 1e-10));
        for spec in codeword_marginal_spectra(&code, &dec.split, &Tolerances::default()).unwrap() {
            assert!(close(&spec, &dec.gamma_spectrum, 1e-9));
        }
    }

    #[test]
    fn compression() {
        let code = fixture(Fixture::Pi723).unwrap();
        let dec = decompose(&code, &[5, 6]).unwrap();
        let ea = compress(&dec, 3).unwrap();
        assert_eq!(ea.params.to_string(), "((5,2,3;3))");
        assert_eq!(ea.ebit_cost, 2);
        assert_eq!(ea.model_validity, ModelValidity::NoiselessOnly);
        let v = ea.compress_isometry.as_ref().unwrap();
        assert!(qla::is_isometry(v, 1e-9));

        let five = fixture(Fixture::FiveQubit).unwrap();
        let ea = compress(&decompose(&five, &[3, 4]).unwrap(), 3).unwrap();
        assert_eq!(ea.c_dim(), 4);
        assert_eq!(ea.params.stabilizer_form().unwrap(), "[[3,1,3;2]]");
    }

    #[test]
    fn empty_subset() {
        let code = fixture(Fixture::Steane).unwrap();
        let dec = decompose(&code, &[]).unwrap();
        assert_eq!(dec.dim_a, 1);
        let ea = ea_from_structure(&dec, 3);
        assert_eq!(ea.params.to_string(), "((7,2,3;1))");
        let pre = ea_presend(&code, &[], 3).unwrap();
        assert_eq!(pre.params, ea.params);
        assert!((dec.split.from_split_order(&pre.shared_state) - &code.basis()[0]).norm() < 1e-12);
    }

    #[test]
    fn non_correctable_is_a_violation() {
        let code = fixture(Fixture::Pi422).unwrap();
        let err = decompose(&code, &[2, 3]).unwrap_err();
        assert!(matches!(err, Error::StructureViolation(_) | Error::Consistency(_)), "{err}");
        assert!(matches!(ea_presend(&code, &[2, 3], 2), Err(Error::NotCorrectable { .. })));
    }

    #[test]
    fn presend_encoders_prepare_codewords() {
        let code = fixture(Fixture::Steane).unwrap();
        let pre = ea_presend(&code, &[3, 4, 5, 6], 3).unwrap();
        assert_eq!(pre.params.to_string(), "((3,2,3;16))");
        let zero = &code.basis()[0];
        for (i, enc) in pre.presend_encoders.iter().enumerate() {
            assert!(qla::is_unitary(enc, 1e-9));
            let full = embed_on_complement(&pre.split, enc).unwrap();
            assert!((full * zero - &code.basis()[i]).norm() < 1e-9);
        }
        let dec = decompose(&code, &[3, 4, 5, 6]).unwrap();
        assert_eq!(ea_from_structure(&dec, 3).params, pre.params);
    }

    #[test]
    fn logical_unitaries() {
        let code = fixture(Fixture::FiveQubit).unwrap();
        let dec = decompose(&code, &[3, 4]).unwrap();
        let x = CMatrix::from_row_slice(2, 2, &[qla::ZERO, qla::ONE, qla::ONE, qla::ZERO]);
        let vt = embed_on_complement(&dec.split, &logical_unitary_on_complement(&dec, &x).unwrap()).unwrap();
        let (b0, b1) = (&code.basis()[0], &code.basis()[1]);
        assert!((b0.dotc(&(&vt * b1)).norm() - 1.0).abs() < 1e-9);
        assert!((b1.dotc(&(&vt * b0)).norm() - 1.0).abs() < 1e-9);

        let id = CMatrix::identity(2, 2);
        let vt = embed_on_complement(&dec.split, &logical_unitary_on_complement(&dec, &id).unwrap()).unwrap();
        assert!((&vt * b0 - b0).norm() < 1e-9);
        assert!(logical_unitary_on_complement(&dec, &(id * real(2.0))).is_err());

        let pi = fixture(Fixture::Pi422).unwrap();
        let dec = decompose(&pi, &[3]).unwrap();
        let z = CMatrix::from_diagonal(&CVector::from_vec(vec![qla::ONE, -qla::ONE]));
        let vt = embed_on_complement(&dec.split, &logical_unitary_on_complement(&dec, &z).unwrap()).unwrap();
        let one = &pi.basis()[1];
        assert!((one.dotc(&(&vt * one)) + qla::ONE).norm() < 1e-9);
    }

    #[test]
    fn json_views() {
        let code = fixture(Fixture::Xp782).unwrap();
        let dec = decompose(&code, &[6]).unwrap();
        assert_eq!(dec.dim_a, 2);
        assert!((&dec.gamma_a - CMatrix::identity(2, 2) * real(0.5)).norm() < 1e-10);
        let j = serde_json::to_value(DecompositionJson::new(&dec)).unwrap();
        assert_eq!(j["subset"], serde_json::json!([7]));
        assert_eq!(j["u_columns"].as_array().unwrap().len(), 16);
        let ea = EaCodeJson::new(&ea_from_structure(&dec, 2));
        assert_eq!(ea.parameters, "((6,8,2;2))");
        assert_eq!(ea.stabilizer_form.as_deref(), Some("[[6,3,2;1]]"));
        assert!(ea.v_columns.is_none());
    }
}
