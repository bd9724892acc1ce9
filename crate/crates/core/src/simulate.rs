//! Recovery simulation: the erasure (replacer) channel, Knill-Laflamme
//! recovery and end-to-end checks of entanglement-assisted codes.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::pauli_basis_on;
use crate::codes::{PauliOperator, QuantumCode, SinglePauli};
use crate::error::{Error, Result};
use crate::qla::{self, c, real, CMatrix, CVector, Side, SubsystemSplit, Tolerances};
use crate::structure::{logical_unitary_on_complement, EaCode, Strategy, StructureDecomposition};

/// Fidelity below `1 - FIDELITY_SLACK` counts as a failed recovery.
pub const FIDELITY_SLACK: f64 = 1e-9;
/// Exhaustive error enumeration is used up to this weight ...
pub const EXHAUSTIVE_MAX_WEIGHT: usize = 2;
/// ... and this many qubits; otherwise errors are sampled.
pub const EXHAUSTIVE_MAX_QUBITS: usize = 10;
pub const SAMPLE_COUNT: usize = 2000;
const TP_TOL: f64 = 1e-9;
const COMPLETION_TOL: f64 = 1e-12;

/// A trace-preserving channel in Kraus form.
#[derive(Clone, Debug)]
pub struct KrausChannel {
    kraus: Vec<CMatrix>,
    dim: usize,
}

impl KrausChannel {
    pub fn new(kraus: Vec<CMatrix>) -> Result<Self> {
        let dim = kraus.first().map(CMatrix::ncols).ok_or_else(|| {
            Error::Contract("a channel needs at least one Kraus operator".into())
        })?;
        if kraus.iter().any(|k| k.nrows() != dim || k.ncols() != dim) {
            return Err(Error::Shape("Kraus operators must be square of equal size".into()));
        }
        let ch = Self { kraus, dim };
        let defect = ch.trace_preservation_defect();
        if defect > TP_TOL {
            return Err(Error::Contract(format!(
                "channel is not trace preserving (defect {defect:.3e})"
            )));
        }
        Ok(ch)
    }

    pub fn kraus(&self) -> &[CMatrix] {
        &self.kraus
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `||sum K^dagger K - I||_F`.
    pub fn trace_preservation_defect(&self) -> f64 {
        let sum = self
            .kraus
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, k| acc + k.adjoint() * k);
        (sum - CMatrix::identity(self.dim, self.dim)).norm()
    }

    pub fn apply(&self, rho: &CMatrix) -> CMatrix {
        self.kraus
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, k| acc + k * rho * k.adjoint())
    }

    /// `<target| R(|v><v|) |target> / Tr R(|v><v|)` without forming `|v><v|`.
    pub fn pure_fidelity(&self, v: &CVector, target: &CVector) -> f64 {
        let (overlap, total) = self.kraus.iter().fold((0.0, 0.0), |(o, t), k| {
            let kv = k * v;
            (o + target.dotc(&kv).norm_sqr(), t + kv.norm_squared())
        });
        if total == 0.0 {
            0.0
        } else {
            overlap / total
        }
    }
}

/// Erasure of `B` followed by the maximally mixed state:
/// Kraus operators `E_a / 2^b` over the Pauli basis on `B`.
pub fn replacer_channel(split: &SubsystemSplit) -> Result<KrausChannel> {
    qla::check_dims(1 << split.n(), 1 << split.n(), Tolerances::default().dim_cap)?;
    let scale = real(1.0 / split.erased_dim() as f64);
    let kraus = pauli_basis_on(split.n(), split.erased())?
        .iter()
        .map(|p| p.to_matrix() * scale)
        .collect();
    KrausChannel::new(kraus)
}

/// `Tr_B(rho) ⊗ I_B / 2^b` via the partial trace; same map as
/// [`replacer_channel`] without the `4^b` Kraus sum.
pub fn replace_erased(rho: &CMatrix, split: &SubsystemSplit) -> Result<CMatrix> {
    let kept = qla::partial_trace(rho, split, Side::Erased)?;
    let side = split.erased_dim();
    let mixed = CMatrix::identity(side, side) * real(1.0 / side as f64);
    Ok(split.operator_from_split_order(&qla::tensor(&kept, &mixed)?))
}

fn basis_matrix(code: &QuantumCode) -> CMatrix {
    CMatrix::from_columns(code.basis())
}

/// Recovery for the span of `errors`: diagonalize lambda, form
/// `F_k = sum_j u_jk E_j` and `R_k = P F_k^dagger / sqrt(d_k)`, then complete
/// to a trace-preserving map.
pub fn kl_recovery(code: &QuantumCode, errors: &[CMatrix]) -> Result<KrausChannel> {
    let dim = code.dim();
    if errors.iter().any(|e| e.nrows() != dim || e.ncols() != dim) {
        return Err(Error::Shape(format!("errors must be {dim}x{dim}")));
    }
    if errors.is_empty() {
        return Err(Error::Contract("empty error set".into()));
    }
    let k = code.k_dim();
    let basis = basis_matrix(code);
    let images: Vec<CMatrix> = errors.par_iter().map(|e| e * &basis).collect();
    let m = errors.len();
    let mut lambda = CMatrix::zeros(m, m);
    let mut worst: f64 = 0.0;
    for i in 0..m {
        for j in i..m {
            let g = images[i].adjoint() * &images[j];
            let l = qla::trace(&g) / c(k as f64, 0.0);
            worst = worst.max((g - CMatrix::identity(k, k) * l).norm());
            lambda[(i, j)] = l;
            lambda[(j, i)] = l.conj();
        }
    }
    if worst > Tolerances::default().residual {
        return Err(Error::Contract(format!(
            "error set violates the Knill-Laflamme conditions (residual {worst:.3e})"
        )));
    }
    let eig = qla::eig_hermitian(&lambda)?;
    let rank = eig.rank(Tolerances::default().rank);
    let mut kraus: Vec<CMatrix> = (0..rank)
        .into_par_iter()
        .map(|col| {
            let scale = real(1.0 / eig.values[col].sqrt());
            let fk_basis = images
                .iter()
                .enumerate()
                .fold(CMatrix::zeros(dim, k), |acc, (j, a)| acc + a * eig.vectors[(j, col)]);
            &basis * (fk_basis * scale).adjoint()
        })
        .collect();
    let covered = kraus
        .iter()
        .fold(CMatrix::zeros(dim, dim), |acc, r| acc + r.adjoint() * r);
    let rest = CMatrix::identity(dim, dim) - covered;
    if rest.norm() > COMPLETION_TOL {
        kraus.push(qla::psd_sqrt(&rest)?);
    }
    KrausChannel::new(kraus)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModel {
    /// Errors only on the transmitted qubits.
    NoiselessEbit,
    /// Errors on the receiver's share too.
    NoisyEbit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub error: String,
    pub fidelity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub model: ErrorModel,
    pub strategy: Strategy,
    pub error_weight: usize,
    /// Distinct error operators applied.
    pub errors_checked: usize,
    /// Error and input-state pairs.
    pub cases_run: usize,
    pub sampled: bool,
    /// Reported only, no pass/fail claim attached.
    pub exploratory: bool,
    pub min_fidelity: f64,
    pub failures: Vec<Failure>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.min_fidelity >= 1.0 - FIDELITY_SLACK
    }
}

/// Logical inputs: every basis state and the uniform superposition.
fn logical_inputs(k: usize) -> Vec<CVector> {
    let mut inputs: Vec<CVector> = (0..k)
        .map(|i| {
            let mut v = CVector::zeros(k);
            v[i] = qla::ONE;
            v
        })
        .collect();
    inputs.push(CVector::from_element(k, real(1.0 / (k as f64).sqrt())));
    inputs
}

/// Unitary with `|0>` mapped to the uniform superposition.
fn fourier(k: usize) -> CMatrix {
    let w = 2.0 * std::f64::consts::PI / k as f64;
    CMatrix::from_fn(k, k, |r, s| c(0.0, w * (r * s) as f64).exp() / real((k as f64).sqrt()))
}

/// Unitary with `|0>` mapped to `|i>`.
fn shift_to(k: usize, i: usize) -> CMatrix {
    CMatrix::from_fn(k, k, |r, s| if r == (s + i) % k { qla::ONE } else { qla::ZERO })
}

fn errors_of_weight(n: usize, support: &[usize], w: usize) -> (Vec<PauliOperator>, bool) {
    if w <= EXHAUSTIVE_MAX_WEIGHT && n <= EXHAUSTIVE_MAX_QUBITS {
        return (PauliOperator::enumerate_weight(n, support, w).collect(), false);
    }
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let letters = [SinglePauli::X, SinglePauli::Y, SinglePauli::Z];
    let ops = (0..SAMPLE_COUNT)
        .map(|_| {
            let mut op = PauliOperator::identity(n);
            for idx in rand::seq::index::sample(&mut rng, support.len(), w) {
                op.set(support[idx], letters[rng.random_range(0..3)]);
            }
            op
        })
        .collect();
    (ops, true)
}

/// State of the sender's `B-bar` and the receiver's share right after
/// encoding `phi`, as a `dim(B-bar) x receiver_dim` matrix.
fn encode(ea: &EaCode, dec: &StructureDecomposition, phi: &CVector) -> Result<CMatrix> {
    let rows = dec.split.complement_dim();
    match ea.strategy {
        Strategy::Structure | Strategy::Compressed => {
            let share = match ea.strategy {
                Strategy::Structure => dec.psi_matrix(),
                _ => CMatrix::from_fn(dec.dim_a, ea.receiver_dim, |a, y| ea.shared_state[a * ea.receiver_dim + y]),
            };
            let mut m = CMatrix::zeros(rows, ea.receiver_dim);
            for (i, amp) in phi.iter().enumerate() {
                m += dec.block(i) * &share * *amp;
            }
            Ok(m)
        }
        Strategy::Presend => {
            let k = dec.k_dim;
            // rotate |0> onto phi, then act on B-bar of the pre-shared |0~>
            let v_r = householder_to(phi, k);
            let enc = logical_unitary_on_complement(dec, &v_r)?;
            let side = ea.receiver_dim;
            let zero = CMatrix::from_fn(rows, side, |r, y| ea.shared_state[r * side + y]);
            Ok(enc * zero)
        }
    }
}

/// A unitary whose first column is `phi` (normalized).
fn householder_to(phi: &CVector, k: usize) -> CMatrix {
    let basis = logical_inputs(k);
    if let Some(i) = basis[..k].iter().position(|b| (b - phi).norm() < 1e-14) {
        return shift_to(k, i);
    }
    if (phi - &basis[k]).norm() < 1e-14 {
        return fourier(k);
    }
    let mut cols = vec![phi.normalize()];
    cols.extend(qla::canonical_basis(
        &(CMatrix::identity(k, k) - phi * phi.adjoint() / real(phi.norm_squared())),
        k - 1,
        1e-9,
    ));
    CMatrix::from_columns(&cols)
}

/// Applies a Pauli on the sender's qubits to the rows of a `B-bar x share`
/// state matrix.
fn act_on_complement(split: &SubsystemSplit, e: &PauliOperator, m: &CMatrix) -> CMatrix {
    let local = e.restrict(split.complement());
    let mut out = m.clone();
    for (j, col) in m.column_iter().enumerate() {
        out.set_column(j, &local.apply(&col.into_owned()));
    }
    out
}

fn flatten(split: &SubsystemSplit, m: &CMatrix) -> CVector {
    let side = m.ncols();
    let v = CVector::from_fn(m.nrows() * side, |idx, _| m[(idx / side, idx % side)]);
    split.from_split_order(&v)
}

fn logical_state(code: &QuantumCode, phi: &CVector) -> CVector {
    basis_matrix(code) * phi
}

/// Runs every error of the given weight against every logical input and
/// the KL recovery for all errors up to that weight.
pub fn verify_ea(
    ea: &EaCode,
    dec: &StructureDecomposition,
    code: &QuantumCode,
    model: ErrorModel,
    weight: usize,
) -> Result<VerificationReport> {
    if model == ErrorModel::NoisyEbit && ea.strategy == Strategy::Compressed {
        return Err(Error::ModelMismatch(
            "compressed codes are valid for the noiseless-ebit model only".into(),
        ));
    }
    run_verification(ea, dec, code, model, weight, false)
}

/// Same sweep without the validity guard. Compressed codes under noisy
/// ebits get Pauli errors on the `ceil(log2 C)` qubits hosting the
/// receiver's share. Results are informative only.
pub fn explore_ea(
    ea: &EaCode,
    dec: &StructureDecomposition,
    code: &QuantumCode,
    model: ErrorModel,
    weight: usize,
) -> Result<VerificationReport> {
    run_verification(ea, dec, code, model, weight, true)
}

fn run_verification(
    ea: &EaCode,
    dec: &StructureDecomposition,
    code: &QuantumCode,
    model: ErrorModel,
    weight: usize,
    exploratory: bool,
) -> Result<VerificationReport> {
    let d = ea.params.d;
    if !exploratory && 2 * weight + 1 > d.max(1) {
        return Err(Error::Contract(format!(
            "weight {weight} exceeds the {} correctable errors of a distance-{d} code",
            (d.max(1) - 1) / 2
        )));
    }
    if dec.split != ea.split || dec.k_dim != code.k_dim() || dec.split.n() != code.n() {
        return Err(Error::Contract("code, decomposition and EA code disagree".into()));
    }
    let split = &dec.split;
    let compressed_noisy = ea.strategy == Strategy::Compressed && model == ErrorModel::NoisyEbit;
    if compressed_noisy {
        return explore_compressed_noisy(ea, dec, code, weight);
    }
    let support: Vec<usize> = match model {
        ErrorModel::NoiselessEbit => split.complement().to_vec(),
        ErrorModel::NoisyEbit => (0..code.n()).collect(),
    };
    let recovery_set: Vec<CMatrix> = (0..=weight)
        .flat_map(|w| PauliOperator::enumerate_weight(code.n(), &support, w).collect::<Vec<_>>())
        .map(|p| p.to_matrix())
        .collect();
    let recovery = kl_recovery(code, &recovery_set)?;
    let (errors, sampled) = errors_of_weight(code.n(), &support, weight);
    let inputs = logical_inputs(code.k_dim());
    let encoded: Vec<CMatrix> = inputs.iter().map(|phi| encode(ea, dec, phi)).collect::<Result<_>>()?;
    let ideal: Vec<CVector> = inputs.iter().map(|phi| logical_state(code, phi)).collect();
    let v = ea.compress_isometry.as_ref();

    let results: Vec<(String, f64)> = errors
        .par_iter()
        .map(|e| {
            let worst = encoded
                .iter()
                .zip(&ideal)
                .map(|(m, target)| {
                    let received = if ea.strategy == Strategy::Compressed {
                        // errors hit B-bar, then the receiver decompresses with V
                        let noisy = act_on_complement(split, e, m);
                        flatten(split, &(noisy * v.expect("compressed code carries V").transpose()))
                    } else {
                        e.apply(&flatten(split, m))
                    };
                    recovery.pure_fidelity(&received, target)
                })
                .fold(1.0, f64::min);
            (e.to_string(), worst)
        })
        .collect();
    Ok(summarize(ea, model, weight, &results, inputs.len(), sampled, exploratory))
}

fn summarize(
    ea: &EaCode,
    model: ErrorModel,
    weight: usize,
    results: &[(String, f64)],
    inputs: usize,
    sampled: bool,
    exploratory: bool,
) -> VerificationReport {
    let min_fidelity = results.iter().map(|r| r.1).fold(1.0, f64::min).clamp(0.0, 1.0);
    VerificationReport {
        model,
        strategy: ea.strategy,
        error_weight: weight,
        errors_checked: results.len(),
        cases_run: results.len() * inputs,
        sampled,
        exploratory,
        min_fidelity,
        failures: results
            .iter()
            .filter(|r| r.1 < 1.0 - FIDELITY_SLACK)
            .map(|(error, fidelity)| Failure {
                error: error.clone(),
                fidelity: *fidelity,
            })
            .collect(),
    }
}

/// The receiver's share lives on `ceil(log2 C)` qubits; `V` is completed to
/// an isometry from those qubits into `B`, errors hit both sides, and the
/// original recovery for errors on `B-bar` is applied.
fn explore_compressed_noisy(
    ea: &EaCode,
    dec: &StructureDecomposition,
    code: &QuantumCode,
    weight: usize,
) -> Result<VerificationReport> {
    let split = &dec.split;
    let v = ea.compress_isometry.as_ref().expect("compressed code carries V");
    let host = 1usize << ea.ebit_cost;
    let side = split.erased_dim();
    let mut cols: Vec<CVector> = v.column_iter().map(|c| c.into_owned()).collect();
    if host > cols.len() {
        let proj = CMatrix::identity(side, side) - v * v.adjoint();
        cols.extend(qla::canonical_basis(&proj, host - cols.len(), 1e-9));
    }
    let v_ext = CMatrix::from_columns(&cols);

    let n_sent = split.complement().len();
    let n_local = n_sent + ea.ebit_cost;
    let support: Vec<usize> = (0..n_local).collect();
    let recovery_set: Vec<CMatrix> = (0..=weight)
        .flat_map(|w| PauliOperator::enumerate_weight(code.n(), split.complement(), w).collect::<Vec<_>>())
        .map(|p| p.to_matrix())
        .collect();
    let recovery = kl_recovery(code, &recovery_set)?;
    let (errors, sampled) = errors_of_weight(n_local, &support, weight);
    let inputs = logical_inputs(code.k_dim());
    let ideal: Vec<CVector> = inputs.iter().map(|phi| logical_state(code, phi)).collect();
    let encoded: Vec<CVector> = inputs
        .iter()
        .map(|phi| {
            let m = encode(ea, dec, phi)?;
            let mut padded = CMatrix::zeros(m.nrows(), host);
            padded.columns_mut(0, m.ncols()).copy_from(&m);
            Ok(CVector::from_fn(m.nrows() * host, |idx, _| padded[(idx / host, idx % host)]))
        })
        .collect::<Result<_>>()?;
    let results: Vec<(String, f64)> = errors
        .par_iter()
        .map(|e| {
            let worst = encoded
                .iter()
                .zip(&ideal)
                .map(|(state, target)| {
                    let hit = e.apply(state);
                    let m = CMatrix::from_fn(hit.len() / host, host, |r, y| hit[r * host + y]);
                    let received = flatten(split, &(m * v_ext.transpose()));
                    recovery.pure_fidelity(&received, target)
                })
                .fold(1.0, f64::min);
            (e.to_string(), worst)
        })
        .collect();
    Ok(summarize(ea, ErrorModel::NoisyEbit, weight, &results, inputs.len(), sampled, true))
}

/// Hermitian spanning set of operators on the logical space.
fn logical_spanning_set(k: usize) -> Vec<CMatrix> {
    let unit = |i: usize, j: usize| {
        let mut m = CMatrix::zeros(k, k);
        m[(i, j)] = qla::ONE;
        m
    };
    let mut out: Vec<CMatrix> = (0..k).map(|i| unit(i, i)).collect();
    for i in 0..k {
        for j in i + 1..k {
            let (a, b) = (unit(i, j), unit(j, i));
            out.push((&a + &b) * real(0.5));
            out.push((a - b) * c(0.0, 0.5));
        }
    }
    out
}

/// Largest deviation between the erasure channel applied to encoded
/// operators and `(U ⊗ I_B)(rho_R ⊗ Gamma_A ⊗ I_B / 2^b)(U ⊗ I_B)^dagger`.
pub fn channel_form_check(dec: &StructureDecomposition, code: &QuantumCode) -> Result<f64> {
    let split = &dec.split;
    let basis = basis_matrix(code);
    let side = split.erased_dim();
    let mixed = CMatrix::identity(side, side) * real(1.0 / side as f64);
    logical_spanning_set(code.k_dim())
        .par_iter()
        .map(|rho_r| {
            let encoded = &basis * rho_r * basis.adjoint();
            let lhs = replace_erased(&encoded, split)?;
            let inner = &dec.u * qla::tensor(rho_r, &dec.gamma_a)? * dec.u.adjoint();
            let rhs = split.operator_from_split_order(&qla::tensor(&inner, &mixed)?);
            Ok((lhs - rhs).norm())
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}
