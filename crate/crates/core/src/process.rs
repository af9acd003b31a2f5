//! Process matrices χ: construction, concatenation, comparison and storage.
//!
//! Conventions used throughout the crate:
//!
//! * Operator bases are tensor products `E_n = e_{n₁} ⊗ … ⊗ e_{n_N}`, with `n`
//!   running lexicographically over `(n₁, …, n_N)`.
//! * In the matrix-unit basis the local element `n_i = a·d + b` is `|a⟩⟨b|`.
//! * χ is normalised to unit trace for trace-preserving maps: in the
//!   matrix-unit basis it is the operator-sum χ divided by `D`, which is the
//!   Choi state `(𝓔 ⊗ 1)(|Φ⟩⟨Φ|)` with its subsystems interleaved as
//!   `(out₁, in₁, out₂, in₂, …)`. In the Pauli-like basis the operator-sum χ
//!   already has unit trace and is stored as is.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tensor::{
    self, hermitian_eigenvalues, kron_all, kron_checked, permute_subsystems, ComplexMatrix,
    SubsystemShape, TensorError,
};

/// Version written into serialised χ documents.
pub const FORMAT_VERSION: u32 = 1;

/// Hermiticity/positivity tolerance for exactly constructed χ.
pub const EXACT_TOL: f64 = 1e-10;
/// Hermiticity/positivity tolerance for Monte Carlo estimates, relative to Tr χ.
pub const STATISTICAL_TOL: f64 = 5e-3;

const TP_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ProcessError {
    #[error("operator bases differ: {0}")]
    BasisMismatch(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("subsystem sets overlap on wire {0}")]
    OverlappingSubsystems(usize),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("unsupported χ document version {found} (expected {expected})")]
    SchemaVersion { found: u64, expected: u32 },
    #[error("malformed χ document: {0}")]
    Malformed(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BasisKind {
    /// `|a⟩⟨b|`, orthonormal under the Hilbert–Schmidt product.
    MatrixUnit,
    /// Paulis `{1, σx, σy, σz}` for qubits, Weyl operators `XᵃZᵇ` otherwise;
    /// `Tr(E_m† E_n) = d δ_mn` per factor.
    PauliLike,
}

impl BasisKind {
    pub fn name(self) -> &'static str {
        match self {
            BasisKind::MatrixUnit => "matrix-unit",
            BasisKind::PauliLike => "pauli-like",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        match s {
            "matrix-unit" => Some(BasisKind::MatrixUnit),
            "pauli-like" => Some(BasisKind::PauliLike),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OperatorBasis {
    shape: SubsystemShape,
    kind: BasisKind,
}

impl OperatorBasis {
    pub fn new(shape: SubsystemShape, kind: BasisKind) -> Self {
        Self { shape, kind }
    }

    pub fn matrix_units(shape: SubsystemShape) -> Self {
        Self::new(shape, BasisKind::MatrixUnit)
    }

    pub fn pauli(shape: SubsystemShape) -> Self {
        Self::new(shape, BasisKind::PauliLike)
    }

    /// Matrix-unit basis on `n` qubits.
    pub fn qubits(n: usize) -> Self {
        Self::matrix_units(SubsystemShape::uniform(2, n).expect("n ≥ 1"))
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn with_kind(&self, kind: BasisKind) -> Self {
        Self::new(self.shape.clone(), kind)
    }

    /// Hilbert-space dimension `D`.
    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    /// Number of basis operators, `D²`.
    pub fn len(&self) -> usize {
        self.dim() * self.dim()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `Tr(E_n† E_n)`, identical for every element.
    pub fn hs_norm(&self) -> f64 {
        match self.kind {
            BasisKind::MatrixUnit => 1.0,
            BasisKind::PauliLike => self.dim() as f64,
        }
    }

    pub fn local_elements(d: usize, kind: BasisKind) -> Vec<ComplexMatrix> {
        let one = C64::new(1.0, 0.0);
        match kind {
            BasisKind::MatrixUnit => (0..d * d)
                .map(|n| {
                    let mut m = ComplexMatrix::zeros(d, d);
                    m[(n / d, n % d)] = one;
                    m
                })
                .collect(),
            BasisKind::PauliLike if d == 2 => pauli_matrices().to_vec(),
            BasisKind::PauliLike => {
                let omega = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / d as f64);
                let shift = ComplexMatrix::from_fn(d, d, |r, c| {
                    if r == (c + 1) % d {
                        one
                    } else {
                        C64::new(0.0, 0.0)
                    }
                });
                let clock = ComplexMatrix::diagonal(
                    &(0..d).map(|j| omega.powu(j as u32)).collect::<Vec<_>>(),
                );
                let mut out = Vec::with_capacity(d * d);
                let mut xa = ComplexMatrix::identity(d);
                for _ in 0..d {
                    let mut zb = ComplexMatrix::identity(d);
                    for _ in 0..d {
                        out.push(xa.matmul(&zb));
                        zb = zb.matmul(&clock);
                    }
                    xa = xa.matmul(&shift);
                }
                out
            }
        }
    }

    /// The `n`-th basis operator.
    pub fn element(&self, n: usize) -> ComplexMatrix {
        let digits = self.shape.squared().digits(n);
        let locals: Vec<ComplexMatrix> = digits
            .iter()
            .zip(self.shape.local_dims())
            .map(|(&k, &d)| Self::local_elements(d, self.kind).swap_remove(k))
            .collect();
        kron_all(&locals).expect("basis element within dimension cap")
    }

    /// Unitary `W` with `χ_matrix-unit = W χ_self W†`.
    pub fn to_matrix_unit_transform(&self) -> ComplexMatrix {
        let locals: Vec<ComplexMatrix> = self
            .shape
            .local_dims()
            .iter()
            .map(|&d| {
                let elems = Self::local_elements(d, self.kind);
                let norm = match self.kind {
                    BasisKind::MatrixUnit => 1.0,
                    BasisKind::PauliLike => (d as f64).sqrt(),
                };
                ComplexMatrix::from_fn(d * d, d * d, |r, c| elems[c][(r / d, r % d)] / norm)
            })
            .collect();
        kron_all(&locals).expect("basis transform within dimension cap")
    }

    /// For every product-ordered index `n`, the pair `(a, b)` of global
    /// row/column indices with `E_n ∝ |a⟩⟨b|` in the matrix-unit basis.
    fn pair_map(&self) -> Vec<(usize, usize)> {
        let dims = self.shape.local_dims();
        let op_shape = self.shape.squared();
        (0..self.len())
            .map(|n| {
                let digits = op_shape.digits(n);
                let a: Vec<usize> = digits.iter().zip(dims).map(|(&k, &d)| k / d).collect();
                let b: Vec<usize> = digits.iter().zip(dims).map(|(&k, &d)| k % d).collect();
                (self.shape.flat(&a), self.shape.flat(&b))
            })
            .collect()
    }
}

pub fn pauli_matrices() -> [ComplexMatrix; 4] {
    let o = C64::new(0.0, 0.0);
    let l = C64::new(1.0, 0.0);
    let i = C64::new(0.0, 1.0);
    [
        ComplexMatrix::identity(2),
        ComplexMatrix::from_vec(2, 2, vec![o, l, l, o]).unwrap(),
        ComplexMatrix::from_vec(2, 2, vec![o, -i, i, o]).unwrap(),
        ComplexMatrix::from_vec(2, 2, vec![l, o, o, -l]).unwrap(),
    ]
}

pub fn hadamard() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[
        &[FRAC_1_SQRT_2, FRAC_1_SQRT_2],
        &[FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
    ])
}

/// Verification level for [`ProcessMatrix::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Tolerance {
    Exact,
    Statistical,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProcessMatrix {
    basis: OperatorBasis,
    chi: ComplexMatrix,
    trace_preserving: bool,
    pub metadata: BTreeMap<String, String>,
}

impl ProcessMatrix {
    pub fn new(basis: OperatorBasis, chi: ComplexMatrix) -> Result<Self, ProcessError> {
        if chi.rows() != basis.len() || chi.cols() != basis.len() {
            return Err(ProcessError::DimensionMismatch(format!(
                "χ is {}x{} but the basis has {} elements",
                chi.rows(),
                chi.cols(),
                basis.len()
            )));
        }
        let mut p = Self {
            basis,
            chi,
            trace_preserving: false,
            metadata: BTreeMap::new(),
        };
        p.trace_preserving = p.check_trace_preserving(TP_TOL);
        Ok(p)
    }

    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }

    pub fn chi(&self) -> &ComplexMatrix {
        &self.chi
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn shape(&self) -> &SubsystemShape {
        self.basis.shape()
    }

    pub fn trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn trace(&self) -> f64 {
        self.chi.trace().re
    }

    pub fn with_metadata(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    /// χ of the unitary channel `ρ ↦ UρU†`.
    pub fn from_unitary(u: &ComplexMatrix, basis: &OperatorBasis) -> Result<Self, ProcessError> {
        chi_from_kraus(std::slice::from_ref(u), basis)
    }

    /// χ of the identity channel.
    pub fn identity(basis: &OperatorBasis) -> Self {
        Self::from_unitary(&ComplexMatrix::identity(basis.dim()), basis)
            .expect("identity is a channel")
    }

    /// The same map expressed in another basis kind.
    pub fn to_kind(&self, kind: BasisKind) -> Self {
        if kind == self.basis.kind {
            return self.clone();
        }
        let mu = self.matrix_unit_chi();
        let target = self.basis.with_kind(kind);
        let w = target.to_matrix_unit_transform();
        let chi = w.adjoint().matmul(&mu).matmul(&w);
        Self {
            basis: target,
            chi,
            trace_preserving: self.trace_preserving,
            metadata: self.metadata.clone(),
        }
    }

    fn matrix_unit_chi(&self) -> ComplexMatrix {
        match self.basis.kind {
            BasisKind::MatrixUnit => self.chi.clone(),
            BasisKind::PauliLike => {
                let w = self.basis.to_matrix_unit_transform();
                w.matmul(&self.chi).matmul(&w.adjoint())
            }
        }
    }

    /// `Σ_a χ[(a,b),(a,d)]`, which equals `1/D` for trace-preserving maps.
    fn input_marginal(&self) -> ComplexMatrix {
        let mu = self.matrix_unit_chi();
        let d = self.dim();
        let pairs = self.basis.pair_map();
        let mut index = vec![0usize; d * d];
        for (n, &(a, b)) in pairs.iter().enumerate() {
            index[a * d + b] = n;
        }
        ComplexMatrix::from_fn(d, d, |b, dd| {
            (0..d)
                .map(|a| mu[(index[a * d + b], index[a * d + dd])])
                .sum()
        })
    }

    fn check_trace_preserving(&self, tol: f64) -> bool {
        let d = self.dim();
        let target = ComplexMatrix::identity(d).scale_real(1.0 / d as f64);
        self.input_marginal().max_abs_diff(&target) <= tol
    }

    /// Checks Hermiticity and positivity at the requested tolerance tier.
    pub fn validate(&self, tier: Tolerance) -> Result<(), ProcessError> {
        let tol = match tier {
            Tolerance::Exact => EXACT_TOL,
            Tolerance::Statistical => STATISTICAL_TOL * self.trace().abs().max(1.0),
        };
        let herm = self.chi.max_abs_diff(&self.chi.adjoint());
        if herm > tol {
            return Err(ProcessError::Invariant(format!(
                "χ not Hermitian: max|χ−χ†| = {herm:e}"
            )));
        }
        let min = self.min_eigenvalue();
        if min < -tol {
            return Err(ProcessError::Invariant(format!(
                "χ not positive: min eigenvalue {min:e}"
            )));
        }
        if self.trace() > 1.0 + tol {
            return Err(ProcessError::Invariant(format!(
                "Tr χ = {} exceeds 1",
                self.trace()
            )));
        }
        Ok(())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        hermitian_eigenvalues(&self.chi.hermitian_part())
            .map(|e| e[0])
            .unwrap_or(f64::NAN)
    }

    /// Restriction to the local levels `{0, 1}` of every subsystem.
    ///
    /// Returns the qubit map `P 𝓔(J · J†) P†` (with `J` the qubit injection and
    /// `P` the projection) and the trace lost in doing so.
    pub fn project_to_qubit_subspace(&self) -> (ProcessMatrix, f64) {
        let mu = self.matrix_unit_chi();
        let dims = self.shape().local_dims();
        let op_shape = self.shape().squared();
        let keep: Vec<usize> = (0..self.basis.len())
            .filter(|&n| {
                op_shape
                    .digits(n)
                    .iter()
                    .zip(dims)
                    .all(|(&k, &d)| k / d < 2 && k % d < 2)
            })
            .collect();
        let nq = dims.len();
        let scale = self.dim() as f64 / (1usize << nq) as f64;
        let chi = mu.select(&keep, &keep).scale_real(scale);
        let qbasis = OperatorBasis::new(
            SubsystemShape::uniform(2, nq).expect("n ≥ 1"),
            BasisKind::MatrixUnit,
        );
        let mut out = ProcessMatrix::new(qbasis, chi).expect("consistent dimensions");
        out.metadata = self.metadata.clone();
        let out = out.to_kind(self.basis.kind);
        let leakage = self.trace() - out.trace();
        (out, leakage)
    }

    pub fn to_json(&self) -> String {
        let doc = ChiDocument {
            format_version: FORMAT_VERSION,
            dim: self.dim(),
            shape: self.shape().local_dims().to_vec(),
            basis_kind: self.basis.kind.name().to_string(),
            trace_preserving: self.trace_preserving,
            metadata: self.metadata.clone(),
            chi: self.chi.as_slice().iter().map(|z| [z.re, z.im]).collect(),
        };
        let mut s = serde_json::to_string(&doc).expect("χ document serialises");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self, ProcessError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| ProcessError::Malformed(e.to_string()))?;
        let version = value
            .get("format_version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| ProcessError::Malformed("missing format_version".into()))?;
        if version != u64::from(FORMAT_VERSION) {
            return Err(ProcessError::SchemaVersion {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        let doc: ChiDocument =
            serde_json::from_value(value).map_err(|e| ProcessError::Malformed(e.to_string()))?;
        let shape = SubsystemShape::new(doc.shape)?;
        if shape.dim() != doc.dim {
            return Err(ProcessError::Malformed(format!(
                "D = {} inconsistent with shape",
                doc.dim
            )));
        }
        let kind = BasisKind::from_name(&doc.basis_kind).ok_or_else(|| {
            ProcessError::Malformed(format!("unknown basis kind `{}`", doc.basis_kind))
        })?;
        let basis = OperatorBasis::new(shape, kind);
        let n = basis.len();
        let chi = ComplexMatrix::from_vec(
            n,
            n,
            doc.chi
                .into_iter()
                .map(|[re, im]| C64::new(re, im))
                .collect(),
        )?;
        Ok(Self {
            basis,
            chi,
            trace_preserving: doc.trace_preserving,
            metadata: doc.metadata,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct ChiDocument {
    format_version: u32,
    #[serde(rename = "D")]
    dim: usize,
    shape: Vec<usize>,
    basis_kind: String,
    trace_preserving: bool,
    metadata: BTreeMap<String, String>,
    chi: Vec<[f64; 2]>,
}

/// χ from a Kraus decomposition: `χ_mn = Σ_k ⟨Ẽ_m, K_k⟩⟨Ẽ_n, K_k⟩* / D`, with
/// `Ẽ` the basis elements scaled to unit Hilbert–Schmidt norm.
pub fn chi_from_kraus(
    kraus: &[ComplexMatrix],
    basis: &OperatorBasis,
) -> Result<ProcessMatrix, ProcessError> {
    let d = basis.dim();
    if kraus.is_empty() {
        return Err(ProcessError::InvalidChannel("no Kraus operators".into()));
    }
    let mut completeness = ComplexMatrix::zeros(d, d);
    for k in kraus {
        if k.rows() != d || k.cols() != d {
            return Err(ProcessError::DimensionMismatch(format!(
                "Kraus operator is {}x{}, basis dimension is {d}",
                k.rows(),
                k.cols()
            )));
        }
        completeness += &k.adjoint().matmul(k);
    }
    let excess = hermitian_eigenvalues(&(&completeness - &ComplexMatrix::identity(d)))?;
    if excess.last().copied().unwrap_or(0.0) > 1e-10 {
        return Err(ProcessError::InvalidChannel(format!(
            "Σ K†K exceeds the identity by {:e}",
            excess.last().unwrap()
        )));
    }
    let pairs = OperatorBasis::matrix_units(basis.shape().clone()).pair_map();
    let mut chi = ComplexMatrix::zeros(d * d, d * d);
    for k in kraus {
        let v: Vec<C64> = pairs.iter().map(|&(a, b)| k[(a, b)]).collect();
        chi += &ComplexMatrix::outer(&v, &v);
    }
    let chi = chi.scale_real(1.0 / d as f64);
    let mu = ProcessMatrix::new(OperatorBasis::matrix_units(basis.shape().clone()), chi)?;
    Ok(mu.to_kind(basis.kind()))
}

fn check_same_basis(a: &ProcessMatrix, b: &ProcessMatrix) -> Result<(), ProcessError> {
    if a.basis != b.basis {
        return Err(ProcessError::BasisMismatch(format!(
            "{} {:?} vs {} {:?}",
            a.basis.kind.name(),
            a.shape().local_dims(),
            b.basis.kind.name(),
            b.shape().local_dims()
        )));
    }
    Ok(())
}

/// Index map between product-ordered χ indices and Choi (output ⊗ input) indices.
fn choi_order(basis: &OperatorBasis) -> Vec<usize> {
    let d = basis.dim();
    basis
        .pair_map()
        .into_iter()
        .map(|(a, b)| a * d + b)
        .collect()
}

/// Choi state `(𝓔 ⊗ 1)(|Φ⟩⟨Φ|)` with the output system first and the input
/// (ancilla) second; unit trace for trace-preserving maps.
pub fn to_choi(p: &ProcessMatrix) -> ComplexMatrix {
    let mu = p.matrix_unit_chi();
    let order = choi_order(&p.basis);
    let mut inverse = vec![0usize; order.len()];
    for (n, &c) in order.iter().enumerate() {
        inverse[c] = n;
    }
    mu.select(&inverse, &inverse)
}

/// Inverse of [`to_choi`]; the result is expressed in `basis`.
pub fn from_choi(j: &ComplexMatrix, basis: &OperatorBasis) -> Result<ProcessMatrix, ProcessError> {
    if !j.is_square() {
        return Err(TensorError::NotSquare {
            rows: j.rows(),
            cols: j.cols(),
        }
        .into());
    }
    if j.rows() != basis.len() {
        return Err(ProcessError::DimensionMismatch(format!(
            "Choi matrix of size {} for a basis of {} elements",
            j.rows(),
            basis.len()
        )));
    }
    let order = choi_order(basis);
    let mu = ProcessMatrix::new(
        basis.with_kind(BasisKind::MatrixUnit),
        j.select(&order, &order),
    )?;
    Ok(mu.to_kind(basis.kind()))
}

/// Superoperator on row-major `vec(ρ)`: `vec(𝓔(ρ)) = S vec(ρ)`.
pub fn to_superoperator(p: &ProcessMatrix) -> ComplexMatrix {
    let d = p.dim();
    let c = to_choi(p);
    ComplexMatrix::from_fn(d * d, d * d, |r, col| {
        let (a, cc) = (r / d, r % d);
        let (b, dd) = (col / d, col % d);
        c[(a * d + b, cc * d + dd)] * d as f64
    })
}

pub fn from_superoperator(
    s: &ComplexMatrix,
    basis: &OperatorBasis,
) -> Result<ProcessMatrix, ProcessError> {
    let d = basis.dim();
    if s.rows() != d * d || s.cols() != d * d {
        return Err(ProcessError::DimensionMismatch("superoperator size".into()));
    }
    let c = ComplexMatrix::from_fn(d * d, d * d, |r, col| {
        let (a, b) = (r / d, r % d);
        let (cc, dd) = (col / d, col % d);
        s[(a * d + cc, b * d + dd)] / d as f64
    });
    from_choi(&c, basis)
}

/// χ of `second ∘ first` via superoperator composition.
pub fn serial_concat(
    first: &ProcessMatrix,
    second: &ProcessMatrix,
) -> Result<ProcessMatrix, ProcessError> {
    check_same_basis(first, second)?;
    let s = to_superoperator(second).matmul(&to_superoperator(first));
    from_superoperator(&s, &first.basis)
}

/// Sparse expansion `E_p E_m = Σ_r c_{pm}^r E_r`.
#[derive(Debug, Clone)]
pub struct StructureConstants {
    basis: OperatorBasis,
    terms: Vec<Vec<(usize, C64)>>,
}

impl StructureConstants {
    pub fn basis(&self) -> &OperatorBasis {
        &self.basis
    }

    pub fn terms(&self, p: usize, m: usize) -> &[(usize, C64)] {
        &self.terms[p * self.basis.len() + m]
    }
}

pub fn structure_constants(basis: &OperatorBasis) -> StructureConstants {
    let dims = basis.shape().local_dims();
    // Per-factor tables, combined multiplicatively.
    let local: Vec<Vec<Vec<(usize, C64)>>> = dims
        .iter()
        .map(|&d| {
            let elems = OperatorBasis::local_elements(d, basis.kind());
            let hs = match basis.kind() {
                BasisKind::MatrixUnit => 1.0,
                BasisKind::PauliLike => d as f64,
            };
            let mut table = Vec::with_capacity(elems.len() * elems.len());
            for ep in &elems {
                for em in &elems {
                    let prod = ep.matmul(em);
                    let row: Vec<(usize, C64)> = elems
                        .iter()
                        .enumerate()
                        .filter_map(|(r, er)| {
                            let c = er.adjoint().matmul(&prod).trace() / hs;
                            (c.norm() > 1e-14).then_some((r, c))
                        })
                        .collect();
                    table.push(row);
                }
            }
            table
        })
        .collect();
    let op_shape = basis.shape().squared();
    let n = basis.len();
    let mut terms = Vec::with_capacity(n * n);
    for p in 0..n {
        let pd = op_shape.digits(p);
        for m in 0..n {
            let md = op_shape.digits(m);
            let mut acc: Vec<(Vec<usize>, C64)> = vec![(Vec::new(), C64::new(1.0, 0.0))];
            for (i, table) in local.iter().enumerate() {
                let ld = dims[i] * dims[i];
                let entry = &table[pd[i] * ld + md[i]];
                let mut next = Vec::with_capacity(acc.len() * entry.len());
                for (digits, coeff) in &acc {
                    for &(r, c) in entry {
                        let mut dg = digits.clone();
                        dg.push(r);
                        next.push((dg, coeff * c));
                    }
                }
                acc = next;
            }
            terms.push(
                acc.into_iter()
                    .map(|(dg, c)| (op_shape.flat(&dg), c))
                    .collect(),
            );
        }
    }
    StructureConstants {
        basis: basis.clone(),
        terms,
    }
}

/// χ of `second ∘ first` through the four-index sum
/// `χ_rs = ν Σ c_{pm}^r χ¹_mn χ²_pq (c_{qn}^s)*`, where `ν = D / Tr(E†E)`
/// accounts for the unit-trace normalisation.
pub fn serial_concat_structure(
    first: &ProcessMatrix,
    second: &ProcessMatrix,
    constants: &StructureConstants,
) -> Result<ProcessMatrix, ProcessError> {
    check_same_basis(first, second)?;
    if constants.basis != first.basis {
        return Err(ProcessError::BasisMismatch(
            "structure constants for another basis".into(),
        ));
    }
    let n = first.basis.len();
    let nu = first.dim() as f64 / first.basis.hs_norm();
    let nonzero: Vec<(usize, usize, &[(usize, C64)])> = (0..n)
        .flat_map(|p| (0..n).map(move |m| (p, m)))
        .filter_map(|(p, m)| {
            let t = constants.terms(p, m);
            (!t.is_empty()).then_some((p, m, t))
        })
        .collect();
    let mut chi = ComplexMatrix::zeros(n, n);
    for &(p, m, rterms) in &nonzero {
        for &(q, nn, sterms) in &nonzero {
            let weight = first.chi[(m, nn)] * second.chi[(p, q)];
            if weight.norm_sqr() == 0.0 {
                continue;
            }
            for &(r, cr) in rterms {
                for &(s, cs) in sterms {
                    chi[(r, s)] += cr * weight * cs.conj() * nu;
                }
            }
        }
    }
    ProcessMatrix::new(first.basis.clone(), chi)
}

/// Tensor product of maps on disjoint wire sets.
///
/// Returns χ on the union of wires, with subsystems in ascending wire order,
/// together with that sorted wire list.
pub fn parallel_concat(
    a: &ProcessMatrix,
    wires_a: &[usize],
    b: &ProcessMatrix,
    wires_b: &[usize],
) -> Result<(ProcessMatrix, Vec<usize>), ProcessError> {
    if a.basis.kind != b.basis.kind {
        return Err(ProcessError::BasisMismatch(
            "parallel concatenation across basis kinds".into(),
        ));
    }
    for (p, w) in [(a, wires_a), (b, wires_b)] {
        if w.len() != p.shape().len() {
            return Err(ProcessError::DimensionMismatch(format!(
                "{} wires for a {}-subsystem χ",
                w.len(),
                p.shape().len()
            )));
        }
    }
    let all: Vec<usize> = wires_a.iter().chain(wires_b).copied().collect();
    let mut sorted = all.clone();
    sorted.sort_unstable();
    if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
        return Err(ProcessError::OverlappingSubsystems(w[0]));
    }
    let perm: Vec<usize> = sorted
        .iter()
        .map(|w| all.iter().position(|x| x == w).unwrap())
        .collect();
    let shape = a.shape().concat(b.shape());
    let chi = kron_checked(&a.chi, &b.chi, usize::MAX)?;
    let chi = permute_subsystems(&chi, &shape.squared(), &perm)?;
    let basis = OperatorBasis::new(shape.permuted(&perm)?, a.basis.kind);
    Ok((ProcessMatrix::new(basis, chi)?, sorted))
}

/// Reorders the subsystems of `p`, whose factor `i` sits on wire `wires[i]`,
/// into ascending wire order.
fn reorder(p: &ProcessMatrix, wires: &[usize]) -> Result<ProcessMatrix, ProcessError> {
    let mut sorted = wires.to_vec();
    sorted.sort_unstable();
    let perm: Vec<usize> = sorted
        .iter()
        .map(|w| wires.iter().position(|x| x == w).unwrap())
        .collect();
    let chi = permute_subsystems(&p.chi, &p.shape().squared(), &perm)?;
    let basis = OperatorBasis::new(p.shape().permuted(&perm)?, p.basis.kind);
    ProcessMatrix::new(basis, chi)
}

/// Places `small` on `positions` of `register`, with identity channels on
/// every other subsystem.
pub fn embed(
    small: &ProcessMatrix,
    register: &SubsystemShape,
    positions: &[usize],
) -> Result<ProcessMatrix, ProcessError> {
    if positions.len() != small.shape().len() {
        return Err(ProcessError::DimensionMismatch(format!(
            "{} positions for a {}-subsystem χ",
            positions.len(),
            small.shape().len()
        )));
    }
    for (i, &p) in positions.iter().enumerate() {
        if p >= register.len() {
            return Err(ProcessError::DimensionMismatch(format!(
                "position {p} outside register"
            )));
        }
        if register.local_dims()[p] != small.shape().local_dims()[i] {
            return Err(ProcessError::DimensionMismatch(format!(
                "local dimension mismatch at wire {p}"
            )));
        }
        if positions[..i].contains(&p) {
            return Err(ProcessError::OverlappingSubsystems(p));
        }
    }
    let rest: Vec<usize> = (0..register.len())
        .filter(|w| !positions.contains(w))
        .collect();
    if rest.is_empty() {
        return reorder(small, positions);
    }
    let rest_shape = SubsystemShape::new(rest.iter().map(|&w| register.local_dims()[w]).collect())?;
    let idle = ProcessMatrix::identity(&OperatorBasis::new(rest_shape, small.basis.kind));
    let (out, _) = parallel_concat(small, positions, &idle, &rest)?;
    Ok(out)
}

/// `½‖χ_a − χ_b‖_tr`.
pub fn trace_distance(a: &ProcessMatrix, b: &ProcessMatrix) -> Result<f64, ProcessError> {
    check_same_basis(a, b)?;
    let diff = &a.chi - &b.chi;
    let norm = if diff.is_hermitian(1e-9) {
        tensor::hermitian_eigenvalues(&diff.hermitian_part())?
            .iter()
            .map(|l| l.abs())
            .sum()
    } else {
        tensor::trace_norm(&diff)?
    };
    Ok(0.5 * norm)
}
