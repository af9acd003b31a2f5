//! Neutral-atom register with Rydberg blockade.
//!
//! Frequencies and rates are angular (rad/s) inside this module; parameter
//! files use Hz and are converted with [`AtomParamsHz::to_rad`].
//!
//! Local level order is `|0⟩, |1⟩, [dump], [|p⟩], |r⟩`: qubit levels first,
//! the Rydberg level last.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mcwf::{
    schedule_propagator, HamiltonianSegment, InstantUnitary, JumpOperator, McwfError,
    PulseSchedule, TrajectoryConfig,
};
use crate::tensor::{kron_all, ComplexMatrix, SubsystemShape, TensorError};

pub const TWO_PI: f64 = 2.0 * PI;

/// `𝔅 / Ω_eff` used for the ideal-blockade reference runs.
pub const IDEAL_BLOCKADE_RATIO: f64 = 1e7;

#[derive(Debug, Error)]
pub enum RydbergError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },
    #[error("atom index {index} outside a register of {n_atoms}")]
    AtomOutOfRange { index: usize, n_atoms: usize },
    #[error("atom {0} used more than once in one gate")]
    IndexCollision(usize),
    #[error("effective Rabi frequency is zero")]
    ZeroRabi,
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("register dimension {dim} exceeds the cap {max}")]
    DimensionOverflow { dim: usize, max: usize },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Mcwf(#[from] McwfError),
}

/// Angular frequencies and rates (rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomParams {
    pub delta: f64,
    pub omega_r: f64,
    pub omega_b: f64,
    pub blockade: f64,
    pub gamma_p: f64,
    pub gamma_r: f64,
    pub gamma_d: f64,
}

/// The same quantities as ordinary frequencies (Hz).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomParamsHz {
    pub delta: f64,
    pub omega_r: f64,
    pub omega_b: f64,
    pub blockade: f64,
    pub gamma_p: f64,
    pub gamma_r: f64,
    pub gamma_d: f64,
}

impl AtomParamsHz {
    /// Published parameter set; `omega_b` sits mid-sweep at 50 MHz.
    pub fn table1() -> Self {
        Self {
            delta: 2.0e9,
            omega_r: 118e6,
            omega_b: 50e6,
            blockade: 20e6,
            gamma_p: 6.07e6,
            gamma_r: 530.0,
            gamma_d: 1.0e3,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "table1" => Some(Self::table1()),
            _ => None,
        }
    }

    pub fn to_rad(&self) -> AtomParams {
        AtomParams {
            delta: TWO_PI * self.delta,
            omega_r: TWO_PI * self.omega_r,
            omega_b: TWO_PI * self.omega_b,
            blockade: TWO_PI * self.blockade,
            gamma_p: TWO_PI * self.gamma_p,
            gamma_r: TWO_PI * self.gamma_r,
            gamma_d: TWO_PI * self.gamma_d,
        }
    }
}

impl AtomParams {
    pub fn table1() -> Self {
        AtomParamsHz::table1().to_rad()
    }

    pub fn to_hz(&self) -> AtomParamsHz {
        AtomParamsHz {
            delta: self.delta / TWO_PI,
            omega_r: self.omega_r / TWO_PI,
            omega_b: self.omega_b / TWO_PI,
            blockade: self.blockade / TWO_PI,
            gamma_p: self.gamma_p / TWO_PI,
            gamma_r: self.gamma_r / TWO_PI,
            gamma_d: self.gamma_d / TWO_PI,
        }
    }

    pub fn with_omega_b(self, omega_b: f64) -> Self {
        Self { omega_b, ..self }
    }

    pub fn with_blockade(self, blockade: f64) -> Self {
        Self { blockade, ..self }
    }

    /// All dissipation switched off.
    pub fn closed(self) -> Self {
        Self {
            gamma_p: 0.0,
            gamma_r: 0.0,
            gamma_d: 0.0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), RydbergError> {
        let fields = [
            ("delta", self.delta),
            ("omega_r", self.omega_r),
            ("omega_b", self.omega_b),
            ("blockade", self.blockade),
            ("gamma_p", self.gamma_p),
            ("gamma_r", self.gamma_r),
            ("gamma_d", self.gamma_d),
        ];
        for (field, v) in fields {
            if !v.is_finite() {
                return Err(RydbergError::InvalidParameter {
                    field,
                    reason: format!("{v} is not finite"),
                });
            }
            if field != "delta" && v < 0.0 {
                return Err(RydbergError::InvalidParameter {
                    field,
                    reason: format!("{v} is negative"),
                });
            }
        }
        Ok(())
    }

    /// True when `|Δ| < 5·max(Ω_R, Ω_B)`, where adiabatic elimination is doubtful.
    pub fn elimination_questionable(&self) -> bool {
        self.delta.abs() < 5.0 * self.omega_r.max(self.omega_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum SchemeKind {
    /// `|0⟩, |1⟩, |r⟩` with the intermediate level eliminated.
    #[default]
    #[serde(rename = "effective-3")]
    Effective3,
    /// `|0⟩, |1⟩, |p⟩, |r⟩`.
    #[serde(rename = "full-4")]
    Full4,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Effective3 => "effective-3",
            SchemeKind::Full4 => "full-4",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum StarkMode {
    #[default]
    Compensated,
    Uncompensated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LevelScheme {
    pub kind: SchemeKind,
    /// Adds a level that absorbs all spontaneous decay.
    pub dump: bool,
}

impl LevelScheme {
    pub fn new(kind: SchemeKind, dump: bool) -> Self {
        Self { kind, dump }
    }

    pub fn local_dim(&self) -> usize {
        let base = match self.kind {
            SchemeKind::Effective3 => 3,
            SchemeKind::Full4 => 4,
        };
        base + usize::from(self.dump)
    }

    pub fn rydberg(&self) -> usize {
        self.local_dim() - 1
    }

    pub fn intermediate(&self) -> Option<usize> {
        match self.kind {
            SchemeKind::Full4 => Some(self.local_dim() - 2),
            SchemeKind::Effective3 => None,
        }
    }

    pub fn dump_level(&self) -> Option<usize> {
        self.dump.then_some(2)
    }

    pub fn labels(&self) -> Vec<&'static str> {
        let mut l = vec!["0", "1"];
        if self.dump {
            l.push("dump");
        }
        if self.kind == SchemeKind::Full4 {
            l.push("p");
        }
        l.push("r");
        l
    }

    /// Final levels and branching weights of a spontaneous decay.
    fn decay_targets(&self) -> Vec<(usize, f64)> {
        match self.dump_level() {
            Some(d) => vec![(d, 1.0)],
            None => vec![(0, 0.5), (1, 0.5)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegisterModel {
    pub n_atoms: usize,
    pub scheme: LevelScheme,
    pub params: AtomParams,
    pub stark: StarkMode,
}

impl RegisterModel {
    pub fn new(
        n_atoms: usize,
        scheme: LevelScheme,
        params: AtomParams,
    ) -> Result<Self, RydbergError> {
        if n_atoms == 0 {
            return Err(RydbergError::InvalidParameter {
                field: "n_atoms",
                reason: "must be at least 1".into(),
            });
        }
        params.validate()?;
        Ok(Self {
            n_atoms,
            scheme,
            params,
            stark: StarkMode::Compensated,
        })
    }

    pub fn effective3(n_atoms: usize, params: AtomParams) -> Result<Self, RydbergError> {
        Self::new(n_atoms, LevelScheme::default(), params)
    }

    pub fn with_stark(mut self, stark: StarkMode) -> Self {
        self.stark = stark;
        self
    }

    pub fn with_params(&self, params: AtomParams) -> Self {
        Self {
            params,
            ..self.clone()
        }
    }

    pub fn local_dim(&self) -> usize {
        self.scheme.local_dim()
    }

    pub fn shape(&self) -> SubsystemShape {
        SubsystemShape::uniform(self.local_dim(), self.n_atoms).expect("n_atoms ≥ 1, d ≥ 3")
    }

    pub fn dim(&self) -> usize {
        self.local_dim().pow(self.n_atoms as u32)
    }

    pub fn check_dim(&self, max: usize) -> Result<(), RydbergError> {
        let dim = self.dim();
        if dim > max {
            return Err(RydbergError::DimensionOverflow { dim, max });
        }
        Ok(())
    }

    fn check_atom(&self, index: usize) -> Result<(), RydbergError> {
        if index >= self.n_atoms {
            return Err(RydbergError::AtomOutOfRange {
                index,
                n_atoms: self.n_atoms,
            });
        }
        Ok(())
    }

    /// Duration of every π-pulse.
    pub fn pulse_duration(&self) -> Result<f64, RydbergError> {
        let m = adiabatic_eliminate(&self.params, 0)?;
        if m.omega_eff == 0.0 {
            return Err(RydbergError::ZeroRabi);
        }
        Ok(PI / m.omega_eff)
    }

    /// Closed-system copy with `𝔅 = IDEAL_BLOCKADE_RATIO · Ω_eff`.
    pub fn ideal_limit(&self) -> Result<Self, RydbergError> {
        let m = adiabatic_eliminate(&self.params, 0)?;
        Ok(self.with_params(
            self.params
                .closed()
                .with_blockade(IDEAL_BLOCKADE_RATIO * m.omega_eff),
        ))
    }

    /// `op` (local_dim × local_dim) on `atom`, identity elsewhere.
    pub fn embed_local(&self, atom: usize, op: &ComplexMatrix) -> ComplexMatrix {
        let id = ComplexMatrix::identity(self.local_dim());
        let factors: Vec<&ComplexMatrix> = (0..self.n_atoms)
            .map(|i| if i == atom { op } else { &id })
            .collect();
        kron_all(factors).expect("register within cap")
    }
}

/// Second-order effective description of one driven atom.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveModel {
    pub target_level: usize,
    pub omega_eff: f64,
    /// Light shift of the driven ground level.
    pub stark_ground: f64,
    pub stark_r: f64,
    /// Scattering rate out of the driven ground level via the `|p⟩` admixture.
    pub ground_scatter: f64,
    /// Scattering rate out of `|r⟩` via the `|p⟩` admixture.
    pub rydberg_scatter: f64,
    pub gamma_r: f64,
    pub gamma_d: f64,
}

pub fn adiabatic_eliminate(
    params: &AtomParams,
    target_level: usize,
) -> Result<EffectiveModel, RydbergError> {
    if params.delta == 0.0 {
        return Err(RydbergError::InvalidParameter {
            field: "delta",
            reason: "must be non-zero".into(),
        });
    }
    if target_level > 1 {
        return Err(RydbergError::InvalidParameter {
            field: "target_level",
            reason: format!("{target_level} is not a qubit level"),
        });
    }
    let p = params;
    let d2 = 4.0 * p.delta * p.delta;
    Ok(EffectiveModel {
        target_level,
        omega_eff: p.omega_r * p.omega_b / (2.0 * p.delta),
        stark_ground: p.omega_r * p.omega_r / (4.0 * p.delta),
        stark_r: p.omega_b * p.omega_b / (4.0 * p.delta),
        ground_scatter: p.gamma_p * p.omega_r * p.omega_r / d2,
        rydberg_scatter: p.gamma_p * p.omega_b * p.omega_b / d2,
        gamma_r: p.gamma_r,
        gamma_d: p.gamma_d,
    })
}

fn projector(d: usize, k: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(k, k)] = C64::new(1.0, 0.0);
    m
}

fn transition(d: usize, to: usize, from: usize, amplitude: f64) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(d, d);
    m[(to, from)] = C64::new(amplitude, 0.0);
    m
}

/// `𝔅 Σ_{i<j} |r⟩⟨r|_i ⊗ |r⟩⟨r|_j`.
pub fn blockade_hamiltonian(register: &RegisterModel) -> ComplexMatrix {
    let shape = register.shape();
    let r = register.scheme.rydberg();
    let diag: Vec<C64> = (0..shape.dim())
        .map(|i| {
            let k = shape.digits(i).iter().filter(|&&x| x == r).count();
            C64::new(
                register.params.blockade * (k * k.saturating_sub(1) / 2) as f64,
                0.0,
            )
        })
        .collect();
    ComplexMatrix::diagonal(&diag)
}

/// Dissipation present at all times: per-atom `|r⟩` dephasing and decay, and
/// `|p⟩` decay in the four-level scheme.
pub fn jump_operators(register: &RegisterModel) -> Vec<JumpOperator> {
    let d = register.local_dim();
    let s = register.scheme;
    let p = &register.params;
    let r = s.rydberg();
    let mut local: Vec<(ComplexMatrix, String)> = Vec::new();
    if p.gamma_d > 0.0 {
        let mut l = ComplexMatrix::identity(d);
        l[(r, r)] = C64::new(-1.0, 0.0);
        local.push((l.scale_real(p.gamma_d.sqrt()), "dephasing".into()));
    }
    let mut decays = vec![(r, p.gamma_r, "r")];
    if let Some(pl) = s.intermediate() {
        decays.push((pl, p.gamma_p, "p"));
    }
    for (from, rate, name) in decays {
        if rate > 0.0 {
            for (to, w) in s.decay_targets() {
                local.push((
                    transition(d, to, from, (rate * w).sqrt()),
                    format!("decay_{name}->{}", s.labels()[to]),
                ));
            }
        }
    }
    let mut out = Vec::new();
    for atom in 0..register.n_atoms {
        for (l, label) in &local {
            out.push(JumpOperator::new(
                register.embed_local(atom, l),
                format!("{label}[{atom}]"),
            ));
        }
    }
    out
}

/// Light-induced scattering while `atom` is driven on `level ↔ r`
/// (effective scheme only; the four-level scheme carries `|p⟩` explicitly).
pub fn pulse_jump_operators(
    register: &RegisterModel,
    atom: usize,
    level: usize,
) -> Result<Vec<JumpOperator>, RydbergError> {
    register.check_atom(atom)?;
    if register.scheme.kind == SchemeKind::Full4 {
        return Ok(Vec::new());
    }
    let m = adiabatic_eliminate(&register.params, level)?;
    let d = register.local_dim();
    let s = register.scheme;
    let r = s.rydberg();
    let mut out = Vec::new();
    for (from, rate, name) in [
        (level, m.ground_scatter, s.labels()[level]),
        (r, m.rydberg_scatter, "r"),
    ] {
        if rate > 0.0 {
            for (to, w) in s.decay_targets() {
                let l = transition(d, to, from, (rate * w).sqrt());
                out.push(JumpOperator::new(
                    register.embed_local(atom, &l),
                    format!("scatter_{name}->{}[{atom}]", s.labels()[to]),
                ));
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Transition {
    ZeroR,
    OneR,
}

impl Transition {
    pub fn ground(self) -> usize {
        match self {
            Transition::ZeroR => 0,
            Transition::OneR => 1,
        }
    }
}

/// Single-atom drive Hamiltonian (before embedding).
fn drive_hamiltonian(register: &RegisterModel, g: usize) -> Result<ComplexMatrix, RydbergError> {
    let d = register.local_dim();
    let s = register.scheme;
    let r = s.rydberg();
    let p = &register.params;
    let m = adiabatic_eliminate(p, g)?;
    let compensated = register.stark == StarkMode::Compensated;
    let h = match s.intermediate() {
        None => {
            let mut h =
                &transition(d, g, r, 0.5 * m.omega_eff) + &transition(d, r, g, 0.5 * m.omega_eff);
            if !compensated {
                h = &h
                    + &(&projector(d, g).scale_real(m.stark_ground)
                        + &projector(d, r).scale_real(m.stark_r));
            }
            h
        }
        Some(pl) => {
            let mut h =
                &transition(d, g, pl, 0.5 * p.omega_r) + &transition(d, pl, g, 0.5 * p.omega_r);
            h = &h
                + &(&transition(d, pl, r, 0.5 * p.omega_b)
                    + &transition(d, r, pl, 0.5 * p.omega_b));
            h = &h - &projector(d, pl).scale_real(p.delta);
            if compensated {
                h = &h
                    - &(&projector(d, g).scale_real(m.stark_ground)
                        + &projector(d, r).scale_real(m.stark_r));
            }
            h
        }
    };
    Ok(h)
}

/// π-pulse on `atom` driving `transition`, blockade included.
pub fn build_pi_pulse(
    register: &RegisterModel,
    atom: usize,
    transition: Transition,
) -> Result<HamiltonianSegment, RydbergError> {
    register.check_atom(atom)?;
    let g = transition.ground();
    let duration = register.pulse_duration()?;
    let local = drive_hamiltonian(register, g)?;
    let h = &register.embed_local(atom, &local) + &blockade_hamiltonian(register);
    Ok(HamiltonianSegment {
        h,
        duration,
        label: format!("atom{atom}:{g}<->r"),
        jumps: pulse_jump_operators(register, atom, g)?,
    })
}

fn check_distinct(register: &RegisterModel, atoms: &[usize]) -> Result<(), RydbergError> {
    for (i, &a) in atoms.iter().enumerate() {
        register.check_atom(a)?;
        if atoms[..i].contains(&a) {
            return Err(RydbergError::IndexCollision(a));
        }
    }
    Ok(())
}

/// Raw `2k+3`-pulse C_k-NOT: controls up in list order, target swap
/// `0↔r, 1↔r, 0↔r`, controls down in reverse order.
pub fn build_cknot_sequence(
    register: &RegisterModel,
    controls: &[usize],
    target: usize,
) -> Result<PulseSchedule, RydbergError> {
    if controls.is_empty() {
        return Err(RydbergError::InvalidParameter {
            field: "controls",
            reason: "at least one control".into(),
        });
    }
    let mut all = controls.to_vec();
    all.push(target);
    check_distinct(register, &all)?;
    let mut s = PulseSchedule::new(register.shape());
    let mut pulses: Vec<(usize, Transition)> =
        controls.iter().map(|&c| (c, Transition::ZeroR)).collect();
    pulses.extend([
        (target, Transition::ZeroR),
        (target, Transition::OneR),
        (target, Transition::ZeroR),
    ]);
    pulses.extend(controls.iter().rev().map(|&c| (c, Transition::ZeroR)));
    for (atom, t) in pulses {
        s.push_segment(build_pi_pulse(register, atom, t)?)?;
    }
    Ok(s)
}

pub fn build_cnot_sequence(
    register: &RegisterModel,
    control: usize,
    target: usize,
) -> Result<PulseSchedule, RydbergError> {
    build_cknot_sequence(register, &[control], target)
}

/// Canonical C_k-NOT on `n` qubits: flips `target` when every control is 1.
pub fn ideal_cknot(n: usize, controls: &[usize], target: usize) -> ComplexMatrix {
    let shape = SubsystemShape::uniform(2, n).expect("n ≥ 1");
    let mut u = ComplexMatrix::zeros(shape.dim(), shape.dim());
    for x in 0..shape.dim() {
        let mut bits = shape.digits(x);
        if controls.iter().all(|&c| bits[c] == 1) {
            bits[target] ^= 1;
        }
        u[(shape.flat(&bits), x)] = C64::new(1.0, 0.0);
    }
    u
}

/// Phases `β_j` such that `(⊗ diag(1, e^{iβ_j})) U_q` matches the permutation
/// `ideal` up to a global phase, fitted on the `atoms` listed.
pub fn fit_frame_phases(
    u_qubit: &ComplexMatrix,
    ideal: &ComplexMatrix,
    atoms: &[usize],
) -> Vec<f64> {
    let n = u_qubit.rows().trailing_zeros() as usize;
    let shape = SubsystemShape::uniform(2, n).expect("n ≥ 1");
    // z_y = ⟨y|U|x⟩ with y = G x.
    let mut z = vec![C64::new(0.0, 0.0); shape.dim()];
    for x in 0..shape.dim() {
        let y = (0..shape.dim())
            .find(|&y| ideal[(y, x)].norm() > 0.5)
            .expect("permutation");
        z[y] = u_qubit[(y, x)];
    }
    atoms
        .iter()
        .map(|&j| {
            let bit = 1 << (n - 1 - j);
            let acc: C64 = (0..shape.dim())
                .filter(|y| y & bit != 0)
                .map(|y| z[y] * z[y ^ bit].conj())
                .sum();
            -acc.arg()
        })
        .collect()
}

/// Single-atom `diag(1, e^{iβ})` on the qubit levels.
pub fn phase_gate(register: &RegisterModel, atom: usize, beta: f64) -> ComplexMatrix {
    let mut local = ComplexMatrix::identity(register.local_dim());
    local[(1, 1)] = C64::from_polar(1.0, beta);
    register.embed_local(atom, &local)
}

/// Frame phases of the C_k-NOT, from the closed ideal-blockade schedule.
pub fn cknot_frame_phases(
    register: &RegisterModel,
    controls: &[usize],
    target: usize,
    cfg: &TrajectoryConfig,
) -> Result<Vec<(usize, f64)>, RydbergError> {
    let ideal_reg = register.ideal_limit()?;
    let sched = build_cknot_sequence(&ideal_reg, controls, target)?;
    let u = schedule_propagator(&sched, &[], cfg)?;
    let q = ideal_reg.shape().qubit_indices();
    let uq = u.select(&q, &q);
    let mut atoms = controls.to_vec();
    atoms.push(target);
    atoms.sort_unstable();
    let phases = fit_frame_phases(
        &uq,
        &ideal_cknot(register.n_atoms, controls, target),
        &atoms,
    );
    Ok(atoms.into_iter().zip(phases).collect())
}

/// Raw C_k-NOT followed by its fixed frame correction.
pub fn build_corrected_cknot(
    register: &RegisterModel,
    controls: &[usize],
    target: usize,
    cfg: &TrajectoryConfig,
) -> Result<PulseSchedule, RydbergError> {
    let mut s = build_cknot_sequence(register, controls, target)?;
    for (atom, beta) in cknot_frame_phases(register, controls, target, cfg)? {
        if beta != 0.0 {
            s.push_unitary(phase_gate(register, atom, beta), format!("frame[{atom}]"))?;
        }
    }
    Ok(s)
}

pub fn build_corrected_cnot(
    register: &RegisterModel,
    control: usize,
    target: usize,
    cfg: &TrajectoryConfig,
) -> Result<PulseSchedule, RydbergError> {
    build_corrected_cknot(register, &[control], target, cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SingleQubitGate {
    H,
    T,
    Tdg,
    X,
}

impl SingleQubitGate {
    pub fn parse(name: &str) -> Result<Self, RydbergError> {
        match name {
            "H" | "h" => Ok(Self::H),
            "T" | "t" => Ok(Self::T),
            "Tdg" | "tdg" | "T†" => Ok(Self::Tdg),
            "X" | "x" => Ok(Self::X),
            _ => Err(RydbergError::UnknownGate(name.to_string())),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::H => "H",
            Self::T => "T",
            Self::Tdg => "Tdg",
            Self::X => "X",
        }
    }

    /// 2×2 matrix; `T = exp(iπσ_z/8)`.
    pub fn matrix(self) -> ComplexMatrix {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Self::H => ComplexMatrix::from_real_rows(&[&[s, s], &[s, -s]]),
            Self::X => ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]),
            Self::T => ComplexMatrix::diagonal(&[
                C64::from_polar(1.0, PI / 8.0),
                C64::from_polar(1.0, -PI / 8.0),
            ]),
            Self::Tdg => ComplexMatrix::diagonal(&[
                C64::from_polar(1.0, -PI / 8.0),
                C64::from_polar(1.0, PI / 8.0),
            ]),
        }
    }
}

/// Ideal one-qubit gate on `atom`, identity on the auxiliary levels.
pub fn single_qubit_gate(
    gate: SingleQubitGate,
    register: &RegisterModel,
    atom: usize,
) -> Result<InstantUnitary, RydbergError> {
    register.check_atom(atom)?;
    let m = gate.matrix();
    let mut local = ComplexMatrix::identity(register.local_dim());
    for r in 0..2 {
        for c in 0..2 {
            local[(r, c)] = m[(r, c)];
        }
    }
    Ok(InstantUnitary {
        u: register.embed_local(atom, &local),
        label: format!("{}[{atom}]", gate.name()),
    })
}
