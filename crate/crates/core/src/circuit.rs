//! Gate circuits and the two ways of obtaining their χ: concatenating gate
//! process matrices (χ_cat) and simulating the whole register (χ_cir).

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

use crate::mcwf::{
    derive_seed, map_indexed, no_jump_estimate, run_choi_ensemble, ChoiEnsemble, McwfError,
    PulseSchedule, TrajectoryConfig,
};
use crate::process::{
    embed, from_choi, parallel_concat, serial_concat, trace_distance, OperatorBasis, ProcessError,
    ProcessMatrix,
};
use crate::rydberg::{
    build_cknot_sequence, build_corrected_cknot, cknot_frame_phases, ideal_cknot, jump_operators,
    phase_gate, single_qubit_gate, RegisterModel, RydbergError, SingleQubitGate,
};
use crate::tensor::{ComplexMatrix, SubsystemShape};

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("gate {gate} uses wire {wire} outside a {n_wires}-wire circuit")]
    WireOutOfRange {
        gate: String,
        wire: usize,
        n_wires: usize,
    },
    #[error("gate {0} repeats a wire")]
    RepeatedWire(String),
    #[error("gate {gate} expects {expected} wires, got {got}")]
    Arity {
        gate: String,
        expected: usize,
        got: usize,
    },
    #[error("wire {0} used twice in one moment")]
    MomentOverlap(usize),
    #[error("no library entry for {0}")]
    MissingEntry(String),
    #[error("library entry for {gate} acts on {got} qubits, expected {expected}")]
    LibraryDimension {
        gate: String,
        expected: usize,
        got: usize,
    },
    #[error("empty Ω_B grid")]
    EmptyGrid,
    #[error(transparent)]
    Process(#[from] ProcessError),
    #[error(transparent)]
    Rydberg(#[from] RydbergError),
    #[error(transparent)]
    Mcwf(#[from] McwfError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum GateKind {
    Cnot,
    H,
    T,
    Tdg,
    X,
    /// NOT conditioned on `k` controls.
    CkNot(usize),
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot => 2,
            GateKind::CkNot(k) => k + 1,
            _ => 1,
        }
    }

    /// Library key.
    pub fn name(self) -> String {
        match self {
            GateKind::Cnot => "CNOT".into(),
            GateKind::H => "H".into(),
            GateKind::T => "T".into(),
            GateKind::Tdg => "Tdg".into(),
            GateKind::X => "X".into(),
            GateKind::CkNot(k) => format!("C{k}NOT"),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "CNOT" | "CX" | "cx" => Some(GateKind::Cnot),
            "H" => Some(GateKind::H),
            "T" => Some(GateKind::T),
            "Tdg" => Some(GateKind::Tdg),
            "X" => Some(GateKind::X),
            _ => {
                let k = name.strip_prefix('C')?.strip_suffix("NOT")?.parse().ok()?;
                (k >= 1).then_some(GateKind::CkNot(k))
            }
        }
    }

    fn single(self) -> Option<SingleQubitGate> {
        match self {
            GateKind::H => Some(SingleQubitGate::H),
            GateKind::T => Some(SingleQubitGate::T),
            GateKind::Tdg => Some(SingleQubitGate::Tdg),
            GateKind::X => Some(SingleQubitGate::X),
            _ => None,
        }
    }

    fn is_controlled(self) -> bool {
        matches!(self, GateKind::Cnot | GateKind::CkNot(_))
    }

    /// Exact unitary on `arity()` qubits, wires in gate order.
    pub fn unitary(self) -> ComplexMatrix {
        match self.single() {
            Some(g) => g.matrix(),
            None => {
                let n = self.arity();
                ideal_cknot(n, &(0..n - 1).collect::<Vec<_>>(), n - 1)
            }
        }
    }
}

/// Gate on ordered wires; controlled gates list controls first, target last.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Gate {
    pub kind: GateKind,
    pub wires: Vec<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, wires: Vec<usize>) -> Self {
        Self { kind, wires }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self::new(GateKind::Cnot, vec![control, target])
    }

    pub fn one(kind: GateKind, wire: usize) -> Self {
        Self::new(kind, vec![wire])
    }

    fn describe(&self) -> String {
        format!("{}{:?}", self.kind.name(), self.wires)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Circuit {
    n_wires: usize,
    moments: Vec<Vec<Gate>>,
}

impl Circuit {
    pub fn new(n_wires: usize) -> Self {
        Self {
            n_wires,
            moments: Vec::new(),
        }
    }

    pub fn n_wires(&self) -> usize {
        self.n_wires
    }

    pub fn moments(&self) -> &[Vec<Gate>] {
        &self.moments
    }

    fn check_gate(&self, gate: &Gate) -> Result<(), CircuitError> {
        if gate.wires.len() != gate.kind.arity() {
            return Err(CircuitError::Arity {
                gate: gate.describe(),
                expected: gate.kind.arity(),
                got: gate.wires.len(),
            });
        }
        for (i, &w) in gate.wires.iter().enumerate() {
            if w >= self.n_wires {
                return Err(CircuitError::WireOutOfRange {
                    gate: gate.describe(),
                    wire: w,
                    n_wires: self.n_wires,
                });
            }
            if gate.wires[..i].contains(&w) {
                return Err(CircuitError::RepeatedWire(gate.describe()));
            }
        }
        Ok(())
    }

    /// Appends `gate` to the earliest moment after every gate on its wires.
    pub fn push(&mut self, gate: Gate) -> Result<(), CircuitError> {
        self.check_gate(&gate)?;
        let busy = |m: &Vec<Gate>| {
            m.iter()
                .any(|g| g.wires.iter().any(|w| gate.wires.contains(w)))
        };
        let slot = match self.moments.iter().rposition(busy) {
            Some(i) => i + 1,
            None => 0,
        };
        if slot == self.moments.len() {
            self.moments.push(Vec::new());
        }
        self.moments[slot].push(gate);
        Ok(())
    }

    /// Appends a whole moment as given.
    pub fn push_moment(&mut self, gates: Vec<Gate>) -> Result<(), CircuitError> {
        let mut used = Vec::new();
        for g in &gates {
            self.check_gate(g)?;
            for &w in &g.wires {
                if used.contains(&w) {
                    return Err(CircuitError::MomentOverlap(w));
                }
                used.push(w);
            }
        }
        self.moments.push(gates);
        Ok(())
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.moments.iter().flatten()
    }

    pub fn census(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for g in self.gates() {
            *out.entry(g.kind.name()).or_default() += 1;
        }
        out
    }

    /// Same gates, one per moment.
    pub fn serialized(&self) -> Circuit {
        Circuit {
            n_wires: self.n_wires,
            moments: self.gates().map(|g| vec![g.clone()]).collect(),
        }
    }

    /// Exact unitary on `n_wires` qubits.
    pub fn unitary(&self) -> ComplexMatrix {
        let d = 1 << self.n_wires;
        let mut u = ComplexMatrix::identity(d);
        for g in self.gates() {
            u = embed_unitary(&g.kind.unitary(), &g.wires, self.n_wires).matmul(&u);
        }
        u
    }
}

/// Embeds a gate unitary acting on `wires` (in gate order) into `n` qubits.
fn embed_unitary(u: &ComplexMatrix, wires: &[usize], n: usize) -> ComplexMatrix {
    let shape = SubsystemShape::uniform(2, n).expect("n ≥ 1");
    let k = wires.len();
    let sub = SubsystemShape::uniform(2, k).expect("k ≥ 1");
    let mut out = ComplexMatrix::zeros(shape.dim(), shape.dim());
    for col in 0..shape.dim() {
        let bits = shape.digits(col);
        let local_in = sub.flat(&wires.iter().map(|&w| bits[w]).collect::<Vec<_>>());
        for local_out in 0..sub.dim() {
            let amp = u[(local_out, local_in)];
            if amp.norm() == 0.0 {
                continue;
            }
            let mut ob = bits.clone();
            for (i, &w) in wires.iter().enumerate() {
                ob[w] = sub.digits(local_out)[i];
            }
            out[(shape.flat(&ob), col)] += amp;
        }
    }
    out
}

/// Three-wire Toffoli (controls 0 and 1, target 2) from 6 CNOT, 2 H and
/// 7 T/T† gates, with `T = exp(iπσ_z/8)`.
pub fn toffoli_circuit() -> Circuit {
    use GateKind::{Tdg, H, T};
    let seq = [
        Gate::one(H, 2),
        Gate::cnot(1, 2),
        Gate::one(T, 2),
        Gate::cnot(0, 2),
        Gate::one(Tdg, 2),
        Gate::cnot(1, 2),
        Gate::one(T, 2),
        Gate::cnot(0, 2),
        Gate::one(Tdg, 1),
        Gate::one(Tdg, 2),
        Gate::one(H, 2),
        Gate::cnot(0, 1),
        Gate::one(Tdg, 0),
        Gate::one(T, 1),
        Gate::cnot(0, 1),
    ];
    let mut c = Circuit::new(3);
    for g in seq {
        c.push(g).expect("valid Toffoli gates");
    }
    c
}

/// Gate χ's for concatenation. Instance `i` of a gate kind uses entry
/// `i mod len`, so a single entry is reused for every instance.
#[derive(Debug, Clone, Default)]
pub struct GateLibrary {
    entries: BTreeMap<String, Vec<ProcessMatrix>>,
}

impl GateLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, kind: GateKind, chi: ProcessMatrix) {
        self.entries.insert(kind.name(), vec![chi]);
    }

    pub fn insert_many(&mut self, kind: GateKind, chis: Vec<ProcessMatrix>) {
        self.entries.insert(kind.name(), chis);
    }

    pub fn get(&self, kind: GateKind, instance: usize) -> Option<&ProcessMatrix> {
        let list = self.entries.get(&kind.name())?;
        (!list.is_empty()).then(|| &list[instance % list.len()])
    }

    /// Exact χ's for the listed kinds.
    pub fn ideal(kinds: &[GateKind]) -> Result<Self, CircuitError> {
        let mut lib = Self::new();
        for &k in kinds {
            lib.insert(
                k,
                ProcessMatrix::from_unitary(&k.unitary(), &OperatorBasis::qubits(k.arity()))?,
            );
        }
        Ok(lib)
    }

    /// Exact χ's for every one-qubit gate kind.
    pub fn ideal_single_qubit() -> Result<Self, CircuitError> {
        Self::ideal(&[GateKind::H, GateKind::T, GateKind::Tdg, GateKind::X])
    }
}

/// χ of `circuit` by embedding, parallel and serial concatenation of the
/// library χ's.
pub fn chi_via_concatenation(
    circuit: &Circuit,
    library: &GateLibrary,
) -> Result<ProcessMatrix, CircuitError> {
    let n = circuit.n_wires();
    let register = SubsystemShape::uniform(2, n).expect("n ≥ 1");
    let mut counters: BTreeMap<GateKind, usize> = BTreeMap::new();
    let mut total: Option<ProcessMatrix> = None;
    for moment in circuit.moments() {
        let mut acc: Option<(ProcessMatrix, Vec<usize>)> = None;
        for gate in moment {
            let idx = counters.entry(gate.kind).or_default();
            let chi = library
                .get(gate.kind, *idx)
                .ok_or_else(|| CircuitError::MissingEntry(gate.kind.name()))?;
            *idx += 1;
            if chi.shape().local_dims() != vec![2; gate.kind.arity()].as_slice() {
                return Err(CircuitError::LibraryDimension {
                    gate: gate.kind.name(),
                    expected: gate.kind.arity(),
                    got: chi.shape().len(),
                });
            }
            acc = Some(match acc {
                None => (chi.clone(), gate.wires.clone()),
                Some((p, w)) => parallel_concat(&p, &w, chi, &gate.wires)?,
            });
        }
        let Some((p, wires)) = acc else { continue };
        let step = embed(&p, &register, &wires)?;
        total = Some(match total {
            None => step,
            Some(t) => serial_concat(&t, &step)?,
        });
    }
    match total {
        Some(t) => Ok(t),
        None => Ok(ProcessMatrix::identity(&OperatorBasis::qubits(n))),
    }
}

/// Pulse schedule of `circuit` on `register`; controlled gates carry their
/// frame corrections, one-qubit gates are instantaneous.
pub fn circuit_schedule(
    circuit: &Circuit,
    register: &RegisterModel,
    cfg: &TrajectoryConfig,
) -> Result<PulseSchedule, CircuitError> {
    if register.n_atoms != circuit.n_wires() {
        return Err(CircuitError::Arity {
            gate: "register".into(),
            expected: circuit.n_wires(),
            got: register.n_atoms,
        });
    }
    let mut out = PulseSchedule::new(register.shape());
    let mut frames: BTreeMap<Vec<usize>, Vec<(usize, f64)>> = BTreeMap::new();
    for gate in circuit.gates() {
        if gate.kind.is_controlled() {
            let (controls, target) = gate.wires.split_at(gate.wires.len() - 1);
            let frame = match frames.get(&gate.wires) {
                Some(f) => f.clone(),
                None => {
                    let f = cknot_frame_phases(register, controls, target[0], cfg)?;
                    frames.insert(gate.wires.clone(), f.clone());
                    f
                }
            };
            out.extend(&build_cknot_sequence(register, controls, target[0])?)?;
            for (atom, beta) in frame {
                if beta != 0.0 {
                    out.push_unitary(phase_gate(register, atom, beta), format!("frame[{atom}]"))?;
                }
            }
        } else {
            let g = single_qubit_gate(
                gate.kind.single().expect("one-qubit kind"),
                register,
                gate.wires[0],
            )?;
            out.push_unitary(g.u, g.label)?;
        }
    }
    Ok(out)
}

/// Full-register simulation of a circuit.
#[derive(Debug, Clone)]
pub struct FullSimulation {
    pub ensemble: ChoiEnsemble,
    /// Qubit-subspace χ.
    pub chi: ProcessMatrix,
    pub leakage: f64,
}

pub fn simulate_schedule(
    schedule: &PulseSchedule,
    register: &RegisterModel,
    cfg: &TrajectoryConfig,
) -> Result<FullSimulation, CircuitError> {
    register.check_dim(cfg.max_dim)?;
    let ensemble = run_choi_ensemble(schedule, &jump_operators(register), cfg)?;
    let full = ensemble.chi(&OperatorBasis::matrix_units(register.shape()))?;
    let (chi, leakage) = full.project_to_qubit_subspace();
    Ok(FullSimulation {
        ensemble,
        chi,
        leakage,
    })
}

/// χ_cir: one trajectory ensemble over the whole circuit, projected to qubits.
pub fn chi_via_full_simulation(
    circuit: &Circuit,
    register: &RegisterModel,
    cfg: &TrajectoryConfig,
) -> Result<FullSimulation, CircuitError> {
    let schedule = circuit_schedule(circuit, register, cfg)?;
    simulate_schedule(&schedule, register, cfg)
}

/// Qubit χ of an averaged Choi state of `register`.
pub fn qubit_chi_from_choi(
    choi: &ComplexMatrix,
    register: &RegisterModel,
) -> Result<ProcessMatrix, ProcessError> {
    Ok(
        from_choi(choi, &OperatorBasis::matrix_units(register.shape()))?
            .project_to_qubit_subspace()
            .0,
    )
}

/// Simulated C-NOT (control wire 0, target wire 1 of a two-atom register).
pub fn simulate_cnot(
    register: &RegisterModel,
    cfg: &TrajectoryConfig,
) -> Result<FullSimulation, CircuitError> {
    let reg = RegisterModel {
        n_atoms: 2,
        ..register.clone()
    };
    let schedule = build_corrected_cknot(&reg, &[0], 1, cfg)?;
    simulate_schedule(&schedule, &reg, cfg)
}

/// No-jump bound `1 − p_nj` of a schedule next to the full-register distance
/// between the no-jump χ and the ensemble χ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoJumpCheck {
    pub bound: f64,
    pub distance: f64,
    /// Fraction of sampled trajectories without a jump.
    pub observed_no_jump: f64,
}

impl NoJumpCheck {
    pub fn new(
        schedule: &PulseSchedule,
        register: &RegisterModel,
        sim: &FullSimulation,
        cfg: &TrajectoryConfig,
    ) -> Result<Self, CircuitError> {
        let basis = OperatorBasis::matrix_units(register.shape());
        let nj = no_jump_estimate(schedule, &jump_operators(register), &basis, cfg)?;
        let distance = trace_distance(&nj.chi, &sim.ensemble.chi(&basis)?)?;
        Ok(Self {
            bound: nj.bound,
            distance,
            observed_no_jump: sim.ensemble.no_jump_fraction,
        })
    }

    pub fn holds(&self) -> bool {
        self.distance <= self.bound
    }
}

/// One point of the C-NOT Ω_B sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub omega_b_hz: f64,
    pub trace_distance: f64,
    pub leakage: f64,
    /// No-jump estimate against the ensemble on the full register.
    pub nojump: NoJumpCheck,
    pub standard_error: f64,
    pub seed: u64,
}

impl SweepRow {
    pub const CSV_HEADER: [&'static str; 4] =
        ["omega_b_hz", "trace_distance", "leakage", "nojump_bound"];
}

/// Simulated C-NOT at `omega_b` with its distance to the canonical gate and
/// the no-jump check.
pub fn cnot_point(
    omega_b: f64,
    register: &RegisterModel,
    cfg: &TrajectoryConfig,
    groups: usize,
) -> Result<SweepRow, CircuitError> {
    let reg = RegisterModel {
        n_atoms: 2,
        params: register.params.with_omega_b(omega_b),
        ..register.clone()
    };
    let schedule = build_corrected_cknot(&reg, &[0], 1, cfg)?;
    let sim = simulate_schedule(&schedule, &reg, cfg)?;
    let ideal = ideal_qubit_chi(&ideal_cknot(2, &[0], 1), 2)?;
    let (t, se) = distance_with_error(&sim, &reg, &ideal, groups)?;
    let nj = NoJumpCheck::new(&schedule, &reg, &sim, cfg)?;
    Ok(SweepRow {
        omega_b_hz: omega_b / crate::rydberg::TWO_PI,
        trace_distance: t,
        leakage: sim.leakage,
        nojump: nj,
        standard_error: se,
        seed: cfg.base_seed,
    })
}

/// C-NOT distance to ideal over a grid of Ω_B (rad/s); point `i` is seeded
/// with [`point_seed`]`(base_seed, i)`.
pub fn cnot_sweep(
    omega_b_grid: &[f64],
    register: &RegisterModel,
    cfg: &TrajectoryConfig,
    groups: usize,
) -> Result<Vec<SweepRow>, CircuitError> {
    if omega_b_grid.is_empty() {
        return Err(CircuitError::EmptyGrid);
    }
    let rows = map_indexed(omega_b_grid.len(), |i| {
        let c = TrajectoryConfig {
            base_seed: point_seed(cfg.base_seed, i),
            ..cfg.clone()
        };
        cnot_point(omega_b_grid[i], register, &c, groups)
    });
    rows.into_iter().collect()
}

#[derive(Debug, Clone)]
pub struct CompareConfig {
    pub trajectories: TrajectoryConfig,
    pub jackknife_groups: usize,
    /// Independent CNOT estimates per circuit instance instead of one reused χ.
    pub independent_cnots: bool,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            trajectories: TrajectoryConfig::default(),
            jackknife_groups: 20,
            independent_cnots: false,
        }
    }
}

/// One Ω_B point of the Toffoli comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub omega_b_hz: f64,
    pub t_cat: f64,
    pub t_cir: f64,
    pub t_c2not: f64,
    pub t_cnot: f64,
    pub leak_cat: f64,
    pub leak_cir: f64,
    pub leak_c2not: f64,
    pub bound_nojump_cir: f64,
    pub se_cat: f64,
    pub se_cir: f64,
    pub se_c2not: f64,
    pub se_cnot: f64,
    pub nojump_cnot: NoJumpCheck,
    pub nojump_cir: NoJumpCheck,
    pub nojump_c2not: NoJumpCheck,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub n_traj: usize,
    pub base_seed: u64,
}

impl ComparisonReport {
    pub const CSV_HEADER: [&'static str; 9] = [
        "omega_b_hz",
        "t_cat",
        "t_cir",
        "t_c2not",
        "leak_cat",
        "leak_cir",
        "leak_c2not",
        "bound_nojump_cir",
        "seed",
    ];
}

/// Seed of grid point `index`.
pub fn point_seed(base_seed: u64, index: usize) -> u64 {
    derive_seed(base_seed, index as u64)
}

fn ideal_qubit_chi(u: &ComplexMatrix, n: usize) -> Result<ProcessMatrix, ProcessError> {
    ProcessMatrix::from_unitary(u, &OperatorBasis::qubits(n))
}

/// Distance of an ensemble's qubit χ to `ideal`, with its jackknife error.
fn distance_with_error(
    sim: &FullSimulation,
    register: &RegisterModel,
    ideal: &ProcessMatrix,
    groups: usize,
) -> Result<(f64, f64), CircuitError> {
    let (t, se) = sim.ensemble.jackknife(groups, |choi| {
        let chi = qubit_chi_from_choi(choi, register)?;
        Ok(trace_distance(&chi, ideal)?)
    })?;
    Ok((t, se))
}

fn compare_point(
    omega_b: f64,
    index: usize,
    register: &RegisterModel,
    cfg: &CompareConfig,
) -> Result<ComparisonRow, CircuitError> {
    let seed = point_seed(cfg.trajectories.base_seed, index);
    let traj = |tag: u64| TrajectoryConfig {
        base_seed: derive_seed(seed, tag),
        ..cfg.trajectories.clone()
    };
    let params = register.params.with_omega_b(omega_b);
    let reg2 = RegisterModel {
        n_atoms: 2,
        params,
        ..register.clone()
    };
    let reg3 = RegisterModel {
        n_atoms: 3,
        params,
        ..register.clone()
    };
    let circuit = toffoli_circuit();
    let toffoli = ideal_qubit_chi(&ideal_cknot(3, &[0, 1], 2), 3)?;
    let cnot_ideal = ideal_qubit_chi(&ideal_cknot(2, &[0], 1), 2)?;
    let groups = cfg.jackknife_groups;

    let cnot_schedule = build_corrected_cknot(&reg2, &[0], 1, &cfg.trajectories)?;
    let cnot = simulate_schedule(&cnot_schedule, &reg2, &traj(1))?;
    let nojump_cnot = NoJumpCheck::new(&cnot_schedule, &reg2, &cnot, &cfg.trajectories)?;
    let (t_cnot, se_cnot) = distance_with_error(&cnot, &reg2, &cnot_ideal, groups)?;
    let mut library = GateLibrary::ideal_single_qubit()?;
    if cfg.independent_cnots {
        let mut chis = vec![cnot.chi.clone()];
        for k in 1..6 {
            chis.push(simulate_cnot(&reg2, &traj(10 + k))?.chi);
        }
        library.insert_many(GateKind::Cnot, chis);
    } else {
        library.insert(GateKind::Cnot, cnot.chi.clone());
    }
    let chi_cat = chi_via_concatenation(&circuit, &library)?;
    let t_cat = trace_distance(&chi_cat, &toffoli)?;
    let leak_cat = 1.0 - chi_cat.trace();
    let se_cat = if cfg.independent_cnots {
        f64::NAN
    } else {
        cnot.ensemble
            .jackknife(groups, |choi| {
                let mut lib = library.clone();
                lib.insert(GateKind::Cnot, qubit_chi_from_choi(choi, &reg2)?);
                let cat = chi_via_concatenation(&circuit, &lib).map_err(|e| match e {
                    CircuitError::Process(p) => McwfError::Process(p),
                    other => McwfError::InvalidSchedule(other.to_string()),
                })?;
                Ok(trace_distance(&cat, &toffoli)?)
            })?
            .1
    };

    let cir_schedule = circuit_schedule(&circuit, &reg3, &cfg.trajectories)?;
    let cir = simulate_schedule(&cir_schedule, &reg3, &traj(2))?;
    let (t_cir, se_cir) = distance_with_error(&cir, &reg3, &toffoli, groups)?;
    let nojump_cir = NoJumpCheck::new(&cir_schedule, &reg3, &cir, &cfg.trajectories)?;

    let c2_schedule = build_corrected_cknot(&reg3, &[0, 1], 2, &cfg.trajectories)?;
    let c2 = simulate_schedule(&c2_schedule, &reg3, &traj(3))?;
    let (t_c2not, se_c2not) = distance_with_error(&c2, &reg3, &toffoli, groups)?;
    let nojump_c2not = NoJumpCheck::new(&c2_schedule, &reg3, &c2, &cfg.trajectories)?;

    Ok(ComparisonRow {
        omega_b_hz: omega_b / crate::rydberg::TWO_PI,
        t_cat,
        t_cir,
        t_c2not,
        t_cnot,
        leak_cat,
        leak_cir: cir.leakage,
        leak_c2not: c2.leakage,
        bound_nojump_cir: nojump_cir.bound,
        se_cat,
        se_cir,
        se_c2not,
        se_cnot,
        nojump_cnot,
        nojump_cir,
        nojump_c2not,
        seed,
    })
}

/// χ_cat, χ_cir and multi-qubit C₂-NOT distances to the ideal Toffoli over
/// a grid of blue Rabi frequencies (rad/s). `register` supplies the scheme
/// and the remaining parameters.
pub fn compare_implementations(
    omega_b_grid: &[f64],
    register: &RegisterModel,
    cfg: &CompareConfig,
) -> Result<ComparisonReport, CircuitError> {
    if omega_b_grid.is_empty() {
        return Err(CircuitError::EmptyGrid);
    }
    let rows = map_indexed(omega_b_grid.len(), |i| {
        compare_point(omega_b_grid[i], i, register, cfg)
    });
    Ok(ComparisonReport {
        rows: rows.into_iter().collect::<Result<_, _>>()?,
        n_traj: cfg.trajectories.n_traj,
        base_seed: cfg.trajectories.base_seed,
    })
}
