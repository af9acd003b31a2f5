//! Monte Carlo wave-function trajectories.
//!
//! Trajectories follow the norm-threshold unravelling: a uniform threshold
//! `r` is drawn, the state evolves under `H_eff = H − (i/2) Σ L†L` without
//! renormalisation, and a jump is applied when `‖ψ‖²` falls to `r`.
//!
//! Integration uses fixed integrating-factor RK4 steps (the diagonal of
//! `H_eff` exactly, RK4 on the rest). Because every segment Hamiltonian is
//! constant, one step is a fixed matrix `M` (see
//! [`lawson_rk4_step_operator`]); each compiled segment stores `M^(2^k)` so that a
//! trajectory crosses a jump-free segment with one multiplication and locates
//! a jump step with a binary search over step counts. Within the step holding
//! the crossing the jump time is bisected.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::process::{from_choi, OperatorBasis, ProcessError, ProcessMatrix};
use crate::tensor::{lawson_rk4_step_operator, matmul_into, ComplexMatrix, SubsystemShape};

#[derive(Debug, Error)]
pub enum McwfError {
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid trajectory configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension {dim} exceeds the configured cap {max}")]
    DimensionOverflow { dim: usize, max: usize },
    #[error("non-finite amplitudes in segment `{0}`")]
    NonFinite(String),
    #[error("jump forced in segment `{0}` with zero total jump rate")]
    ZeroJumpRate(String),
    #[error("trajectory {index} aborted: {source}")]
    Trajectory {
        index: usize,
        #[source]
        source: Box<McwfError>,
    },
    #[error(transparent)]
    Process(#[from] ProcessError),
}

#[derive(Debug, Clone)]
pub struct JumpOperator {
    /// Units of √(rad/s).
    pub l: ComplexMatrix,
    pub label: String,
}

impl JumpOperator {
    pub fn new(l: ComplexMatrix, label: impl Into<String>) -> Self {
        Self {
            l,
            label: label.into(),
        }
    }
}

/// Constant Hamiltonian (rad/s) applied for `duration` seconds.
#[derive(Debug, Clone)]
pub struct HamiltonianSegment {
    pub h: ComplexMatrix,
    pub duration: f64,
    pub label: String,
    /// Dissipation present only while this segment runs (e.g. light scattering).
    pub jumps: Vec<JumpOperator>,
}

/// Ideal zero-duration unitary.
#[derive(Debug, Clone)]
pub struct InstantUnitary {
    pub u: ComplexMatrix,
    pub label: String,
}

#[derive(Debug, Clone)]
pub enum ScheduleItem {
    Segment(HamiltonianSegment),
    Unitary(InstantUnitary),
}

#[derive(Debug, Clone)]
pub struct PulseSchedule {
    shape: SubsystemShape,
    items: Vec<ScheduleItem>,
}

impl PulseSchedule {
    pub fn new(shape: SubsystemShape) -> Self {
        Self {
            shape,
            items: Vec::new(),
        }
    }

    pub fn shape(&self) -> &SubsystemShape {
        &self.shape
    }

    pub fn dim(&self) -> usize {
        self.shape.dim()
    }

    pub fn items(&self) -> &[ScheduleItem] {
        &self.items
    }

    pub fn push_segment(&mut self, segment: HamiltonianSegment) -> Result<(), McwfError> {
        let d = self.dim();
        if segment.h.rows() != d || segment.h.cols() != d {
            return Err(McwfError::InvalidSchedule(format!(
                "segment `{}` has wrong dimension",
                segment.label
            )));
        }
        if !(segment.duration > 0.0 && segment.duration.is_finite()) {
            return Err(McwfError::InvalidSchedule(format!(
                "segment `{}` has duration {}",
                segment.label, segment.duration
            )));
        }
        if !segment.h.is_hermitian(1e-12) {
            return Err(McwfError::InvalidSchedule(format!(
                "segment `{}` is not Hermitian",
                segment.label
            )));
        }
        if let Some(j) = segment
            .jumps
            .iter()
            .find(|j| j.l.rows() != d || j.l.cols() != d)
        {
            return Err(McwfError::InvalidSchedule(format!(
                "jump `{}` has wrong dimension",
                j.label
            )));
        }
        self.items.push(ScheduleItem::Segment(segment));
        Ok(())
    }

    pub fn push_unitary(
        &mut self,
        u: ComplexMatrix,
        label: impl Into<String>,
    ) -> Result<(), McwfError> {
        let label = label.into();
        if u.rows() != self.dim() || !u.is_unitary(1e-10) {
            return Err(McwfError::InvalidSchedule(format!(
                "`{label}` is not a unitary on the register"
            )));
        }
        self.items
            .push(ScheduleItem::Unitary(InstantUnitary { u, label }));
        Ok(())
    }

    pub fn extend(&mut self, other: &PulseSchedule) -> Result<(), McwfError> {
        if other.shape != self.shape {
            return Err(McwfError::InvalidSchedule(
                "appending a schedule on another register".into(),
            ));
        }
        self.items.extend(other.items.iter().cloned());
        Ok(())
    }

    pub fn segments(&self) -> impl Iterator<Item = &HamiltonianSegment> {
        self.items.iter().filter_map(|i| match i {
            ScheduleItem::Segment(s) => Some(s),
            ScheduleItem::Unitary(_) => None,
        })
    }

    pub fn segment_count(&self) -> usize {
        self.segments().count()
    }

    pub fn duration(&self) -> f64 {
        self.segments().map(|s| s.duration).sum()
    }

    /// Shortest segment, the reference for the integration step.
    pub fn min_segment_duration(&self) -> Option<f64> {
        self.segments().map(|s| s.duration).reduce(f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryConfig {
    pub n_traj: usize,
    pub base_seed: u64,
    /// Steps per shortest segment.
    pub steps_per_min_pulse: usize,
    /// Jump-time resolution as a fraction of a step.
    pub jump_time_tolerance: f64,
    /// Upper bound on `‖H_eff‖·dt` per step.
    pub max_phase_per_step: f64,
    /// Cap on the simulated (doubled, for χ extraction) dimension.
    pub max_dim: usize,
}

impl Default for TrajectoryConfig {
    fn default() -> Self {
        Self {
            n_traj: 500,
            base_seed: 0,
            steps_per_min_pulse: 200,
            jump_time_tolerance: 1e-3,
            max_phase_per_step: 0.1,
            max_dim: crate::tensor::DEFAULT_MAX_DIM,
        }
    }
}

impl TrajectoryConfig {
    pub fn with_trajectories(n_traj: usize, base_seed: u64) -> Self {
        Self {
            n_traj,
            base_seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<(), McwfError> {
        if self.n_traj == 0 {
            return Err(McwfError::InvalidConfig("n_traj must be at least 1".into()));
        }
        if self.steps_per_min_pulse < 10 {
            return Err(McwfError::InvalidConfig(
                "steps_per_min_pulse must be at least 10".into(),
            ));
        }
        if !(self.jump_time_tolerance > 0.0 && self.jump_time_tolerance < 1.0) {
            return Err(McwfError::InvalidConfig(
                "jump_time_tolerance must lie in (0, 1)".into(),
            ));
        }
        if !(self.max_phase_per_step > 0.0 && self.max_phase_per_step < 2.0) {
            return Err(McwfError::InvalidConfig(
                "max_phase_per_step must lie in (0, 2)".into(),
            ));
        }
        Ok(())
    }
}

/// SplitMix64 finaliser.
pub fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of trajectory `index`: `base_seed ⊕ splitmix64(index)`.
pub fn trajectory_seed(base_seed: u64, index: usize) -> u64 {
    base_seed ^ splitmix64(index as u64)
}

/// Derives an independent seed stream from `(base, tag)`.
pub fn derive_seed(base: u64, tag: u64) -> u64 {
    splitmix64(base ^ splitmix64(tag.wrapping_add(0x5EED)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct JumpRecord {
    pub events: Vec<JumpEvent>,
    /// `‖ψ‖²` at the end of the schedule, accumulated since the last jump.
    pub final_weight: f64,
}

#[derive(Debug, Clone)]
struct CompiledJump {
    l: ComplexMatrix,
    label_id: usize,
}

#[derive(Debug, Clone)]
struct CompiledSegment {
    label: String,
    h_eff: ComplexMatrix,
    dt: f64,
    n_steps: u64,
    /// `M^(2^k)` for `k = 0..=⌊log₂ n_steps⌋`.
    powers: Vec<ComplexMatrix>,
    total: ComplexMatrix,
    jumps: Vec<CompiledJump>,
}

#[derive(Debug, Clone)]
enum CompiledItem {
    Segment(CompiledSegment),
    Unitary(ComplexMatrix),
}

/// A schedule with every segment's step propagators precomputed; shared
/// read-only by all trajectories.
#[derive(Debug, Clone)]
pub struct CompiledSchedule {
    dim: usize,
    items: Vec<CompiledItem>,
    labels: Vec<String>,
    jump_tolerance: f64,
}

impl CompiledSchedule {
    pub fn new(
        schedule: &PulseSchedule,
        jumps: &[JumpOperator],
        cfg: &TrajectoryConfig,
    ) -> Result<Self, McwfError> {
        cfg.validate()?;
        let dim = schedule.dim();
        if let Some(j) = jumps
            .iter()
            .find(|j| j.l.rows() != dim || j.l.cols() != dim)
        {
            return Err(McwfError::InvalidSchedule(format!(
                "jump `{}` has wrong dimension",
                j.label
            )));
        }
        let mut labels: Vec<String> = Vec::new();
        let mut label_id = |label: &str| -> usize {
            match labels.iter().position(|l| l == label) {
                Some(i) => i,
                None => {
                    labels.push(label.to_string());
                    labels.len() - 1
                }
            }
        };
        let t_min = schedule.min_segment_duration().unwrap_or(1.0);
        let mut items = Vec::with_capacity(schedule.items().len());
        for item in schedule.items() {
            match item {
                ScheduleItem::Unitary(u) => items.push(CompiledItem::Unitary(u.u.clone())),
                ScheduleItem::Segment(seg) => {
                    let all: Vec<&JumpOperator> = jumps.iter().chain(&seg.jumps).collect();
                    let mut decay = ComplexMatrix::zeros(dim, dim);
                    for j in &all {
                        decay += &j.l.adjoint().matmul(&j.l);
                    }
                    let h_eff = &seg.h - &decay.scale(C64::new(0.0, 0.5));
                    let by_pulse = (seg.duration * cfg.steps_per_min_pulse as f64 / t_min).ceil();
                    let by_norm = (seg.duration * h_eff.norm_inf() / cfg.max_phase_per_step).ceil();
                    let n_steps = by_pulse.max(by_norm).max(1.0) as u64;
                    let dt = seg.duration / n_steps as f64;
                    let step = lawson_rk4_step_operator(&h_eff, dt);
                    let mut powers = vec![step];
                    while (1u64 << powers.len()) <= n_steps {
                        let last = powers.last().unwrap();
                        powers.push(last.matmul(last));
                    }
                    let mut total: Option<ComplexMatrix> = None;
                    for (k, p) in powers.iter().enumerate() {
                        if n_steps & (1 << k) != 0 {
                            total = Some(match total {
                                None => p.clone(),
                                Some(t) => p.matmul(&t),
                            });
                        }
                    }
                    let total = total.expect("n_steps ≥ 1");
                    if !total.is_finite() {
                        return Err(McwfError::NonFinite(seg.label.clone()));
                    }
                    let jumps = all
                        .iter()
                        .map(|j| CompiledJump {
                            l: j.l.clone(),
                            label_id: label_id(&j.label),
                        })
                        .collect();
                    items.push(CompiledItem::Segment(CompiledSegment {
                        label: seg.label.clone(),
                        h_eff,
                        dt,
                        n_steps,
                        powers,
                        total,
                        jumps,
                    }));
                }
            }
        }
        for j in jumps {
            label_id(&j.label);
        }
        Ok(Self {
            dim,
            items,
            labels,
            jump_tolerance: cfg.jump_time_tolerance,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Total integration steps across all segments.
    pub fn total_steps(&self) -> u64 {
        self.items
            .iter()
            .map(|i| match i {
                CompiledItem::Segment(s) => s.n_steps,
                CompiledItem::Unitary(_) => 0,
            })
            .sum()
    }

    /// Propagates `block` (a `dim × cols` matrix of amplitudes) without jumps.
    fn propagate_no_jump(&self, block: &mut Block) {
        for item in &self.items {
            match item {
                CompiledItem::Segment(s) => block.apply(&s.total),
                CompiledItem::Unitary(u) => block.apply(u),
            }
        }
    }

    fn evolve(
        &self,
        mut block: Block,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Block, Vec<(f64, usize)>, f64), McwfError> {
        let mut events = Vec::new();
        let mut threshold: f64 = rng.sample(Open01);
        let mut t = 0.0;
        for item in &self.items {
            match item {
                CompiledItem::Unitary(u) => block.apply(u),
                CompiledItem::Segment(seg) => {
                    self.run_segment(seg, &mut block, rng, &mut threshold, &mut events, t)?;
                    t += seg.dt * seg.n_steps as f64;
                    if !block.is_finite() {
                        return Err(McwfError::NonFinite(seg.label.clone()));
                    }
                }
            }
        }
        let weight = block.norm_sqr();
        block.scale(1.0 / weight.sqrt());
        Ok((block, events, weight))
    }

    fn run_segment(
        &self,
        seg: &CompiledSegment,
        block: &mut Block,
        rng: &mut ChaCha8Rng,
        threshold: &mut f64,
        events: &mut Vec<(f64, usize)>,
        t0: f64,
    ) -> Result<(), McwfError> {
        let candidate = block.applied(&seg.total);
        if candidate.norm_sqr() > *threshold {
            *block = candidate;
            return Ok(());
        }
        let mut left = seg.n_steps;
        let mut t = t0;
        while left > 0 {
            // Largest number of whole steps keeping ‖ψ‖² above the threshold.
            let mut advanced = 0u64;
            for k in (0..seg.powers.len()).rev() {
                let stride = 1u64 << k;
                if stride <= left - advanced {
                    let trial = block.applied(&seg.powers[k]);
                    if trial.norm_sqr() > *threshold {
                        *block = trial;
                        advanced += stride;
                    }
                }
            }
            left -= advanced;
            t += advanced as f64 * seg.dt;
            if left == 0 {
                break;
            }
            self.partial_step(seg, block, seg.dt, rng, threshold, events, t)?;
            left -= 1;
            t += seg.dt;
        }
        Ok(())
    }

    /// Advances by `span ≤ dt`, applying every jump whose threshold is crossed.
    #[allow(clippy::too_many_arguments)]
    fn partial_step(
        &self,
        seg: &CompiledSegment,
        block: &mut Block,
        span: f64,
        rng: &mut ChaCha8Rng,
        threshold: &mut f64,
        events: &mut Vec<(f64, usize)>,
        t0: f64,
    ) -> Result<(), McwfError> {
        let mut remaining = span;
        let mut t = t0;
        let tol = self.jump_tolerance * seg.dt;
        loop {
            let trial = block.applied(&lawson_rk4_step_operator(&seg.h_eff, remaining));
            if trial.norm_sqr() > *threshold {
                *block = trial;
                return Ok(());
            }
            let (mut lo, mut hi) = (0.0, remaining);
            while hi - lo > tol {
                let mid = 0.5 * (lo + hi);
                if block
                    .applied(&lawson_rk4_step_operator(&seg.h_eff, mid))
                    .norm_sqr()
                    > *threshold
                {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            block.apply(&lawson_rk4_step_operator(&seg.h_eff, hi));
            let id = self.jump(seg, block, rng)?;
            events.push((t + hi, id));
            *threshold = rng.sample(Open01);
            remaining -= hi;
            t += hi;
            if remaining <= 0.0 {
                return Ok(());
            }
        }
    }

    fn jump(
        &self,
        seg: &CompiledSegment,
        block: &mut Block,
        rng: &mut ChaCha8Rng,
    ) -> Result<usize, McwfError> {
        let candidates: Vec<Block> = seg.jumps.iter().map(|j| block.applied(&j.l)).collect();
        let weights: Vec<f64> = candidates.iter().map(Block::norm_sqr).collect();
        let total: f64 = weights.iter().sum();
        // Also catches NaN.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(total > 0.0) {
            return Err(McwfError::ZeroJumpRate(seg.label.clone()));
        }
        let u: f64 = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = weights.iter().rposition(|&w| w > 0.0).unwrap();
        for (k, &w) in weights.iter().enumerate() {
            acc += w;
            if u < acc && w > 0.0 {
                chosen = k;
                break;
            }
        }
        let mut next = candidates.into_iter().nth(chosen).unwrap();
        next.scale(1.0 / weights[chosen].sqrt());
        *block = next;
        Ok(seg.jumps[chosen].label_id)
    }
}

/// Amplitudes of a `rows × cols` block; `cols > 1` carries an idle ancilla.
#[derive(Debug, Clone)]
struct Block {
    data: Vec<C64>,
    rows: usize,
    cols: usize,
}

impl Block {
    fn applied(&self, op: &ComplexMatrix) -> Block {
        let mut out = vec![C64::new(0.0, 0.0); self.data.len()];
        matmul_into(
            op.as_slice(),
            &self.data,
            &mut out,
            self.rows,
            self.rows,
            self.cols,
        );
        Block {
            data: out,
            rows: self.rows,
            cols: self.cols,
        }
    }

    fn apply(&mut self, op: &ComplexMatrix) {
        *self = self.applied(op);
    }

    fn norm_sqr(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|z| *z *= s);
    }

    fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..n).map(f).collect()
}

/// Outcome of one trajectory in an ensemble.
#[derive(Debug, Clone)]
pub struct TrajectoryOutcome {
    /// Normalised final amplitudes.
    pub state: Vec<C64>,
    pub jumps: Vec<(f64, usize)>,
    pub final_weight: f64,
}

fn simulate(
    compiled: &CompiledSchedule,
    initial: &Block,
    cfg: &TrajectoryConfig,
) -> Result<Vec<TrajectoryOutcome>, McwfError> {
    let results = map_indexed(cfg.n_traj, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(trajectory_seed(cfg.base_seed, i));
        compiled
            .evolve(initial.clone(), &mut rng)
            .map(|(b, jumps, final_weight)| TrajectoryOutcome {
                state: b.data,
                jumps,
                final_weight,
            })
            .map_err(|e| McwfError::Trajectory {
                index: i,
                source: Box::new(e),
            })
    });
    results.into_iter().collect()
}

/// `(1/n) Σ |ψᵢ⟩⟨ψᵢ|`, summed in trajectory order for every entry.
pub fn average_projectors(states: &[Vec<C64>]) -> ComplexMatrix {
    let dim = states.first().map_or(0, Vec::len);
    let n = states.len() as f64;
    let rows = map_indexed(dim, |r| {
        let mut row = vec![C64::new(0.0, 0.0); dim];
        for s in states {
            let a = s[r];
            if a.re == 0.0 && a.im == 0.0 {
                continue;
            }
            for (o, b) in row.iter_mut().zip(s) {
                *o += a * b.conj();
            }
        }
        row.iter_mut().for_each(|z| *z /= n);
        row
    });
    ComplexMatrix::from_vec(dim, dim, rows.into_iter().flatten().collect()).expect("square")
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub rho_avg: ComplexMatrix,
    pub jump_counts: BTreeMap<String, u64>,
    /// Fraction of trajectories without any jump.
    pub no_jump_fraction: f64,
    pub n_traj: usize,
    pub base_seed: u64,
    pub final_states: Vec<Vec<C64>>,
}

fn jump_statistics(
    compiled: &CompiledSchedule,
    outcomes: &[TrajectoryOutcome],
) -> (BTreeMap<String, u64>, f64) {
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut clean = 0usize;
    for o in outcomes {
        if o.jumps.is_empty() {
            clean += 1;
        }
        for &(_, id) in &o.jumps {
            *counts.entry(compiled.labels[id].clone()).or_default() += 1;
        }
    }
    (counts, clean as f64 / outcomes.len().max(1) as f64)
}

fn check_state(psi0: &[C64], dim: usize) -> Result<(), McwfError> {
    if psi0.len() != dim {
        return Err(McwfError::InvalidSchedule(format!(
            "initial state of length {} for dimension {dim}",
            psi0.len()
        )));
    }
    let norm: f64 = psi0.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(McwfError::InvalidSchedule(format!(
            "initial state has norm² {norm}"
        )));
    }
    Ok(())
}

/// Single trajectory from `psi0` with RNG seed `seed`.
pub fn evolve_trajectory(
    schedule: &PulseSchedule,
    jumps: &[JumpOperator],
    psi0: &[C64],
    seed: u64,
    cfg: &TrajectoryConfig,
) -> Result<(Vec<C64>, JumpRecord), McwfError> {
    check_state(psi0, schedule.dim())?;
    let compiled = CompiledSchedule::new(schedule, jumps, cfg)?;
    let block = Block {
        data: psi0.to_vec(),
        rows: schedule.dim(),
        cols: 1,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (b, events, final_weight) = compiled.evolve(block, &mut rng)?;
    let events = events
        .into_iter()
        .map(|(time, id)| JumpEvent {
            time,
            label: compiled.labels[id].clone(),
        })
        .collect();
    Ok((
        b.data,
        JumpRecord {
            events,
            final_weight,
        },
    ))
}

pub fn run_ensemble(
    schedule: &PulseSchedule,
    jumps: &[JumpOperator],
    psi0: &[C64],
    cfg: &TrajectoryConfig,
) -> Result<EnsembleResult, McwfError> {
    check_state(psi0, schedule.dim())?;
    let compiled = CompiledSchedule::new(schedule, jumps, cfg)?;
    let initial = Block {
        data: psi0.to_vec(),
        rows: schedule.dim(),
        cols: 1,
    };
    let outcomes = simulate(&compiled, &initial, cfg)?;
    let (jump_counts, no_jump_fraction) = jump_statistics(&compiled, &outcomes);
    let final_states: Vec<Vec<C64>> = outcomes.into_iter().map(|o| o.state).collect();
    Ok(EnsembleResult {
        rho_avg: average_projectors(&final_states),
        jump_counts,
        no_jump_fraction,
        n_traj: cfg.n_traj,
        base_seed: cfg.base_seed,
        final_states,
    })
}

/// Trajectories of the system ⊗ idle-ancilla state `|Φ⟩ = Σᵢ|i⟩|i⟩/√D`.
///
/// Final states are row-major `D × D` blocks, i.e. vectors indexed by
/// `system · D + ancilla`.
#[derive(Debug, Clone)]
pub struct ChoiEnsemble {
    pub shape: SubsystemShape,
    pub outcomes: Vec<TrajectoryOutcome>,
    pub jump_counts: BTreeMap<String, u64>,
    pub no_jump_fraction: f64,
    pub n_traj: usize,
    pub base_seed: u64,
    pub total_steps: u64,
}

impl ChoiEnsemble {
    pub fn states(&self) -> Vec<Vec<C64>> {
        self.outcomes.iter().map(|o| o.state.clone()).collect()
    }

    /// Averaged Choi state (output system ⊗ input ancilla).
    pub fn choi(&self) -> ComplexMatrix {
        average_projectors(&self.states())
    }

    /// Grouped jackknife of `statistic` evaluated on the averaged Choi state.
    ///
    /// Trajectories are split into `min(groups, n)` contiguous groups; returns
    /// the statistic of the full ensemble and its jackknife standard error.
    pub fn jackknife<F>(&self, groups: usize, statistic: F) -> Result<(f64, f64), McwfError>
    where
        F: Fn(&ComplexMatrix) -> Result<f64, McwfError> + Sync + Send,
    {
        let n = self.outcomes.len();
        let g = groups.clamp(1, n.max(1));
        let full = statistic(&self.choi())?;
        if g < 2 {
            return Ok((full, f64::NAN));
        }
        let bounds: Vec<(usize, usize)> = (0..g).map(|k| (k * n / g, (k + 1) * n / g)).collect();
        let sums: Vec<ComplexMatrix> = map_indexed(g, |k| {
            let (a, b) = bounds[k];
            let states: Vec<Vec<C64>> = self.outcomes[a..b]
                .iter()
                .map(|o| o.state.clone())
                .collect();
            average_projectors(&states).scale_real((b - a) as f64)
        });
        let mut total = sums[0].clone();
        for s in &sums[1..] {
            total += s;
        }
        let values: Vec<Result<f64, McwfError>> = map_indexed(g, |k| {
            let (a, b) = bounds[k];
            statistic(&(&total - &sums[k]).scale_real(1.0 / (n - (b - a)) as f64))
        });
        let values = values.into_iter().collect::<Result<Vec<f64>, _>>()?;
        let mean = values.iter().sum::<f64>() / g as f64;
        let var =
            values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() * (g as f64 - 1.0) / g as f64;
        Ok((full, var.sqrt()))
    }

    pub fn chi(&self, basis: &OperatorBasis) -> Result<ProcessMatrix, McwfError> {
        let p = from_choi(&self.choi(), basis)?
            .with_metadata("n_traj", self.n_traj)
            .with_metadata("base_seed", self.base_seed);
        Ok(p)
    }
}

fn maximally_entangled_block(dim: usize) -> Block {
    let data = ComplexMatrix::identity(dim)
        .scale_real(1.0 / (dim as f64).sqrt())
        .into_vec();
    Block {
        data,
        rows: dim,
        cols: dim,
    }
}

fn check_doubled(schedule: &PulseSchedule, cfg: &TrajectoryConfig) -> Result<(), McwfError> {
    let d = schedule.dim();
    let doubled = d.saturating_mul(d);
    if doubled > cfg.max_dim {
        return Err(McwfError::DimensionOverflow {
            dim: doubled,
            max: cfg.max_dim,
        });
    }
    Ok(())
}

pub fn run_choi_ensemble(
    schedule: &PulseSchedule,
    jumps: &[JumpOperator],
    cfg: &TrajectoryConfig,
) -> Result<ChoiEnsemble, McwfError> {
    check_doubled(schedule, cfg)?;
    let compiled = CompiledSchedule::new(schedule, jumps, cfg)?;
    let outcomes = simulate(&compiled, &maximally_entangled_block(schedule.dim()), cfg)?;
    let (jump_counts, no_jump_fraction) = jump_statistics(&compiled, &outcomes);
    Ok(ChoiEnsemble {
        shape: schedule.shape().clone(),
        outcomes,
        jump_counts,
        no_jump_fraction,
        n_traj: cfg.n_traj,
        base_seed: cfg.base_seed,
        total_steps: compiled.total_steps(),
    })
}

/// χ of the schedule's channel, estimated from `cfg.n_traj` trajectories.
pub fn extract_chi(
    schedule: &PulseSchedule,
    jumps: &[JumpOperator],
    basis: &OperatorBasis,
    cfg: &TrajectoryConfig,
) -> Result<ProcessMatrix, McwfError> {
    if basis.shape() != schedule.shape() {
        return Err(McwfError::InvalidSchedule(
            "basis shape differs from the schedule register".into(),
        ));
    }
    run_choi_ensemble(schedule, jumps, cfg)?.chi(basis)
}

/// Deterministic no-jump estimate of χ.
#[derive(Debug, Clone)]
pub struct NoJumpEstimate {
    /// χ from the normalised no-jump Choi state.
    pub chi: ProcessMatrix,
    /// Unnormalised no-jump Choi state.
    pub choi_unnormalized: ComplexMatrix,
    /// No-jump survival probability `p_nj`.
    pub survival: f64,
    /// `1 − p_nj`.
    pub bound: f64,
}

pub fn no_jump_estimate(
    schedule: &PulseSchedule,
    jumps: &[JumpOperator],
    basis: &OperatorBasis,
    cfg: &TrajectoryConfig,
) -> Result<NoJumpEstimate, McwfError> {
    check_doubled(schedule, cfg)?;
    let compiled = CompiledSchedule::new(schedule, jumps, cfg)?;
    let mut block = maximally_entangled_block(schedule.dim());
    compiled.propagate_no_jump(&mut block);
    let survival = block.norm_sqr();
    let choi_unnormalized = ComplexMatrix::outer(&block.data, &block.data);
    let chi = from_choi(&choi_unnormalized.scale_real(1.0 / survival), basis)?;
    Ok(NoJumpEstimate {
        chi,
        choi_unnormalized,
        survival,
        bound: 1.0 - survival,
    })
}

/// No-jump propagator `Π M_seg^n` of the whole schedule (unitary when there
/// is no dissipation, up to RK4 truncation).
pub fn schedule_propagator(
    schedule: &PulseSchedule,
    jumps: &[JumpOperator],
    cfg: &TrajectoryConfig,
) -> Result<ComplexMatrix, McwfError> {
    let compiled = CompiledSchedule::new(schedule, jumps, cfg)?;
    let d = schedule.dim();
    let mut block = Block {
        data: ComplexMatrix::identity(d).into_vec(),
        rows: d,
        cols: d,
    };
    compiled.propagate_no_jump(&mut block);
    Ok(ComplexMatrix::from_vec(d, d, block.data).expect("square"))
}
