use std::collections::BTreeMap;
use std::path::Path;

use procmat::circuit::{
    chi_via_concatenation, cnot_sweep, compare_implementations, qubit_chi_from_choi,
    simulate_schedule, CompareConfig, ComparisonReport, ComparisonRow, GateKind, GateLibrary,
    NoJumpCheck, SweepRow,
};
use procmat::mcwf::PulseSchedule;
use procmat::process::{trace_distance, BasisKind, OperatorBasis, ProcessMatrix};
use procmat::rydberg::{build_corrected_cknot, ideal_cknot};
use procmat::tensor::ComplexMatrix;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{csv_bytes, json_bytes, RunOutput};

/// Controls of a named gate, or `None` for the identity.
fn gate_controls(name: &str) -> Result<Option<usize>, CliError> {
    match name {
        "identity" | "I" => Ok(None),
        _ => match GateKind::parse(name) {
            Some(GateKind::Cnot) => Ok(Some(1)),
            Some(GateKind::CkNot(k)) => Ok(Some(k)),
            _ => Err(CliError::Config(format!(
                "gate: `{name}` is not one of CNOT, C2NOT, identity"
            ))),
        },
    }
}

pub fn gate_chi(cfg: &RunConfig, out: &mut RunOutput) -> Result<(), CliError> {
    let traj = cfg.trajectories();
    let controls = gate_controls(&cfg.gate)?;
    let n_atoms = controls.map_or(1, |k| k + 1);
    let reg = cfg.register(n_atoms)?;
    reg.check_dim(cfg.max_dim)?;
    let (schedule, ideal_u) = match controls {
        None => (PulseSchedule::new(reg.shape()), ComplexMatrix::identity(2)),
        Some(k) => {
            let c: Vec<usize> = (0..k).collect();
            (
                build_corrected_cknot(&reg, &c, k, &traj)?,
                ideal_cknot(n_atoms, &c, k),
            )
        }
    };
    let sim = simulate_schedule(&schedule, &reg, &traj)?;
    let ideal = ProcessMatrix::from_unitary(&ideal_u, &OperatorBasis::qubits(n_atoms))?;
    let (t, se) = sim.ensemble.jackknife(cfg.jackknife_groups, |choi| {
        Ok(trace_distance(&qubit_chi_from_choi(choi, &reg)?, &ideal)?)
    })?;
    let nj = NoJumpCheck::new(&schedule, &reg, &sim, &traj)?;
    let chi = sim
        .chi
        .clone()
        .with_metadata("gate", &cfg.gate)
        .with_metadata("omega_b_hz", cfg.params_hz()?.omega_b)
        .to_kind(cfg.basis);
    out.write(&format!("chi_{}.json", cfg.gate), chi.to_json().as_bytes())?;
    out.record("gate", &cfg.gate);
    out.record("n_atoms", n_atoms);
    out.record("pulses", schedule.segment_count());
    out.record("pulse_duration_s", reg.pulse_duration().ok());
    out.record("total_steps", sim.ensemble.total_steps);
    out.record("trace_distance_to_ideal", t);
    out.record("standard_error", se);
    out.record("leakage", sim.leakage);
    out.record("nojump_bound", nj.bound);
    out.record("nojump_distance", nj.distance);
    out.record("observed_no_jump_fraction", nj.observed_no_jump);
    out.record("no_jump_fraction", sim.ensemble.no_jump_fraction);
    out.record("jump_counts", &sim.ensemble.jump_counts);
    Ok(())
}

fn sweep_record(r: &SweepRow) -> Vec<String> {
    vec![
        r.omega_b_hz.to_string(),
        r.trace_distance.to_string(),
        r.leakage.to_string(),
        r.nojump.bound.to_string(),
    ]
}

pub fn sweep(cfg: &RunConfig, out: &mut RunOutput) -> Result<(), CliError> {
    let reg = cfg.register(2)?;
    let rows = cnot_sweep(
        &cfg.grid_rad(),
        &reg,
        &cfg.trajectories(),
        cfg.jackknife_groups,
    )?;
    let records: Vec<Vec<String>> = rows.iter().map(sweep_record).collect();
    out.write("sweep.csv", &csv_bytes(&SweepRow::CSV_HEADER, &records)?)?;
    out.write("sweep.json", &json_bytes(&rows))?;
    out.record("pulses", 5);
    Ok(())
}

fn compare_record(r: &ComparisonRow) -> Vec<String> {
    [
        r.omega_b_hz,
        r.t_cat,
        r.t_cir,
        r.t_c2not,
        r.leak_cat,
        r.leak_cir,
        r.leak_c2not,
        r.bound_nojump_cir,
    ]
    .iter()
    .map(f64::to_string)
    .chain(std::iter::once(r.seed.to_string()))
    .collect()
}

pub fn toffoli_compare(cfg: &RunConfig, out: &mut RunOutput) -> Result<ComparisonReport, CliError> {
    let reg = cfg.register(3)?;
    reg.check_dim(cfg.max_dim)?;
    let cc = CompareConfig {
        trajectories: cfg.trajectories(),
        jackknife_groups: cfg.jackknife_groups,
        independent_cnots: cfg.independent_cnots,
    };
    let report = compare_implementations(&cfg.grid_rad(), &reg, &cc)?;
    let records: Vec<Vec<String>> = report.rows.iter().map(compare_record).collect();
    out.write(
        "compare.csv",
        &csv_bytes(&ComparisonReport::CSV_HEADER, &records)?,
    )?;
    out.write("compare.json", &json_bytes(&report))?;
    out.record("pulses", BTreeMap::from([("cnot", 5), ("c2not", 7)]));
    Ok(report)
}

pub fn load_chi(path: &Path) -> Result<ProcessMatrix, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    ProcessMatrix::from_json(&text).map_err(|e| match CliError::from(e) {
        CliError::Schema(m) => CliError::Schema(format!("{}: {m}", path.display())),
        CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn concat(cfg: &RunConfig, out: &mut RunOutput) -> Result<(), CliError> {
    let circuit = cfg.circuit()?;
    let mut library = GateLibrary::ideal_single_qubit()?;
    let mut inputs = BTreeMap::new();
    for (name, path) in &cfg.concat.library {
        let kind = GateKind::parse(name)
            .ok_or_else(|| CliError::Config(format!("concat.library: unknown gate `{name}`")))?;
        let chi = load_chi(Path::new(path))?;
        inputs.insert(name.clone(), path.clone());
        library.insert(kind, chi.to_kind(BasisKind::MatrixUnit));
    }
    let mut chi = chi_via_concatenation(&circuit, &library)?.to_kind(cfg.basis);
    chi.metadata.insert(
        "census".into(),
        serde_json::to_string(&circuit.census()).expect("serialisable"),
    );
    out.write("chi_cat.json", chi.to_json().as_bytes())?;
    out.record("inputs", inputs);
    out.record("census", circuit.census());
    out.record("trace", chi.trace());
    Ok(())
}

#[derive(Serialize)]
struct DistanceDoc<'a> {
    a: &'a str,
    b: &'a str,
    trace_distance: f64,
}

pub fn distance(cfg: &RunConfig, out: &mut RunOutput) -> Result<f64, CliError> {
    let (a, b) = (&cfg.distance.a, &cfg.distance.b);
    if a.is_empty() || b.is_empty() {
        return Err(CliError::Config(
            "distance.a, distance.b: two χ files are required".into(),
        ));
    }
    let pa = load_chi(Path::new(a))?;
    let pb = load_chi(Path::new(b))?.to_kind(pa.basis().kind());
    let t = trace_distance(&pa, &pb)?;
    out.write(
        "distance.json",
        &json_bytes(&DistanceDoc {
            a,
            b,
            trace_distance: t,
        }),
    )?;
    Ok(t)
}
