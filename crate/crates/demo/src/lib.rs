//! wasm-bindgen entry points for `www/index.html`. Every call runs the
//! simulation synchronously and hands back a JSON string.

use procmat::circuit::{cnot_sweep, compare_implementations, simulate_schedule, CompareConfig};
use procmat::mcwf::TrajectoryConfig;
use procmat::process::{trace_distance, OperatorBasis, ProcessMatrix};
use procmat::rydberg::{build_corrected_cknot, ideal_cknot, AtomParams, RegisterModel, TWO_PI};
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn register(n_atoms: usize) -> Result<RegisterModel, String> {
    RegisterModel::effective3(n_atoms, AtomParams::table1()).map_err(|e| e.to_string())
}

fn to_json(v: &impl Serialize) -> Result<String, String> {
    serde_json::to_string(v).map_err(|e| e.to_string())
}

/// C-NOT distance to ideal at each blue Rabi frequency in `grid_mhz`.
pub fn sweep(grid_mhz: &[f64], n_traj: usize, seed: u64) -> Result<String, String> {
    let grid: Vec<f64> = grid_mhz.iter().map(|f| TWO_PI * f * 1e6).collect();
    let cfg = TrajectoryConfig::with_trajectories(n_traj, seed);
    let rows = cnot_sweep(&grid, &register(2)?, &cfg, n_traj.min(20)).map_err(|e| e.to_string())?;
    to_json(&rows)
}

#[derive(Serialize)]
struct Heatmap {
    gate: String,
    dim: usize,
    /// Row-major |χ_mn|.
    magnitude: Vec<f64>,
    trace_distance: f64,
    leakage: f64,
}

/// Qubit-subspace χ of a simulated C-NOT or C₂-NOT at one Ω_B.
pub fn heatmap(gate: &str, omega_b_mhz: f64, n_traj: usize, seed: u64) -> Result<String, String> {
    let (n, controls, target): (usize, &[usize], usize) = match gate {
        "CNOT" => (2, &[0], 1),
        "C2NOT" => (3, &[0, 1], 2),
        other => return Err(format!("unknown gate {other}")),
    };
    let base = register(n)?;
    let reg = base.with_params(base.params.with_omega_b(TWO_PI * omega_b_mhz * 1e6));
    let cfg = TrajectoryConfig::with_trajectories(n_traj, seed);
    let schedule =
        build_corrected_cknot(&reg, controls, target, &cfg).map_err(|e| e.to_string())?;
    let sim = simulate_schedule(&schedule, &reg, &cfg).map_err(|e| e.to_string())?;
    let ideal =
        ProcessMatrix::from_unitary(&ideal_cknot(n, controls, target), &OperatorBasis::qubits(n))
            .map_err(|e| e.to_string())?;
    let chi = sim.chi.chi();
    let dim = chi.rows();
    let magnitude = (0..dim * dim)
        .map(|k| chi[(k / dim, k % dim)].norm())
        .collect();
    let t = trace_distance(&sim.chi, &ideal).map_err(|e| e.to_string())?;
    to_json(&Heatmap {
        gate: gate.to_string(),
        dim,
        magnitude,
        trace_distance: t,
        leakage: sim.leakage,
    })
}

/// χ_cat, χ_cir and C₂-NOT distances to the Toffoli at one Ω_B.
pub fn toffoli(omega_b_mhz: f64, n_traj: usize, seed: u64) -> Result<String, String> {
    let cfg = CompareConfig {
        trajectories: TrajectoryConfig::with_trajectories(n_traj, seed),
        jackknife_groups: n_traj.min(20),
        ..CompareConfig::default()
    };
    let report = compare_implementations(&[TWO_PI * omega_b_mhz * 1e6], &register(3)?, &cfg)
        .map_err(|e| e.to_string())?;
    to_json(&report.rows[0])
}

#[wasm_bindgen(js_name = cnotSweep)]
pub fn cnot_sweep_js(grid_mhz: Vec<f64>, n_traj: usize, seed: u64) -> Result<String, JsError> {
    sweep(&grid_mhz, n_traj, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = chiHeatmap)]
pub fn chi_heatmap_js(
    gate: &str,
    omega_b_mhz: f64,
    n_traj: usize,
    seed: u64,
) -> Result<String, JsError> {
    heatmap(gate, omega_b_mhz, n_traj, seed).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = toffoliPoint)]
pub fn toffoli_point_js(omega_b_mhz: f64, n_traj: usize, seed: u64) -> Result<String, JsError> {
    toffoli(omega_b_mhz, n_traj, seed).map_err(|e| JsError::new(&e))
}
