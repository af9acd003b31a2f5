//! Run configuration: one JSON document, optionally patched from the command line.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use procmat::circuit::{toffoli_circuit, Circuit, Gate, GateKind};
use procmat::mcwf::TrajectoryConfig;
use procmat::process::BasisKind;
use procmat::rydberg::{
    AtomParams, AtomParamsHz, LevelScheme, RegisterModel, SchemeKind, StarkMode, TWO_PI,
};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsOverlay {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blockade: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_r: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_d: Option<f64>,
}

/// Named circuit or an explicit gate list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CircuitSpec {
    Named(String),
    Gates {
        n_wires: usize,
        gates: Vec<GateSpec>,
    },
}

impl Default for CircuitSpec {
    fn default() -> Self {
        CircuitSpec::Named("toffoli".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub kind: String,
    pub wires: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConcatSpec {
    /// Gate name → χ file. One-qubit gates default to their exact χ.
    pub library: BTreeMap<String, String>,
    pub circuit: CircuitSpec,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DistanceSpec {
    pub a: String,
    pub b: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    pub preset: String,
    /// Values in Hz replacing preset entries.
    pub params_hz: ParamsOverlay,
    pub scheme: SchemeKind,
    pub dump_level: bool,
    pub stark: StarkMode,
    pub omega_b_grid_hz: Vec<f64>,
    pub n_traj: usize,
    pub base_seed: u64,
    pub out_dir: String,
    pub gate: String,
    pub basis: BasisKind,
    pub steps_per_min_pulse: usize,
    pub jump_time_tolerance: f64,
    pub max_phase_per_step: f64,
    pub max_dim: usize,
    pub jackknife_groups: usize,
    pub independent_cnots: bool,
    pub concat: ConcatSpec,
    pub distance: DistanceSpec,
}

impl Default for RunConfig {
    fn default() -> Self {
        let t = TrajectoryConfig::default();
        Self {
            mode: None,
            preset: "table1".into(),
            params_hz: ParamsOverlay::default(),
            scheme: SchemeKind::Effective3,
            dump_level: false,
            stark: StarkMode::Compensated,
            omega_b_grid_hz: (1..=10).map(|k| k as f64 * 10e6).collect(),
            n_traj: t.n_traj,
            base_seed: t.base_seed,
            out_dir: "out".into(),
            gate: "CNOT".into(),
            basis: BasisKind::MatrixUnit,
            steps_per_min_pulse: t.steps_per_min_pulse,
            jump_time_tolerance: t.jump_time_tolerance,
            max_phase_per_step: t.max_phase_per_step,
            max_dim: t.max_dim,
            jackknife_groups: 20,
            independent_cnots: false,
            concat: ConcatSpec::default(),
            distance: DistanceSpec::default(),
        }
    }
}

/// Command-line adjustments applied on top of the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub traj: Option<usize>,
    pub out: Option<String>,
    pub assignments: Vec<String>,
}

/// Sets `path` (dot separated) in `root`; the value is parsed as JSON when
/// possible and taken as a string otherwise.
pub fn apply_assignment(root: &mut Value, assignment: &str) -> Result<(), CliError> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| CliError::Config(format!("override `{assignment}` is not KEY=VALUE")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Config(format!(
            "override key `{key}` is malformed"
        )));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let obj = node.as_object_mut().ok_or_else(|| {
            CliError::Config(format!(
                "override `{key}`: `{part}` is not inside an object"
            ))
        })?;
        node = obj
            .entry(part.to_string())
            .or_insert_with(|| Value::Object(Default::default()));
    }
    let obj = node.as_object_mut().ok_or_else(|| {
        CliError::Config(format!("override `{key}` does not address an object field"))
    })?;
    obj.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

pub fn load(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig, CliError> {
    let mut root = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => Value::Object(Default::default()),
    };
    if !root.is_object() {
        return Err(CliError::Config(
            "configuration must be a JSON object".into(),
        ));
    }
    for a in &overrides.assignments {
        apply_assignment(&mut root, a)?;
    }
    let obj = root.as_object_mut().expect("checked above");
    if let Some(s) = overrides.seed {
        obj.insert("base_seed".into(), s.into());
    }
    if let Some(n) = overrides.traj {
        obj.insert("n_traj".into(), n.into());
    }
    if let Some(o) = &overrides.out {
        obj.insert("out_dir".into(), o.clone().into());
    }
    let cfg: RunConfig =
        serde_json::from_value(root).map_err(|e| CliError::Config(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_traj == 0 {
            return Err(CliError::Config("n_traj: must be at least 1".into()));
        }
        if let Some(v) = self
            .omega_b_grid_hz
            .iter()
            .find(|v| !(v.is_finite() && **v > 0.0))
        {
            return Err(CliError::Config(format!(
                "omega_b_grid_hz: {v} is not a positive frequency"
            )));
        }
        if self.jackknife_groups == 0 {
            return Err(CliError::Config(
                "jackknife_groups: must be at least 1".into(),
            ));
        }
        self.params_hz()?;
        Ok(())
    }

    pub fn check_mode(&self, verb: &str) -> Result<(), CliError> {
        match &self.mode {
            Some(m) if m != verb && !(verb == "sweep" && m == "cnot-sweep") => {
                Err(CliError::Config(format!(
                    "mode: configuration is for `{m}`, command is `{verb}`"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn params_hz(&self) -> Result<AtomParamsHz, CliError> {
        let mut p = AtomParamsHz::preset(&self.preset)
            .ok_or_else(|| CliError::Config(format!("preset: unknown preset `{}`", self.preset)))?;
        let o = &self.params_hz;
        let slots = [
            (&mut p.delta, o.delta),
            (&mut p.omega_r, o.omega_r),
            (&mut p.omega_b, o.omega_b),
            (&mut p.blockade, o.blockade),
            (&mut p.gamma_p, o.gamma_p),
            (&mut p.gamma_r, o.gamma_r),
            (&mut p.gamma_d, o.gamma_d),
        ];
        for (slot, v) in slots {
            if let Some(v) = v {
                *slot = v;
            }
        }
        p.to_rad()
            .validate()
            .map_err(|e| CliError::Config(format!("params_hz: {e}")))?;
        Ok(p)
    }

    pub fn params(&self) -> Result<AtomParams, CliError> {
        Ok(self.params_hz()?.to_rad())
    }

    pub fn register(&self, n_atoms: usize) -> Result<RegisterModel, CliError> {
        let scheme = LevelScheme::new(self.scheme, self.dump_level);
        let reg = RegisterModel::new(n_atoms, scheme, self.params()?)
            .map_err(|e| CliError::Config(e.to_string()))?;
        Ok(reg.with_stark(self.stark))
    }

    pub fn trajectories(&self) -> TrajectoryConfig {
        TrajectoryConfig {
            n_traj: self.n_traj,
            base_seed: self.base_seed,
            steps_per_min_pulse: self.steps_per_min_pulse,
            jump_time_tolerance: self.jump_time_tolerance,
            max_phase_per_step: self.max_phase_per_step,
            max_dim: self.max_dim,
        }
    }

    pub fn grid_rad(&self) -> Vec<f64> {
        self.omega_b_grid_hz.iter().map(|f| TWO_PI * f).collect()
    }

    pub fn out_dir(&self) -> PathBuf {
        PathBuf::from(&self.out_dir)
    }

    pub fn circuit(&self) -> Result<Circuit, CliError> {
        match &self.concat.circuit {
            CircuitSpec::Named(n) if n == "toffoli" => Ok(toffoli_circuit()),
            CircuitSpec::Named(n) => Err(CliError::Config(format!(
                "concat.circuit: unknown circuit `{n}`"
            ))),
            CircuitSpec::Gates { n_wires, gates } => {
                if *n_wires == 0 {
                    return Err(CliError::Config(
                        "concat.circuit.n_wires: must be at least 1".into(),
                    ));
                }
                let mut c = Circuit::new(*n_wires);
                for g in gates {
                    let kind = GateKind::parse(&g.kind).ok_or_else(|| {
                        CliError::Config(format!("concat.circuit.gates: unknown gate `{}`", g.kind))
                    })?;
                    c.push(Gate::new(kind, g.wires.clone()))
                        .map_err(|e| CliError::Config(format!("concat.circuit.gates: {e}")))?;
                }
                Ok(c)
            }
        }
    }

    /// Canonical JSON of the resolved configuration.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serialises")
    }
}
