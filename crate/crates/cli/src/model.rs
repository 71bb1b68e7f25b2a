//! Linkage model files: parsing, validation and conversion to library types.

use crate::error::CliError;
use nalgebra::{DVector, Matrix4, Vector3};
use screwkin::mobility::{LoopSpec, LoopSystem};
use screwkin::{Chain, Pose, UnitScrew};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::Path;

/// Axis renormalizations larger than this are reported as warnings.
const AXIS_WARN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
    Helical,
    Cylindric,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointSpec {
    #[serde(rename = "type")]
    pub kind: JointKind,
    pub axis: [f64; 3],
    pub point: [f64; 3],
    #[serde(default)]
    pub pitch: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoopEntry {
    pub joint_indices: Vec<usize>,
    pub signs: Vec<f64>,
}

/// On-disk model document.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub name: String,
    pub joints: Vec<JointSpec>,
    #[serde(default)]
    pub body_frames: Option<Vec<[f64; 16]>>,
    #[serde(default)]
    pub loops: Option<Vec<LoopEntry>>,
    #[serde(default)]
    pub configs: Option<BTreeMap<String, Vec<f64>>>,
}

/// Validated model. Cylindric joints are expanded, so every index below
/// refers to the expanded joint variables.
#[derive(Debug, Clone)]
pub struct Model {
    pub name: String,
    pub chain: Chain,
    /// Expanded variables (one-based) of each model joint.
    pub variables: Vec<Vec<usize>>,
    pub system: LoopSystem,
    /// True when the model declares no loops or one loop over all joints
    /// in order with positive signs.
    pub single_loop: bool,
    pub configs: BTreeMap<String, DVector<f64>>,
    pub warnings: Vec<String>,
}

impl Model {
    pub fn n(&self) -> usize {
        self.chain.n()
    }

    /// Joint values from a config label, an explicit vector, or zeros.
    pub fn resolve_config(&self, label: Option<&str>, q: Option<&[f64]>) -> Result<DVector<f64>, CliError> {
        match (label, q) {
            (Some(_), Some(_)) => Err(CliError::input("give either --config or --q, not both")),
            (Some(l), None) => self
                .configs
                .get(l)
                .cloned()
                .ok_or_else(|| CliError::input(format!("unknown config label `{l}`"))),
            (None, Some(v)) => self.check_len("--q", v).map(|_| DVector::from_column_slice(v)),
            (None, None) => Ok(DVector::zeros(self.n())),
        }
    }

    pub fn check_len(&self, what: &str, v: &[f64]) -> Result<(), CliError> {
        if v.len() != self.n() {
            return Err(CliError::input(format!("{what} has {} entries, the model has {} joint variables", v.len(), self.n())));
        }
        Ok(())
    }
}

pub fn load(path: &Path) -> Result<Model, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    let file: ModelFile = crate::error::parse_json(&text, &path.display().to_string())?;
    build(file)
}

fn vec3(a: [f64; 3]) -> Vector3<f64> {
    Vector3::from(a)
}

pub fn build(file: ModelFile) -> Result<Model, CliError> {
    if file.joints.is_empty() {
        return Err(CliError::input("model has no joints"));
    }
    let mut warnings = Vec::new();
    let mut screws = Vec::new();
    let mut variables = Vec::new();
    for (j, spec) in file.joints.iter().enumerate() {
        let label = j + 1;
        let axis = vec3(spec.axis);
        let point = vec3(spec.point);
        if !spec.axis.iter().chain(&spec.point).all(|v| v.is_finite()) {
            return Err(CliError::input(format!("joint {label}: axis and point must be finite")));
        }
        let norm = axis.norm();
        if norm < 1e-12 {
            return Err(CliError::input(format!("joint {label}: axis has zero length")));
        }
        if (norm - 1.0).abs() > AXIS_WARN {
            warnings.push(format!("joint {label}: axis renormalized from length {norm:.6}"));
        }
        match (spec.kind, spec.pitch) {
            (JointKind::Helical, None) => return Err(CliError::input(format!("joint {label}: helical joint needs a pitch"))),
            (JointKind::Helical, Some(h)) if !h.is_finite() => {
                return Err(CliError::input(format!("joint {label}: pitch must be finite")))
            }
            (k, Some(_)) if k != JointKind::Helical => {
                return Err(CliError::input(format!("joint {label}: pitch is only allowed on helical joints")))
            }
            _ => {}
        }
        let start = screws.len() + 1;
        match spec.kind {
            JointKind::Revolute => screws.push(UnitScrew::revolute(axis, point)?),
            JointKind::Prismatic => screws.push(UnitScrew::prismatic(axis)?),
            JointKind::Helical => screws.push(UnitScrew::helical(axis, point, spec.pitch.unwrap_or_default())?),
            JointKind::Cylindric => {
                screws.push(UnitScrew::revolute(axis, point)?);
                screws.push(UnitScrew::prismatic(axis)?);
            }
        }
        variables.push((start..=screws.len()).collect::<Vec<_>>());
    }
    let n = screws.len();
    let mut chain = Chain::new(file.name.clone(), screws)?;

    if let Some(frames) = &file.body_frames {
        if frames.len() != file.joints.len() {
            return Err(CliError::input(format!(
                "body_frames has {} entries, expected one per joint ({})",
                frames.len(),
                file.joints.len()
            )));
        }
        let mut poses = Vec::with_capacity(n);
        for (j, (f, vars)) in frames.iter().zip(&variables).enumerate() {
            let pose = Pose::from_matrix(&Matrix4::from_row_slice(f))
                .map_err(|e| CliError::input(format!("body frame {}: {e}", j + 1)))?;
            poses.extend(std::iter::repeat_n(pose, vars.len()));
        }
        chain = chain.with_body_frames(poses)?;
    }

    let (system, single_loop) = match &file.loops {
        None => (LoopSystem::single(chain.clone()), true),
        Some(entries) => loop_system(&chain, &variables, entries)?,
    };

    let mut configs = BTreeMap::new();
    for (label, v) in file.configs.iter().flatten() {
        if v.len() != n {
            return Err(CliError::input(format!("config `{label}` has {} entries, expected {n}", v.len())));
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(CliError::input(format!("config `{label}` is not finite")));
        }
        configs.insert(label.clone(), DVector::from_column_slice(v));
    }

    Ok(Model { name: file.name, chain, variables, system, single_loop, configs, warnings })
}

fn loop_system(chain: &Chain, variables: &[Vec<usize>], entries: &[LoopEntry]) -> Result<(LoopSystem, bool), CliError> {
    if entries.is_empty() {
        return Err(CliError::input("loops is empty"));
    }
    let mut specs = Vec::with_capacity(entries.len());
    for (l, e) in entries.iter().enumerate() {
        let label = l + 1;
        if e.joint_indices.len() != e.signs.len() || e.joint_indices.is_empty() {
            return Err(CliError::input(format!("loop {label}: joint_indices and signs must be non-empty and of equal length")));
        }
        let mut indices = Vec::new();
        let mut signs = Vec::new();
        for (&j, &s) in e.joint_indices.iter().zip(&e.signs) {
            if j == 0 || j > variables.len() {
                return Err(CliError::input(format!("loop {label}: joint index {j} out of range 1..={}", variables.len())));
            }
            if s != 1.0 && s != -1.0 {
                return Err(CliError::input(format!("loop {label}: sign {s} is not ±1")));
            }
            for &v in &variables[j - 1] {
                indices.push(v);
                signs.push(s);
            }
        }
        let joints = indices.iter().map(|&v| chain.joints()[v - 1]).collect();
        let sub = Chain::new(format!("{}-loop{label}", chain.name()), joints)?;
        specs.push(LoopSpec { chain: sub, indices, signs });
    }
    let single = specs.len() == 1
        && specs[0].indices.iter().copied().eq(1..=chain.n())
        && specs[0].signs.iter().all(|&s| s == 1.0);
    Ok((LoopSystem::new(specs, chain.n())?, single))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Model, CliError> {
        build(serde_json::from_str(text).unwrap())
    }

    #[test]
    fn cylindric_expands_to_two_variables() {
        let m = parse(
            r#"{"name":"c","joints":[
                {"type":"cylindric","axis":[1,0,0],"point":[0,0,0]},
                {"type":"revolute","axis":[0,0,2],"point":[1,0,0]}]}"#,
        )
        .unwrap();
        assert_eq!(m.n(), 3);
        assert_eq!(m.variables, vec![vec![1, 2], vec![3]]);
        assert_eq!(m.warnings.len(), 1);
        assert!(m.single_loop);
    }

    #[test]
    fn pitch_only_on_helical() {
        let missing = parse(r#"{"name":"h","joints":[{"type":"helical","axis":[0,0,1],"point":[0,0,0]}]}"#);
        assert!(missing.is_err());
        let stray = parse(r#"{"name":"r","joints":[{"type":"revolute","axis":[0,0,1],"point":[0,0,0],"pitch":0.1}]}"#);
        assert!(stray.is_err());
    }

    #[test]
    fn loops_map_to_expanded_variables() {
        let m = parse(
            r#"{"name":"l","joints":[
                {"type":"revolute","axis":[0,0,1],"point":[0,0,0]},
                {"type":"cylindric","axis":[0,0,1],"point":[1,0,0]},
                {"type":"revolute","axis":[0,0,1],"point":[0,1,0]}],
               "loops":[{"joint_indices":[3,2,1],"signs":[1,-1,1]}]}"#,
        )
        .unwrap();
        assert_eq!(m.system.loops[0].indices, vec![4, 2, 3, 1]);
        assert_eq!(m.system.loops[0].signs, vec![1.0, -1.0, -1.0, 1.0]);
        assert!(!m.single_loop);
    }

    #[test]
    fn unknown_config_label_is_rejected() {
        let m = parse(r#"{"name":"r","joints":[{"type":"revolute","axis":[0,0,1],"point":[0,0,0]}],"configs":{"a":[0.5]}}"#)
            .unwrap();
        assert_eq!(m.resolve_config(Some("a"), None).unwrap()[0], 0.5);
        assert!(m.resolve_config(Some("b"), None).is_err());
    }
}
