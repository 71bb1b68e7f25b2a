//! Derivative-stack files and inline vector arguments.

use crate::error::{parse_json, CliError};
use nalgebra::DVector;
use screwkin::ScrewVec;
use serde::Deserialize;
use std::path::Path;

/// `{q?, derivs?, twists?}`: joint values, joint derivatives `q̇, q̈, …` and
/// twist derivatives `V, V̇, …` (six components each).
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StackFile {
    #[serde(default)]
    pub q: Option<Vec<f64>>,
    #[serde(default)]
    pub derivs: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub twists: Option<Vec<[f64; 6]>>,
}

impl StackFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        let s: StackFile = parse_json(&text, &path.display().to_string())?;
        let finite = s.q.iter().flatten().chain(s.derivs.iter().flatten().flatten()).chain(s.twists.iter().flatten().flatten());
        if !finite.into_iter().all(|v| v.is_finite()) {
            return Err(CliError::input(format!("{} contains non-finite numbers", path.display())));
        }
        Ok(s)
    }

    pub fn derivs(&self, n: usize) -> Result<Vec<DVector<f64>>, CliError> {
        let d = self.derivs.as_ref().ok_or_else(|| CliError::input("stack file has no `derivs`"))?;
        d.iter()
            .enumerate()
            .map(|(l, v)| {
                if v.len() == n {
                    Ok(DVector::from_column_slice(v))
                } else {
                    Err(CliError::input(format!("derivs[{l}] has {} entries, expected {n}", v.len())))
                }
            })
            .collect()
    }

    pub fn twists(&self) -> Result<Vec<ScrewVec>, CliError> {
        let t = self.twists.as_ref().ok_or_else(|| CliError::input("stack file has no `twists`"))?;
        if t.is_empty() {
            return Err(CliError::input("`twists` is empty"));
        }
        Ok(t.iter().map(|v| ScrewVec::from_column_slice(v)).collect())
    }
}

/// Comma-separated numbers.
pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|t| {
            let t = t.trim();
            t.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| CliError::input(format!("`{t}` is not a finite number")))
        })
        .collect()
}

/// Comma-separated one-based indices.
pub fn parse_indices(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|_| CliError::input(format!("`{t}` is not an index"))))
        .collect()
}

/// Orders separated by `;`, components by `,`: `"1;0;-1;0"`.
pub fn parse_stack(s: &str) -> Result<Vec<Vec<f64>>, CliError> {
    s.split(';').map(parse_list).collect()
}
