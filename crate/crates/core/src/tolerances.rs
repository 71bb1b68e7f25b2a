//! Numerical tolerances shared by the analyses.

use crate::error::{Error, Result};

/// Environment variable holding tolerance overrides.
pub const ENV_VAR: &str = "SCREWKIN_TOL";

/// Tolerance set. Defaults:
///
/// | key    | default | meaning                                             |
/// |--------|---------|-----------------------------------------------------|
/// | `orth` | 1e-9    | rotation orthonormality                             |
/// | `loop` | 1e-8    | loop-closure residual `‖f_n(q) − I‖`                 |
/// | `cone` | 1e-9    | tangent-cone feasibility residual (scaled)          |
/// | `rank` | 1e-10   | relative singular-value threshold for rank          |
/// | `cond` | 1e8     | largest accepted condition number for linear solves |
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    pub orth: f64,
    pub loop_closure: f64,
    pub cone: f64,
    pub rank: f64,
    pub cond: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            orth: 1e-9,
            loop_closure: 1e-8,
            cone: 1e-9,
            rank: 1e-10,
            cond: 1e8,
        }
    }
}

impl Tolerances {
    /// Apply overrides written as `key=value` pairs separated by commas,
    /// e.g. `loop=1e-7,cone=1e-8`.
    pub fn with_overrides(mut self, spec: &str) -> Result<Self> {
        for item in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (key, value) = item
                .split_once('=')
                .ok_or_else(|| Error::InvalidInput(format!("tolerance override `{item}` lacks `=`")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("tolerance `{key}` is not a number")))?;
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidInput(format!("tolerance `{key}` must be positive")));
            }
            match key.trim() {
                "orth" => self.orth = v,
                "loop" => self.loop_closure = v,
                "cone" => self.cone = v,
                "rank" => self.rank = v,
                "cond" => self.cond = v,
                other => return Err(Error::InvalidInput(format!("unknown tolerance `{other}`"))),
            }
        }
        Ok(self)
    }

    /// Defaults with overrides from [`ENV_VAR`], if set.
    pub fn from_env() -> Result<Self> {
        match std::env::var(ENV_VAR) {
            Ok(spec) => Self::default().with_overrides(&spec),
            Err(_) => Ok(Self::default()),
        }
    }
}
