//! Minors of the spatial Jacobian and their derivatives.
//!
//! The `ν`-th derivative of `det(S_{αβ₁} … S_{αβ_k})` is the multilinear
//! Leibniz sum over all weak compositions `a` of `ν` into `k` parts,
//! weighted by the multinomial `ν!/a!`.

use crate::chain::{joint_screws_spatial, Chain, DerivativeStack};
use crate::derivatives::ScrewJet;
use crate::error::{Error, Result};
use crate::linalg::det;
use crate::multiindex::{compositions, multinomial, subsets, K_MAX};
use crate::parallel::{map, Execution};
use crate::screw::ScrewVec;
use nalgebra::{DMatrix, DVector};

/// Row set `α ⊂ {1..6}` and column set `β ⊂ {1..n}`, both strictly
/// increasing and of equal size.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MinorIndex {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl MinorIndex {
    pub fn new(rows: Vec<usize>, cols: Vec<usize>) -> Result<Self> {
        let idx = Self { rows, cols };
        idx.validate(usize::MAX)?;
        Ok(idx)
    }

    pub fn size(&self) -> usize {
        self.rows.len()
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.rows.len() != self.cols.len() || self.rows.is_empty() {
            return Err(Error::InvalidInput("minor rows and columns must be non-empty and equal in number".into()));
        }
        let increasing = |v: &[usize]| v.windows(2).all(|w| w[0] < w[1]);
        if !increasing(&self.rows) || !increasing(&self.cols) {
            return Err(Error::InvalidInput("minor indices must be strictly increasing".into()));
        }
        if self.rows[0] == 0 || *self.rows.last().unwrap() > 6 {
            return Err(Error::InvalidInput("minor rows must lie in 1..=6".into()));
        }
        if self.cols[0] == 0 || *self.cols.last().unwrap() > n {
            return Err(Error::InvalidInput("minor column out of range".into()));
        }
        Ok(())
    }

    /// All minors of size `k` for an `6 × n` Jacobian.
    pub fn all(k: usize, n: usize) -> Vec<MinorIndex> {
        let rows = subsets(6, k);
        let cols = subsets(n, k);
        rows.iter()
            .flat_map(|r| cols.iter().map(move |c| MinorIndex { rows: r.clone(), cols: c.clone() }))
            .collect()
    }
}

/// Determinant of the selected entries, column `j` taken from `cols[j]`.
pub fn det_of_columns(rows: &[usize], cols: &[ScrewVec]) -> f64 {
    let k = rows.len();
    let m = DMatrix::from_fn(k, k, |r, c| cols[c][rows[r] - 1]);
    det(&m)
}

/// `m_{αβ}(q)`.
pub fn minor(chain: &Chain, q: &DVector<f64>, idx: &MinorIndex) -> Result<f64> {
    idx.validate(chain.n())?;
    let s = joint_screws_spatial(chain, q)?;
    let cols: Vec<ScrewVec> = idx.cols.iter().map(|&j| s[j - 1]).collect();
    Ok(det_of_columns(&idx.rows, &cols))
}

/// Leibniz sum for the `ν`-th derivative from per-joint derivative lists
/// `ds[j][l]`.
pub fn leibniz_sum(idx: &MinorIndex, ds: &[Vec<ScrewVec>], nu: usize) -> f64 {
    let k = idx.size();
    compositions(nu, k)
        .into_iter()
        .map(|a| {
            let cols: Vec<ScrewVec> = idx.cols.iter().zip(&a).map(|(&j, &l)| ds[j - 1][l]).collect();
            multinomial(&a) * det_of_columns(&idx.rows, &cols)
        })
        .sum()
}

fn check_nu(nu: usize) -> Result<()> {
    if nu > K_MAX {
        Err(Error::OrderTooHigh { requested: nu, max: K_MAX })
    } else {
        Ok(())
    }
}

/// `dᵛ/dtᵛ m_{αβ}` along the motion described by `state` (order ≥ ν).
pub fn minor_time_derivative(chain: &Chain, state: &DerivativeStack, idx: &MinorIndex, nu: usize) -> Result<f64> {
    idx.validate(chain.n())?;
    check_nu(nu)?;
    state.require(nu)?;
    let s = joint_screws_spatial(chain, &state.q)?;
    let jet = ScrewJet::full(&s, &state.derivs, nu);
    Ok(leibniz_sum(idx, &jet.screws, nu))
}

/// `dⁱm_{αβ,q}(x)`, the `i`-th differential along direction `x`.
pub fn minor_differential(chain: &Chain, q: &DVector<f64>, idx: &MinorIndex, i: usize, x: &DVector<f64>) -> Result<f64> {
    Ok(all_minor_differentials(chain, q, std::slice::from_ref(idx), i, x, Execution::Sequential)?[0][i])
}

/// Differentials of orders `0..=order` for many minors at once;
/// `result[m][i] = dⁱm(x)` for minor `m`.
pub fn all_minor_differentials(
    chain: &Chain,
    q: &DVector<f64>,
    idx: &[MinorIndex],
    order: usize,
    x: &DVector<f64>,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    check_nu(order)?;
    for m in idx {
        m.validate(chain.n())?;
    }
    if x.len() != chain.n() {
        return Err(Error::Dimension { what: "direction", expected: chain.n(), got: x.len() });
    }
    let s = joint_screws_spatial(chain, q)?;
    let jet = ScrewJet::full(&s, std::slice::from_ref(x), order);
    Ok(map(exec, idx, |m| (0..=order).map(|nu| leibniz_sum(m, &jet.screws, nu)).collect()))
}

/// Time derivatives of orders `0..=order` for many minors at once.
pub fn all_minor_time_derivatives(
    chain: &Chain,
    state: &DerivativeStack,
    idx: &[MinorIndex],
    order: usize,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    check_nu(order)?;
    state.require(order)?;
    for m in idx {
        m.validate(chain.n())?;
    }
    let s = joint_screws_spatial(chain, &state.q)?;
    let jet = ScrewJet::full(&s, &state.derivs, order);
    Ok(map(exec, idx, |m| (0..=order).map(|nu| leibniz_sum(m, &jet.screws, nu)).collect()))
}
