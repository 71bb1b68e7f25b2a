//! Higher-order inverse kinematics.
//!
//! For a non-redundant arm the `k`-th derivative of the end-effector twist is
//! `D^(k−1)V = J q^(k) + G_k`, where `G_k` collects everything that depends on
//! `q̇..q^(k−1)` only. Solving for `q^(r)` and propagating the screw
//! derivatives of order `r − 1` are alternated, with `J` factored once.

use crate::chain::{jacobian_spatial, joint_screws_spatial, Chain};
use crate::derivatives::ScrewJet;
use crate::error::{Error, Result};
use crate::linalg::singular_values;
use crate::multiindex::{binomial, K_MAX};
use crate::parallel::{map, Execution};
use crate::screw::{ad_matrix, eta, xi, ScrewVec};
use nalgebra::linalg::ColPivQR;
use nalgebra::{DMatrix, DVector, Dyn};

/// Condition number above which a square system is treated as singular.
pub const COND_MAX: f64 = 1e8;

/// Square linear system factored once and reused for many right-hand sides.
pub(crate) struct SquareSolver {
    qr: ColPivQR<f64, Dyn, Dyn>,
}

impl SquareSolver {
    pub(crate) fn new(m: &DMatrix<f64>, cond_max: f64) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Dimension { what: "square system", expected: m.nrows(), got: m.ncols() });
        }
        let sv = singular_values(m);
        let smax = sv.first().copied().unwrap_or(0.0);
        let smin = sv.last().copied().unwrap_or(0.0);
        let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
        if condition.is_nan() || condition >= cond_max {
            return Err(Error::Singular { sigma_min: smin, condition });
        }
        Ok(Self { qr: m.clone().col_piv_qr() })
    }

    pub(crate) fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.qr.solve(b).expect("condition checked at construction")
    }
}

/// Joint derivatives and the link twist derivatives produced on the way.
#[derive(Debug, Clone, PartialEq)]
pub struct IkSolution {
    /// `qd[m] = q^(m+1)`.
    pub qd: Vec<DVector<f64>>,
    /// `twists[i][l] = D^(l) V_{i+1}` (spatial), `l < k`.
    pub twists: Vec<Vec<ScrewVec>>,
}

fn select_rows(v: &ScrewVec, rows: Option<&[usize]>) -> DVector<f64> {
    match rows {
        None => DVector::from_iterator(6, v.iter().copied()),
        Some(r) => DVector::from_iterator(r.len(), r.iter().map(|&i| v[i - 1])),
    }
}

fn task_jacobian(chain: &Chain, q: &DVector<f64>, rows: Option<&[usize]>) -> Result<DMatrix<f64>> {
    let j = jacobian_spatial(chain, q, chain.n())?;
    match rows {
        None => Ok(j),
        Some(r) => {
            if r.iter().any(|&i| i == 0 || i > 6) || r.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::InvalidInput("task rows must be strictly increasing within 1..=6".into()));
            }
            Ok(DMatrix::from_fn(r.len(), chain.n(), |a, c| j[(r[a] - 1, c)]))
        }
    }
}

/// `q̇..q^(k)` from end-effector twist derivatives `ee = [V, V̇, …, D^(k−1)V]`.
///
/// `rows` optionally selects task components (one-based) so that the system
/// is square; otherwise the chain must have six joints.
pub fn ik_derivatives(chain: &Chain, q: &DVector<f64>, ee: &[ScrewVec], rows: Option<&[usize]>) -> Result<IkSolution> {
    let k = ee.len();
    if k == 0 {
        return Err(Error::InvalidInput("no end-effector derivatives given".into()));
    }
    if k > K_MAX {
        return Err(Error::OrderTooHigh { requested: k, max: K_MAX });
    }
    let n = chain.n();
    let solver = SquareSolver::new(&task_jacobian(chain, q, rows)?, COND_MAX)?;
    let mut jet = ScrewJet::new(&joint_screws_spatial(chain, q)?);
    let mut qd: Vec<DVector<f64>> = Vec::with_capacity(k);
    for r in 1..=k {
        if r >= 2 {
            jet.push_screw_level();
        }
        let g = jet.lower_order_terms(r, &qd, n);
        qd.push(solver.solve(&select_rows(&(ee[r - 1] - g), rows)));
        jet.push_sum_level(&qd);
    }
    Ok(IkSolution { qd, twists: jet.sums })
}

/// Rolled-out solution for orders up to 4, using explicit `ad` products
/// and the link-twist recursions for `V_i, V̇_i, V̈_i`.
pub fn ik_explicit_low_order(chain: &Chain, q: &DVector<f64>, ee: &[ScrewVec], rows: Option<&[usize]>) -> Result<Vec<DVector<f64>>> {
    let k = ee.len();
    if k == 0 || k > 4 {
        return Err(Error::OrderTooHigh { requested: k, max: 4 });
    }
    let n = chain.n();
    let s = joint_screws_spatial(chain, q)?;
    let solver = SquareSolver::new(&task_jacobian(chain, q, rows)?, COND_MAX)?;
    let solve = |v: ScrewVec| solver.solve(&select_rows(&v, rows));

    let qd1 = solve(ee[0]);
    let mut out = vec![qd1.clone()];
    // V_i, then S'_i = ad_{V_i} S_i.
    let mut v = vec![ScrewVec::zeros(); n];
    let mut acc = ScrewVec::zeros();
    for i in 0..n {
        acc += s[i] * qd1[i];
        v[i] = acc;
    }
    let ds1: Vec<ScrewVec> = (0..n).map(|i| ad_matrix(&v[i]) * s[i]).collect();
    if k == 1 {
        return Ok(out);
    }

    let g2: ScrewVec = (0..n).map(|i| ds1[i] * qd1[i]).sum();
    let qd2 = solve(ee[1] - g2);
    out.push(qd2.clone());
    let mut vd = vec![ScrewVec::zeros(); n];
    let mut acc = ScrewVec::zeros();
    for i in 0..n {
        acc += ds1[i] * qd1[i] + s[i] * qd2[i];
        vd[i] = acc;
    }
    // S''_i = (ad_{V̇_i} + ad_{V_i}²) S_i
    let ds2: Vec<ScrewVec> = (0..n)
        .map(|i| {
            let a = ad_matrix(&v[i]);
            (ad_matrix(&vd[i]) + a * a) * s[i]
        })
        .collect();
    if k == 2 {
        return Ok(out);
    }

    let g3: ScrewVec = (0..n).map(|i| ds1[i] * (2.0 * qd2[i]) + ds2[i] * qd1[i]).sum();
    let qd3 = solve(ee[2] - g3);
    out.push(qd3.clone());
    if k == 3 {
        return Ok(out);
    }
    let mut vdd = vec![ScrewVec::zeros(); n];
    let mut acc = ScrewVec::zeros();
    for i in 0..n {
        acc += ds2[i] * qd1[i] + ds1[i] * (2.0 * qd2[i]) + s[i] * qd3[i];
        vdd[i] = acc;
    }
    // S'''_i = (ad_{V̈} + 2 ad_{V̇} ad_V + ad_V ad_{V̇} + ad_V³) S_i
    let ds3: Vec<ScrewVec> = (0..n)
        .map(|i| {
            let a = ad_matrix(&v[i]);
            let ad = ad_matrix(&vd[i]);
            (ad_matrix(&vdd[i]) + ad * a * 2.0 + a * ad + a * a * a) * s[i]
        })
        .collect();
    let g4: ScrewVec = (0..n)
        .map(|i| ds1[i] * (3.0 * qd3[i]) + ds2[i] * (3.0 * qd2[i]) + ds3[i] * qd1[i])
        .sum();
    out.push(solve(ee[3] - g4));
    Ok(out)
}

fn screw_pinv_apply(s: &ScrewVec, v: &ScrewVec) -> f64 {
    s.dot(v) / s.norm_squared()
}

/// Per-joint inverse kinematics from the twist derivatives of every link.
///
/// `twists[i][l] = D^(l) V_{i+1}` for `l < k`; returns `q^(1..=k)`. Each
/// joint is solved by its own screw pseudoinverse `S⁺ = Sᵀ/‖S‖²`, which
/// gives the exact value on consistent data and the least-squares value
/// otherwise.
pub fn generalized_ik(chain: &Chain, q: &DVector<f64>, twists: &[Vec<ScrewVec>], exec: Execution) -> Result<Vec<DVector<f64>>> {
    let n = chain.n();
    if twists.len() != n {
        return Err(Error::Dimension { what: "link twist sets", expected: n, got: twists.len() });
    }
    let k = twists[0].len();
    if twists.iter().any(|t| t.len() != k) {
        return Err(Error::InvalidInput("all links need the same number of twist derivatives".into()));
    }
    if k > K_MAX {
        return Err(Error::OrderTooHigh { requested: k, max: K_MAX });
    }
    let s = joint_screws_spatial(chain, q)?;
    if let Some(j) = s.iter().position(|si| si.norm_squared() < 1e-24) {
        return Err(Error::ZeroScrew { joint: j + 1 });
    }
    let joints: Vec<usize> = (0..n).collect();
    let per_joint = map(exec, &joints, |&i| {
        let prev = |l: usize| if i == 0 { ScrewVec::zeros() } else { twists[i - 1][l] };
        // ds[l] = D^(l) S_i, driven by the given twists of link i.
        let mut ds = vec![s[i]];
        let mut qi: Vec<f64> = Vec::with_capacity(k);
        for r in 1..=k {
            if r >= 2 {
                let l = r - 1;
                let mut acc = ScrewVec::zeros();
                for m in 0..l {
                    acc += ad_matrix(&twists[i][m]) * ds[l - 1 - m] * binomial(l - 1, m);
                }
                ds.push(acc);
            }
            let mut rhs = twists[i][r - 1] - prev(r - 1);
            for l in 1..r {
                rhs -= ds[l] * (binomial(r - 1, l) * qi[r - l - 1]);
            }
            qi.push(screw_pinv_apply(&s[i], &rhs));
        }
        qi
    });
    Ok((0..k).map(|r| DVector::from_fn(n, |i, _| per_joint[i][r])).collect())
}

/// Second-order per-joint solution in the geometric form
/// `q̈_i = (S_iᵀ(V̇_i − V̇_{i−1}) − q̇_i (ξ_i × η_i)ᵀ v_i) / ‖S_i‖²`,
/// where `v_i` is the linear part of `V_i`.
pub fn generalized_ik_acceleration_geometric(chain: &Chain, q: &DVector<f64>, twists: &[Vec<ScrewVec>]) -> Result<DVector<f64>> {
    let n = chain.n();
    if twists.len() != n || twists.iter().any(|t| t.len() < 2) {
        return Err(Error::InvalidInput("need twist and its first derivative for every link".into()));
    }
    let s = joint_screws_spatial(chain, q)?;
    let mut out = DVector::zeros(n);
    for i in 0..n {
        let nrm = s[i].norm_squared();
        if nrm < 1e-24 {
            return Err(Error::ZeroScrew { joint: i + 1 });
        }
        let (v0, a0) = if i == 0 { (ScrewVec::zeros(), ScrewVec::zeros()) } else { (twists[i - 1][0], twists[i - 1][1]) };
        let qdi = s[i].dot(&(twists[i][0] - v0)) / nrm;
        let axis_moment = xi(&s[i]).cross(&eta(&s[i]));
        out[i] = (s[i].dot(&(twists[i][1] - a0)) - qdi * axis_moment.dot(&eta(&twists[i][0]))) / nrm;
    }
    Ok(out)
}
