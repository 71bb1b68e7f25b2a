//! Higher-order solution of loop constraints in independent coordinates.
//!
//! With a split into dependent coordinates `d` and independent `u`, the
//! velocity constraint `J_d ḋ + J_u u̇ = 0` gives `q̇ = F u̇`,
//! `F = [D; I]`, `D = −J_d⁻¹ J_u`. Higher derivatives follow from
//!
//! * `q^(k) = Σ_{l<k} C(k−1,l) D^(l)F u^(k−l)`, with `D^(l)F = [D^(l)D; 0]`,
//! * `D^(k)D = −Σ_{l≤k} C(k,l) D^(l)J_d⁻¹ D^(k−l)J_u`,
//! * `D^(k)J_d⁻¹ = −J_d⁻¹ Σ_{1≤l≤k} C(k,l) D^(l)J_d D^(k−l)J_d⁻¹`,
//!
//! where the Jacobian derivatives come from the screw recursion driven by
//! the `q` derivatives already found.

use crate::chain::{jacobian_spatial, joint_screws_spatial, Chain, DerivativeStack};
use crate::derivatives::ScrewJet;
use crate::error::{Error, Result};
use crate::ik::SquareSolver;
use crate::linalg::{pinv, range, rank_with_gap, RANK_RTOL};
use crate::mobility::closure_algebra;
use crate::multiindex::{binomial, factorial, K_MAX};
use crate::screw::ScrewVec;
use crate::taylor::require_closure;
use nalgebra::{DMatrix, DVector};

/// Partition of the joint variables into dependent and independent ones,
/// both one-based and increasing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoordinateSplit {
    pub dependent: Vec<usize>,
    pub independent: Vec<usize>,
}

impl CoordinateSplit {
    pub fn new(mut dependent: Vec<usize>, mut independent: Vec<usize>, n: usize) -> Result<Self> {
        dependent.sort_unstable();
        independent.sort_unstable();
        let mut seen = vec![false; n];
        for &i in dependent.iter().chain(&independent) {
            if i == 0 || i > n {
                return Err(Error::IndexOutOfRange { index: i, max: n });
            }
            if seen[i - 1] {
                return Err(Error::InvalidInput(format!("coordinate {i} listed twice")));
            }
            seen[i - 1] = true;
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::InvalidInput("split does not cover every coordinate".into()));
        }
        Ok(Self { dependent, independent })
    }

    /// Split from the independent set alone.
    pub fn from_independent(independent: Vec<usize>, n: usize) -> Result<Self> {
        let dep = (1..=n).filter(|i| !independent.contains(i)).collect();
        Self::new(dep, independent, n)
    }

    pub fn n(&self) -> usize {
        self.dependent.len() + self.independent.len()
    }

    pub fn m(&self) -> usize {
        self.dependent.len()
    }

    pub fn delta(&self) -> usize {
        self.independent.len()
    }
}

/// Split chosen by [`select_split`] with its rank diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSelection {
    pub split: CoordinateSplit,
    /// Ratio of the last kept to the first dropped singular value of `J`.
    pub sigma_gap: f64,
    /// Set when `sigma_gap < 10³`: the rank may not be locally constant.
    pub rank_warning: bool,
}

/// Options for [`loop_derivatives`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopOptions {
    pub tol_loop: f64,
    pub cond_max: f64,
    /// Solve each order by least squares with the pseudoinverse of `J_d`.
    /// Needed when `J_d` is rank deficient with locally constant rank.
    pub pseudo_inverse: bool,
}

impl Default for LoopOptions {
    fn default() -> Self {
        Self { tol_loop: 1e-8, cond_max: 1e8, pseudo_inverse: false }
    }
}

/// Row projector onto the independent constraints: closure-algebra
/// coordinates followed by the range of the reduced Jacobian.
fn constraint_projector(chain: &Chain, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    let alg = closure_algebra(chain.screws())?;
    let p = alg.projector();
    let jbar = &p * jacobian_spatial(chain, q, chain.n())?;
    let u = range(&jbar, RANK_RTOL);
    Ok(u.transpose() * p)
}

fn columns(s: &[ScrewVec], idx: &[usize], proj: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(proj.nrows(), idx.len());
    for (c, &j) in idx.iter().enumerate() {
        m.column_mut(c).copy_from(&(proj * DVector::from_iterator(6, s[j - 1].iter().copied())));
    }
    m
}

/// Greedy column selection: repeatedly take the column of the projected
/// Jacobian with the largest component orthogonal to those already taken.
pub fn select_split(chain: &Chain, q: &DVector<f64>, tol_loop: f64) -> Result<SplitSelection> {
    require_closure(chain, q, tol_loop)?;
    let n = chain.n();
    let j = jacobian_spatial(chain, q, n)?;
    let (r, gap) = rank_with_gap(&j, RANK_RTOL);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    let mut chosen = Vec::new();
    for _ in 0..r {
        let mut best = (0, -1.0, DVector::zeros(6));
        for c in 0..n {
            if chosen.contains(&(c + 1)) {
                continue;
            }
            let mut v = j.column(c).into_owned();
            for b in &basis {
                v -= b * b.dot(&v);
            }
            let nv = v.norm();
            if nv > best.1 {
                best = (c, nv, v);
            }
        }
        chosen.push(best.0 + 1);
        basis.push(best.2 / best.1);
    }
    let split = CoordinateSplit::from_independent((1..=n).filter(|i| !chosen.contains(i)).collect(), n)?;
    Ok(SplitSelection { split, sigma_gap: gap, rank_warning: gap < 1e3 })
}

/// Full derivative stack `q̇..q^(k)` of a closed loop from the independent
/// coordinate derivatives `u_derivs = [u̇, ü, …, u^(k)]`.
pub fn loop_derivatives(
    chain: &Chain,
    q: &DVector<f64>,
    split: &CoordinateSplit,
    u_derivs: &[DVector<f64>],
    opts: &LoopOptions,
) -> Result<DerivativeStack> {
    let n = chain.n();
    chain.check_config(q)?;
    if split.n() != n {
        return Err(Error::Dimension { what: "split", expected: n, got: split.n() });
    }
    let k = u_derivs.len();
    if k > K_MAX {
        return Err(Error::OrderTooHigh { requested: k, max: K_MAX });
    }
    if let Some(u) = u_derivs.iter().find(|u| u.len() != split.delta()) {
        return Err(Error::Dimension { what: "independent derivatives", expected: split.delta(), got: u.len() });
    }
    require_closure(chain, q, opts.tol_loop)?;
    let proj = constraint_projector(chain, q)?;
    let s = joint_screws_spatial(chain, q)?;
    let jd = columns(&s, &split.dependent, &proj);
    let ju = columns(&s, &split.independent, &proj);
    if opts.pseudo_inverse {
        return loop_derivatives_pinv(&s, q, split, u_derivs, &proj, &jd, &ju);
    }
    if jd.nrows() != jd.ncols() {
        return Err(Error::InvalidInput(format!(
            "{} dependent coordinates for {} independent constraints",
            jd.ncols(),
            jd.nrows()
        )));
    }
    let jd_inv = jd_inverse(&jd, opts.cond_max)?;

    let assemble = |dmat: &DMatrix<f64>, ul: &DVector<f64>, with_identity: bool| {
        let mut out = DVector::zeros(n);
        let dv = dmat * ul;
        for (r, &i) in split.dependent.iter().enumerate() {
            out[i - 1] = dv[r];
        }
        if with_identity {
            for (r, &i) in split.independent.iter().enumerate() {
                out[i - 1] = ul[r];
            }
        }
        out
    };

    let mut jet = ScrewJet::new(&s);
    let mut d_jd = vec![jd];
    let mut d_ju = vec![ju.clone()];
    let mut d_jinv = vec![jd_inv.clone()];
    let mut d_d = vec![-&jd_inv * &ju];
    let mut qd: Vec<DVector<f64>> = Vec::with_capacity(k);
    for order in 1..=k {
        if order >= 2 {
            jet.push_screw_level();
            let l = order - 1;
            let level: Vec<ScrewVec> = jet.screws.iter().map(|v| v[l]).collect();
            d_jd.push(columns(&level, &split.dependent, &proj));
            d_ju.push(columns(&level, &split.independent, &proj));
            let mut acc = DMatrix::zeros(jd_inv.nrows(), jd_inv.ncols());
            for j in 1..=l {
                acc += &d_jd[j] * &d_jinv[l - j] * binomial(l, j);
            }
            d_jinv.push(-&jd_inv * acc);
            let mut dd = DMatrix::zeros(split.m(), split.delta());
            for j in 0..=l {
                dd += &d_jinv[j] * &d_ju[l - j] * binomial(l, j);
            }
            d_d.push(-dd);
        }
        let mut qk = DVector::zeros(n);
        for l in 0..order {
            qk += assemble(&d_d[l], &u_derivs[order - l - 1], l == 0) * binomial(order - 1, l);
        }
        qd.push(qk);
        jet.push_sum_level(&qd);
    }
    DerivativeStack::new(q.clone(), qd)
}

fn jd_inverse(jd: &DMatrix<f64>, cond_max: f64) -> Result<DMatrix<f64>> {
    if jd.nrows() == 0 {
        return Ok(DMatrix::zeros(0, 0));
    }
    // Factor once (this also applies the condition gate), then invert.
    let solver = SquareSolver::new(jd, cond_max)?;
    let m = jd.nrows();
    let mut inv = DMatrix::zeros(m, m);
    for c in 0..m {
        let e = DVector::from_fn(m, |i, _| if i == c { 1.0 } else { 0.0 });
        inv.column_mut(c).copy_from(&solver.solve(&e));
    }
    Ok(inv)
}

fn loop_derivatives_pinv(
    s: &[ScrewVec],
    q: &DVector<f64>,
    split: &CoordinateSplit,
    u_derivs: &[DVector<f64>],
    proj: &DMatrix<f64>,
    jd: &DMatrix<f64>,
    ju: &DMatrix<f64>,
) -> Result<DerivativeStack> {
    let n = s.len();
    let jd_pinv = pinv(jd, RANK_RTOL);
    let mut jet = ScrewJet::new(s);
    let mut qd: Vec<DVector<f64>> = Vec::with_capacity(u_derivs.len());
    for (idx, u) in u_derivs.iter().enumerate() {
        let order = idx + 1;
        if order >= 2 {
            jet.push_screw_level();
        }
        let g = jet.lower_order_terms(order, &qd, n);
        let rhs = proj * DVector::from_iterator(6, g.iter().copied()) + ju * u;
        let d = -&jd_pinv * rhs;
        let mut qk = DVector::zeros(n);
        for (r, &i) in split.dependent.iter().enumerate() {
            qk[i - 1] = d[r];
        }
        for (r, &i) in split.independent.iter().enumerate() {
            qk[i - 1] = u[r];
        }
        qd.push(qk);
        jet.push_sum_level(&qd);
    }
    DerivativeStack::new(q.clone(), qd)
}

/// Orthogonal complement `F` (`n × δ`, rows in joint order) at `q`.
pub fn orthogonal_complement(chain: &Chain, q: &DVector<f64>, split: &CoordinateSplit, opts: &LoopOptions) -> Result<DMatrix<f64>> {
    let n = chain.n();
    let delta = split.delta();
    let mut f = DMatrix::zeros(n, delta);
    for c in 0..delta {
        let e = DVector::from_fn(delta, |i, _| if i == c { 1.0 } else { 0.0 });
        let st = loop_derivatives(chain, q, split, &[e], opts)?;
        f.column_mut(c).copy_from(&st.derivs[0]);
    }
    Ok(f)
}

/// Taylor approximation `q + Σ_{l≤K} Δtˡ q^(l)/l!` of the loop motion.
pub fn loop_taylor_motion(
    chain: &Chain,
    q: &DVector<f64>,
    split: &CoordinateSplit,
    u_derivs: &[DVector<f64>],
    dt: f64,
    order: usize,
    opts: &LoopOptions,
) -> Result<DVector<f64>> {
    if u_derivs.len() < order {
        return Err(Error::InsufficientOrder { have: u_derivs.len(), need: order });
    }
    let st = loop_derivatives(chain, q, split, &u_derivs[..order], opts)?;
    let mut out = q.clone();
    for (l, d) in st.derivs.iter().enumerate() {
        out += d * (dt.powi(l as i32 + 1) / factorial(l + 1));
    }
    Ok(out)
}
