//! Body-fixed and hybrid representations of joint screws and twists, and
//! conversion of twist derivative stacks between representations.
//!
//! With `C_i = (R_i, r_i)` the pose of link `i`:
//!
//! | from \ to | spatial | body-fixed | hybrid |
//! |---|---|---|---|
//! | spatial | | `Ad_{C_i}⁻¹ V^s` | `Ad_{−r_i} V^s` |
//! | body-fixed | `Ad_{C_i} V^b` | | `Ad_{R_i} V^b` |
//! | hybrid | `Ad_{r_i} V^h` | `Ad_{R_iᵀ} V^h` | |
//!
//! The derivative conversions in [`convert_derivatives`] are exact at every
//! order. They propagate Taylor coefficients of `Ad_C^{±1}` through
//! `d/dt Ad_C⁻¹ = −Ad_C⁻¹ ad_{V^s}` and `d/dt Ad_C = Ad_C ad_{V^b}`. The
//! printed closed forms live in [`printed`] and are kept for comparison only.

use crate::chain::{jacobian_spatial, joint_screws_spatial, link_pose, Chain, DerivativeStack};
use crate::derivatives::twist_derivatives_recursive;
use crate::error::{Error, Result};
use crate::multiindex::{binomial, factorial, MultiIndex, K_MAX};
use crate::screw::{ad_matrix, ad_translation, adjoint_rotation, adjoint_translation, bracket, eta, xi, Pose, ScrewVec};
use nalgebra::{DMatrix, DVector, Matrix6, Vector3};

/// Representation of a twist; body-fixed and hybrid forms refer to a link
/// (one-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepTag {
    Spatial,
    BodyFixed(usize),
    Hybrid(usize),
}

impl RepTag {
    pub fn link(&self) -> Option<usize> {
        match self {
            RepTag::Spatial => None,
            RepTag::BodyFixed(i) | RepTag::Hybrid(i) => Some(*i),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self.link() {
            Some(i) if i == 0 || i > n => Err(Error::IndexOutOfRange { index: i, max: n }),
            _ => Ok(()),
        }
    }
}

/// Constant body-fixed screw `X_i = Ad_{A_i⁻¹} Y_i` of joint `i`.
pub fn body_screw_constant(chain: &Chain, i: usize) -> Result<ScrewVec> {
    chain.check_link(i)?;
    Ok(chain.body_frames()[i - 1].inverse().transform(&chain.screws()[i - 1]))
}

/// `B_{i,j} = Ad_{C_{i,j}} X_j`, `C_{i,j} = C_i⁻¹ C_j`, for `j = 1..=i`.
pub fn joint_screws_body(chain: &Chain, q: &DVector<f64>, i: usize) -> Result<Vec<ScrewVec>> {
    chain.check_link(i)?;
    let ci_inv = link_pose(chain, q, i)?.inverse();
    (1..=i)
        .map(|j| Ok((ci_inv * link_pose(chain, q, j)?).transform(&body_screw_constant(chain, j)?)))
        .collect()
}

/// Same screws by `B_{i,j} = Ad_{C_{i,i−1}} B_{i−1,j}`, `B_{i,i} = X_i`.
pub fn joint_screws_body_recursive(chain: &Chain, q: &DVector<f64>, i: usize) -> Result<Vec<ScrewVec>> {
    chain.check_link(i)?;
    let mut b: Vec<ScrewVec> = vec![body_screw_constant(chain, 1)?];
    let mut prev = link_pose(chain, q, 1)?;
    for l in 2..=i {
        let cur = link_pose(chain, q, l)?;
        let rel = cur.inverse() * prev;
        for x in b.iter_mut() {
            *x = rel.transform(x);
        }
        b.push(body_screw_constant(chain, l)?);
        prev = cur;
    }
    Ok(b)
}

/// Body-fixed Jacobian of link `i` (`6 × n`, zeros beyond `i`).
pub fn jacobian_body(chain: &Chain, q: &DVector<f64>, i: usize) -> Result<DMatrix<f64>> {
    let b = joint_screws_body(chain, q, i)?;
    let mut j = DMatrix::zeros(6, chain.n());
    for (c, x) in b.iter().enumerate() {
        j.column_mut(c).copy_from(x);
    }
    Ok(j)
}

/// `V_i^b = Σ_{j≤i} B_{i,j} q̇_j`.
pub fn twist_body(chain: &Chain, state: &DerivativeStack, i: usize) -> Result<ScrewVec> {
    state.require(1)?;
    let b = joint_screws_body(chain, &state.q, i)?;
    Ok(b.iter().zip(state.derivs[0].iter()).map(|(x, &d)| x * d).sum())
}

/// `V_i^b = Ad_{C_{i,i−1}} V_{i−1}^b + X_i q̇_i`.
pub fn twist_body_recursive(chain: &Chain, state: &DerivativeStack, i: usize) -> Result<ScrewVec> {
    chain.check_link(i)?;
    state.require(1)?;
    let qd = &state.derivs[0];
    let mut v = body_screw_constant(chain, 1)? * qd[0];
    let mut prev = link_pose(chain, &state.q, 1)?;
    for l in 2..=i {
        let cur = link_pose(chain, &state.q, l)?;
        v = (cur.inverse() * prev).transform(&v) + body_screw_constant(chain, l)? * qd[l - 1];
        prev = cur;
    }
    Ok(v)
}

/// `∂^a B_{i,j} = (−1)^ν ad_{B_{i,i}}^{a_i} ··· ad_{B_{i,j+1}}^{a_{j+1}} B_{i,j}`;
/// zero if `a` differentiates a variable outside `j+1..=i`.
pub fn partial_screw_body(chain: &Chain, q: &DVector<f64>, i: usize, j: usize, a: &MultiIndex) -> Result<ScrewVec> {
    chain.check_link(i)?;
    chain.check_link(j)?;
    if a.0.len() != chain.n() {
        return Err(Error::Dimension { what: "multi-index", expected: chain.n(), got: a.0.len() });
    }
    if j > i {
        return Ok(ScrewVec::zeros());
    }
    if a.0.iter().enumerate().any(|(k, &ak)| ak != 0 && (k < j || k + 1 > i)) {
        return Ok(ScrewVec::zeros());
    }
    let b = joint_screws_body(chain, q, i)?;
    let mut x = b[j - 1];
    for k in j + 1..=i {
        for _ in 0..a.0[k - 1] {
            x = -bracket(&b[k - 1], &x);
        }
    }
    Ok(x)
}

/// `D^(0..=k) V_i^b` from the body-fixed recursion
/// `D^(k)B_{i,j} = Σ_{l<k} C(k−1,l)[D^(l)B_{i,j}, D^(k−l−1)𝖡_{i,j}]`,
/// `D^(k)𝖡_{i,j} = Σ_{j≤r≤i} Σ_{l≤k} C(k,l) D^(l)B_{i,r} q_r^(k−l+1)`.
/// Needs a stack of order `k + 1`.
pub fn twist_derivatives_body(chain: &Chain, state: &DerivativeStack, i: usize, k: usize) -> Result<Vec<ScrewVec>> {
    if k > K_MAX {
        return Err(Error::OrderTooHigh { requested: k, max: K_MAX });
    }
    state.require(k + 1)?;
    let b0 = joint_screws_body(chain, &state.q, i)?;
    // db[j][l] = D^(l) B_{i,j+1}; dsum[j][l] = D^(l) 𝖡_{i,j+1}
    let mut db: Vec<Vec<ScrewVec>> = b0.iter().map(|x| vec![*x]).collect();
    let mut dsum: Vec<Vec<ScrewVec>> = vec![Vec::new(); i];
    for level in 0..=k {
        if level > 0 {
            for j in 0..i {
                let mut acc = ScrewVec::zeros();
                for l in 0..level {
                    acc += bracket(&db[j][l], &dsum[j][level - l - 1]) * binomial(level - 1, l);
                }
                db[j].push(acc);
            }
        }
        let mut suffix = ScrewVec::zeros();
        for j in (0..i).rev() {
            for l in 0..=level {
                suffix += db[j][l] * (binomial(level, l) * state.derivs[level - l][j]);
            }
            dsum[j].push(suffix);
        }
    }
    Ok(dsum[0].clone())
}

/// `V̇^b = Σ B_{i,j} q̈_j + Σ_{j<k} [B_{i,j}, B_{i,k}] q̇_j q̇_k`.
pub fn body_acceleration_closed_form(chain: &Chain, state: &DerivativeStack, i: usize) -> Result<ScrewVec> {
    state.require(2)?;
    let b = joint_screws_body(chain, &state.q, i)?;
    let (qd, qdd) = (&state.derivs[0], &state.derivs[1]);
    let mut v = ScrewVec::zeros();
    for j in 0..i {
        v += b[j] * qdd[j];
        for k in j + 1..i {
            v += bracket(&b[j], &b[k]) * (qd[j] * qd[k]);
        }
    }
    Ok(v)
}

/// `V̈^b = Σ B q⃛ + Σ_{j<k} [B_j,B_k](2q̈_j q̇_k + q̇_j q̈_k)
/// + Σ_{j<k} [[B_j,B_k],B_k] q̇_j q̇_k² + 2 Σ_{j<k<r} [[B_j,B_k],B_r] q̇_j q̇_k q̇_r`.
pub fn body_jerk_closed_form(chain: &Chain, state: &DerivativeStack, i: usize) -> Result<ScrewVec> {
    state.require(3)?;
    let b = joint_screws_body(chain, &state.q, i)?;
    let (qd, qdd, q3) = (&state.derivs[0], &state.derivs[1], &state.derivs[2]);
    let mut v = ScrewVec::zeros();
    for j in 0..i {
        v += b[j] * q3[j];
        for k in j + 1..i {
            let bjk = bracket(&b[j], &b[k]);
            v += bjk * (2.0 * qdd[j] * qd[k] + qd[j] * qdd[k]);
            v += bracket(&bjk, &b[k]) * (qd[j] * qd[k] * qd[k]);
            for r in k + 1..i {
                v += bracket(&bjk, &b[r]) * (2.0 * qd[j] * qd[k] * qd[r]);
            }
        }
    }
    Ok(v)
}

/// `H_{i,j} = Ad_{R_i} B_{i,j}`, `j = 1..=i`.
pub fn joint_screws_hybrid(chain: &Chain, q: &DVector<f64>, i: usize) -> Result<Vec<ScrewVec>> {
    let rot = adjoint_rotation(&link_pose(chain, q, i)?.rotation);
    Ok(joint_screws_body(chain, q, i)?.iter().map(|b| rot * b).collect())
}

/// `H_{i,j} = Ad_{r_j − r_i} H_{j,j}`.
pub fn joint_screws_hybrid_from_diagonal(chain: &Chain, q: &DVector<f64>, i: usize) -> Result<Vec<ScrewVec>> {
    chain.check_link(i)?;
    let ri = link_pose(chain, q, i)?.translation;
    (1..=i)
        .map(|j| {
            let cj = link_pose(chain, q, j)?;
            let hjj = adjoint_rotation(&cj.rotation) * body_screw_constant(chain, j)?;
            Ok(adjoint_translation(&(cj.translation - ri)) * hjj)
        })
        .collect()
}

/// `V_i^h = Σ_{j≤i} H_{i,j} q̇_j`.
pub fn twist_hybrid(chain: &Chain, state: &DerivativeStack, i: usize) -> Result<ScrewVec> {
    state.require(1)?;
    let h = joint_screws_hybrid(chain, &state.q, i)?;
    Ok(h.iter().zip(state.derivs[0].iter()).map(|(x, &d)| x * d).sum())
}

/// `D^(0..=k) V_i^h` for `k ≤ 2` from the hybrid screw derivatives
/// `Ḣ_{i,j} = (ad_{ṙ_{i,j}} + Ad_{r_{i,j}} ad_{ω_j}) H_{j,j}` and
/// `Ḧ_{i,j} = (ad_{r̈_{i,j}} + 2 ad_{ṙ_{i,j}} ad_{ω_j} + Ad_{r_{i,j}}(ad_{ω̇_j} + ad_{ω_j}²)) H_{j,j}`,
/// with `r_{i,j} = r_j − r_i` and `ω_j` the angular velocity of link `j`.
pub fn hybrid_derivatives(chain: &Chain, state: &DerivativeStack, i: usize, k: usize) -> Result<Vec<ScrewVec>> {
    if k > 2 {
        return Err(Error::OrderTooHigh { requested: k, max: 2 });
    }
    chain.check_link(i)?;
    state.require(k + 1)?;
    let fk = twist_derivatives_recursive(chain, state, k)?;
    // Position derivatives r_j^(0..=k) and angular rates ω_j^(0..k).
    let mut r: Vec<Vec<Vector3<f64>>> = Vec::with_capacity(i);
    let mut w: Vec<Vec<Vector3<f64>>> = Vec::with_capacity(i);
    let mut hjj = Vec::with_capacity(i);
    for j in 1..=i {
        let cj = link_pose(chain, &state.q, j)?;
        let vs: Vec<ScrewVec> = (0..=k).map(|l| fk.twist(j, l)).collect();
        let vh = convert_derivatives(&vs, Some(&cj), RepTag::Spatial, RepTag::Hybrid(j))?;
        let mut rj = vec![cj.translation];
        rj.extend(vh.iter().map(eta));
        r.push(rj);
        w.push(vs.iter().map(xi).collect());
        hjj.push(adjoint_rotation(&cj.rotation) * body_screw_constant(chain, j)?);
    }
    let ri = &r[i - 1];
    let mut out = Vec::with_capacity(k + 1);
    let qd = &state.derivs;
    let mut v = ScrewVec::zeros();
    let mut vd = ScrewVec::zeros();
    let mut vdd = ScrewVec::zeros();
    for j in 0..i {
        let rij = |m: usize| r[j][m] - ri[m];
        let h = adjoint_translation(&rij(0)) * hjj[j];
        v += h * qd[0][j];
        if k >= 1 {
            let aw = ad_rotation_of(&w[j][0]);
            let hd = (ad_translation(&rij(1)) + adjoint_translation(&rij(0)) * aw) * hjj[j];
            vd += h * qd[1][j] + hd * qd[0][j];
            if k >= 2 {
                let awd = ad_rotation_of(&w[j][1]);
                let hdd = (ad_translation(&rij(2))
                    + ad_translation(&rij(1)) * aw * 2.0
                    + adjoint_translation(&rij(0)) * (awd + aw * aw))
                    * hjj[j];
                vdd += h * qd[2][j] + hd * (2.0 * qd[1][j]) + hdd * qd[0][j];
            }
        }
    }
    out.push(v);
    if k >= 1 {
        out.push(vd);
    }
    if k >= 2 {
        out.push(vdd);
    }
    Ok(out)
}

fn ad_rotation_of(w: &Vector3<f64>) -> Matrix6<f64> {
    crate::screw::ad_rotation(w)
}

fn need_pose(pose: Option<&Pose>) -> Result<&Pose> {
    pose.ok_or_else(|| Error::InvalidInput("pose of the link is required for this conversion".into()))
}

fn spatial_to_body(vs: &[ScrewVec], c: &Pose) -> Vec<ScrewVec> {
    let k = vs.len();
    let v: Vec<ScrewVec> = vs.iter().enumerate().map(|(l, x)| x / factorial(l)).collect();
    let mut p = vec![c.adjoint_inv()];
    for m in 0..k.saturating_sub(1) {
        let mut acc = Matrix6::zeros();
        for j in 0..=m {
            acc += p[j] * ad_matrix(&v[m - j]);
        }
        p.push(-acc / (m as f64 + 1.0));
    }
    (0..k).map(|o| (0..=o).map(|j| p[j] * v[o - j]).sum::<ScrewVec>() * factorial(o)).collect()
}

fn body_to_spatial(vb: &[ScrewVec], c: &Pose) -> Vec<ScrewVec> {
    let k = vb.len();
    let w: Vec<ScrewVec> = vb.iter().enumerate().map(|(l, x)| x / factorial(l)).collect();
    let mut p = vec![c.adjoint()];
    for m in 0..k.saturating_sub(1) {
        let mut acc = Matrix6::zeros();
        for j in 0..=m {
            acc += p[j] * ad_matrix(&w[m - j]);
        }
        p.push(acc / (m as f64 + 1.0));
    }
    (0..k).map(|o| (0..=o).map(|j| p[j] * w[o - j]).sum::<ScrewVec>() * factorial(o)).collect()
}

fn spatial_to_hybrid(vs: &[ScrewVec], r0: &Vector3<f64>) -> Vec<ScrewVec> {
    let mut r = vec![*r0];
    let mut out: Vec<ScrewVec> = Vec::with_capacity(vs.len());
    for k in 0..vs.len() {
        let mut acc = adjoint_translation(&-r0) * vs[k];
        for i in 1..=k {
            acc -= ad_translation(&r[i]) * vs[k - i] * binomial(k, i);
        }
        r.push(eta(&acc));
        out.push(acc);
    }
    out
}

fn hybrid_to_spatial(vh: &[ScrewVec], r0: &Vector3<f64>) -> Vec<ScrewVec> {
    let mut r = vec![*r0];
    r.extend(vh.iter().map(eta));
    (0..vh.len())
        .map(|k| {
            let mut acc = adjoint_translation(r0) * vh[k];
            for i in 1..=k {
                acc += ad_translation(&r[i]) * vh[k - i] * binomial(k, i);
            }
            acc
        })
        .collect()
}

/// Convert `[V, V̇, …, D^(k)V]` between representations.
///
/// `pose` is `C_i` of the link named in the body-fixed or hybrid tag. Hybrid
/// position derivatives are read from the hybrid stack itself when
/// converting from hybrid and generated from the spatial data otherwise.
pub fn convert_derivatives(stack: &[ScrewVec], pose: Option<&Pose>, from: RepTag, to: RepTag) -> Result<Vec<ScrewVec>> {
    if let (Some(a), Some(b)) = (from.link(), to.link()) {
        if a != b {
            return Err(Error::InvalidInput(format!("cannot convert between links {a} and {b}")));
        }
    }
    if stack.len() > K_MAX + 1 {
        return Err(Error::OrderTooHigh { requested: stack.len() - 1, max: K_MAX });
    }
    let spatial = match from {
        RepTag::Spatial => stack.to_vec(),
        RepTag::BodyFixed(_) => body_to_spatial(stack, need_pose(pose)?),
        RepTag::Hybrid(_) => hybrid_to_spatial(stack, &need_pose(pose)?.translation),
    };
    Ok(match to {
        RepTag::Spatial => spatial,
        RepTag::BodyFixed(_) => spatial_to_body(&spatial, need_pose(pose)?),
        RepTag::Hybrid(_) => spatial_to_hybrid(&spatial, &need_pose(pose)?.translation),
    })
}

/// `D^(0..=k) V_i` of link `i` in the requested representation, computed
/// from the spatial recursion and converted.
pub fn twist_derivatives_in(chain: &Chain, state: &DerivativeStack, rep: RepTag, i: usize, k: usize) -> Result<Vec<ScrewVec>> {
    rep.validate(chain.n())?;
    let fk = twist_derivatives_recursive(chain, state, k)?;
    let vs: Vec<ScrewVec> = (0..=k).map(|l| fk.twist(i, l)).collect();
    let pose = link_pose(chain, &state.q, i)?;
    let to = match rep {
        RepTag::Spatial => RepTag::Spatial,
        RepTag::BodyFixed(_) => RepTag::BodyFixed(i),
        RepTag::Hybrid(_) => RepTag::Hybrid(i),
    };
    convert_derivatives(&vs, Some(&pose), RepTag::Spatial, to)
}

/// Jacobian of link `i` in the requested representation.
pub fn jacobian_in(chain: &Chain, q: &DVector<f64>, rep: RepTag, i: usize) -> Result<DMatrix<f64>> {
    match rep {
        RepTag::Spatial => jacobian_spatial(chain, q, i),
        RepTag::BodyFixed(_) => jacobian_body(chain, q, i),
        RepTag::Hybrid(_) => {
            let h = joint_screws_hybrid(chain, q, i)?;
            let mut j = DMatrix::zeros(6, chain.n());
            for (c, x) in h.iter().enumerate() {
                j.column_mut(c).copy_from(x);
            }
            Ok(j)
        }
    }
}

/// Instantaneous spatial screws re-expressed in the body frame of link `i`:
/// `Ad_{C_i}⁻¹ S_j`.
pub fn spatial_screws_in_body(chain: &Chain, q: &DVector<f64>, i: usize) -> Result<Vec<ScrewVec>> {
    let c = link_pose(chain, q, i)?;
    Ok(joint_screws_spatial(chain, q)?.iter().take(i).map(|s| c.adjoint_inv() * s).collect())
}

/// Printed closed forms of the derivative conversions, as published.
///
/// The binomial body/spatial forms and the fourth-order explicit body to
/// spatial form are not exact; see the discrepancy notes in the repository.
/// Everything else here agrees with [`convert_derivatives`].
pub mod printed {
    use super::*;

    fn ad_pow(x: &ScrewVec, p: usize) -> Matrix6<f64> {
        let a = ad_matrix(x);
        (0..p).fold(Matrix6::identity(), |m, _| m * a)
    }

    /// `D^(k)V^b = Ad_C⁻¹ Σ_{i<k} C(k−1,i)(−1)^i ad_{V^s}^i D^(k−i)V^s`, `k ≥ 1`.
    pub fn binomial_spatial_to_body(vs: &[ScrewVec], c: &Pose, k: usize) -> ScrewVec {
        if k == 0 {
            return c.adjoint_inv() * vs[0];
        }
        let s: ScrewVec = (0..k)
            .map(|i| ad_pow(&vs[0], i) * vs[k - i] * (binomial(k - 1, i) * if i % 2 == 0 { 1.0 } else { -1.0 }))
            .sum();
        c.adjoint_inv() * s
    }

    /// `D^(k)V^s = Ad_C Σ_{i<k} C(k−1,i) ad_{V^b}^i D^(k−i)V^b`, `k ≥ 1`.
    pub fn binomial_body_to_spatial(vb: &[ScrewVec], c: &Pose, k: usize) -> ScrewVec {
        if k == 0 {
            return c.adjoint() * vb[0];
        }
        let s: ScrewVec = (0..k).map(|i| ad_pow(&vb[0], i) * vb[k - i] * binomial(k - 1, i)).sum();
        c.adjoint() * s
    }

    /// `D^(k)V^h = Ad_{−r} D^(k)V^s − Σ_{1≤i≤k} C(k,i) ad_{r^(i)} D^(k−i)V^s`.
    /// `r[m] = r^(m)`.
    pub fn binomial_spatial_to_hybrid(vs: &[ScrewVec], r: &[Vector3<f64>], k: usize) -> ScrewVec {
        let mut acc = adjoint_translation(&-r[0]) * vs[k];
        for i in 1..=k {
            acc -= ad_translation(&r[i]) * vs[k - i] * binomial(k, i);
        }
        acc
    }

    /// `D^(k)V^s = Ad_r (D^(k)V^h + Σ_{1≤i≤k} C(k,i) ad_{r^(i)} D^(k−i)V^h)`.
    pub fn binomial_hybrid_to_spatial(vh: &[ScrewVec], r: &[Vector3<f64>], k: usize) -> ScrewVec {
        let mut acc = vh[k];
        for i in 1..=k {
            acc += ad_translation(&r[i]) * vh[k - i] * binomial(k, i);
        }
        adjoint_translation(&r[0]) * acc
    }

    /// Explicit spatial to body-fixed forms for `k ≤ 4`.
    pub fn explicit_spatial_to_body(vs: &[ScrewVec], c: &Pose, k: usize) -> ScrewVec {
        let a = ad_matrix(&vs[0]);
        let ad1 = ad_matrix(&vs.get(1).copied().unwrap_or_default());
        let inner = match k {
            0 => vs[0],
            1 => vs[1],
            2 => vs[2] - a * vs[1],
            3 => vs[3] - a * vs[2] * 2.0 + a * a * vs[1],
            4 => vs[4] - a * vs[3] * 3.0 + (a * a * 3.0 - ad1 * 2.0) * vs[2] + (ad1 * a - a * a * a) * vs[1],
            _ => panic!("explicit forms exist for k ≤ 4"),
        };
        c.adjoint_inv() * inner
    }

    /// Explicit body-fixed to spatial forms for `k ≤ 4`.
    pub fn explicit_body_to_spatial(vb: &[ScrewVec], c: &Pose, k: usize) -> ScrewVec {
        let a = ad_matrix(&vb[0]);
        let ad1 = ad_matrix(&vb.get(1).copied().unwrap_or_default());
        let inner = match k {
            0 => vb[0],
            1 => vb[1],
            2 => vb[2] + a * vb[1],
            3 => vb[3] + a * vb[2] * 2.0 + a * a * vb[1],
            4 => vb[4] + a * vb[3] * 3.0 + a * a * vb[2] * 3.0 + a * a * a * vb[1] - ad1 * ad1 * vb[0],
            _ => panic!("explicit forms exist for k ≤ 4"),
        };
        c.adjoint() * inner
    }

    const PASCAL: [[f64; 5]; 5] = [
        [1.0, 0.0, 0.0, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0, 0.0],
        [1.0, 2.0, 1.0, 0.0, 0.0],
        [1.0, 3.0, 3.0, 1.0, 0.0],
        [1.0, 4.0, 6.0, 4.0, 1.0],
    ];

    /// Explicit spatial to hybrid forms for `k ≤ 4`.
    pub fn explicit_spatial_to_hybrid(vs: &[ScrewVec], r: &[Vector3<f64>], k: usize) -> ScrewVec {
        assert!(k <= 4, "explicit forms exist for k ≤ 4");
        let mut acc = adjoint_translation(&-r[0]) * vs[k];
        for i in 1..=k {
            acc -= ad_translation(&r[i]) * vs[k - i] * PASCAL[k][i];
        }
        acc
    }

    /// Explicit hybrid to spatial forms for `k ≤ 4`.
    pub fn explicit_hybrid_to_spatial(vh: &[ScrewVec], r: &[Vector3<f64>], k: usize) -> ScrewVec {
        assert!(k <= 4, "explicit forms exist for k ≤ 4");
        let mut acc = adjoint_translation(&r[0]) * vh[k];
        for i in 1..=k {
            acc += ad_translation(&r[i]) * vh[k - i] * PASCAL[k][i];
        }
        acc
    }
}
