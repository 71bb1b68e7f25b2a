//! Partial derivatives of joint screws and time derivatives of spatial twists.
//!
//! The normative path is the bracket recursion in [`ScrewJet`]:
//!
//! * `D^(k) S_i = Σ_{l<k} C(k−1,l) [D^(l) 𝖲_i, D^(k−1−l) S_i]`
//! * `D^(k) 𝖲_i = D^(k) 𝖲_{i−1} + Σ_{l≤k} C(k,l) D^(l) S_i q_i^(k−l+1)`
//!
//! where `𝖲_i = Σ_{j≤i} S_j q̇_j` is the spatial twist of link `i`.
//! The closed forms below are kept as independent fast paths and cross-checks.

use crate::chain::{joint_screws_spatial, Chain, DerivativeStack};
use crate::error::{Error, Result};
use crate::multiindex::{binomial, MultiIndex, K_MAX};
use crate::parallel::{map, Execution};
use crate::screw::{ad_matrix, bracket, ScrewVec};
use nalgebra::DVector;

/// Incremental evaluator of the bracket recursion.
///
/// Levels are filled alternately: [`ScrewJet::push_screw_level`] appends
/// `D^(k) S_i` for every joint, then [`ScrewJet::push_sum_level`] appends
/// `D^(k) 𝖲_i`, which needs `q^(1..=k+1)`.
#[derive(Debug, Clone)]
pub struct ScrewJet {
    /// `screws[i][l] = D^(l) S_{i+1}`.
    pub screws: Vec<Vec<ScrewVec>>,
    /// `sums[i][l] = D^(l) 𝖲_{i+1}`.
    pub sums: Vec<Vec<ScrewVec>>,
}

impl ScrewJet {
    /// Start from the instantaneous joint screws (level 0 of `D^(l) S`).
    pub fn new(screws: &[ScrewVec]) -> Self {
        Self {
            screws: screws.iter().map(|s| vec![*s]).collect(),
            sums: vec![Vec::new(); screws.len()],
        }
    }

    pub fn n(&self) -> usize {
        self.screws.len()
    }

    /// Number of complete `D^(l) S` levels.
    pub fn screw_levels(&self) -> usize {
        self.screws.first().map_or(0, Vec::len)
    }

    /// Number of complete `D^(l) 𝖲` levels.
    pub fn sum_levels(&self) -> usize {
        self.sums.first().map_or(0, Vec::len)
    }

    /// Append `D^(k) S_i` for all joints, `k` = current screw level count.
    pub fn push_screw_level(&mut self) {
        let k = self.screw_levels();
        assert!(k >= 1 && self.sum_levels() >= k, "sum levels below {k} missing");
        for i in 0..self.n() {
            let mut acc = ScrewVec::zeros();
            for l in 0..k {
                acc += bracket(&self.sums[i][l], &self.screws[i][k - 1 - l]) * binomial(k - 1, l);
            }
            self.screws[i].push(acc);
        }
    }

    /// Append `D^(k) 𝖲_i` for all joints, `k` = current sum level count.
    ///
    /// `qd[m]` holds `q^(m+1)`; orders beyond `qd.len()` count as zero.
    pub fn push_sum_level(&mut self, qd: &[DVector<f64>]) {
        let k = self.sum_levels();
        assert!(self.screw_levels() > k, "screw level {k} missing");
        let mut prev = ScrewVec::zeros();
        for i in 0..self.n() {
            let mut acc = prev;
            for l in 0..=k {
                if let Some(qv) = qd.get(k - l) {
                    acc += self.screws[i][l] * (binomial(k, l) * qv[i]);
                }
            }
            self.sums[i].push(acc);
            prev = acc;
        }
    }

    /// `Σ_i Σ_{l=1}^{r−1} C(r−1,l) D^(l) S_i q_i^(r−l)`: the part of
    /// `D^(r−1) 𝖲_n` that does not involve `q^(r)`.
    pub fn lower_order_terms(&self, r: usize, qd: &[DVector<f64>], upto: usize) -> ScrewVec {
        let mut acc = ScrewVec::zeros();
        for i in 0..upto {
            for l in 1..r {
                if let Some(qv) = qd.get(r - l - 1) {
                    acc += self.screws[i][l] * (binomial(r - 1, l) * qv[i]);
                }
            }
        }
        acc
    }

    /// Run both recursions through order `order`.
    pub fn full(screws: &[ScrewVec], qd: &[DVector<f64>], order: usize) -> Self {
        let mut jet = Self::new(screws);
        for k in 0..=order {
            if k > 0 {
                jet.push_screw_level();
            }
            jet.push_sum_level(qd);
        }
        jet
    }
}

/// Twist and screw derivatives of every link and joint.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistDerivs {
    pub order: usize,
    /// `screws[j][l] = D^(l) S_{j+1}`, `l = 0..=order`.
    pub screws: Vec<Vec<ScrewVec>>,
    /// `twists[i][l] = D^(l) V_{i+1}`, `l = 0..=order`.
    pub twists: Vec<Vec<ScrewVec>>,
}

impl TwistDerivs {
    /// `D^(l) V_i` for one-based link `i`.
    pub fn twist(&self, i: usize, l: usize) -> ScrewVec {
        self.twists[i - 1][l]
    }

    /// `D^(l) S_j` for one-based joint `j`.
    pub fn screw(&self, j: usize, l: usize) -> ScrewVec {
        self.screws[j - 1][l]
    }
}

fn check_order(order: usize) -> Result<()> {
    if order > K_MAX {
        Err(Error::OrderTooHigh { requested: order, max: K_MAX })
    } else {
        Ok(())
    }
}

/// Repeated partial derivative `∂^a S_i`, with `i` one-based.
///
/// Evaluates `ad_{S_β1}···ad_{S_βν} S_i` for the ascending derivation
/// sequence `β` of `a`, so the smallest joint index is applied last. Any
/// derivation with respect to `q_j`, `j ≥ i`, gives zero.
pub fn partial_screw(chain: &Chain, q: &DVector<f64>, i: usize, a: &MultiIndex) -> Result<ScrewVec> {
    chain.check_link(i)?;
    if a.len() != chain.n() {
        return Err(Error::Dimension { what: "multi-index", expected: chain.n(), got: a.len() });
    }
    let s = joint_screws_spatial(chain, q)?;
    Ok(partial_from_screws(&s, i, a))
}

pub(crate) fn partial_from_screws(s: &[ScrewVec], i: usize, a: &MultiIndex) -> ScrewVec {
    if a.0[i - 1..].iter().any(|&v| v > 0) {
        return ScrewVec::zeros();
    }
    let mut x = s[i - 1];
    for j in (0..i - 1).rev() {
        for _ in 0..a.0[j] {
            x = bracket(&s[j], &x);
        }
    }
    x
}

/// Partial derivative along an unsorted derivation sequence of one-based
/// joint numbers. Mixed partials commute, so this only counts occurrences.
pub fn partial_screw_sequence(chain: &Chain, q: &DVector<f64>, i: usize, seq: &[usize]) -> Result<ScrewVec> {
    if seq.iter().any(|&j| j == 0 || j > chain.n()) {
        return Err(Error::InvalidInput("derivation index out of range".into()));
    }
    partial_screw(chain, q, i, &MultiIndex::from_sequence(chain.n(), seq))
}

/// Twist derivatives `D^(l) V_i`, `l ≤ order`, of all links by the general
/// recursion. Needs `q^(1..=order+1)` in the stack.
pub fn twist_derivatives_recursive(chain: &Chain, state: &DerivativeStack, order: usize) -> Result<TwistDerivs> {
    check_order(order)?;
    state.require(order + 1)?;
    let s = joint_screws_spatial(chain, &state.q)?;
    let jet = ScrewJet::full(&s, &state.derivs, order);
    Ok(TwistDerivs { order, screws: jet.screws, twists: jet.sums })
}

/// Batch evaluation of [`twist_derivatives_recursive`] over many states.
pub fn twist_derivatives_batch(
    chain: &Chain,
    states: &[DerivativeStack],
    order: usize,
    exec: Execution,
) -> Vec<Result<TwistDerivs>> {
    map(exec, states, |st| twist_derivatives_recursive(chain, st, order))
}

/// Twist derivatives through order 3 by the explicit link-to-link recursion
/// `V̇_i = V̇_{i−1} + (q̈_i I + q̇_i ad_{V_i}) S_i` and its second and third
/// order analogues.
pub fn twist_derivatives_closed(chain: &Chain, state: &DerivativeStack, order: usize) -> Result<TwistDerivs> {
    if order > 3 {
        return Err(Error::Unsupported(format!(
            "closed-form twist recursion stops at order 3, {order} requested"
        )));
    }
    state.require(order + 1)?;
    let s = joint_screws_spatial(chain, &state.q)?;
    let n = chain.n();
    let q = |l: usize, i: usize| state.derivs[l - 1][i];
    let mut prev = [ScrewVec::zeros(); 4];
    let mut twists = Vec::with_capacity(n);
    let mut screws = Vec::with_capacity(n);
    for i in 0..n {
        let si = s[i];
        let v = prev[0] + si * q(1, i);
        let adv = ad_matrix(&v);
        let mut out = vec![v];
        let mut sd = vec![si];
        if order >= 1 {
            let ds = adv * si;
            let vd = prev[1] + si * q(2, i) + ds * q(1, i);
            out.push(vd);
            sd.push(ds);
            if order >= 2 {
                let advd = ad_matrix(&vd);
                let dds = (advd + adv * adv) * si;
                let vdd = prev[2] + si * q(3, i) + ds * (2.0 * q(2, i)) + dds * q(1, i);
                out.push(vdd);
                sd.push(dds);
                if order >= 3 {
                    let advdd = ad_matrix(&vdd);
                    let ddds = (advdd + advd * adv * 2.0 + adv * advd + adv * adv * adv) * si;
                    let vddd = prev[3]
                        + si * q(4, i)
                        + ds * (3.0 * q(3, i))
                        + dds * (3.0 * q(2, i))
                        + ddds * q(1, i);
                    out.push(vddd);
                    sd.push(ddds);
                }
            }
        }
        for (p, o) in prev.iter_mut().zip(&out) {
            *p = *o;
        }
        twists.push(out);
        screws.push(sd);
    }
    Ok(TwistDerivs { order, screws, twists })
}

/// Acceleration of link `i` as the double sum
/// `Σ_{j≤i} S_j q̈_j + Σ_{k<j≤i} [S_k, S_j] q̇_j q̇_k`.
pub fn acceleration_closed_form(chain: &Chain, state: &DerivativeStack, i: usize) -> Result<ScrewVec> {
    chain.check_link(i)?;
    state.require(2)?;
    let s = joint_screws_spatial(chain, &state.q)?;
    let (qd, qdd) = (&state.derivs[0], &state.derivs[1]);
    let mut acc = ScrewVec::zeros();
    for j in 0..i {
        acc += s[j] * qdd[j];
        for k in 0..j {
            acc += bracket(&s[k], &s[j]) * (qd[j] * qd[k]);
        }
    }
    Ok(acc)
}

/// Jerk of link `i` from the nested-sum expansion
///
/// `Σ S_j q⃛_j + 2Σ_{k<j} [S_k,S_j] q̇_k q̈_j + Σ_{k<j} [S_k,S_j] q̈_k q̇_j
///  + Σ_{l<k<j} [[S_l,S_k],S_j] q̇_l q̇_k q̇_j + Σ_{l,k<j} [S_k,[S_l,S_j]] q̇_l q̇_k q̇_j`.
pub fn jerk_closed_form(chain: &Chain, state: &DerivativeStack, i: usize) -> Result<ScrewVec> {
    chain.check_link(i)?;
    state.require(3)?;
    let s = joint_screws_spatial(chain, &state.q)?;
    let (qd, qdd, qddd) = (&state.derivs[0], &state.derivs[1], &state.derivs[2]);
    let mut acc = ScrewVec::zeros();
    for j in 0..i {
        acc += s[j] * qddd[j];
        for k in 0..j {
            let skj = bracket(&s[k], &s[j]);
            acc += skj * (2.0 * qd[k] * qdd[j] + qdd[k] * qd[j]);
            for l in 0..k {
                acc += bracket(&bracket(&s[l], &s[k]), &s[j]) * (qd[l] * qd[k] * qd[j]);
            }
            for l in 0..j {
                acc += bracket(&s[k], &bracket(&s[l], &s[j])) * (qd[l] * qd[k] * qd[j]);
            }
        }
    }
    Ok(acc)
}

/// Jerk of link `i` from the Jacobi-reduced form
///
/// `Σ S_j q⃛_j + 2Σ_{l<k<j} [S_l,[S_k,S_j]] q̇_l q̇_k q̇_j
///  + Σ_{k<j} ([S_k,S_j](q̈_k q̇_j + 2q̇_k q̈_j) + [S_k,[S_k,S_j]] q̇_k² q̇_j)`.
pub fn jerk_closed_form_reduced(chain: &Chain, state: &DerivativeStack, i: usize) -> Result<ScrewVec> {
    chain.check_link(i)?;
    state.require(3)?;
    let s = joint_screws_spatial(chain, &state.q)?;
    let (qd, qdd, qddd) = (&state.derivs[0], &state.derivs[1], &state.derivs[2]);
    let mut acc = ScrewVec::zeros();
    for j in 0..i {
        acc += s[j] * qddd[j];
        for k in 0..j {
            let skj = bracket(&s[k], &s[j]);
            acc += skj * (qdd[k] * qd[j] + 2.0 * qd[k] * qdd[j]);
            acc += bracket(&s[k], &skj) * (qd[k] * qd[k] * qd[j]);
            for l in 0..k {
                acc += bracket(&s[l], &skj) * (2.0 * qd[l] * qd[k] * qd[j]);
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use approx::assert_relative_eq;

    fn state(n: usize, order: usize, seed: f64) -> DerivativeStack {
        let v = |k: usize| DVector::from_fn(n, |i, _| ((i + 1) as f64 * 0.37 + k as f64 * 1.3 + seed).sin());
        DerivativeStack::new(v(0), (1..=order).map(v).collect()).unwrap()
    }

    #[test]
    fn first_partial_is_bracket() {
        let c = models::four_c();
        let st = state(8, 0, 0.2);
        let s = joint_screws_spatial(&c, &st.q).unwrap();
        let d = partial_screw(&c, &st.q, 5, &MultiIndex::unit(8, 1)).unwrap();
        assert_eq!(d, bracket(&s[1], &s[4]));
        let z = partial_screw(&c, &st.q, 4, &MultiIndex::unit(8, 3)).unwrap();
        assert_eq!(z, ScrewVec::zeros());
    }

    #[test]
    fn nested_partial_order() {
        let c = models::two_r_two_c(1.0);
        let st = state(6, 0, 0.5);
        let s = joint_screws_spatial(&c, &st.q).unwrap();
        let a = MultiIndex(vec![1, 3, 2, 0, 0, 0]);
        let mut expect = s[3];
        for _ in 0..2 {
            expect = bracket(&s[2], &expect);
        }
        for _ in 0..3 {
            expect = bracket(&s[1], &expect);
        }
        expect = bracket(&s[0], &expect);
        assert_eq!(partial_screw(&c, &st.q, 4, &a).unwrap(), expect);
    }

    #[test]
    fn recursion_matches_closed_forms() {
        let c = models::four_c();
        let st = state(8, 4, 0.1);
        let r = twist_derivatives_recursive(&c, &st, 3).unwrap();
        let cl = twist_derivatives_closed(&c, &st, 3).unwrap();
        for i in 0..8 {
            for l in 0..=3 {
                assert_relative_eq!(r.twists[i][l], cl.twists[i][l], epsilon = 1e-12);
            }
        }
        for i in 1..=8 {
            assert_relative_eq!(acceleration_closed_form(&c, &st, i).unwrap(), r.twist(i, 1), epsilon = 1e-12);
            assert_relative_eq!(jerk_closed_form(&c, &st, i).unwrap(), r.twist(i, 2), epsilon = 1e-11);
            assert_relative_eq!(jerk_closed_form_reduced(&c, &st, i).unwrap(), r.twist(i, 2), epsilon = 1e-11);
        }
    }

    #[test]
    fn only_third_derivative_nonzero() {
        let c = models::four_bar();
        let q3 = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.5]);
        let st = DerivativeStack::new(
            DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4]),
            vec![DVector::zeros(4), DVector::zeros(4), q3.clone()],
        )
        .unwrap();
        let r = twist_derivatives_recursive(&c, &st, 2).unwrap();
        let s = joint_screws_spatial(&c, &st.q).unwrap();
        let expect = (0..4).fold(ScrewVec::zeros(), |a, j| a + s[j] * q3[j]);
        assert_relative_eq!(r.twist(4, 2), expect, epsilon = 1e-14);
    }

    #[test]
    fn order_validation() {
        let c = models::four_bar();
        let st = state(4, 2, 0.0);
        assert!(matches!(
            twist_derivatives_recursive(&c, &st, 2),
            Err(Error::InsufficientOrder { .. })
        ));
        assert!(twist_derivatives_closed(&c, &state(4, 6, 0.0), 4).is_err());
        assert!(matches!(
            twist_derivatives_recursive(&c, &state(4, 10, 0.0), 9),
            Err(Error::OrderTooHigh { .. })
        ));
    }
}
