//! Higher-order differentials and Taylor expansion of the kinematic map.
//!
//! Along the line `t ↦ q + t x` the screw differentials `dᵏS_i(x)` obey the
//! same bracket recursion as time derivatives with `q̇ = x` and all higher
//! joint derivatives zero. With `h^(k)(x) = Σ_i x_i d^(k−1)Ŝ_i(x)`:
//!
//! * `dᵏf = h^(k) f − Σ_{m=1}^{k−1} C(k−1, m−1) dᵐf · d^(k−m)f⁻¹ · f`
//! * `dᵏf⁻¹ = −f⁻¹ Σ_{i=1}^{k} C(k, i) dⁱf · d^(k−i)f⁻¹`

use crate::chain::{joint_screws_spatial, kinematic_map, Chain};
use crate::derivatives::ScrewJet;
use crate::error::{Error, Result};
use crate::multiindex::{binomial, K_MAX};
use crate::poly::{homogeneous_coefficients, PolySystem, Polynomial, COEFF_TOL};
use crate::screw::{hat, Pose, ScrewVec};
use nalgebra::{DVector, Matrix3, Matrix4};
use rand::{Rng, SeedableRng};

/// Differentials of `f_n` at `q`, evaluated at one direction `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct KmDifferentials {
    pub order: usize,
    /// `f[k] = dᵏf_q(x)`, with `f[0] = f(q)`.
    pub f: Vec<Matrix4<f64>>,
    /// `finv[k] = dᵏf⁻¹_q(x)`, with `finv[0] = f(q)⁻¹`.
    pub finv: Vec<Matrix4<f64>>,
    /// `h[k] = h^(k)(x)` for `k ≥ 1`; `h[0]` is zero.
    pub h: Vec<Matrix4<f64>>,
    /// `screws[i][k] = dᵏS_{i+1}(x)`.
    pub screws: Vec<Vec<ScrewVec>>,
}

fn check(chain: &Chain, q: &DVector<f64>, x: &DVector<f64>, k: usize) -> Result<()> {
    chain.check_config(q)?;
    if x.len() != chain.n() {
        return Err(Error::Dimension { what: "direction", expected: chain.n(), got: x.len() });
    }
    if k > K_MAX {
        return Err(Error::OrderTooHigh { requested: k, max: K_MAX });
    }
    Ok(())
}

fn line_jet(chain: &Chain, q: &DVector<f64>, x: &DVector<f64>, order: usize) -> Result<ScrewJet> {
    let s = joint_screws_spatial(chain, q)?;
    let mut jet = ScrewJet::new(&s);
    let qd = [x.clone()];
    for k in 0..=order {
        if k > 0 {
            jet.push_screw_level();
        }
        jet.push_sum_level(&qd);
    }
    Ok(jet)
}

/// `dᵏS_i(x)` for one-based joint `i`.
pub fn screw_differential(chain: &Chain, q: &DVector<f64>, i: usize, k: usize, x: &DVector<f64>) -> Result<ScrewVec> {
    chain.check_link(i)?;
    check(chain, q, x, k)?;
    Ok(line_jet(chain, q, x, k)?.screws[i - 1][k])
}

/// Differentials of `f_n` through order `k_max` at direction `x`.
pub fn km_differentials(chain: &Chain, q: &DVector<f64>, k_max: usize, x: &DVector<f64>) -> Result<KmDifferentials> {
    check(chain, q, x, k_max)?;
    let jet = line_jet(chain, q, x, k_max)?;
    let n = chain.n();
    let f0 = kinematic_map(chain, q, n)?.to_matrix();
    let finv0 = kinematic_map(chain, q, n)?.inverse().to_matrix();
    let mut h = vec![Matrix4::zeros()];
    for k in 1..=k_max {
        h.push(hat(&jet.sums[n - 1][k - 1]));
    }
    let mut f = vec![f0];
    let mut finv = vec![finv0];
    for k in 1..=k_max {
        let mut dk = h[k] * f0;
        for m in 1..k {
            dk -= f[m] * finv[k - m] * f0 * binomial(k - 1, m - 1);
        }
        f.push(dk);
        let mut acc = Matrix4::zeros();
        for i in 1..=k {
            acc += f[i] * finv[k - i] * binomial(k, i);
        }
        finv.push(-finv0 * acc);
    }
    let screws = jet
        .screws
        .into_iter()
        .map(|mut v| {
            v.truncate(k_max + 1);
            v
        })
        .collect();
    Ok(KmDifferentials { order: k_max, f, finv, h, screws })
}

/// `h^(k)(x) = Σ_i x_i d^(k−1)Ŝ_i(x)`, summed joint by joint.
pub fn h_form(chain: &Chain, q: &DVector<f64>, k: usize, x: &DVector<f64>) -> Result<Matrix4<f64>> {
    if k == 0 {
        return Err(Error::InvalidInput("h forms start at order 1".into()));
    }
    check(chain, q, x, k)?;
    let jet = line_jet(chain, q, x, k - 1)?;
    Ok((0..chain.n()).fold(Matrix4::zeros(), |acc, i| acc + hat(&jet.screws[i][k - 1]) * x[i]))
}

/// Truncated Taylor series `f(q) + Σ_{k=1}^{K} dᵏf_q(x)/k!`.
///
/// The result is a raw 4×4 matrix and in general not a rigid motion; see
/// [`project_to_se3`].
pub fn km_taylor_eval(chain: &Chain, q: &DVector<f64>, order: usize, x: &DVector<f64>) -> Result<Matrix4<f64>> {
    let d = km_differentials(chain, q, order, x)?;
    let mut fact = 1.0;
    let mut out = d.f[0];
    for k in 1..=order {
        fact *= k as f64;
        out += d.f[k] / fact;
    }
    Ok(out)
}

/// Nearest rigid motion to a 4×4 matrix: polar factor of the 3×3 block
/// (determinant forced to +1) and the translation column unchanged.
pub fn project_to_se3(m: &Matrix4<f64>) -> Pose {
    let a: Matrix3<f64> = m.fixed_view::<3, 3>(0, 0).into_owned();
    let svd = a.svd(true, true);
    let u = svd.u.expect("requested U");
    let vt = svd.v_t.expect("requested V");
    let mut d = Matrix3::identity();
    if (u * vt).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    Pose::new(u * d * vt, m.fixed_view::<3, 1>(0, 3).into_owned())
}

/// Loop-closure residual `max |f_n(q) − I|`.
pub fn closure_residual(chain: &Chain, q: &DVector<f64>) -> Result<f64> {
    let f = kinematic_map(chain, q, chain.n())?.to_matrix();
    Ok((f - Matrix4::identity()).amax())
}

/// Require `f_n(q) = I` within `tol`.
pub fn require_closure(chain: &Chain, q: &DVector<f64>, tol: f64) -> Result<()> {
    let residual = closure_residual(chain, q)?;
    if residual > tol {
        Err(Error::ClosureViolation { residual, tol })
    } else {
        Ok(())
    }
}

/// Polynomials of the top 3×4 block of `Σ_{k≤K} dᵏf_q(x)/k!`, whose common
/// zero set approximates the configuration space near a closed `q`.
///
/// Identically vanishing entries are dropped.
pub fn cspace_poly_system(chain: &Chain, q: &DVector<f64>, order: usize, tol_loop: f64) -> Result<PolySystem> {
    require_closure(chain, q, tol_loop)?;
    let n = chain.n();
    let mut per_entry: Vec<Vec<(f64, crate::MultiIndex)>> = vec![Vec::new(); 12];
    for k in 1..=order {
        let fact: f64 = (1..=k).map(|v| v as f64).product();
        let coeffs = homogeneous_coefficients(n, k, 12, |x| {
            let d = km_differentials(chain, q, k, &DVector::from_column_slice(x)).expect("validated input");
            top_block(&(d.f[k] / fact))
        });
        for (e, c) in per_entry.iter_mut().zip(coeffs) {
            e.extend(c);
        }
    }
    let mut sys = PolySystem::new(n);
    sys.equations = per_entry
        .into_iter()
        .map(|t| Polynomial::from_terms(t, COEFF_TOL))
        .filter(|p| !p.is_zero())
        .collect();
    Ok(sys)
}

/// Row-major entries of the top 3×4 block.
pub(crate) fn top_block(m: &Matrix4<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(12);
    for r in 0..3 {
        for c in 0..4 {
            v.push(m[(r, c)]);
        }
    }
    v
}

/// One sample of the dimension probe.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSample {
    pub point: DVector<f64>,
    pub residual: f64,
    pub jacobian_rank: usize,
    /// `n − rank`, the dimension of the zero set at a smooth point.
    pub local_dimension: usize,
}

/// Numeric dimension probe for the zero set of a polynomial system.
///
/// Random start points in a box of half-width `radius` are pulled to the
/// zero set by minimum-norm Gauss–Newton steps; the rank of the system's
/// Jacobian at each converged point gives a local dimension estimate.
/// Starts that do not converge are skipped.
pub fn dimension_probe(sys: &PolySystem, samples: usize, radius: f64, seed: u64) -> Vec<ProbeSample> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let n = sys.n();
    let mut out = Vec::new();
    for _ in 0..samples {
        let mut x = DVector::from_fn(n, |_, _| rng.random_range(-radius..radius));
        let mut res = sys.eval(x.as_slice()).norm();
        for _ in 0..100 {
            if res < 1e-12 {
                break;
            }
            let j = sys.jacobian(x.as_slice());
            let step = crate::linalg::pinv(&j, 1e-10) * sys.eval(x.as_slice());
            x -= step;
            res = sys.eval(x.as_slice()).norm();
        }
        if res < 1e-10 {
            let rank = crate::linalg::rank(&sys.jacobian(x.as_slice()), 1e-8);
            out.push(ProbeSample { point: x, residual: res, jacobian_rank: rank, local_dimension: n - rank });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use crate::screw::bracket;
    use approx::assert_relative_eq;

    #[test]
    fn first_differential_is_h_times_f() {
        let c = models::two_r_two_c(1.0);
        let q = DVector::from_vec(vec![0.1, -0.2, 0.3, 0.05, -0.4, 0.2]);
        let x = DVector::from_vec(vec![1.0, 0.5, -0.3, 0.2, 0.7, -1.0]);
        let d = km_differentials(&c, &q, 3, &x).unwrap();
        assert_relative_eq!(d.f[1], d.h[1] * d.f[0], epsilon = 1e-14);
        for k in 1..=3 {
            let m = d.h[k];
            assert!(m.row(3).amax() < 1e-14);
            let w = m.fixed_view::<3, 3>(0, 0);
            assert!((w + w.transpose()).amax() < 1e-12);
            assert_relative_eq!(h_form(&c, &q, k, &x).unwrap(), m, epsilon = 1e-12);
        }
    }

    #[test]
    fn second_h_form_is_bracket_sum() {
        let c = models::four_c();
        let q = DVector::from_fn(8, |i, _| 0.1 * (i as f64 + 1.0).cos());
        let x = DVector::from_fn(8, |i, _| (i as f64 * 0.7).sin());
        let s = joint_screws_spatial(&c, &q).unwrap();
        let mut expect = ScrewVec::zeros();
        for i in 0..8 {
            for j in 0..i {
                expect += bracket(&s[j], &s[i]) * (x[i] * x[j]);
            }
        }
        assert_relative_eq!(h_form(&c, &q, 2, &x).unwrap(), hat(&expect), epsilon = 1e-12);
    }

    #[test]
    fn zero_direction() {
        let c = models::four_bar();
        let q = DVector::from_vec(vec![0.3, 0.1, -0.2, 0.4]);
        let f = kinematic_map(&c, &q, 4).unwrap().to_matrix();
        assert_eq!(km_taylor_eval(&c, &q, 4, &DVector::zeros(4)).unwrap(), f);
        assert_eq!(screw_differential(&c, &q, 3, 2, &DVector::zeros(4)).unwrap(), ScrewVec::zeros());
    }

    #[test]
    fn projection_of_rigid_motion_is_identity_map() {
        let c = models::four_c();
        let q = DVector::from_fn(8, |i, _| 0.2 * i as f64);
        let f = kinematic_map(&c, &q, 8).unwrap();
        let p = project_to_se3(&f.to_matrix());
        assert_relative_eq!(p.rotation, f.rotation, epsilon = 1e-13);
    }

    #[test]
    fn closure_is_required() {
        let c = models::four_bar();
        let q = DVector::from_vec(vec![0.3, 0.0, 0.0, 0.0]);
        assert!(matches!(cspace_poly_system(&c, &q, 2, 1e-8), Err(Error::ClosureViolation { .. })));
    }
}
