//! Manipulability `μ = √det(JJᵀ)`, the inverse condition number of
//! `A = JJᵀ`, and their derivatives with respect to the joint variables.
//!
//! Jacobian partials come in closed form: `∂_i S_k = [S_i, S_k]` for
//! `i < k` and `∂_i ∂_j S_k = [S_i, [S_j, S_k]]` for `i ≤ j < k`.
//! The condition number uses the Frobenius norm throughout.

use crate::chain::{jacobian_spatial, joint_screws_spatial, Chain};
use crate::error::{Error, Result};
use crate::linalg::{det, singular_values};
use crate::screw::{bracket, ScrewVec};
use nalgebra::{DMatrix, DVector};

/// `μ = √det(JJᵀ)`.
pub fn manipulability_mu(j: &DMatrix<f64>) -> Result<f64> {
    let d = det(&(j * j.transpose()));
    if d >= 0.0 {
        Ok(d.sqrt())
    } else if d > -1e-12 {
        Ok(0.0)
    } else {
        Err(Error::Numeric(format!("det(JJᵀ) = {d:e} is negative")))
    }
}

fn screw_col(s: &ScrewVec) -> DVector<f64> {
    DVector::from_iterator(6, s.iter().copied())
}

/// `dj[i] = ∂J/∂q_i` (each `6 × n`).
pub fn jacobian_partials(chain: &Chain, q: &DVector<f64>) -> Result<Vec<DMatrix<f64>>> {
    let s = joint_screws_spatial(chain, q)?;
    let n = s.len();
    Ok((0..n)
        .map(|i| {
            let mut m = DMatrix::zeros(6, n);
            for k in i + 1..n {
                m.column_mut(k).copy_from(&screw_col(&bracket(&s[i], &s[k])));
            }
            m
        })
        .collect())
}

/// `ddj[i][j] = ∂²J/∂q_i∂q_j`.
pub fn jacobian_second_partials(chain: &Chain, q: &DVector<f64>) -> Result<Vec<Vec<DMatrix<f64>>>> {
    let s = joint_screws_spatial(chain, q)?;
    let n = s.len();
    let mut out = vec![vec![DMatrix::zeros(6, n); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut m = DMatrix::zeros(6, n);
            for k in j + 1..n {
                m.column_mut(k).copy_from(&screw_col(&bracket(&s[i], &bracket(&s[j], &s[k]))));
            }
            out[j][i] = m.clone();
            out[i][j] = m;
        }
    }
    Ok(out)
}

fn replace_columns(a: &DMatrix<f64>, reps: &[(usize, DVector<f64>)]) -> f64 {
    let mut m = a.clone();
    for (k, c) in reps {
        m.column_mut(*k).copy_from(c);
    }
    det(&m)
}

/// `∂_i det A` as a sum of determinants with one column replaced.
fn det_partial(a: &DMatrix<f64>, da: &DMatrix<f64>) -> f64 {
    (0..a.ncols()).map(|k| replace_columns(a, &[(k, da.column(k).into_owned())])).sum()
}

fn regular_mu(j: &DMatrix<f64>) -> Result<f64> {
    let mu = manipulability_mu(j)?;
    if mu <= 1e-12 {
        return Err(Error::Singular { sigma_min: singular_values(j).last().copied().unwrap_or(0.0), condition: f64::INFINITY });
    }
    Ok(mu)
}

/// Gradient of `μ` by the column-replacement determinant sum; valid for
/// redundant and non-redundant chains.
pub fn mu_gradient_det(chain: &Chain, q: &DVector<f64>) -> Result<DVector<f64>> {
    let j = jacobian_spatial(chain, q, chain.n())?;
    let mu = regular_mu(&j)?;
    let a = &j * j.transpose();
    let dj = jacobian_partials(chain, q)?;
    Ok(DVector::from_iterator(
        chain.n(),
        dj.iter().map(|dji| {
            let b = dji * j.transpose();
            det_partial(&a, &(&b + b.transpose())) / (2.0 * mu)
        }),
    ))
}

/// Gradient of `μ` for a square regular Jacobian:
/// `∂_i μ = μ Σ_{k>i} J̄_k ad_{S_i} S_k` with `J̄_k` the rows of `J⁻¹`.
pub fn mu_gradient_trace(chain: &Chain, q: &DVector<f64>) -> Result<DVector<f64>> {
    let (j, jinv, mu) = square_regular(chain, q)?;
    let s = joint_screws_spatial(chain, q)?;
    let n = j.ncols();
    Ok(DVector::from_fn(n, |i, _| {
        mu * (i + 1..n).map(|k| jinv.row(k).dot(&screw_col(&bracket(&s[i], &s[k])).transpose())).sum::<f64>()
    }))
}

fn square_regular(chain: &Chain, q: &DVector<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>, f64)> {
    let j = jacobian_spatial(chain, q, chain.n())?;
    if j.nrows() != j.ncols() {
        return Err(Error::Dimension { what: "square Jacobian", expected: 6, got: j.ncols() });
    }
    let mu = regular_mu(&j)?;
    let jinv = j.clone().try_inverse().ok_or(Error::Singular { sigma_min: 0.0, condition: f64::INFINITY })?;
    Ok((j, jinv, mu))
}

/// Gradient of `μ`: the trace form when `J` is square, else the
/// determinant sum.
pub fn mu_gradient(chain: &Chain, q: &DVector<f64>) -> Result<DVector<f64>> {
    if chain.n() == 6 {
        mu_gradient_trace(chain, q)
    } else {
        mu_gradient_det(chain, q)
    }
}

/// Hessian of `μ` from second derivatives of `Δ = det A`:
/// `∂_i∂_j μ = ∂_i∂_jΔ/(2μ) − ∂_iΔ ∂_jΔ/(4μ³)`.
pub fn mu_hessian_det(chain: &Chain, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    let n = chain.n();
    let j = jacobian_spatial(chain, q, n)?;
    let mu = regular_mu(&j)?;
    let jt = j.transpose();
    let a = &j * &jt;
    let dj = jacobian_partials(chain, q)?;
    let ddj = jacobian_second_partials(chain, q)?;
    let da: Vec<DMatrix<f64>> = dj
        .iter()
        .map(|d| {
            let b = d * &jt;
            &b + b.transpose()
        })
        .collect();
    let dd: Vec<f64> = da.iter().map(|d| det_partial(&a, d)).collect();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        for jj in i..n {
            let b = &ddj[i][jj] * &jt + &dj[i] * dj[jj].transpose();
            let dda = &b + b.transpose();
            let mut d2 = det_partial(&a, &dda);
            for k in 0..6 {
                for l in 0..6 {
                    if k != l {
                        d2 += replace_columns(&a, &[(k, da[i].column(k).into_owned()), (l, da[jj].column(l).into_owned())]);
                    }
                }
            }
            let v = d2 / (2.0 * mu) - dd[i] * dd[jj] / (4.0 * mu.powi(3));
            h[(i, jj)] = v;
            h[(jj, i)] = v;
        }
    }
    Ok(h)
}

/// Hessian of `μ` for a square regular Jacobian:
/// `μ (tr(J⁻¹∂_i∂_jJ) + t_i t_j − tr(J⁻¹∂_jJ J⁻¹∂_iJ))`, `t_i = tr(J⁻¹∂_iJ)`.
pub fn mu_hessian_trace(chain: &Chain, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    let (_, jinv, mu) = square_regular(chain, q)?;
    let n = chain.n();
    let dj = jacobian_partials(chain, q)?;
    let ddj = jacobian_second_partials(chain, q)?;
    let p: Vec<DMatrix<f64>> = dj.iter().map(|d| &jinv * d).collect();
    let t: Vec<f64> = p.iter().map(|m| m.trace()).collect();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        mu * ((&jinv * &ddj[i][j]).trace() + t[i] * t[j] - (&p[j] * &p[i]).trace())
    }))
}

pub fn mu_hessian(chain: &Chain, q: &DVector<f64>) -> Result<DMatrix<f64>> {
    if chain.n() == 6 {
        mu_hessian_trace(chain, q)
    } else {
        mu_hessian_det(chain, q)
    }
}

/// `κ(A) = ‖A‖_F ‖A⁻¹‖_F` for `A = JJᵀ`.
pub fn condition_frobenius(j: &DMatrix<f64>) -> Result<f64> {
    let a = j * j.transpose();
    let ainv = a.clone().try_inverse().ok_or(Error::Singular { sigma_min: 0.0, condition: f64::INFINITY })?;
    Ok(a.norm() * ainv.norm())
}

/// Classical 2-norm condition number `σ_max/σ_min` of `A = JJᵀ`.
pub fn condition_2norm(j: &DMatrix<f64>) -> f64 {
    let sv = singular_values(&(j * j.transpose()));
    match (sv.first(), sv.last()) {
        (Some(&a), Some(&b)) if b > 0.0 => a / b,
        _ => f64::INFINITY,
    }
}

/// `1/κ(JJᵀ)` with the Frobenius norm.
pub fn inverse_condition(chain: &Chain, q: &DVector<f64>) -> Result<f64> {
    Ok(1.0 / condition_frobenius(&jacobian_spatial(chain, q, chain.n())?)?)
}

/// Gradient of `1/κ(A)`:
/// `∂κ = ‖A⁻¹‖ tr(Aᵀ∂A)/‖A‖ + ‖A‖ tr(A⁻ᵀ∂A⁻¹)/‖A⁻¹‖`,
/// `∂A⁻¹ = −A⁻¹ ∂A A⁻¹`, `∂(1/κ) = −∂κ/κ²`.
pub fn inv_condition_gradient(chain: &Chain, q: &DVector<f64>) -> Result<DVector<f64>> {
    let j = jacobian_spatial(chain, q, chain.n())?;
    let a = &j * j.transpose();
    let ainv = a.clone().try_inverse().ok_or_else(|| Error::Singular {
        sigma_min: singular_values(&a).last().copied().unwrap_or(0.0),
        condition: f64::INFINITY,
    })?;
    let (na, ni) = (a.norm(), ainv.norm());
    let kappa = na * ni;
    let dj = jacobian_partials(chain, q)?;
    Ok(DVector::from_iterator(
        chain.n(),
        dj.iter().map(|d| {
            let b = d * j.transpose();
            let da = &b + b.transpose();
            let dainv = -&ainv * &da * &ainv;
            let dk = ni * a.dot(&da) / na + na * ainv.dot(&dainv) / ni;
            -dk / (kappa * kappa)
        }),
    ))
}

/// Hessian of `1/κ` by central differences of [`inv_condition_gradient`]
/// (numeric, symmetrized).
pub fn inv_condition_hessian_numeric(chain: &Chain, q: &DVector<f64>, h: f64) -> Result<DMatrix<f64>> {
    let n = chain.n();
    let mut m = DMatrix::zeros(n, n);
    for c in 0..n {
        let mut qp = q.clone();
        let mut qm = q.clone();
        qp[c] += h;
        qm[c] -= h;
        let d = (inv_condition_gradient(chain, &qp)? - inv_condition_gradient(chain, &qm)?) / (2.0 * h);
        m.column_mut(c).copy_from(&d);
    }
    Ok((&m + m.transpose()) * 0.5)
}
