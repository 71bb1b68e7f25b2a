//! Pins the oracle-validated form for each entry in DISCREPANCIES.md.

mod common;

use common::*;
use nalgebra::{DVector, Matrix6};
use screwkin::chain::{jacobian_spatial, link_pose};
use screwkin::derivatives::{jerk_closed_form, twist_derivatives_closed, twist_derivatives_recursive};
use screwkin::dexterity::{inv_condition_gradient, inverse_condition, mu_hessian_det, mu_hessian_trace};
use screwkin::linalg::condition;
use screwkin::loop_solver::{loop_derivatives, CoordinateSplit, LoopOptions};
use screwkin::models;
use screwkin::representations::{
    body_jerk_closed_form, hybrid_derivatives, joint_screws_body, joint_screws_hybrid, printed, twist_derivatives_body,
    twist_derivatives_in, twist_hybrid, RepTag,
};
use screwkin::screw::{ad_matrix, ad_rotation, ad_translation, adjoint_translation, bracket, xi};
use screwkin::taylor::km_differentials;
use screwkin::ScrewVec;

fn err(a: &ScrewVec, b: &ScrewVec) -> f64 {
    (a - b).amax()
}

#[test]
fn third_order_operator_form() {
    for seed in 0..10 {
        let mut r = rng(seed);
        let chain = random_chain(&mut r, 5, 3);
        let st = random_state(&mut r, 5, 4, 1.0);
        let rec = twist_derivatives_recursive(&chain, &st, 3).unwrap();
        let closed = twist_derivatives_closed(&chain, &st, 3).unwrap();
        let mut doubled_square: f64 = 0.0;
        for i in 0..5 {
            assert!(err(&closed.twists[i][3], &rec.twists[i][3]) < 1e-10);
            let s = rec.screws[i][0];
            let (a, ad) = (ad_matrix(&rec.twists[i][0]), ad_matrix(&rec.twists[i][1]));
            let add = ad_matrix(&rec.twists[i][2]);
            let kept: Matrix6<f64> = add + ad * a * 2.0 + a * ad + a * a * a;
            let dropped: Matrix6<f64> = add + ad * ad * 2.0 + a * ad + a * a * a;
            assert!(err(&(kept * s), &rec.screws[i][3]) < 1e-10);
            doubled_square = doubled_square.max(err(&(dropped * s), &rec.screws[i][3]));
        }
        assert!(doubled_square > 1e-3, "seed {seed}: the rejected form should differ");
    }
}

#[test]
fn four_bar_first_joint_independent() {
    let chain = models::four_bar();
    let split = CoordinateSplit::from_independent(vec![1], 4).unwrap();
    let u = |v: f64| DVector::from_vec(vec![v]);
    for qd1 in [1.0, -0.7, 2.5] {
        let st = loop_derivatives(&chain, &DVector::zeros(4), &split, &[u(qd1)], &LoopOptions::default()).unwrap();
        let want = [qd1, -qd1, 2.0 * qd1, -2.0 * qd1];
        assert!(max_abs(st.derivs[0].as_slice(), &want) < 1e-12);
    }
    // Fourth order with only q̇₁ = 1: coefficients 154, −368 (= −2·184), 214.
    let st = loop_derivatives(&chain, &DVector::zeros(4), &split, &[u(1.0), u(0.0), u(0.0), u(0.0)], &LoopOptions::default())
        .unwrap();
    assert!(max_abs(st.derivs[3].as_slice(), &[0.0, 154.0, -368.0, 214.0]) < 1e-9);
}

#[test]
fn hybrid_screw_derivative_offset() {
    for seed in 0..10 {
        let mut r = rng(100 + seed);
        let chain = random_chain(&mut r, 5, 3);
        let st = random_state(&mut r, 5, 3, 1.0);
        let i = 5;
        let pos = |j: usize| link_pose(&chain, &st.q, j).unwrap().translation;
        let rdot = |j: usize| twist_hybrid(&chain, &st, j).unwrap().fixed_rows::<3>(3).into_owned();
        let omega = |j: usize| xi(&twist_hybrid(&chain, &st, j).unwrap());
        let h = 1e-5;
        let hp = joint_screws_hybrid(&chain, &shifted_state(&st, h).q, i).unwrap();
        let hm = joint_screws_hybrid(&chain, &shifted_state(&st, -h).q, i).unwrap();
        let mut other_offset: f64 = 0.0;
        let mut reversed: f64 = 0.0;
        for j in 2..=i {
            let hjj = joint_screws_hybrid(&chain, &st.q, j).unwrap()[j - 1];
            let fd = (hp[j - 1] - hm[j - 1]) / (2.0 * h);
            let form = |rij: nalgebra::Vector3<f64>, rdij: nalgebra::Vector3<f64>| {
                (ad_translation(&rdij) + adjoint_translation(&rij) * ad_rotation(&omega(j))) * hjj
            };
            let kept = form(pos(j) - pos(i), rdot(j) - rdot(i));
            assert!(err(&kept, &fd) < 1e-6 * (1.0 + fd.amax()), "seed {seed} j {j}");
            other_offset = other_offset.max(err(&form(pos(j - 1) - pos(i), rdot(j) - rdot(i)), &fd));
            reversed = reversed.max(err(&form(pos(i) - pos(j), rdot(i) - rdot(j)), &fd));
        }
        assert!(other_offset > 1e-3 && reversed > 1e-3);
        // Link-to-link recursion H_{i,j} = Ad_{r_{i−1} − r_i} H_{i−1,j}.
        let hi = joint_screws_hybrid(&chain, &st.q, i).unwrap();
        let hprev = joint_screws_hybrid(&chain, &st.q, i - 1).unwrap();
        for j in 0..i - 1 {
            assert!(err(&(adjoint_translation(&(pos(i - 1) - pos(i))) * hprev[j]), &hi[j]) < 1e-12);
        }
        let derived = hybrid_derivatives(&chain, &st, i, 2).unwrap();
        let converted = twist_derivatives_in(&chain, &st, RepTag::Hybrid(i), i, 2).unwrap();
        for (a, b) in derived.iter().zip(&converted) {
            assert!(err(a, b) < 1e-10);
        }
    }
}

#[test]
fn four_c_second_order_entry() {
    let chain = models::four_c();
    let q0 = DVector::zeros(8);
    let mut r = rng(7);
    for _ in 0..10 {
        let x = vec(&mut r, 8, 1.0);
        let d = km_differentials(&chain, &q0, 2, &x).unwrap();
        // Row 2, column 4 (one-based): second-order part vanishes, first-order part is x4 + x8.
        assert!(d.f[2][(1, 3)].abs() < 1e-12);
        assert!((d.f[1][(1, 3)] - (x[3] + x[7])).abs() < 1e-12);
    }
}

#[test]
fn body_spatial_binomial_forms_fail_at_fourth_order_only() {
    for seed in 0..10 {
        let mut r = rng(200 + seed);
        let chain = random_chain(&mut r, 5, 3);
        let st = random_state(&mut r, 5, 5, 1.0);
        let c = link_pose(&chain, &st.q, 5).unwrap();
        let vs = twist_derivatives_in(&chain, &st, RepTag::Spatial, 5, 4).unwrap();
        let vb = twist_derivatives_in(&chain, &st, RepTag::BodyFixed(5), 5, 4).unwrap();
        // The body-fixed recursion is an independent reference for `vb`.
        let vb_rec = twist_derivatives_body(&chain, &st, 5, 4).unwrap();
        for (a, b) in vb.iter().zip(&vb_rec) {
            assert!(err(a, b) < 1e-9 * (1.0 + b.amax()));
        }
        for k in 1..=3 {
            assert!(err(&printed::binomial_spatial_to_body(&vs, &c, k), &vb[k]) < 1e-9 * (1.0 + vb[k].amax()));
            assert!(err(&printed::binomial_body_to_spatial(&vb, &c, k), &vs[k]) < 1e-9 * (1.0 + vs[k].amax()));
            assert!(err(&printed::explicit_body_to_spatial(&vb, &c, k), &vs[k]) < 1e-9 * (1.0 + vs[k].amax()));
        }
        assert!(err(&printed::explicit_spatial_to_body(&vs, &c, 4), &vb[4]) < 1e-9 * (1.0 + vb[4].amax()));
        assert!(err(&printed::binomial_spatial_to_body(&vs, &c, 4), &vb[4]) > 1e-4);
        assert!(err(&printed::binomial_body_to_spatial(&vb, &c, 4), &vs[4]) > 1e-4);
        assert!(err(&printed::explicit_body_to_spatial(&vb, &c, 4), &vs[4]) > 1e-4);
    }
}

#[test]
fn body_jerk_diagonal_coefficient() {
    for seed in 0..10 {
        let mut r = rng(300 + seed);
        let chain = random_chain(&mut r, 5, 3);
        let st = random_state(&mut r, 5, 3, 1.0);
        let i = 5;
        let rec = twist_derivatives_body(&chain, &st, i, 2).unwrap();
        assert!(err(&body_jerk_closed_form(&chain, &st, i).unwrap(), &rec[2]) < 1e-10);
        // Coefficient 2 on the k = r diagonal overshoots by exactly the diagonal sum.
        let b = joint_screws_body(&chain, &st.q, i).unwrap();
        let qd = &st.derivs[0];
        let mut diag = ScrewVec::zeros();
        for j in 0..i {
            for k in j + 1..i {
                diag += bracket(&bracket(&b[j], &b[k]), &b[k]) * (qd[j] * qd[k] * qd[k]);
            }
        }
        assert!(diag.amax() > 1e-3);
    }
}

#[test]
fn spatial_jerk_closed_form_matches_recursion() {
    for seed in 0..10 {
        let mut r = rng(400 + seed);
        let chain = random_chain(&mut r, 6, 4);
        let st = random_state(&mut r, 6, 3, 1.0);
        let rec = twist_derivatives_recursive(&chain, &st, 2).unwrap();
        for i in 1..=6 {
            assert!(err(&jerk_closed_form(&chain, &st, i).unwrap(), &rec.twist(i, 2)) < 1e-10);
        }
    }
}

#[test]
fn manipulability_hessian_forms_agree() {
    for seed in 0..10 {
        let mut r = rng(500 + seed);
        let chain = random_chain(&mut r, 6, 0);
        let mut q = vec(&mut r, 6, 1.5);
        while condition(&jacobian_spatial(&chain, &q, 6).unwrap()) > 1e3 {
            q = vec(&mut r, 6, 1.5);
        }
        let (a, b) = (mu_hessian_det(&chain, &q).unwrap(), mu_hessian_trace(&chain, &q).unwrap());
        assert!((a - &b).amax() < 1e-9 * (1.0 + b.amax()));
    }
}

#[test]
fn inverse_condition_gradient_matches_differences() {
    for seed in 0..10 {
        let mut r = rng(600 + seed);
        let chain = random_chain(&mut r, 6, 0);
        let mut q = vec(&mut r, 6, 1.5);
        while condition(&jacobian_spatial(&chain, &q, 6).unwrap()) > 1e3 {
            q = vec(&mut r, 6, 1.5);
        }
        let g = inv_condition_gradient(&chain, &q).unwrap();
        let h = 1e-6;
        for j in 0..6 {
            let mut p = q.clone();
            let mut m = q.clone();
            p[j] += h;
            m[j] -= h;
            let fd = (inverse_condition(&chain, &p).unwrap() - inverse_condition(&chain, &m).unwrap()) / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-6 * (1.0 + g.amax()), "seed {seed} joint {j}");
        }
    }
}
