//! Finite-difference and conjugation oracles for the analytic derivatives.

mod common;

use approx::assert_abs_diff_eq;
use common::*;
use nalgebra::DVector;
use screwkin::chain::{jacobian_spatial, joint_screws_spatial, link_pose, spatial_twist};
use screwkin::derivatives::{partial_screw, twist_derivatives_recursive};
use screwkin::dexterity::{manipulability_mu, mu_gradient, mu_hessian};
use screwkin::minors::{minor, minor_time_derivative, MinorIndex};
use screwkin::multiindex::MultiIndex;
use screwkin::representations::{twist_derivatives_body, RepTag, twist_derivatives_in};
use screwkin::screw::{vee_unchecked, ScrewVec};
use screwkin::taylor::km_differentials;

const H: f64 = 1e-4;

/// Fourth-order central difference of `f` at `t = 0`.
fn d1<T, F>(f: F) -> T
where
    F: Fn(f64) -> T,
    T: std::ops::Sub<Output = T> + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let a = f(-2.0 * H) - f(2.0 * H);
    let b = f(H) - f(-H);
    b * (8.0 / (12.0 * H)) + a * (1.0 / (12.0 * H))
}

#[test]
fn twist_derivatives_match_differences_of_lower_order() {
    for seed in 0..8 {
        let mut r = rng(seed);
        let chain = random_chain(&mut r, 5, 3);
        let st = random_state(&mut r, 5, 5, 1.0);
        let td = twist_derivatives_recursive(&chain, &st, 3).unwrap();
        for i in 1..=5 {
            for k in 1..=3 {
                let fd = d1(|t| twist_derivatives_recursive(&chain, &shifted_state(&st, t), k - 1).unwrap().twist(i, k - 1));
                assert_abs_diff_eq!(fd, td.twist(i, k), epsilon = 1e-7 * (1.0 + fd.amax()));
            }
        }
    }
}

#[test]
fn twist_equals_velocity_of_pose() {
    // V^s = (Ċ C⁻¹)^∨.
    for seed in 0..8 {
        let mut r = rng(10 + seed);
        let chain = random_chain(&mut r, 6, 3);
        let st = random_state(&mut r, 6, 1, 1.0);
        for i in 1..=6 {
            let cdot = d1(|t| link_pose(&chain, &shifted_state(&st, t).q, i).unwrap().to_matrix());
            let v = vee_unchecked(&(cdot * link_pose(&chain, &st.q, i).unwrap().inverse().to_matrix()));
            assert_abs_diff_eq!(v, spatial_twist(&chain, &st, i).unwrap(), epsilon = 1e-8);
        }
    }
}

#[test]
fn partial_screws_match_coordinate_differences() {
    for seed in 0..6 {
        let mut r = rng(20 + seed);
        let chain = random_chain(&mut r, 5, 3);
        let q = vec(&mut r, 5, 1.0);
        for a in MultiIndex::all_of_order(5, 2) {
            for j in 0..5 {
                let mut b = a.clone();
                b.0[j] += 1;
                for i in 1..=5 {
                    let fd = d1(|t| {
                        let mut p = q.clone();
                        p[j] += t;
                        partial_screw(&chain, &p, i, &a).unwrap()
                    });
                    let exact = partial_screw(&chain, &q, i, &b).unwrap();
                    assert_abs_diff_eq!(fd, exact, epsilon = 1e-7 * (1.0 + exact.amax()));
                }
            }
        }
    }
}

#[test]
fn kinematic_map_differentials_match_line_differences() {
    // dᵏf_q(x) = dᵏ/dtᵏ f(q + t x) at t = 0; check k = 1, 2 directly.
    for seed in 0..8 {
        let mut r = rng(30 + seed);
        let chain = random_chain(&mut r, 5, 3);
        let (q, x) = (vec(&mut r, 5, 1.0), vec(&mut r, 5, 1.0));
        let f = |t: f64| link_pose(&chain, &(&q + &x * t), 5).unwrap().to_matrix();
        let d = km_differentials(&chain, &q, 3, &x).unwrap();
        assert_abs_diff_eq!(d1(f), d.f[1], epsilon = 1e-8);
        let g = |t: f64| km_differentials(&chain, &(&q + &x * t), 1, &x).unwrap().f[1];
        assert_abs_diff_eq!(d1(g), d.f[2], epsilon = 1e-7);
        let g2 = |t: f64| km_differentials(&chain, &(&q + &x * t), 2, &x).unwrap().f[2];
        assert_abs_diff_eq!(d1(g2), d.f[3], epsilon = 1e-6);
    }
}

#[test]
fn minor_derivatives_match_differences() {
    for seed in 0..6 {
        let mut r = rng(40 + seed);
        let chain = random_chain(&mut r, 4, 3);
        let st = random_state(&mut r, 4, 4, 1.0);
        for idx in [MinorIndex::new(vec![1, 2, 3], vec![1, 2, 4]).unwrap(), MinorIndex::new(vec![2, 5], vec![3, 4]).unwrap()] {
            for nu in 1..=3 {
                let fd = d1(|t| {
                    let s = shifted_state(&st, t);
                    if nu == 1 {
                        minor(&chain, &s.q, &idx).unwrap()
                    } else {
                        minor_time_derivative(&chain, &s, &idx, nu - 1).unwrap()
                    }
                });
                let exact = minor_time_derivative(&chain, &st, &idx, nu).unwrap();
                assert!((fd - exact).abs() < 1e-6 * (1.0 + exact.abs()), "seed {seed} ν {nu}: {fd} vs {exact}");
            }
        }
    }
}

#[test]
fn body_recursion_matches_conjugated_spatial_twists() {
    for seed in 0..8 {
        let mut r = rng(50 + seed);
        let chain = random_chain(&mut r, 5, 3);
        let st = random_state(&mut r, 5, 4, 1.0);
        for i in [2, 5] {
            let body = twist_derivatives_body(&chain, &st, i, 3).unwrap();
            let conv = twist_derivatives_in(&chain, &st, RepTag::BodyFixed(i), i, 3).unwrap();
            // The zeroth-order body twist is C⁻¹ V^s conjugated.
            let pose = link_pose(&chain, &st.q, i).unwrap();
            assert_abs_diff_eq!(body[0], pose.adjoint_inv() * spatial_twist(&chain, &st, i).unwrap(), epsilon = 1e-12);
            for (a, b) in body.iter().zip(&conv) {
                assert_abs_diff_eq!(*a, *b, epsilon = 1e-9 * (1.0 + b.amax()));
            }
        }
    }
}

#[test]
fn manipulability_derivatives_match_differences() {
    for seed in 0..6 {
        let mut r = rng(60 + seed);
        let chain = random_chain(&mut r, 6, 0);
        let mut q = vec(&mut r, 6, 1.5);
        while screwkin::linalg::condition(&jacobian_spatial(&chain, &q, 6).unwrap()) > 1e3 {
            q = vec(&mut r, 6, 1.5);
        }
        let mu = |p: &DVector<f64>| manipulability_mu(&jacobian_spatial(&chain, p, 6).unwrap()).unwrap();
        let g = mu_gradient(&chain, &q).unwrap();
        let hess = mu_hessian(&chain, &q).unwrap();
        for j in 0..6 {
            let along = |t: f64| {
                let mut p = q.clone();
                p[j] += t;
                p
            };
            let fd = d1(|t| mu(&along(t)));
            assert!((fd - g[j]).abs() < 1e-7 * (1.0 + g.amax()), "seed {seed} joint {j}");
            let fdg = d1(|t| mu_gradient(&chain, &along(t)).unwrap());
            assert_abs_diff_eq!(fdg, hess.column(j).into_owned(), epsilon = 1e-6 * (1.0 + hess.amax()));
        }
    }
}

#[test]
fn jacobian_columns_are_joint_screws() {
    let mut r = rng(70);
    let chain = random_chain(&mut r, 6, 3);
    let q = vec(&mut r, 6, 1.0);
    let s = joint_screws_spatial(&chain, &q).unwrap();
    let j = jacobian_spatial(&chain, &q, 6).unwrap();
    for (c, sc) in s.iter().enumerate() {
        assert_eq!(ScrewVec::from_iterator(j.column(c).iter().copied()), *sc);
    }
}
