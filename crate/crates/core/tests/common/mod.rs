#![allow(dead_code)]

use nalgebra::{DVector, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use screwkin::{Chain, DerivativeStack, Pitch, UnitScrew};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn uniform(rng: &mut StdRng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub fn vec(rng: &mut StdRng, n: usize, scale: f64) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.random_range(-scale..scale))
}

pub fn unit3(rng: &mut StdRng) -> Vector3<f64> {
    loop {
        let v = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let n = v.norm();
        if n > 0.2 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Chain with random axes, points and joint types. `prismatic_every`
/// makes every k-th joint prismatic (0 for none).
pub fn random_chain(rng: &mut StdRng, n: usize, prismatic_every: usize) -> Chain {
    let joints = (0..n)
        .map(|j| {
            let axis = unit3(rng);
            let point = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let pitch = if prismatic_every > 0 && j % prismatic_every == prismatic_every - 1 {
                Pitch::Prismatic
            } else if j % 3 == 1 {
                Pitch::Helical(rng.random_range(-0.3..0.3))
            } else {
                Pitch::Revolute
            };
            UnitScrew::new(axis, point, pitch).expect("random axis is a unit vector")
        })
        .collect();
    Chain::new(format!("random-{n}"), joints).expect("valid chain")
}

/// Configuration and `order` joint derivatives drawn from `[-scale, scale]`.
pub fn random_state(rng: &mut StdRng, n: usize, order: usize, scale: f64) -> DerivativeStack {
    let q = vec(rng, n, 1.5);
    let derivs = (0..order).map(|_| vec(rng, n, scale)).collect();
    DerivativeStack::new(q, derivs).expect("consistent sizes")
}

/// Stack of the curve `t ↦ q + Σ_l tˡ q^(l)/l!` shifted to time `t`.
pub fn shifted_state(st: &DerivativeStack, t: f64) -> DerivativeStack {
    let k = st.order();
    let mut all = vec![st.q.clone()];
    all.extend(st.derivs.iter().cloned());
    let at = |m: usize| -> DVector<f64> {
        let mut out = DVector::zeros(st.q.len());
        let mut f = 1.0;
        for (p, d) in all[m..].iter().enumerate() {
            if p > 0 {
                f *= t / p as f64;
            }
            out += d * f;
        }
        out
    };
    let q = at(0);
    let derivs = (1..=k).map(at).collect();
    DerivativeStack::new(q, derivs).expect("consistent sizes")
}

pub fn max_abs(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
