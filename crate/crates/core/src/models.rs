//! Reference linkages used as fixtures and by the command-line tool.
//!
//! Each function returns the chain obtained by cutting the loop open at the
//! ground, so `f_n(q) = I` is the closure condition and `q = 0` is a closed
//! reference configuration.

use crate::chain::Chain;
use crate::screw::UnitScrew;
use nalgebra::Vector3;

fn rev(axis: [f64; 3], point: [f64; 3]) -> UnitScrew {
    UnitScrew::revolute(Vector3::from(axis), Vector3::from(point)).expect("valid axis")
}

fn pri(axis: [f64; 3]) -> UnitScrew {
    UnitScrew::prismatic(Vector3::from(axis)).expect("valid axis")
}

fn hel(axis: [f64; 3], point: [f64; 3], h: f64) -> UnitScrew {
    UnitScrew::helical(Vector3::from(axis), Vector3::from(point), h).expect("valid axis")
}

/// Planar four-bar with joint axes along z through
/// `(0,0)`, `(2,0)`, `(1,1)` and `(0,1)`.
pub fn four_bar() -> Chain {
    let z = [0.0, 0.0, 1.0];
    Chain::new(
        "four-bar",
        vec![
            rev(z, [0.0, 0.0, 0.0]),
            rev(z, [2.0, 0.0, 0.0]),
            rev(z, [1.0, 1.0, 0.0]),
            rev(z, [0.0, 1.0, 0.0]),
        ],
    )
    .expect("valid chain")
}

/// The reference four-bar with a second revolute joint coaxial with the
/// first. Its Jacobian has constant rank 3 while any dependent set that
/// contains both coaxial joints is singular.
pub fn four_bar_with_coaxial_joint() -> Chain {
    let z = [0.0, 0.0, 1.0];
    Chain::new(
        "four-bar-coaxial",
        vec![
            rev(z, [0.0, 0.0, 0.0]),
            rev(z, [0.0, 0.0, 0.0]),
            rev(z, [2.0, 0.0, 0.0]),
            rev(z, [1.0, 1.0, 0.0]),
            rev(z, [0.0, 1.0, 0.0]),
        ],
    )
    .expect("valid chain")
}

/// Spatial loop of four cylindrical joints with alternating x and y axes
/// through the origin, each split into a revolute and a prismatic joint.
pub fn four_c() -> Chain {
    let o = [0.0; 3];
    let (x, y) = ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
    Chain::new(
        "4C",
        vec![
            rev(x, o),
            pri(x),
            rev(y, o),
            pri(y),
            rev(x, o),
            pri(x),
            rev(y, o),
            pri(y),
        ],
    )
    .expect("valid chain")
}

/// Loop with two revolute and two cylindrical joints, all axes along z,
/// arranged on a square of side `l`.
pub fn two_r_two_c(l: f64) -> Chain {
    let z = [0.0, 0.0, 1.0];
    Chain::new(
        "2R2C",
        vec![
            rev(z, [0.0, 0.0, 0.0]),
            rev(z, [l, 0.0, 0.0]),
            rev(z, [l, l, 0.0]),
            pri(z),
            rev(z, [0.0, l, 0.0]),
            pri(z),
        ],
    )
    .expect("valid chain")
}

/// Four helical joints with parallel z axes on the corners of an `a × b`
/// rectangle, with individual pitches.
pub fn delassus_4h(a: f64, b: f64, pitches: [f64; 4]) -> Chain {
    let z = [0.0, 0.0, 1.0];
    Chain::new(
        "Delassus-4H",
        vec![
            hel(z, [0.0, 0.0, 0.0], pitches[0]),
            hel(z, [a, 0.0, 0.0], pitches[1]),
            hel(z, [a, b, 0.0], pitches[2]),
            hel(z, [0.0, b, 0.0], pitches[3]),
        ],
    )
    .expect("valid chain")
}
