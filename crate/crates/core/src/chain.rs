//! Serial kinematic chains in product-of-exponentials form.
//!
//! Joints and links are numbered `1..=n` in every public signature that takes
//! a link or joint number; joint `i` connects link `i − 1` to link `i`, link 0
//! being the ground. Returned lists are ordinary zero-based vectors, so entry
//! `j − 1` belongs to joint `j`.

use crate::error::{Error, Result};
use crate::screw::{exp_screw, Pose, ScrewVec, UnitScrew};
use nalgebra::{DMatrix, DVector};

/// Serial chain described by joint screws in the reference configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    name: String,
    joints: Vec<UnitScrew>,
    screws: Vec<ScrewVec>,
    body_frames: Vec<Pose>,
    raw_screws: bool,
}

impl Chain {
    pub fn new(name: impl Into<String>, joints: Vec<UnitScrew>) -> Result<Self> {
        if joints.is_empty() {
            return Err(Error::InvalidInput("a chain needs at least one joint".into()));
        }
        for (j, s) in joints.iter().enumerate() {
            if (s.axis.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidInput(format!("joint {} axis is not a unit vector", j + 1)));
            }
        }
        let screws = joints.iter().map(UnitScrew::to_screwvec).collect();
        let body_frames = vec![Pose::identity(); joints.len()];
        Ok(Self {
            name: name.into(),
            joints,
            screws,
            body_frames,
            raw_screws: false,
        })
    }

    /// Build a chain from raw screw coordinate vectors.
    pub fn from_screws(name: impl Into<String>, screws: &[ScrewVec]) -> Result<Self> {
        let joints = screws
            .iter()
            .map(UnitScrew::from_screwvec)
            .collect::<Result<Vec<_>>>()?;
        let mut chain = Self::new(name, joints)?;
        // Keep the caller's scaling of each screw.
        chain.screws = screws.to_vec();
        chain.raw_screws = true;
        Ok(chain)
    }

    /// Attach body-fixed reference frames `A_i` (one per link).
    pub fn with_body_frames(mut self, frames: Vec<Pose>) -> Result<Self> {
        if frames.len() != self.n() {
            return Err(Error::Dimension {
                what: "body frames",
                expected: self.n(),
                got: frames.len(),
            });
        }
        for f in &frames {
            f.validate(crate::screw::TOL_ORTH)?;
        }
        self.body_frames = frames;
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Number of joints.
    pub fn n(&self) -> usize {
        self.joints.len()
    }

    pub fn joints(&self) -> &[UnitScrew] {
        &self.joints
    }

    /// Reference screw coordinates `Y_1..Y_n`.
    pub fn screws(&self) -> &[ScrewVec] {
        &self.screws
    }

    pub fn body_frames(&self) -> &[Pose] {
        &self.body_frames
    }

    /// Largest distance of a joint point from the origin, floored at 1.
    pub fn characteristic_length(&self) -> f64 {
        self.joints
            .iter()
            .map(|j| j.point.norm())
            .fold(1.0, f64::max)
    }

    /// Validate a one-based link number.
    pub fn check_link(&self, i: usize) -> Result<()> {
        if i == 0 || i > self.n() {
            Err(Error::IndexOutOfRange { index: i, max: self.n() })
        } else {
            Ok(())
        }
    }

    /// Validate a configuration vector length.
    pub fn check_config(&self, q: &DVector<f64>) -> Result<()> {
        if q.len() != self.n() {
            return Err(Error::Dimension {
                what: "joint vector",
                expected: self.n(),
                got: q.len(),
            });
        }
        if !q.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("joint vector is not finite".into()));
        }
        Ok(())
    }

    /// Relative motion `exp(Y_j q_j)` of joint `j` (one-based).
    pub fn joint_motion(&self, j: usize, qj: f64) -> Pose {
        if self.raw_screws {
            crate::screw::exp_twist(&self.screws[j - 1], qj)
        } else {
            exp_screw(&self.joints[j - 1], qj)
        }
    }
}

/// Joint-variable vector with its time derivatives `[q̇, q̈, …]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivativeStack {
    pub q: DVector<f64>,
    pub derivs: Vec<DVector<f64>>,
}

impl DerivativeStack {
    pub fn new(q: DVector<f64>, derivs: Vec<DVector<f64>>) -> Result<Self> {
        for d in &derivs {
            if d.len() != q.len() {
                return Err(Error::Dimension {
                    what: "derivative vector",
                    expected: q.len(),
                    got: d.len(),
                });
            }
        }
        Ok(Self { q, derivs })
    }

    /// Build from plain slices.
    pub fn from_slices(q: &[f64], derivs: &[&[f64]]) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(q),
            derivs.iter().map(|d| DVector::from_column_slice(d)).collect(),
        )
    }

    /// Highest available derivative order.
    pub fn order(&self) -> usize {
        self.derivs.len()
    }

    /// `q^(l)`; `l = 0` returns `q`.
    pub fn get(&self, l: usize) -> Option<&DVector<f64>> {
        if l == 0 {
            Some(&self.q)
        } else {
            self.derivs.get(l - 1)
        }
    }

    pub fn require(&self, need: usize) -> Result<()> {
        if self.order() < need {
            Err(Error::InsufficientOrder { have: self.order(), need })
        } else {
            Ok(())
        }
    }
}

/// `f_i(q) = exp(Y₁q₁)···exp(Y_i q_i)` for link `i` (one-based).
pub fn kinematic_map(chain: &Chain, q: &DVector<f64>, i: usize) -> Result<Pose> {
    chain.check_link(i)?;
    chain.check_config(q)?;
    Ok((1..=i).fold(Pose::identity(), |f, j| f * chain.joint_motion(j, q[j - 1])))
}

/// Pose `C_i = f_i(q)·A_i` of the body-fixed frame of link `i`.
pub fn link_pose(chain: &Chain, q: &DVector<f64>, i: usize) -> Result<Pose> {
    Ok(kinematic_map(chain, q, i)? * chain.body_frames[i - 1])
}

/// Poses `f_1..f_n` of all links.
pub fn all_kinematic_maps(chain: &Chain, q: &DVector<f64>) -> Result<Vec<Pose>> {
    chain.check_config(q)?;
    let mut f = Pose::identity();
    Ok((1..=chain.n())
        .map(|j| {
            f = f * chain.joint_motion(j, q[j - 1]);
            f
        })
        .collect())
}

/// Instantaneous joint screws `S_j = Ad_{f_{j−1}} Y_j`.
pub fn joint_screws_spatial(chain: &Chain, q: &DVector<f64>) -> Result<Vec<ScrewVec>> {
    chain.check_config(q)?;
    let mut f = Pose::identity();
    let mut out = Vec::with_capacity(chain.n());
    for j in 1..=chain.n() {
        out.push(if j == 1 { chain.screws[0] } else { f.transform(&chain.screws[j - 1]) });
        f = f * chain.joint_motion(j, q[j - 1]);
    }
    Ok(out)
}

/// Spatial Jacobian of link `i`: columns `S_1..S_i`, zeros beyond.
pub fn jacobian_spatial(chain: &Chain, q: &DVector<f64>, i: usize) -> Result<DMatrix<f64>> {
    chain.check_link(i)?;
    let s = joint_screws_spatial(chain, q)?;
    Ok(screws_to_matrix(&s, i))
}

/// Stack screws as columns, keeping only the first `upto`.
pub fn screws_to_matrix(s: &[ScrewVec], upto: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(6, s.len());
    for (c, x) in s.iter().enumerate().take(upto) {
        j.column_mut(c).copy_from(x);
    }
    j
}

/// Spatial twist `V_i = Σ_{j≤i} S_j q̇_j` of link `i`.
pub fn spatial_twist(chain: &Chain, state: &DerivativeStack, i: usize) -> Result<ScrewVec> {
    chain.check_link(i)?;
    state.require(1)?;
    let s = joint_screws_spatial(chain, &state.q)?;
    let qd = &state.derivs[0];
    Ok((0..i).fold(ScrewVec::zeros(), |v, j| v + s[j] * qd[j]))
}

/// Spatial twists of all links via `V_i = V_{i−1} + S_i q̇_i`.
pub fn spatial_twists_recursive(chain: &Chain, state: &DerivativeStack) -> Result<Vec<ScrewVec>> {
    state.require(1)?;
    let s = joint_screws_spatial(chain, &state.q)?;
    let qd = &state.derivs[0];
    let mut v = ScrewVec::zeros();
    Ok(s
        .iter()
        .zip(qd.iter())
        .map(|(sj, &dq)| {
            v += sj * dq;
            v
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models;
    use approx::assert_relative_eq;
    use nalgebra::{Matrix3, Vector3};

    #[test]
    fn reference_configuration_is_identity() {
        let c = models::four_bar();
        let q = DVector::zeros(4);
        for i in 1..=4 {
            assert_eq!(kinematic_map(&c, &q, i).unwrap(), Pose::identity());
        }
        let s = joint_screws_spatial(&c, &q).unwrap();
        assert_eq!(s, c.screws().to_vec());
    }

    #[test]
    fn quarter_turn_of_first_joint() {
        let c = models::four_bar();
        let q = DVector::from_vec(vec![std::f64::consts::FRAC_PI_2, 0.0, 0.0, 0.0]);
        let f = kinematic_map(&c, &q, 1).unwrap();
        let rz = Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0);
        assert_relative_eq!(f.rotation, rz, epsilon = 1e-15);
        assert_relative_eq!(f.translation, Vector3::zeros(), epsilon = 1e-15);
    }

    #[test]
    fn link_index_is_validated() {
        let c = models::four_bar();
        let q = DVector::zeros(4);
        assert!(kinematic_map(&c, &q, 0).is_err());
        assert!(kinematic_map(&c, &q, 5).is_err());
        assert!(kinematic_map(&c, &DVector::zeros(3), 1).is_err());
    }

    #[test]
    fn first_column_only_for_link_one() {
        let c = models::four_c();
        let q = DVector::from_element(8, 0.3);
        let j = jacobian_spatial(&c, &q, 1).unwrap();
        assert!(j.columns(1, 7).amax() == 0.0);
        assert!(j.column(0).amax() > 0.0);
    }

    #[test]
    fn single_revolute_twist() {
        let c = Chain::new("r", vec![UnitScrew::revolute(Vector3::z(), Vector3::zeros()).unwrap()]).unwrap();
        let st = DerivativeStack::from_slices(&[0.4], &[&[2.0]]).unwrap();
        assert_eq!(spatial_twist(&c, &st, 1).unwrap(), ScrewVec::new(0.0, 0.0, 2.0, 0.0, 0.0, 0.0));
    }
}
