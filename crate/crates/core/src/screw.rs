//! SE(3) poses, se(3) screw coordinates, exponential maps and adjoints.
//!
//! Screw coordinates are stored as `(ξ, η)`: angular part first, linear part
//! second. The bracket of two screws is `(ξ₁×ξ₂, η₁×ξ₂ + ξ₁×η₂)`.

use crate::error::{Error, Result};
use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector6};
use std::ops::Mul;

/// Screw coordinate vector `(ξ, η)`.
pub type ScrewVec = Vector6<f64>;

/// Tolerance used to validate rotation matrices.
pub const TOL_ORTH: f64 = 1e-9;

const SMALL_ANGLE: f64 = 1e-4;

/// Assemble a screw from its angular and linear parts.
pub fn screw(xi: &Vector3<f64>, eta: &Vector3<f64>) -> ScrewVec {
    ScrewVec::new(xi.x, xi.y, xi.z, eta.x, eta.y, eta.z)
}

/// Angular part ξ.
pub fn xi(x: &ScrewVec) -> Vector3<f64> {
    Vector3::new(x[0], x[1], x[2])
}

/// Linear part η.
pub fn eta(x: &ScrewVec) -> Vector3<f64> {
    Vector3::new(x[3], x[4], x[5])
}

/// Skew-symmetric matrix with `skew(a) b = a × b`.
pub fn skew(a: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -a.z, a.y, a.z, 0.0, -a.x, -a.y, a.x, 0.0)
}

/// Inverse of [`skew`] (reads the lower-triangular entries).
pub fn unskew(m: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(m[(2, 1)], m[(0, 2)], m[(1, 0)])
}

/// 4×4 se(3) matrix of a screw.
pub fn hat(x: &ScrewVec) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&skew(&xi(x)));
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(&eta(x));
    m
}

/// Screw coordinates of an se(3) matrix.
///
/// Fails unless the bottom row is zero and the rotational block is
/// skew-symmetric within `1e-9`.
pub fn vee(m: &Matrix4<f64>) -> Result<ScrewVec> {
    let tol = 1e-9;
    let bottom = m.row(3).amax();
    if bottom > tol {
        return Err(Error::NotSe3(format!("bottom row magnitude {bottom:.3e}")));
    }
    let w = m.fixed_view::<3, 3>(0, 0).into_owned();
    let asym = (w + w.transpose()).amax();
    if asym > tol {
        return Err(Error::NotSe3(format!("rotational block not skew ({asym:.3e})")));
    }
    Ok(vee_unchecked(m))
}

/// Screw coordinates of a 4×4 matrix without validation.
pub fn vee_unchecked(m: &Matrix4<f64>) -> ScrewVec {
    let w = m.fixed_view::<3, 3>(0, 0).into_owned();
    screw(&unskew(&w), &Vector3::new(m[(0, 3)], m[(1, 3)], m[(2, 3)]))
}

/// Screw product (Lie bracket) `[X1, X2]`.
pub fn bracket(x1: &ScrewVec, x2: &ScrewVec) -> ScrewVec {
    let (a1, b1) = (xi(x1), eta(x1));
    let (a2, b2) = (xi(x2), eta(x2));
    screw(&a1.cross(&a2), &(b1.cross(&a2) + a1.cross(&b2)))
}

/// Matrix of `ad_X`, so that `ad_matrix(X) * Y = [X, Y]`.
pub fn ad_matrix(x: &ScrewVec) -> Matrix6<f64> {
    let w = skew(&xi(x));
    let v = skew(&eta(x));
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&w);
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&v);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(&w);
    m
}

/// `ad` of a pure rotation rate `ω`: block diagonal `[[ω̃, 0], [0, ω̃]]`.
pub fn ad_rotation(omega: &Vector3<f64>) -> Matrix6<f64> {
    ad_matrix(&screw(omega, &Vector3::zeros()))
}

/// `ad` of a pure translation rate `η`: `[[0, 0], [η̃, 0]]`.
pub fn ad_translation(eta: &Vector3<f64>) -> Matrix6<f64> {
    ad_matrix(&screw(&Vector3::zeros(), eta))
}

/// Adjoint of a pure translation `r`: `[[I, 0], [r̃, I]]`.
pub fn adjoint_translation(r: &Vector3<f64>) -> Matrix6<f64> {
    let mut m = Matrix6::identity();
    m.fixed_view_mut::<3, 3>(3, 0).copy_from(&skew(r));
    m
}

/// Adjoint of a pure rotation `R`: `diag(R, R)`.
pub fn adjoint_rotation(rot: &Matrix3<f64>) -> Matrix6<f64> {
    let mut m = Matrix6::zeros();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(rot);
    m.fixed_view_mut::<3, 3>(3, 3).copy_from(rot);
    m
}

/// Rigid body pose `(R, r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    pub rotation: Matrix3<f64>,
    pub translation: Vector3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Matrix3::identity(), Vector3::zeros())
    }

    pub fn from_translation(r: Vector3<f64>) -> Self {
        Self::new(Matrix3::identity(), r)
    }

    pub fn from_rotation(rot: Matrix3<f64>) -> Self {
        Self::new(rot, Vector3::zeros())
    }

    /// Build from a homogeneous matrix, validating the rotation block.
    pub fn from_matrix(m: &Matrix4<f64>) -> Result<Self> {
        let bottom = (m.fixed_view::<1, 4>(3, 0) - nalgebra::RowVector4::new(0.0, 0.0, 0.0, 1.0)).amax();
        if bottom > TOL_ORTH {
            return Err(Error::InvalidInput(format!(
                "homogeneous matrix bottom row off by {bottom:.3e}"
            )));
        }
        let pose = Self::new(
            m.fixed_view::<3, 3>(0, 0).into_owned(),
            m.fixed_view::<3, 1>(0, 3).into_owned(),
        );
        pose.validate(TOL_ORTH)?;
        Ok(pose)
    }

    pub fn to_matrix(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    /// Check `RᵀR = I` and `det R = 1` within `tol`.
    pub fn validate(&self, tol: f64) -> Result<()> {
        let orth = (self.rotation.transpose() * self.rotation - Matrix3::identity()).amax();
        let det = (self.rotation.determinant() - 1.0).abs();
        if orth > tol || det > tol {
            return Err(Error::InvalidInput(format!(
                "rotation not orthonormal (orthogonality {orth:.3e}, det {det:.3e})"
            )));
        }
        if !self.translation.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("non-finite translation".into()));
        }
        Ok(())
    }

    pub fn inverse(&self) -> Self {
        let rt = self.rotation.transpose();
        Self::new(rt, -(rt * self.translation))
    }

    /// Adjoint matrix `[[R, 0], [r̃R, R]]`.
    pub fn adjoint(&self) -> Matrix6<f64> {
        let mut m = Matrix6::zeros();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation);
        m.fixed_view_mut::<3, 3>(3, 0)
            .copy_from(&(skew(&self.translation) * self.rotation));
        m.fixed_view_mut::<3, 3>(3, 3).copy_from(&self.rotation);
        m
    }

    /// Inverse adjoint, `Ad_C⁻¹ = Ad_{C⁻¹}`.
    pub fn adjoint_inv(&self) -> Matrix6<f64> {
        self.inverse().adjoint()
    }

    /// Transform a screw: `Ad_C X`.
    pub fn transform(&self, x: &ScrewVec) -> ScrewVec {
        let w = self.rotation * xi(x);
        let v = self.rotation * eta(x) + self.translation.cross(&w);
        screw(&w, &v)
    }

    /// Transform a point.
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * p + self.translation
    }
}

impl Mul for Pose {
    type Output = Pose;
    fn mul(self, rhs: Pose) -> Pose {
        Pose::new(
            self.rotation * rhs.rotation,
            self.rotation * rhs.translation + self.translation,
        )
    }
}

impl Mul<&Pose> for &Pose {
    type Output = Pose;
    fn mul(self, rhs: &Pose) -> Pose {
        *self * *rhs
    }
}

/// Pitch class of a screw joint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Pitch {
    Revolute,
    Helical(f64),
    Prismatic,
}

/// Joint axis: unit direction, point on the axis and pitch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitScrew {
    pub axis: Vector3<f64>,
    pub point: Vector3<f64>,
    pub pitch: Pitch,
}

impl UnitScrew {
    /// Build a screw axis, normalizing the direction.
    pub fn new(axis: Vector3<f64>, point: Vector3<f64>, pitch: Pitch) -> Result<Self> {
        let norm = axis.norm();
        if !(norm.is_finite() && norm > 1e-12) {
            return Err(Error::InvalidInput("screw axis has zero length".into()));
        }
        if !point.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("screw point is not finite".into()));
        }
        if let Pitch::Helical(h) = pitch {
            if !h.is_finite() {
                return Err(Error::InvalidInput("helical pitch must be finite".into()));
            }
        }
        Ok(Self {
            axis: axis / norm,
            point,
            pitch,
        })
    }

    pub fn revolute(axis: Vector3<f64>, point: Vector3<f64>) -> Result<Self> {
        Self::new(axis, point, Pitch::Revolute)
    }

    pub fn prismatic(axis: Vector3<f64>) -> Result<Self> {
        Self::new(axis, Vector3::zeros(), Pitch::Prismatic)
    }

    pub fn helical(axis: Vector3<f64>, point: Vector3<f64>, h: f64) -> Result<Self> {
        Self::new(axis, point, Pitch::Helical(h))
    }

    /// Screw coordinates `(e, p×e + h e)`, or `(0, e)` for prismatic joints.
    pub fn to_screwvec(&self) -> ScrewVec {
        match self.pitch {
            Pitch::Revolute => screw(&self.axis, &self.point.cross(&self.axis)),
            Pitch::Helical(h) => screw(&self.axis, &(self.point.cross(&self.axis) + self.axis * h)),
            Pitch::Prismatic => screw(&Vector3::zeros(), &self.axis),
        }
    }

    /// Recover an axis description from screw coordinates.
    ///
    /// Rotational screws are normalized by `‖ξ‖`; the point returned is the
    /// one on the axis closest to the origin.
    pub fn from_screwvec(x: &ScrewVec) -> Result<Self> {
        let w = xi(x);
        let v = eta(x);
        let wn = w.norm();
        if wn < 1e-12 {
            return Self::prismatic(v);
        }
        let e = w / wn;
        let v = v / wn;
        let h = e.dot(&v);
        let point = e.cross(&v);
        let pitch = if h.abs() < 1e-15 {
            Pitch::Revolute
        } else {
            Pitch::Helical(h)
        };
        Self::new(e, point, pitch)
    }
}

/// Rotation `exp(x̃) = I + sinc‖x‖ x̃ + ½ sinc²(‖x‖/2) x̃²`.
///
/// Both coefficients switch to truncated series below `‖x‖ = 1e-4`.
pub fn exp_so3(x: &Vector3<f64>) -> Matrix3<f64> {
    let t2 = x.norm_squared();
    let t = t2.sqrt();
    let (a, b) = if t < SMALL_ANGLE {
        (
            1.0 - t2 / 6.0 + t2 * t2 / 120.0 - t2 * t2 * t2 / 5040.0,
            0.5 - t2 / 24.0 + t2 * t2 / 720.0 - t2 * t2 * t2 / 40320.0,
        )
    } else {
        let s = (0.5 * t).sin() / (0.5 * t);
        (t.sin() / t, 0.5 * s * s)
    };
    let k = skew(x);
    Matrix3::identity() + k * a + k * k * b
}

/// Rotation via `I + sin φ/φ x̃ + (1 − cos φ)/φ² x̃²`.
pub fn exp_so3_rodrigues(x: &Vector3<f64>) -> Matrix3<f64> {
    let t = x.norm();
    if t < SMALL_ANGLE {
        return exp_so3(x);
    }
    let k = skew(x);
    Matrix3::identity() + k * (t.sin() / t) + k * k * ((1.0 - t.cos()) / (t * t))
}

/// Rotation by angle `φ` about unit axis `e`: `I + sin φ ẽ + (1 − cos φ) ẽ²`.
pub fn exp_so3_axis_angle(e: &Vector3<f64>, phi: f64) -> Matrix3<f64> {
    let k = skew(e);
    Matrix3::identity() + k * phi.sin() + k * k * (1.0 - phi.cos())
}

/// Finite screw motion `exp(Ŷ φ)` for a joint axis.
pub fn exp_screw(s: &UnitScrew, phi: f64) -> Pose {
    match s.pitch {
        Pitch::Prismatic => Pose::from_translation(s.axis * phi),
        Pitch::Revolute | Pitch::Helical(_) => {
            let h = if let Pitch::Helical(h) = s.pitch { h } else { 0.0 };
            let rot = exp_so3(&(s.axis * phi));
            let r = (Matrix3::identity() - rot) * s.point + s.axis * (phi * h);
            Pose::new(rot, r)
        }
    }
}

/// Exponential of an arbitrary screw coordinate vector times `phi`.
pub fn exp_twist(x: &ScrewVec, phi: f64) -> Pose {
    let w = xi(x) * phi;
    let v = eta(x) * phi;
    let t2 = w.norm_squared();
    let t = t2.sqrt();
    let rot = exp_so3(&w);
    // Left Jacobian of SO(3): I + (1−cos t)/t² w̃ + (t − sin t)/t³ w̃².
    let (b, c) = if t < SMALL_ANGLE {
        (
            0.5 - t2 / 24.0 + t2 * t2 / 720.0,
            1.0 / 6.0 - t2 / 120.0 + t2 * t2 / 5040.0,
        )
    } else {
        ((1.0 - t.cos()) / t2, (t - t.sin()) / (t2 * t))
    };
    let k = skew(&w);
    let jl = Matrix3::identity() + k * b + k * k * c;
    Pose::new(rot, jl * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hat_of_z_rotation() {
        let m = hat(&ScrewVec::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0));
        assert_eq!(m[(0, 1)], -1.0);
        assert_eq!(m[(1, 0)], 1.0);
        assert_eq!(m.abs().sum(), 2.0);
    }

    #[test]
    fn vee_hat_roundtrip() {
        let x = ScrewVec::new(1.0, 2.0, 3.0, 4.0, 5.0, 6.0);
        assert_eq!(vee(&hat(&x)).unwrap(), x);
        assert!(vee(&Matrix4::identity()).is_err());
    }

    #[test]
    fn exp_so3_quarter_turn() {
        let r = exp_so3(&Vector3::new(0.0, 0.0, std::f64::consts::FRAC_PI_2));
        assert_relative_eq!(r * Vector3::x(), Vector3::y(), epsilon = 1e-15);
        assert_eq!(exp_so3(&Vector3::zeros()), Matrix3::identity());
    }

    #[test]
    fn prismatic_and_revolute_exponentials() {
        let p = UnitScrew::prismatic(Vector3::x()).unwrap();
        assert_eq!(exp_screw(&p, 2.5).translation, Vector3::new(2.5, 0.0, 0.0));
        let r = UnitScrew::revolute(Vector3::z(), Vector3::x()).unwrap();
        let pose = exp_screw(&r, std::f64::consts::PI);
        assert_relative_eq!(pose.translation, Vector3::new(2.0, 0.0, 0.0), epsilon = 1e-15);
        let id = exp_screw(&r, 0.0);
        assert_eq!(id, Pose::identity());
    }

    #[test]
    fn bracket_of_4c_screws() {
        let y1 = ScrewVec::new(1.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        let y3 = ScrewVec::new(0.0, 1.0, 0.0, 0.0, 0.0, 0.0);
        assert_eq!(bracket(&y1, &y3), ScrewVec::new(0.0, 0.0, 1.0, 0.0, 0.0, 0.0));
        assert_eq!(ad_matrix(&y1) * y3, bracket(&y1, &y3));
    }

    #[test]
    fn adjoint_of_translation() {
        let r = Vector3::new(0.3, -1.0, 2.0);
        assert_eq!(Pose::from_translation(r).adjoint(), adjoint_translation(&r));
        assert_eq!(Pose::identity().adjoint(), Matrix6::identity());
    }

    #[test]
    fn screwvec_roundtrip_through_axis() {
        let s = UnitScrew::helical(Vector3::new(0.0, 1.0, 1.0), Vector3::new(1.0, 0.0, 0.0), 0.2).unwrap();
        let back = UnitScrew::from_screwvec(&s.to_screwvec()).unwrap();
        assert_relative_eq!(back.to_screwvec(), s.to_screwvec(), epsilon = 1e-14);
    }

    #[test]
    fn exp_twist_matches_exp_screw() {
        let s = UnitScrew::helical(Vector3::new(1.0, 2.0, -1.0), Vector3::new(0.5, 0.1, 0.0), 0.3).unwrap();
        for phi in [0.0, 1e-6, 0.4, 2.9] {
            let a = exp_screw(&s, phi);
            let b = exp_twist(&s.to_screwvec(), phi);
            assert_relative_eq!(a.rotation, b.rotation, epsilon = 1e-13);
            assert_relative_eq!(a.translation, b.translation, epsilon = 1e-13);
        }
    }
}
