use nalgebra::{Matrix3, Rotation3, Unit, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::{PointCloud, Vec3};

/// Rigid body transform `p ↦ R·p + t`.
///
/// Naming follows `a_from_b`: a transform named `robot_from_world` maps
/// world coordinates into the robot base frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RigidTransform {
    pub rotation: Matrix3<f64>,
    pub translation: Vec3,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn new(rotation: Matrix3<f64>, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_translation(translation: Vec3) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Rotation of `angle` radians about `axis` (normalized internally).
    pub fn from_axis_angle(axis: &Vec3, angle: f64) -> Self {
        let rot = Rotation3::from_axis_angle(&Unit::new_normalize(*axis), angle);
        Self::from_rotation(*rot.matrix())
    }

    pub fn from_rotation(rotation: Matrix3<f64>) -> Self {
        Self {
            rotation,
            translation: Vector3::zeros(),
        }
    }

    pub fn rot_z(angle: f64) -> Self {
        Self::from_axis_angle(&Vector3::z(), angle)
    }

    /// Builds a transform from a unit quaternion given as `[w, x, y, z]`.
    pub fn from_quaternion(q: [f64; 4], translation: Vec3) -> Self {
        let uq = UnitQuaternion::from_quaternion(nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]));
        Self {
            rotation: *uq.to_rotation_matrix().matrix(),
            translation,
        }
    }

    /// Unit quaternion `[w, x, y, z]` with non-negative `w`.
    pub fn quaternion(&self) -> [f64; 4] {
        let rot = Rotation3::from_matrix_unchecked(self.rotation);
        let q = UnitQuaternion::from_rotation_matrix(&rot);
        let q = if q.w < 0.0 { -q.into_inner() } else { q.into_inner() };
        [q.w, q.i, q.j, q.k]
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    pub fn apply_cloud(&self, cloud: &PointCloud) -> PointCloud {
        PointCloud::new(cloud.points.iter().map(|p| self.apply(p)).collect())
    }

    /// Rotation angle of `R` in `[0, π]`.
    pub fn rotation_angle(&self) -> f64 {
        let c = ((self.rotation.trace() - 1.0) * 0.5).clamp(-1.0, 1.0);
        c.acos()
    }

    /// Axis-angle vector (rotation log) of `R`.
    pub fn rotation_log(&self) -> Vec3 {
        rotation_log(&self.rotation)
    }

    /// Translation distance and rotation angle of `self⁻¹ ∘ other`.
    pub fn error_to(&self, other: &RigidTransform) -> (f64, f64) {
        let d = self.inverse().compose(other);
        ((self.translation - other.translation).norm(), d.rotation_angle())
    }

    /// Projects the rotation back onto SO(3) (nearest orthonormal matrix).
    pub fn orthonormalized(&self) -> RigidTransform {
        let svd = self.rotation.svd(true, true);
        let (u, vt) = (svd.u.unwrap(), svd.v_t.unwrap());
        let mut r = u * vt;
        if r.determinant() < 0.0 {
            let mut d = Matrix3::identity();
            d[(2, 2)] = -1.0;
            r = u * d * vt;
        }
        RigidTransform::new(r, self.translation)
    }

    /// Largest deviation from `RᵀR = I` and `det R = 1`.
    pub fn orthonormality_error(&self) -> f64 {
        let e = (self.rotation.transpose() * self.rotation - Matrix3::identity()).abs().max();
        e.max((self.rotation.determinant() - 1.0).abs())
    }
}

/// Axis-angle vector of a rotation matrix, robust near 0 and π.
pub fn rotation_log(r: &Matrix3<f64>) -> Vec3 {
    let rot = Rotation3::from_matrix_unchecked(*r);
    match UnitQuaternion::from_rotation_matrix(&rot).axis_angle() {
        Some((axis, angle)) => axis.into_inner() * angle,
        None => Vector3::zeros(),
    }
}

/// JSON pose form used by hand-edited files: position plus unit quaternion `[w, x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub position: [f64; 3],
    pub quaternion: [f64; 4],
}

impl From<&RigidTransform> for Pose {
    fn from(t: &RigidTransform) -> Self {
        Pose {
            position: [t.translation.x, t.translation.y, t.translation.z],
            quaternion: t.quaternion(),
        }
    }
}

impl From<&Pose> for RigidTransform {
    fn from(p: &Pose) -> Self {
        RigidTransform::from_quaternion(p.quaternion, Vector3::from(p.position))
    }
}

/// Serde adapter storing a [`RigidTransform`] as a [`Pose`].
pub mod pose_serde {
    use super::{Pose, RigidTransform};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(t: &RigidTransform, s: S) -> Result<S::Ok, S::Error> {
        Pose::from(t).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<RigidTransform, D::Error> {
        let p = Pose::deserialize(d)?;
        Ok(RigidTransform::from(&p))
    }
}
