use nalgebra::{DMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::geom::{pose_serde, Capsule, RigidTransform, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointKind {
    Revolute,
    Prismatic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub capsules: Vec<Capsule>,
    #[serde(default)]
    pub grab_radius: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    #[serde(default)]
    pub name: String,
    #[serde(rename = "type")]
    pub kind: JointKind,
    /// Constant transform from the parent link frame to the joint frame.
    #[serde(with = "pose_serde")]
    pub origin: RigidTransform,
    /// Unit axis in the joint frame.
    pub axis: Vec3,
    /// `(lo, hi)` in rad or m.
    pub limits: (f64, f64),
    pub link: Link,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BaseLink {
    capsules: Vec<Capsule>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelFile {
    #[serde(default = "one")]
    version: u32,
    name: String,
    base: BaseLink,
    joints: Vec<Joint>,
    #[serde(with = "pose_serde")]
    tool: RigidTransform,
}

fn one() -> u32 {
    1
}

/// Serial manipulator: joints in order from base to flange, each carrying the link it moves.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicChain {
    pub name: String,
    /// Fixed geometry of the robot base (not part of collision queries between links).
    pub base_capsules: Vec<Capsule>,
    pub joints: Vec<Joint>,
    /// Flange-to-tool transform appended after the last link.
    pub tool: RigidTransform,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointState {
    pub q: Vec<f64>,
}

impl JointState {
    pub fn new(q: Vec<f64>) -> Self {
        Self { q }
    }

    pub fn zeros(n: usize) -> Self {
        Self { q: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }
}

impl From<Vec<f64>> for JointState {
    fn from(q: Vec<f64>) -> Self {
        Self { q }
    }
}

impl KinematicChain {
    pub fn new(
        name: impl Into<String>,
        base_capsules: Vec<Capsule>,
        joints: Vec<Joint>,
        tool: RigidTransform,
    ) -> Result<Self> {
        let chain = Self {
            name: name.into(),
            base_capsules,
            joints,
            tool,
        };
        chain.validate()?;
        Ok(chain)
    }

    pub fn validate(&self) -> Result<()> {
        if self.joints.is_empty() {
            return Err(Error::invalid("a kinematic chain needs at least one joint"));
        }
        for (i, j) in self.joints.iter().enumerate() {
            if (j.axis.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::invalid(format!("joint {i} axis is not unit length")));
            }
            if !(j.limits.0 < j.limits.1) {
                return Err(Error::invalid(format!("joint {i} limits must satisfy lo < hi")));
            }
            if j.link.capsules.iter().any(|c| !(c.radius > 0.0)) {
                return Err(Error::invalid(format!("link {i} has a non-positive capsule radius")));
            }
        }
        Ok(())
    }

    pub fn dof(&self) -> usize {
        self.joints.len()
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile = serde_json::from_str(text)?;
        if file.version != 1 {
            return Err(Error::Version {
                found: file.version,
                expected: 1,
            });
        }
        Self::new(file.name, file.base.capsules, file.joints, file.tool)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            version: 1,
            name: self.name.clone(),
            base: BaseLink {
                capsules: self.base_capsules.clone(),
            },
            joints: self.joints.clone(),
            tool: self.tool,
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn check_len(&self, q: &JointState) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::InvalidConfiguration(format!(
                "expected {} joint values, got {}",
                self.dof(),
                q.len()
            )));
        }
        Ok(())
    }

    pub fn within_limits(&self, q: &JointState) -> bool {
        q.len() == self.dof()
            && self
                .joints
                .iter()
                .zip(&q.q)
                .all(|(j, v)| j.limits.0 <= *v && *v <= j.limits.1)
    }

    pub fn check_limits(&self, q: &JointState) -> Result<()> {
        self.check_len(q)?;
        if !self.within_limits(q) {
            return Err(Error::InvalidConfiguration("joint values outside limits".into()));
        }
        Ok(())
    }

    pub fn clamp(&self, q: &mut JointState) {
        for (v, j) in q.q.iter_mut().zip(&self.joints) {
            *v = v.clamp(j.limits.0, j.limits.1);
        }
    }

    /// Joint frames (before each joint's own motion) and link frames, both base-relative.
    pub(crate) fn frames(&self, q: &JointState) -> (Vec<RigidTransform>, Vec<RigidTransform>) {
        let mut joint_frames = Vec::with_capacity(self.dof());
        let mut link_frames = Vec::with_capacity(self.dof());
        let mut parent = RigidTransform::identity();
        for (j, &v) in self.joints.iter().zip(&q.q) {
            let jf = parent.compose(&j.origin);
            let motion = match j.kind {
                JointKind::Revolute => RigidTransform::from_axis_angle(&j.axis, v),
                JointKind::Prismatic => RigidTransform::from_translation(j.axis * v),
            };
            parent = jf.compose(&motion);
            joint_frames.push(jf);
            link_frames.push(parent);
        }
        (joint_frames, link_frames)
    }

    /// Link capsules in the base frame as `(link index, capsule)`.
    pub fn link_capsules(&self, q: &JointState) -> Result<Vec<(usize, Capsule)>> {
        self.check_len(q)?;
        let (_, links) = self.frames(q);
        Ok(self
            .joints
            .iter()
            .zip(&links)
            .enumerate()
            .flat_map(|(i, (j, f))| j.link.capsules.iter().map(move |c| (i, c.transformed(f))))
            .collect())
    }

    /// Base and link capsules in the base frame.
    pub fn all_capsules(&self, q: &JointState) -> Result<Vec<Capsule>> {
        let mut caps = self.base_capsules.clone();
        caps.extend(self.link_capsules(q)?.into_iter().map(|(_, c)| c));
        Ok(caps)
    }

    /// Upper bound on the distance from the base origin to any point of the robot.
    pub fn reach_bound(&self) -> f64 {
        let mut r = 0.0;
        for j in &self.joints {
            r += j.origin.translation.norm();
            if j.kind == JointKind::Prismatic {
                r += j.limits.0.abs().max(j.limits.1.abs());
            }
        }
        let link_extent = self
            .joints
            .iter()
            .flat_map(|j| j.link.capsules.iter())
            .map(|c| c.p0.norm().max(c.p1.norm()) + c.radius)
            .fold(0.0, f64::max);
        r + link_extent.max(self.tool.translation.norm())
    }
}

/// `base_from_link` for every link, then the tool frame.
pub fn fk(chain: &KinematicChain, q: &JointState) -> Result<Vec<RigidTransform>> {
    chain.check_len(q)?;
    let (_, mut links) = chain.frames(q);
    let tool = links.last().expect("at least one joint").compose(&chain.tool);
    links.push(tool);
    Ok(links)
}

/// Geometric Jacobian (rows: linear, angular) of a point fixed to `link`.
///
/// `link` ranges over `0..=dof`, where `dof` is the tool frame. Joints distal to the link
/// contribute zero columns.
pub fn jacobian(
    chain: &KinematicChain,
    q: &JointState,
    link: usize,
    local_point: &Vec3,
) -> Result<DMatrix<f64>> {
    chain.check_len(q)?;
    let n = chain.dof();
    if link > n {
        return Err(Error::invalid(format!("link index {link} out of range 0..={n}")));
    }
    let (joint_frames, mut links) = chain.frames(q);
    links.push(links[n - 1].compose(&chain.tool));
    let p = links[link].apply(local_point);
    let mut jac = DMatrix::zeros(6, n);
    for (i, (joint, jf)) in chain.joints.iter().zip(&joint_frames).enumerate().take((link + 1).min(n)) {
        let w = jf.apply_vector(&joint.axis);
        let (lin, ang) = match joint.kind {
            JointKind::Revolute => (w.cross(&(p - jf.translation)), w),
            JointKind::Prismatic => (w, Vector3::zeros()),
        };
        jac.fixed_view_mut::<3, 1>(0, i).copy_from(&lin);
        jac.fixed_view_mut::<3, 1>(3, i).copy_from(&ang);
    }
    Ok(jac)
}

pub const BUNDLED_MODELS: [&str; 2] = ["planar_2r", "kr6_like"];

/// Loads one of the bundled robot models by name.
pub fn robot_model(name: &str) -> Result<KinematicChain> {
    let text = match name {
        "planar_2r" => include_str!("../../models/planar_2r.json"),
        "kr6_like" => include_str!("../../models/kr6_like.json"),
        other => return Err(Error::ModelNotFound(other.to_string())),
    };
    KinematicChain::from_json(text)
}
