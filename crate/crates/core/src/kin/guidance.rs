use serde::{Deserialize, Serialize};

use super::{JointKind, JointState, KinematicChain};
use crate::geom::Vec3;
use crate::{Error, Result};

/// A hand holding `link` at `point` (base frame).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grab {
    pub link: usize,
    pub point: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Propagation {
    /// Parent joint first, then its ancestors towards the base.
    #[default]
    Proximal,
    /// Base joint first, ending at the parent joint.
    Distal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceParams {
    /// Regularizer added to `cᵀc` (m²).
    pub lambda: f64,
    pub propagation: Propagation,
    /// Largest accepted displacement per step (m).
    pub max_step: f64,
}

impl Default for GuidanceParams {
    fn default() -> Self {
        Self {
            lambda: 1e-6,
            propagation: Propagation::Proximal,
            max_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuidanceOutcome {
    pub q: JointState,
    /// Displacement no joint could absorb.
    pub residual: Vec3,
    /// `‖d‖` before the first joint and after each joint visited.
    pub residual_trace: Vec<f64>,
}

/// Link whose capsule surface is nearest to `hand`, if within that link's grab radius.
/// Equal distances resolve to the more distal link.
pub fn grab_detect(chain: &KinematicChain, q: &JointState, hand: &Vec3) -> Result<Option<usize>> {
    let caps = chain.link_capsules(q)?;
    let mut dist = vec![f64::INFINITY; chain.dof()];
    for (link, c) in caps {
        dist[link] = dist[link].min(c.signed_distance(hand).max(0.0));
    }
    let mut best: Option<(usize, f64)> = None;
    for (link, &d) in dist.iter().enumerate() {
        if d <= chain.joints[link].link.grab_radius && best.is_none_or(|(_, b)| d <= b) {
            best = Some((link, d));
        }
    }
    Ok(best.map(|(l, _)| l))
}

/// Moves the grabbed point by `delta` one joint at a time.
///
/// The parent joint of the grabbed link takes the projection `Δq = cᵀd / (cᵀc + λ)` of the
/// remaining displacement `d` onto its linear Jacobian column `c` (clamped to limits); what it
/// cannot absorb is passed on to the next joint. Columns are evaluated at the starting
/// configuration. Propagation stops at the end of the chain or once `‖d‖ < 1e-6 m`.
pub fn hand_guidance_step(
    chain: &KinematicChain,
    q: &JointState,
    grab: &Grab,
    delta: &Vec3,
    params: &GuidanceParams,
) -> Result<GuidanceOutcome> {
    chain.check_len(q)?;
    if grab.link >= chain.dof() {
        return Err(Error::invalid(format!("link index {} out of range", grab.link)));
    }
    if delta.norm() > params.max_step {
        return Err(Error::invalid("guidance displacement exceeds the per-step cap"));
    }
    if !(params.lambda >= 0.0) {
        return Err(Error::invalid("guidance regularizer must be >= 0"));
    }
    let (joint_frames, _) = chain.frames(q);
    let order: Vec<usize> = match params.propagation {
        Propagation::Proximal => (0..=grab.link).rev().collect(),
        Propagation::Distal => (0..=grab.link).collect(),
    };
    let mut out = q.clone();
    let mut d = *delta;
    let mut trace = vec![d.norm()];
    for j in order {
        if d.norm() < 1e-6 {
            break;
        }
        let joint = &chain.joints[j];
        let jf = &joint_frames[j];
        let w = jf.apply_vector(&joint.axis);
        let c = match joint.kind {
            JointKind::Revolute => w.cross(&(grab.point - jf.translation)),
            JointKind::Prismatic => w,
        };
        let denom = c.dot(&c) + params.lambda;
        if denom > 0.0 {
            let wanted = c.dot(&d) / denom;
            let moved = (out.q[j] + wanted).clamp(joint.limits.0, joint.limits.1);
            let applied = moved - out.q[j];
            out.q[j] = moved;
            d -= c * applied;
        }
        trace.push(d.norm());
    }
    Ok(GuidanceOutcome {
        q: out,
        residual: d,
        residual_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kin::robot_model;
    use nalgebra::Vector3;

    fn exact() -> GuidanceParams {
        GuidanceParams {
            lambda: 0.0,
            ..GuidanceParams::default()
        }
    }

    #[test]
    fn perpendicular_drag_moves_parent_joint() {
        let m = robot_model("planar_2r").unwrap();
        let grab = Grab { link: 0, point: Vector3::new(1.0, 0.0, 0.0) };
        let out = hand_guidance_step(&m, &JointState::zeros(2), &grab, &Vector3::new(0.0, 0.1, 0.0), &exact()).unwrap();
        assert!((out.q.q[0] - 0.1).abs() < 1e-9);
        assert_eq!(out.q.q[1], 0.0);
    }

    #[test]
    fn radial_drag_is_a_no_op() {
        let m = robot_model("planar_2r").unwrap();
        let grab = Grab { link: 1, point: Vector3::new(2.0, 0.0, 0.0) };
        let out = hand_guidance_step(&m, &JointState::zeros(2), &grab, &Vector3::new(-0.1, 0.0, 0.0), &exact()).unwrap();
        assert_eq!(out.q.q, vec![0.0, 0.0]);
        assert!((out.residual.norm() - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_delta_keeps_configuration() {
        let m = robot_model("kr6_like").unwrap();
        let q = JointState::new(vec![0.2; 6]);
        let grab = Grab { link: 3, point: Vector3::new(0.5, 0.1, 0.8) };
        let out = hand_guidance_step(&m, &q, &grab, &Vector3::zeros(), &GuidanceParams::default()).unwrap();
        assert_eq!(out.q, q);
    }

    #[test]
    fn invalid_link_and_oversized_step() {
        let m = robot_model("planar_2r").unwrap();
        let q = JointState::zeros(2);
        let bad = Grab { link: 2, point: Vector3::zeros() };
        assert!(matches!(
            hand_guidance_step(&m, &q, &bad, &Vector3::zeros(), &exact()),
            Err(Error::InvalidParameter(_))
        ));
        let ok = Grab { link: 1, point: Vector3::new(2.0, 0.0, 0.0) };
        assert!(hand_guidance_step(&m, &q, &ok, &Vector3::new(0.0, 0.2, 0.0), &exact()).is_err());
    }

    #[test]
    fn grab_detection() {
        let m = robot_model("planar_2r").unwrap();
        let q = JointState::zeros(2);
        assert_eq!(grab_detect(&m, &q, &Vector3::new(0.5, 0.05, 0.0)).unwrap(), Some(0));
        assert_eq!(grab_detect(&m, &q, &Vector3::new(1.5, 0.0, 0.05)).unwrap(), Some(1));
        assert_eq!(grab_detect(&m, &q, &Vector3::new(0.5, 1.0, 0.0)).unwrap(), None);
        // the elbow is on both capsules: tie goes to the distal link
        assert_eq!(grab_detect(&m, &q, &Vector3::new(1.0, 0.08, 0.0)).unwrap(), Some(1));
    }
}
