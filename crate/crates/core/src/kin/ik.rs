use nalgebra::{DVector, Matrix6, Vector6};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{fk, jacobian, JointState, KinematicChain};
use crate::geom::{rotation_log, RigidTransform, Vec3};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IkParams {
    /// Damping λ of `Jᵀ(JJᵀ + λ²I)⁻¹`.
    pub damping: f64,
    pub max_iterations: usize,
    pub position_tolerance: f64,
    pub orientation_tolerance: f64,
    /// Largest joint change per iteration (rad or m); larger steps are scaled down.
    pub step_limit: f64,
    /// Extra attempts from seeded random configurations when the first one fails.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for IkParams {
    fn default() -> Self {
        Self {
            damping: 0.02,
            max_iterations: 200,
            position_tolerance: 1e-5,
            orientation_tolerance: 1e-4,
            step_limit: 0.2,
            restarts: 64,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IkSolution {
    pub q: JointState,
    pub converged: bool,
    pub iterations: usize,
    pub position_error: f64,
    pub orientation_error: f64,
}

/// Position error and rotation-log error vector of the tool at `current` towards `target`.
pub fn pose_error(target: &RigidTransform, current: &RigidTransform) -> (Vec3, Vec3) {
    (
        target.translation - current.translation,
        rotation_log(&(target.rotation * current.rotation.transpose())),
    )
}

fn attempt(chain: &KinematicChain, target: &RigidTransform, q0: JointState, p: &IkParams) -> Result<IkSolution> {
    let n = chain.dof();
    let mut q = q0;
    let mut best: Option<IkSolution> = None;
    let lambda2 = p.damping * p.damping;
    for it in 0..=p.max_iterations {
        let ee = *fk(chain, &q)?.last().expect("tool frame");
        let (ep, eo) = pose_error(target, &ee);
        let sol = IkSolution {
            q: q.clone(),
            converged: ep.norm() < p.position_tolerance && eo.norm() < p.orientation_tolerance,
            iterations: it,
            position_error: ep.norm(),
            orientation_error: eo.norm(),
        };
        if sol.converged {
            return Ok(sol);
        }
        if best
            .as_ref()
            .is_none_or(|b| sol.position_error + sol.orientation_error < b.position_error + b.orientation_error)
        {
            best = Some(sol);
        }
        if it == p.max_iterations {
            break;
        }
        let jac = jacobian(chain, &q, n, &Vec3::zeros())?;
        let e = Vector6::new(ep.x, ep.y, ep.z, eo.x, eo.y, eo.z);
        let jjt: Matrix6<f64> = (&jac * jac.transpose()).fixed_view::<6, 6>(0, 0).into_owned()
            + Matrix6::identity() * lambda2;
        let Some(chol) = jjt.cholesky() else { break };
        let y = chol.solve(&e);
        let mut dq: DVector<f64> = jac.transpose() * DVector::from_column_slice(y.as_slice());
        let largest = dq.amax();
        if largest > p.step_limit {
            dq *= p.step_limit / largest;
        }
        for (v, d) in q.q.iter_mut().zip(dq.iter()) {
            *v += d;
        }
        chain.clamp(&mut q);
    }
    Ok(best.expect("at least one evaluation"))
}

/// Damped least squares IK for the tool frame.
///
/// Iterates `Δq = Jᵀ(JJᵀ + λ²I)⁻¹·e` with `e` stacking the position error and the rotation log
/// of `R_target·R_currentᵀ`; steps are capped at `step_limit` and joints clamped to their
/// limits. If the attempt from `q0` fails, up to `restarts` further attempts start from
/// seeded random configurations. Non-convergence is reported through the flag together with
/// the best configuration found.
pub fn ik_solve(
    chain: &KinematicChain,
    target: &RigidTransform,
    q0: &JointState,
    params: &IkParams,
) -> Result<IkSolution> {
    chain.check_len(q0)?;
    let mut start = q0.clone();
    chain.clamp(&mut start);
    let mut best = attempt(chain, target, start, params)?;
    if best.converged {
        return Ok(best);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    for _ in 0..params.restarts {
        let q = JointState::new(
            chain
                .joints
                .iter()
                .map(|j| rng.random_range(j.limits.0..=j.limits.1))
                .collect(),
        );
        let sol = attempt(chain, target, q, params)?;
        if sol.converged {
            return Ok(sol);
        }
        if sol.position_error + sol.orientation_error < best.position_error + best.orientation_error {
            best = sol;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kin::robot_model;
    use nalgebra::Vector3;

    #[test]
    fn fixed_point_returns_start() {
        let m = robot_model("kr6_like").unwrap();
        let q0 = JointState::new(vec![0.1, 0.2, -0.3, 0.4, 0.5, -0.6]);
        let target = *fk(&m, &q0).unwrap().last().unwrap();
        let s = ik_solve(&m, &target, &q0, &IkParams::default()).unwrap();
        assert!(s.converged);
        assert!(s.iterations <= 1);
        assert_eq!(s.q, q0);
    }

    #[test]
    fn nearby_target_converges() {
        let m = robot_model("kr6_like").unwrap();
        let q_star = JointState::new(vec![0.5, 0.3, 0.4, -0.8, 0.9, 0.2]);
        let target = *fk(&m, &q_star).unwrap().last().unwrap();
        let q0 = JointState::new(q_star.q.iter().map(|v| v + 0.1).collect());
        let p = IkParams { restarts: 0, ..IkParams::default() };
        let s = ik_solve(&m, &target, &q0, &p).unwrap();
        assert!(s.converged, "{s:?}");
        let reached = *fk(&m, &s.q).unwrap().last().unwrap();
        let (dt, dr) = reached.error_to(&target);
        assert!(dt < p.position_tolerance && dr < p.orientation_tolerance);
        assert!(m.within_limits(&s.q));
    }

    #[test]
    fn unreachable_target_reports_failure() {
        let m = robot_model("planar_2r").unwrap();
        let target = RigidTransform::from_translation(Vector3::new(3.0, 0.0, 0.0));
        let p = IkParams { restarts: 2, max_iterations: 100, ..IkParams::default() };
        let s = ik_solve(&m, &target, &JointState::zeros(2), &p).unwrap();
        assert!(!s.converged);
        assert!(m.within_limits(&s.q));
    }
}
