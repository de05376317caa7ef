//! Hand position tracking from wrist IMU dead reckoning and intermittent HMD observations.
//!
//! The state is position, velocity and accelerometer bias (9 values). The IMU delivers
//! gravity-compensated accelerations in the world frame, so no attitude is estimated.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::geom::{RigidTransform, Vec3};
use crate::{Error, Result};

pub type Matrix9 = SMatrix<f64, 9, 9>;
type Vector9 = SVector<f64, 9>;
type Matrix3x9 = SMatrix<f64, 3, 9>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ImuSample {
    pub t: f64,
    /// Gravity-compensated acceleration in the world frame (m/s²).
    pub accel_world: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandObservation {
    pub t: f64,
    pub position: Vec3,
    /// Standard deviation of each coordinate (m).
    pub noise_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionState {
    pub position: Vec3,
    pub velocity: Vec3,
    pub accel_bias: Vec3,
    /// Covariance of `[position, velocity, accel_bias]`.
    pub covariance: Matrix9,
}

impl FusionState {
    /// State at `position` at rest with diagonal standard deviations for each block.
    pub fn new(position: Vec3, position_std: f64, velocity_std: f64, bias_std: f64) -> Self {
        let mut cov = Matrix9::zeros();
        for i in 0..3 {
            cov[(i, i)] = position_std * position_std;
            cov[(i + 3, i + 3)] = velocity_std * velocity_std;
            cov[(i + 6, i + 6)] = bias_std * bias_std;
        }
        Self { position, velocity: Vector3::zeros(), accel_bias: Vector3::zeros(), covariance: cov }
    }

    fn vector(&self) -> Vector9 {
        let mut x = Vector9::zeros();
        x.fixed_rows_mut::<3>(0).copy_from(&self.position);
        x.fixed_rows_mut::<3>(3).copy_from(&self.velocity);
        x.fixed_rows_mut::<3>(6).copy_from(&self.accel_bias);
        x
    }

    fn set_vector(&mut self, x: &Vector9) {
        self.position = x.fixed_rows::<3>(0).into_owned();
        self.velocity = x.fixed_rows::<3>(3).into_owned();
        self.accel_bias = x.fixed_rows::<3>(6).into_owned();
    }

    pub fn position_variance(&self) -> Vec3 {
        Vector3::new(self.covariance[(0, 0)], self.covariance[(1, 1)], self.covariance[(2, 2)])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProcessNoise {
    /// White acceleration noise density (m/s²/√Hz).
    pub accel_std: f64,
    /// Bias random-walk density (m/s³/√Hz).
    pub bias_walk_std: f64,
}

impl Default for ProcessNoise {
    fn default() -> Self {
        Self { accel_std: 0.05, bias_walk_std: 1e-3 }
    }
}

fn transition(dt: f64) -> Matrix9 {
    let i3 = Matrix3::identity();
    let mut f = Matrix9::identity();
    f.fixed_view_mut::<3, 3>(0, 3).copy_from(&(i3 * dt));
    f.fixed_view_mut::<3, 3>(0, 6).copy_from(&(i3 * (-0.5 * dt * dt)));
    f.fixed_view_mut::<3, 3>(3, 6).copy_from(&(i3 * -dt));
    f
}

fn symmetrize(m: &Matrix9) -> Matrix9 {
    (m + m.transpose()) * 0.5
}

fn integrate(state: &FusionState, accel: &Vec3, dt: f64) -> (Vec3, Vec3) {
    let a = accel - state.accel_bias;
    (state.position + state.velocity * dt + a * (0.5 * dt * dt), state.velocity + a * dt)
}

/// Propagates the state through `p += v·dt + ½(a − b)dt²`, `v += (a − b)dt` with constant
/// bias; the covariance follows the same linear model plus acceleration and bias noise.
pub fn predict(state: &FusionState, imu: &ImuSample, dt: f64, noise: &ProcessNoise) -> Result<FusionState> {
    if !(dt > 0.0) {
        return Err(Error::invalid("prediction step must be > 0"));
    }
    let (position, velocity) = integrate(state, &imu.accel_world, dt);
    let f = transition(dt);
    // acceleration noise enters like a bias change over one step; the bias walks independently
    let qa = noise.accel_std * noise.accel_std * dt;
    let qb = noise.bias_walk_std * noise.bias_walk_std * dt;
    let mut g = SMatrix::<f64, 9, 3>::zeros();
    g.fixed_view_mut::<3, 3>(0, 0).copy_from(&(Matrix3::identity() * (0.5 * dt * dt)));
    g.fixed_view_mut::<3, 3>(3, 0).copy_from(&(Matrix3::identity() * dt));
    let mut q = g * g.transpose() * (qa / (dt * dt));
    for i in 6..9 {
        q[(i, i)] += qb;
    }
    Ok(FusionState {
        position,
        velocity,
        accel_bias: state.accel_bias,
        covariance: symmetrize(&(f * state.covariance * f.transpose() + q)),
    })
}

/// Kalman update with a direct position measurement, using the Joseph form
/// `P⁺ = (I − KH)P(I − KH)ᵀ + KRKᵀ` so that the covariance stays symmetric PSD.
pub fn update_hand(state: &FusionState, obs: &HandObservation) -> Result<FusionState> {
    if !(obs.noise_std >= 0.0) {
        return Err(Error::invalid("observation noise must be >= 0"));
    }
    let mut h = Matrix3x9::zeros();
    h.fixed_view_mut::<3, 3>(0, 0).copy_from(&Matrix3::identity());
    let r = Matrix3::identity() * (obs.noise_std * obs.noise_std);
    let p = &state.covariance;
    let s = h * p * h.transpose() + r;
    let Some(s_inv) = s.try_inverse() else {
        return Err(Error::DegenerateInput("innovation covariance is singular"));
    };
    let k = p * h.transpose() * s_inv;
    let x = state.vector() + k * (obs.position - state.position);
    let ikh = Matrix9::identity() - k * h;
    let cov = ikh * p * ikh.transpose() + k * r * k.transpose();
    let mut out = FusionState { covariance: symmetrize(&cov), ..*state };
    out.set_vector(&x);
    Ok(out)
}

/// Covariance-free alternative: integrates the IMU like [`predict`], then pulls the position
/// towards an available observation by `gain` (`p ← (1 − g)·p + g·obs`). The covariance of
/// the returned state is zero.
pub fn complementary_step(
    state: &FusionState,
    imu: &ImuSample,
    obs: Option<&HandObservation>,
    dt: f64,
    gain: f64,
) -> Result<FusionState> {
    if !(dt > 0.0) {
        return Err(Error::invalid("step must be > 0"));
    }
    if !(0.0..=1.0).contains(&gain) {
        return Err(Error::invalid("crossover gain must be in [0, 1]"));
    }
    let (mut position, velocity) = integrate(state, &imu.accel_world, dt);
    if let Some(o) = obs {
        position = position * (1.0 - gain) + o.position * gain;
    }
    Ok(FusionState { position, velocity, accel_bias: state.accel_bias, covariance: Matrix9::zeros() })
}

/// Whether `point` lies in the viewing frustum of `head` (`world_from_head`, looking along
/// head +x with +z up). Bounds are inclusive.
pub fn in_fov(head: &RigidTransform, point: &Vec3, half_angles: (f64, f64)) -> bool {
    let local = head.inverse().apply(point);
    if local.x <= 0.0 {
        return false;
    }
    let azimuth = local.y.atan2(local.x);
    let elevation = local.z.atan2(local.x);
    const TOL: f64 = 1e-12;
    azimuth.abs() <= half_angles.0 + TOL && elevation.abs() <= half_angles.1 + TOL
}

/// Runs [`predict`] and, when given, [`update_hand`].
pub fn kalman_step(
    state: &FusionState,
    imu: &ImuSample,
    obs: Option<&HandObservation>,
    dt: f64,
    noise: &ProcessNoise,
) -> Result<FusionState> {
    let predicted = predict(state, imu, dt, noise)?;
    match obs {
        Some(o) => update_hand(&predicted, o),
        None => Ok(predicted),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(x: f64, y: f64, z: f64) -> Vec3 {
        Vector3::new(x, y, z)
    }

    fn imu(a: Vec3) -> ImuSample {
        ImuSample { t: 0.0, accel_world: a }
    }

    fn quiet() -> ProcessNoise {
        ProcessNoise { accel_std: 0.0, bias_walk_std: 0.0 }
    }

    #[test]
    fn rest_stays_put() {
        let s = FusionState::new(v(0.1, 0.2, 0.3), 0.0, 0.0, 0.0);
        let out = predict(&s, &imu(Vector3::zeros()), 0.01, &quiet()).unwrap();
        assert_eq!(out.position, s.position);
    }

    #[test]
    fn constant_acceleration_is_exact() {
        let mut s = FusionState::new(Vector3::zeros(), 0.0, 0.0, 0.0);
        for _ in 0..1000 {
            s = predict(&s, &imu(v(1.0, 0.0, 0.0)), 0.001, &quiet()).unwrap();
        }
        assert!((s.position - v(0.5, 0.0, 0.0)).norm() < 1e-6);
        assert!((s.velocity - v(1.0, 0.0, 0.0)).norm() < 1e-9);
    }

    #[test]
    fn bias_drifts_quadratically() {
        let mut s = FusionState::new(Vector3::zeros(), 0.0, 0.0, 0.0);
        s.accel_bias = v(0.1, 0.0, 0.0);
        for _ in 0..10_000 {
            s = predict(&s, &imu(Vector3::zeros()), 0.001, &quiet()).unwrap();
        }
        assert!((s.position - v(-5.0, 0.0, 0.0)).norm() < 1e-6);
    }

    #[test]
    fn scalar_kalman_algebra() {
        let s = FusionState::new(Vector3::zeros(), 1.0, 0.0, 0.0);
        let obs = HandObservation { t: 0.0, position: v(1.0, 1.0, 1.0), noise_std: 1.0 };
        let out = update_hand(&s, &obs).unwrap();
        assert!((out.position - v(0.5, 0.5, 0.5)).norm() < 1e-12);
        for i in 0..3 {
            assert!((out.covariance[(i, i)] - 0.5).abs() < 1e-12);
        }
        assert!(out.covariance.trace() < s.covariance.trace());
    }

    #[test]
    fn exact_observation_wins() {
        let s = FusionState::new(v(0.3, 0.0, 0.0), 0.2, 0.1, 0.01);
        let obs = HandObservation { t: 0.0, position: v(1.0, 2.0, 3.0), noise_std: 0.0 };
        let out = update_hand(&s, &obs).unwrap();
        assert!((out.position - obs.position).norm() < 1e-12);
    }

    #[test]
    fn zero_innovation_shrinks_covariance() {
        let s = FusionState::new(v(0.3, 0.1, 0.0), 0.2, 0.1, 0.01);
        let obs = HandObservation { t: 0.0, position: s.position, noise_std: 0.05 };
        let out = update_hand(&s, &obs).unwrap();
        assert_eq!(out.position, s.position);
        assert!(out.covariance.trace() < s.covariance.trace());
    }

    #[test]
    fn complementary_blend() {
        let s = FusionState::new(Vector3::zeros(), 0.1, 0.0, 0.0);
        let obs = HandObservation { t: 0.0, position: v(1.0, 0.0, 0.0), noise_std: 0.01 };
        let z = imu(Vector3::zeros());
        let half = complementary_step(&s, &z, Some(&obs), 0.01, 0.5).unwrap();
        assert!((half.position - v(0.5, 0.0, 0.0)).norm() < 1e-15);
        assert_eq!(complementary_step(&s, &z, Some(&obs), 0.01, 1.0).unwrap().position, obs.position);
        let a = imu(v(0.3, -0.2, 0.1));
        let free = complementary_step(&s, &a, Some(&obs), 0.01, 0.0).unwrap();
        let pred = predict(&s, &a, 0.01, &ProcessNoise::default()).unwrap();
        assert_eq!(free.position, pred.position);
        assert_eq!(free.velocity, pred.velocity);
        assert_eq!(free.covariance, Matrix9::zeros());
    }

    #[test]
    fn field_of_view() {
        let head = RigidTransform::from_translation(v(0.0, 0.0, 1.5));
        let h = 0.5;
        assert!(in_fov(&head, &v(1.0, 0.0, 1.5), (h, h)));
        assert!(!in_fov(&head, &v(-1.0, 0.0, 1.5), (h, h)));
        assert!(in_fov(&head, &v(h.cos(), h.sin(), 1.5), (h, 0.3)));
        assert!(!in_fov(&head, &v(1.0, 0.0, 2.5), (h, 0.3)));
        let turned = RigidTransform::from_translation(v(0.0, 0.0, 1.5)).compose(&RigidTransform::rot_z(std::f64::consts::FRAC_PI_2));
        assert!(in_fov(&turned, &v(0.0, 1.0, 1.5), (h, h)));
    }

    proptest! {
        #[test]
        fn covariance_stays_symmetric_psd(
            steps in prop::collection::vec((prop::array::uniform3(-3.0f64..3.0), any::<bool>(), 0.001f64..0.2), 1..200)
        ) {
            let mut s = FusionState::new(Vector3::zeros(), 0.1, 0.1, 0.05);
            for (a, seen, noise) in steps {
                let obs = HandObservation { t: 0.0, position: Vector3::from(a) * 0.1, noise_std: noise };
                s = kalman_step(&s, &imu(Vector3::from(a)), seen.then_some(&obs), 0.01, &ProcessNoise::default()).unwrap();
            }
            let c = s.covariance;
            prop_assert!((c - c.transpose()).amax() < 1e-9);
            let eig = c.symmetric_eigen();
            prop_assert!(eig.eigenvalues.min() > -1e-9);
        }
    }
}
