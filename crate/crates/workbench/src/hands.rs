//! Simulated hand motion, wrist IMU and FOV-gated HMD hand observations, plus filter replay.

use std::f64::consts::TAU;
use std::fmt::Write as _;

use arcell_core::fusion::{complementary_step, in_fov, kalman_step, FusionState, HandObservation, ImuSample, ProcessNoise};
use arcell_core::geom::{pose_serde, RigidTransform, Vec3};
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::Result;

fn invalid(msg: &str) -> crate::Error {
    arcell_core::Error::InvalidParameter(msg.to_string()).into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum HandPath {
    /// `center + Σ aₖ sin(ωₖt + φₖ)` per axis, with amplitudes, frequencies and phases drawn
    /// from the session seed.
    Sinusoids { center: Vec3, components: usize, amplitude: f64, max_frequency: f64 },
    ConstantVelocity { start: Vec3, velocity: Vec3 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandSessionSpec {
    pub duration: f64,
    pub path: HandPath,
    /// IMU sample rate (Hz).
    pub imu_rate: f64,
    /// Hand-observation rate (Hz).
    pub observation_rate: f64,
    pub imu_noise_std: f64,
    pub imu_bias: Vec3,
    pub observation_noise_std: f64,
    /// `world_from_head`; the head looks along its +x axis.
    #[serde(with = "pose_serde")]
    pub head: RigidTransform,
    /// Horizontal and vertical FOV half angles (rad).
    pub fov_half_angles: (f64, f64),
    /// Scripted `[start, end]` intervals without observations (s).
    #[serde(default)]
    pub occlusions: Vec<(f64, f64)>,
    pub seed: u64,
}

impl Default for HandSessionSpec {
    fn default() -> Self {
        Self {
            duration: 10.0,
            path: HandPath::Sinusoids {
                center: Vector3::new(0.5, 0.0, 0.0),
                components: 3,
                amplitude: 0.08,
                max_frequency: 0.5,
            },
            imu_rate: 100.0,
            observation_rate: 30.0,
            imu_noise_std: 0.02,
            imu_bias: Vector3::new(0.05, 0.0, 0.0),
            observation_noise_std: 0.005,
            head: RigidTransform::identity(),
            fov_half_angles: (0.75, 0.6),
            occlusions: Vec::new(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HandTruth {
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub acceleration: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandSession {
    /// Ground truth at every IMU sample, starting at t = 0.
    pub truth: Vec<HandTruth>,
    /// One sample per truth entry after the first; sample k covers `(t[k-1], t[k]]`.
    pub imu: Vec<ImuSample>,
    pub observations: Vec<HandObservation>,
}

struct Sinusoid {
    amplitude: Vec3,
    omega: f64,
    phase: Vec3,
}

fn evaluate(path: &HandPath, waves: &[Sinusoid], t: f64) -> (Vec3, Vec3, Vec3) {
    match path {
        HandPath::ConstantVelocity { start, velocity } => (start + velocity * t, *velocity, Vector3::zeros()),
        HandPath::Sinusoids { center, .. } => {
            let (mut p, mut v, mut a) = (*center, Vector3::zeros(), Vector3::zeros());
            for w in waves {
                for i in 0..3 {
                    let arg = w.omega * t + w.phase[i];
                    p[i] += w.amplitude[i] * arg.sin();
                    v[i] += w.amplitude[i] * w.omega * arg.cos();
                    a[i] -= w.amplitude[i] * w.omega * w.omega * arg.sin();
                }
            }
            (p, v, a)
        }
    }
}

/// Samples a hand session: smooth truth, analytic IMU acceleration plus bias and noise, and
/// observations at the observation rate whenever the hand is in view and not occluded.
/// Observations share the IMU clock.
pub fn simulate_hand_session(spec: &HandSessionSpec) -> Result<HandSession> {
    if !(spec.duration > 0.0) {
        return Err(invalid("duration must be > 0"));
    }
    if !(spec.imu_rate > 0.0 && spec.observation_rate > 0.0) {
        return Err(invalid("rates must be > 0"));
    }
    if !(spec.imu_noise_std >= 0.0 && spec.observation_noise_std >= 0.0) {
        return Err(invalid("noise levels must be >= 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let waves: Vec<Sinusoid> = match &spec.path {
        HandPath::Sinusoids { components, amplitude, max_frequency, .. } => (0..*components)
            .map(|_| Sinusoid {
                amplitude: Vector3::from_fn(|_, _| rng.random_range(0.3..1.0) * amplitude / *components as f64),
                omega: TAU * rng.random_range(0.1..1.0) * max_frequency,
                phase: Vector3::from_fn(|_, _| rng.random_range(0.0..TAU)),
            })
            .collect(),
        HandPath::ConstantVelocity { .. } => Vec::new(),
    };
    let imu_noise = Normal::new(0.0, spec.imu_noise_std).map_err(|_| invalid("imu noise"))?;
    let obs_noise = Normal::new(0.0, spec.observation_noise_std).map_err(|_| invalid("observation noise"))?;
    let gauss = |rng: &mut ChaCha8Rng, n: &Normal<f64>| Vector3::new(n.sample(rng), n.sample(rng), n.sample(rng));

    let n_imu = (spec.duration * spec.imu_rate).round() as usize;
    let mut truth = Vec::with_capacity(n_imu + 1);
    let mut imu = Vec::with_capacity(n_imu);
    for k in 0..=n_imu {
        let t = k as f64 / spec.imu_rate;
        let (position, velocity, acceleration) = evaluate(&spec.path, &waves, t);
        truth.push(HandTruth { t, position, velocity, acceleration });
        if k > 0 {
            // mean acceleration over the interval, so integration of a noiseless stream is exact
            // for constant acceleration and second order otherwise
            let prev = truth[k - 1].velocity;
            let dt = 1.0 / spec.imu_rate;
            let mean_accel = match spec.path {
                HandPath::ConstantVelocity { .. } => Vector3::zeros(),
                HandPath::Sinusoids { .. } => (velocity - prev) / dt,
            };
            imu.push(ImuSample { t, accel_world: mean_accel + spec.imu_bias + gauss(&mut rng, &imu_noise) });
        }
    }

    // observations land on the IMU tick where the observation clock advances
    let mut observations = Vec::new();
    let frame_of = |k: usize| (k as f64 * spec.observation_rate / spec.imu_rate + 1e-9).floor() as i64;
    for (k, sample) in truth.iter().enumerate() {
        if k > 0 && frame_of(k) == frame_of(k - 1) {
            continue;
        }
        let occluded = spec.occlusions.iter().any(|&(a, b)| sample.t >= a && sample.t <= b);
        let noise = gauss(&mut rng, &obs_noise);
        if !occluded && in_fov(&spec.head, &sample.position, spec.fov_half_angles) {
            observations.push(HandObservation {
                t: sample.t,
                position: sample.position + noise,
                noise_std: spec.observation_noise_std,
            });
        }
    }
    Ok(HandSession { truth, imu, observations })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FilterKind {
    Kalman { process_noise: ProcessNoise },
    Complementary { gain: f64 },
}

impl Default for FilterKind {
    fn default() -> Self {
        FilterKind::Kalman { process_noise: ProcessNoise::default() }
    }
}

/// One row of a fusion log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FusionLogRow {
    pub t: f64,
    pub truth: Vec3,
    pub estimate: Vec3,
    pub cov_trace: f64,
    /// An observation was applied at this step.
    pub obs_valid: bool,
}

impl FusionLogRow {
    pub fn error(&self) -> f64 {
        (self.estimate - self.truth).norm()
    }
}

/// Replays a session through a filter, applying every observation at the first IMU step at
/// or after its timestamp. The initial state is the first truth position with the given
/// standard deviations.
pub fn run_fusion(session: &HandSession, filter: &FilterKind, initial_std: (f64, f64, f64)) -> Result<Vec<FusionLogRow>> {
    let Some(first) = session.truth.first() else {
        return Ok(Vec::new());
    };
    let mut state = FusionState::new(first.position, initial_std.0, initial_std.1, initial_std.2);
    state.velocity = first.velocity;
    let mut rows = vec![FusionLogRow {
        t: first.t,
        truth: first.position,
        estimate: state.position,
        cov_trace: state.covariance.trace(),
        obs_valid: false,
    }];
    let mut next_obs = session.observations.iter().position(|o| o.t > first.t + 1e-12).unwrap_or(session.observations.len());
    for (k, sample) in session.imu.iter().enumerate() {
        let dt = sample.t - session.truth[k].t;
        let mut obs = None;
        while next_obs < session.observations.len() && session.observations[next_obs].t <= sample.t + 1e-9 {
            obs = Some(session.observations[next_obs]);
            next_obs += 1;
        }
        state = match filter {
            FilterKind::Kalman { process_noise } => kalman_step(&state, sample, obs.as_ref(), dt, process_noise)?,
            FilterKind::Complementary { gain } => complementary_step(&state, sample, obs.as_ref(), dt, *gain)?,
        };
        rows.push(FusionLogRow {
            t: sample.t,
            truth: session.truth[k + 1].position,
            estimate: state.position,
            cov_trace: state.covariance.trace(),
            obs_valid: obs.is_some(),
        });
    }
    Ok(rows)
}

/// CSV with columns `t,truth_x,truth_y,truth_z,est_x,est_y,est_z,cov_trace,obs_valid`.
pub fn fusion_log_csv(rows: &[FusionLogRow]) -> String {
    let mut out = String::from("t,truth_x,truth_y,truth_z,est_x,est_y,est_z,cov_trace,obs_valid\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{:?},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}",
            r.t,
            r.truth.x,
            r.truth.y,
            r.truth.z,
            r.estimate.x,
            r.estimate.y,
            r.estimate.z,
            r.cov_trace,
            u8::from(r.obs_valid)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quiet(spec: HandSessionSpec) -> HandSessionSpec {
        HandSessionSpec { imu_noise_std: 0.0, imu_bias: Vector3::zeros(), observation_noise_std: 0.0, ..spec }
    }

    #[test]
    fn noiseless_kalman_tracks_truth() {
        let spec = quiet(HandSessionSpec { fov_half_angles: (1.5, 1.5), ..Default::default() });
        let s = simulate_hand_session(&spec).unwrap();
        let rows = run_fusion(&s, &FilterKind::default(), (0.01, 0.01, 0.01)).unwrap();
        assert!(rows.iter().all(|r| r.error() < 1e-6), "{}", rows.iter().map(|r| r.error()).fold(0.0, f64::max));
    }

    #[test]
    fn constant_velocity_imu_is_bias_only() {
        let bias = Vector3::new(0.01, -0.02, 0.03);
        let spec = HandSessionSpec {
            path: HandPath::ConstantVelocity { start: Vector3::new(0.5, 0.0, 0.0), velocity: Vector3::new(0.0, 0.05, 0.0) },
            imu_noise_std: 0.0,
            imu_bias: bias,
            ..Default::default()
        };
        let s = simulate_hand_session(&spec).unwrap();
        assert_eq!(s.imu.len(), 1000);
        assert!(s.imu.iter().all(|i| i.accel_world == bias));
    }

    #[test]
    fn occlusion_window_has_no_observations() {
        let spec = HandSessionSpec { occlusions: vec![(3.0, 6.0)], ..Default::default() };
        let s = simulate_hand_session(&spec).unwrap();
        assert!(!s.observations.is_empty());
        assert!(s.observations.iter().all(|o| !(3.0..=6.0).contains(&o.t)));
        assert!(s.observations.iter().any(|o| o.t > 6.0));
    }

    #[test]
    fn out_of_view_hand_is_not_observed() {
        let spec = HandSessionSpec {
            head: RigidTransform::rot_z(std::f64::consts::PI),
            ..Default::default()
        };
        assert!(simulate_hand_session(&spec).unwrap().observations.is_empty());
    }

    #[test]
    fn deterministic_and_logged() {
        let spec = HandSessionSpec::default();
        let a = simulate_hand_session(&spec).unwrap();
        assert_eq!(a, simulate_hand_session(&spec).unwrap());
        let rows = run_fusion(&a, &FilterKind::Complementary { gain: 0.2 }, (0.0, 0.0, 0.0)).unwrap();
        assert_eq!(rows.len(), a.truth.len());
        assert!(rows.iter().all(|r| r.cov_trace == 0.0));
        let csv = fusion_log_csv(&rows);
        assert_eq!(csv.lines().count(), rows.len() + 1);
        assert!(csv.starts_with("t,truth_x"));
    }

    #[test]
    fn rejects_bad_duration() {
        let spec = HandSessionSpec { duration: 0.0, ..Default::default() };
        assert!(simulate_hand_session(&spec).is_err());
    }
}
