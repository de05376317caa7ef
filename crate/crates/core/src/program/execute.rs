use serde::{Deserialize, Serialize};

use super::JointTrajectory;
use crate::kin::JointState;
use crate::{Error, Result};

/// One state of a virtual execution; `t` is wall-clock time from the start (s).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionFrame {
    pub t: f64,
    pub q: JointState,
    pub speed_scale: f64,
}

/// Replays `traj` at a fixed wall-clock step `dt`.
///
/// Each interval between samples is stretched by `1 / s` with `s` the smaller speed scale of
/// its two ends, so reduced-speed regions take proportionally longer. Joint values are
/// linearly interpolated and the last frame is always the final sample.
pub fn virtual_execute(traj: &JointTrajectory, dt: f64) -> Result<Vec<ExecutionFrame>> {
    if !(dt > 0.0) {
        return Err(Error::invalid("execution step must be > 0"));
    }
    let samples = &traj.samples;
    let Some(last) = samples.last() else {
        return Ok(Vec::new());
    };
    // wall-clock time at every sample
    let mut wall = Vec::with_capacity(samples.len());
    let mut scales = Vec::with_capacity(samples.len().saturating_sub(1));
    let mut w = 0.0;
    wall.push(0.0);
    for pair in samples.windows(2) {
        let s = pair[0].speed_scale.min(pair[1].speed_scale);
        if !(s > 0.0) {
            return Err(Error::invalid("speed scale must be > 0"));
        }
        w += (pair[1].t - pair[0].t) / s;
        wall.push(w);
        scales.push(s);
    }
    let end = w;

    let mut frames = Vec::new();
    let mut seg = 0;
    let mut k = 0usize;
    loop {
        let t = k as f64 * dt;
        if t >= end - 1e-9 * dt {
            break;
        }
        while seg + 1 < wall.len() - 1 && wall[seg + 1] <= t {
            seg += 1;
        }
        let span = wall[seg + 1] - wall[seg];
        let f = if span > 0.0 { ((t - wall[seg]) / span).clamp(0.0, 1.0) } else { 1.0 };
        let (a, b) = (&samples[seg].q, &samples[seg + 1].q);
        frames.push(ExecutionFrame {
            t,
            q: JointState::new(a.q.iter().zip(&b.q).map(|(x, y)| x + (y - x) * f).collect()),
            speed_scale: scales[seg],
        });
        k += 1;
    }
    frames.push(ExecutionFrame { t: end, q: last.q.clone(), speed_scale: last.speed_scale });
    Ok(frames)
}
