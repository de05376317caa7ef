//! Fuses IMU and camera hand observations across a scripted occlusion, with both filters.

use arcell::hands::{run_fusion, simulate_hand_session, FilterKind, HandSessionSpec};

fn main() -> arcell::Result<()> {
    let spec = HandSessionSpec { duration: 8.0, occlusions: vec![(3.0, 6.0)], seed: 3, ..Default::default() };
    let session = simulate_hand_session(&spec)?;
    println!(
        "{} IMU samples, {} observations, bias {:?} m/s²",
        session.imu.len(),
        session.observations.len(),
        spec.imu_bias.as_slice()
    );
    // the complementary variant corrects position only, so velocity drift keeps pulling it away
    for (name, filter) in [("kalman", FilterKind::default()), ("complementary", FilterKind::Complementary { gain: 0.1 })] {
        let log = run_fusion(&session, &filter, (0.01, 0.05, 0.1))?;
        let at = |t: f64| log.iter().find(|r| r.t >= t - 1e-9).map(|r| r.error() * 1e3).unwrap_or(f64::NAN);
        let reset = log.iter().find(|r| r.t > 6.0 && r.obs_valid).map(|r| r.error() * 1e3).unwrap_or(f64::NAN);
        println!(
            "{name:>13}: error {:.1} mm before occlusion, {:.1} mm at its end, {:.1} mm after the first observation",
            at(2.9),
            at(6.0),
            reset
        );
    }
    Ok(())
}
