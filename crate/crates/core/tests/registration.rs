use arcell_core::geom::{PointCloud, RigidTransform, Vec3};
use arcell_core::registration::{icp, kabsch_fit, IcpParams};
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_transform(rng: &mut ChaCha8Rng, max_angle: f64, max_shift: f64) -> RigidTransform {
    let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.1..1.0)).normalize();
    let r = RigidTransform::from_axis_angle(&axis, rng.random_range(0.0..max_angle));
    let t = Vector3::new(
        rng.random_range(-max_shift..max_shift),
        rng.random_range(-max_shift..max_shift),
        rng.random_range(-max_shift..max_shift),
    );
    RigidTransform::new(r.rotation, t)
}

/// Points on three unequal orthogonal planes; no symmetry for ICP to slide along.
fn corner_cloud(rng: &mut ChaCha8Rng, n: usize) -> PointCloud {
    (0..n)
        .map(|i| {
            let (u, v) = (rng.random_range(0.0..1.0), rng.random_range(0.0..1.0));
            match i % 3 {
                0 => Vector3::new(0.6 * u, 0.4 * v, 0.0),
                1 => Vector3::new(0.6 * u, 0.0, 0.3 * v),
                _ => Vector3::new(0.0, 0.4 * u, 0.3 * v),
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn kabsch_recovers_exact_motion(seed in any::<u64>(), n in 3usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let truth = random_transform(&mut rng, std::f64::consts::PI, 2.0);
        let src: Vec<Vec3> = (0..n)
            .map(|_| Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let pairs: Vec<(Vec3, Vec3)> = src.iter().map(|p| (*p, truth.apply(p))).collect();
        let fit = kabsch_fit(&pairs).unwrap();
        let (dt, dr) = fit.error_to(&truth);
        prop_assert!(dt < 1e-9 && dr < 1e-7, "dt {dt} dr {dr}");
        prop_assert!((fit.rotation.determinant() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn kabsch_never_returns_a_reflection(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs: Vec<(Vec3, Vec3)> = (0..20)
            .map(|_| {
                let p = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (p, Vector3::new(p.x, p.y, -p.z))
            })
            .collect();
        let fit = kabsch_fit(&pairs).unwrap();
        prop_assert!((fit.rotation.determinant() - 1.0).abs() < 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn icp_recovers_small_misalignment(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let target = corner_cloud(&mut rng, 3000);
        let truth = random_transform(&mut rng, 0.08, 0.02);
        let source = truth.inverse().apply_cloud(&target);
        let params = IcpParams { max_correspondence_distance: 0.1, ..IcpParams::default() };
        let result = icp(&source, &target, &RigidTransform::identity(), &params).unwrap();
        let (dt, dr) = result.transform.error_to(&truth);
        prop_assert!(result.converged);
        prop_assert!(dt < 1e-3 && dr < 2e-3, "dt {dt} dr {dr}");
        prop_assert!(result.rmse_history.first() >= result.rmse_history.last());
    }
}
