use arcell_core::geom::{
    segment_aabb_distance, voxel_downsample, Aabb, KdTree, PointCloud, RigidTransform, Vec3,
};
use nalgebra::Vector3;
use proptest::prelude::*;

fn vec3(range: f64) -> impl Strategy<Value = Vec3> {
    (-range..range, -range..range, -range..range).prop_map(|(x, y, z)| Vector3::new(x, y, z))
}

fn transform() -> impl Strategy<Value = RigidTransform> {
    (vec3(1.0), 0.0..std::f64::consts::PI, vec3(2.0)).prop_filter_map("degenerate axis", |(axis, angle, t)| {
        (axis.norm() > 1e-3).then(|| {
            let r = RigidTransform::from_axis_angle(&axis.normalize(), angle);
            RigidTransform::new(r.rotation, t)
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn inverse_undoes_compose(a in transform(), b in transform(), p in vec3(3.0)) {
        let ab = a.compose(&b);
        prop_assert!((ab.apply(&p) - a.apply(&b.apply(&p))).norm() < 1e-12);
        let back = ab.inverse().compose(&ab);
        prop_assert!((back.apply(&p) - p).norm() < 1e-12);
        prop_assert!(ab.orthonormality_error() < 1e-12);
    }

    #[test]
    fn quaternion_round_trip(t in transform()) {
        let back = RigidTransform::from_quaternion(t.quaternion(), t.translation);
        let (dt, dr) = back.error_to(&t);
        prop_assert!(dt < 1e-14 && dr < 1e-7);
    }

    #[test]
    fn rotation_log_norm_is_the_angle(axis in vec3(1.0), angle in 0.0..3.1) {
        prop_assume!(axis.norm() > 1e-3);
        let t = RigidTransform::from_axis_angle(&axis.normalize(), angle);
        prop_assert!((t.rotation_log().norm() - angle).abs() < 1e-9);
        prop_assert!((t.rotation_angle() - angle).abs() < 1e-9);
    }

    #[test]
    fn knn_matches_brute_force(
        points in prop::collection::vec(vec3(1.0), 1..300),
        q in vec3(1.5),
        k in 1usize..12,
    ) {
        let tree = KdTree::build(&points);
        let got = tree.knn(&q, k);
        let mut all: Vec<(usize, f64)> = points.iter().enumerate().map(|(i, p)| (i, (p - q).norm())).collect();
        all.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        prop_assert_eq!(got.len(), k.min(points.len()));
        for (g, w) in got.iter().zip(&all) {
            prop_assert!((g.1 - w.1).abs() < 1e-12);
        }
        let r = all[all.len() / 2].1;
        let within = tree.within(&q, r);
        // points exactly on the sphere may land either side after squaring
        for (i, d) in &all {
            if *d < r - 1e-12 {
                prop_assert!(within.contains(i));
            } else if *d > r + 1e-12 {
                prop_assert!(!within.contains(i));
            }
        }
        prop_assert!(within.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn downsampled_points_are_cell_centroids(points in prop::collection::vec(vec3(0.5), 1..200), cell in 0.02..0.3) {
        let cloud = PointCloud::new(points.clone());
        let out = voxel_downsample(&cloud, cell).unwrap();
        let key = |p: &Vec3| p.map(|c| (c / cell).floor() as i64);
        let mut keys: Vec<_> = points.iter().map(key).collect();
        keys.sort_by_key(|k| (k.x, k.y, k.z));
        keys.dedup();
        prop_assert_eq!(out.len(), keys.len());
        for p in &out.points {
            let k = key(p);
            let members: Vec<&Vec3> = points.iter().filter(|q| key(q) == k).collect();
            let centroid = members.iter().fold(Vector3::zeros(), |s, q| s + *q) / members.len() as f64;
            prop_assert!((centroid - p).norm() < 1e-12);
        }
    }

    #[test]
    fn segment_box_distance_matches_sampling(a in vec3(1.0), b in vec3(1.0), c in vec3(0.5), h in vec3(0.3)) {
        let bx = Aabb::from_center(c, h.abs() + Vector3::repeat(0.01));
        let d = segment_aabb_distance(&a, &b, &bx);
        let n = 4000;
        let sampled = (0..=n)
            .map(|i| bx.distance(&a.lerp(&b, i as f64 / n as f64)))
            .fold(f64::INFINITY, f64::min);
        prop_assert!(d <= sampled + 1e-12);
        prop_assert!(d >= sampled - (b - a).norm() / n as f64 - 1e-12);
    }
}
