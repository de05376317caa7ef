use std::collections::BTreeSet;

use arcell_core::envmap::{build_octree, edit_region, remove_robot_points, EditAction};
use arcell_core::geom::{Aabb, PointCloud, RigidTransform, Vec3};
use arcell_core::kin::{robot_model, JointState};
use arcell_core::registration::{Referencing, ReferencingMethod, RegistrationResult};
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn referencing(robot_from_world: RigidTransform) -> Referencing {
    Referencing {
        robot_from_world,
        quality: RegistrationResult {
            transform: robot_from_world.inverse(),
            rmse: 0.0,
            inlier_fraction: 1.0,
            iterations: 0,
            converged: true,
            rmse_history: vec![],
        },
        method: ReferencingMethod::SemiAutomatic,
        created_at: 0,
    }
}

fn cloud(seed: u64, n: usize, half: f64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| Vector3::new(rng.random_range(-half..half), rng.random_range(-half..half), rng.random_range(0.0..2.0 * half)))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn octree_keys_are_floored_cells(seed in any::<u64>(), res in 0.01..0.2, ox in -0.1..0.1, oy in -0.1..0.1) {
        let points = cloud(seed, 500, 1.0);
        let origin = Vector3::new(ox, oy, 0.0);
        let tree = build_octree(&points, res, origin).unwrap();
        let expected: BTreeSet<[i64; 3]> = points
            .points
            .iter()
            .map(|p| {
                let k = (p - origin) / res;
                [k.x.floor() as i64, k.y.floor() as i64, k.z.floor() as i64]
            })
            .collect();
        prop_assert_eq!(&tree.occupied, &expected);
        for p in &points.points {
            prop_assert!(tree.query_occupied(p));
            prop_assert!(tree.voxel_box(&tree.key_of(p)).contains(p));
        }
    }

    #[test]
    fn fill_then_clear_leaves_outside_voxels(seed in any::<u64>(), cx in -0.5..0.5, cy in -0.5..0.5, h in 0.05..0.4) {
        let tree = build_octree(&cloud(seed, 300, 1.0), 0.05, Vector3::zeros()).unwrap();
        let region = Aabb::from_center(Vector3::new(cx, cy, 0.5), Vector3::repeat(h));
        let filled = edit_region(&tree, &region, EditAction::Fill);
        let cleared = edit_region(&filled, &region, EditAction::Clear);
        for k in &filled.occupied {
            let inside = region.contains(&filled.center(k));
            prop_assert!(inside || tree.occupied.contains(k));
            prop_assert_eq!(cleared.occupied.contains(k), !inside);
        }
        prop_assert!(tree.occupied.iter().filter(|k| !region.contains(&tree.center(k))).all(|k| cleared.occupied.contains(k)));
    }
}

#[test]
fn robot_removal_matches_capsule_oracle() {
    let chain = robot_model("kr6_like").unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..20 {
        let q = JointState::new(chain.joints.iter().map(|j| rng.random_range(0.5 * j.limits.0..0.5 * j.limits.1)).collect());
        let world_from_robot = RigidTransform::new(
            RigidTransform::rot_z(rng.random_range(-3.0..3.0)).rotation,
            Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), 0.0),
        );
        let r = referencing(world_from_robot.inverse());
        let points = world_from_robot.apply_cloud(&cloud(case, 4000, 1.0));
        let clearance = rng.random_range(0.0..0.08);
        let kept = remove_robot_points(&points, &chain, &q, &r, clearance).unwrap();
        let caps = chain.all_capsules(&q).unwrap();
        let expected: Vec<Vec3> = points
            .points
            .iter()
            .map(|p| r.robot_from_world.apply(p))
            .filter(|p| caps.iter().all(|c| c.signed_distance(p) > clearance))
            .collect();
        assert_eq!(kept.len(), expected.len(), "case {case}");
        for (a, b) in kept.points.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
