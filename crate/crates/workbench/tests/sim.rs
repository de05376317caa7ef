use arcell::sim::{generate_scene, mesh_cloud, ObstacleSpec, SceneSpec, SurfaceLabel};
use arcell_core::geom::RigidTransform;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Floor patch plus robot: about 10⁴ vertices at the default spacing.
fn small_cell(noise_std: f64, dropout: f64, seed: u64) -> SceneSpec {
    SceneSpec {
        obstacles: vec![ObstacleSpec::Box {
            pose: RigidTransform::from_translation(Vector3::new(0.5, 0.4, 0.1)),
            size: Vector3::new(0.2, 0.2, 0.2),
        }],
        floor_half_extent: 0.6,
        noise_std,
        dropout,
        seed,
        ..SceneSpec::demo()
    }
}

/// Replays the simulator's draw order: three noise samples, then the keep test, per vertex.
fn replay(n_vertices: usize, noise_std: f64, dropout: f64, seed: u64) -> Vec<Option<Vector3<f64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise_std).unwrap();
    (0..n_vertices)
        .map(|_| {
            let n = Vector3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng));
            (rng.random::<f64>() >= dropout).then_some(n)
        })
        .collect()
}

#[test]
fn dropout_matches_a_replayed_generator() {
    let (clean, _) = generate_scene(&small_cell(0.0, 0.0, 0)).unwrap();
    let n = clean.vertices.len();
    assert!((5_000..20_000).contains(&n), "{n} vertices");
    for seed in [1, 2, 99] {
        let (mesh, truth) = generate_scene(&small_cell(0.002, 0.5, seed)).unwrap();
        let expected = replay(n, 0.002, 0.5, seed);
        let kept: Vec<_> = clean.vertices.iter().zip(&expected).filter_map(|(v, e)| e.map(|noise| v + noise)).collect();
        assert_eq!(mesh.vertices.len(), kept.len());
        assert_eq!(truth.labels.len(), kept.len());
        for (got, want) in mesh.vertices.iter().zip(&kept) {
            assert!((got - want).norm() < 1e-15);
        }
        // roughly half survive
        let frac = kept.len() as f64 / n as f64;
        assert!((frac - 0.5).abs() < 0.03, "{frac}");
    }
}

#[test]
fn dropped_vertices_take_their_triangles_along() {
    let (mesh, _) = generate_scene(&small_cell(0.002, 0.3, 4)).unwrap();
    mesh.validate().unwrap();
    let (full, _) = generate_scene(&small_cell(0.002, 0.0, 4)).unwrap();
    assert!(mesh.triangles.len() < full.triangles.len());
}

#[test]
fn zero_noise_reproduces_the_surfaces_exactly() {
    let spec = small_cell(0.0, 0.0, 3);
    let (mesh, truth) = generate_scene(&spec).unwrap();
    let robot: Vec<_> = mesh.vertices.iter().zip(&truth.labels).filter(|(_, l)| **l == SurfaceLabel::Robot).collect();
    assert!(!robot.is_empty());
    for (v, _) in &robot {
        assert!(truth.robot_box.contains(v));
    }
    for (v, l) in mesh.vertices.iter().zip(&truth.labels) {
        match l {
            SurfaceLabel::Floor => assert_eq!(v.z, 0.0),
            SurfaceLabel::Obstacle(i) => assert!(truth.obstacle_boxes[*i].contains(v)),
            SurfaceLabel::Robot => {}
        }
    }
}

#[test]
fn noise_has_the_requested_spread() {
    let (clean, _) = generate_scene(&small_cell(0.0, 0.0, 5)).unwrap();
    let (noisy, _) = generate_scene(&small_cell(0.004, 0.0, 5)).unwrap();
    let residuals: Vec<f64> =
        clean.vertices.iter().zip(&noisy.vertices).flat_map(|(a, b)| (b - a).iter().copied().collect::<Vec<_>>()).collect();
    let var = residuals.iter().map(|r| r * r).sum::<f64>() / residuals.len() as f64;
    assert!((var.sqrt() - 0.004).abs() < 0.0002, "{}", var.sqrt());
}

#[test]
fn same_seed_same_scene() {
    let a = generate_scene(&SceneSpec::demo()).unwrap();
    let b = generate_scene(&SceneSpec::demo()).unwrap();
    assert_eq!(a, b);
    let c = generate_scene(&SceneSpec { seed: 8, ..SceneSpec::demo() }).unwrap();
    assert_ne!(a.0, c.0);
}

#[test]
fn invalid_specs_are_rejected() {
    assert!(generate_scene(&SceneSpec { dropout: 1.0, ..SceneSpec::demo() }).is_err());
    assert!(generate_scene(&SceneSpec { noise_std: -0.1, ..SceneSpec::demo() }).is_err());
    assert!(generate_scene(&SceneSpec { mesh_spacing: 0.0, ..SceneSpec::demo() }).is_err());
    assert!(generate_scene(&SceneSpec { robot_model: "nope".into(), ..SceneSpec::demo() }).is_err());
    let (m, _) = generate_scene(&small_cell(0.0, 0.0, 0)).unwrap();
    assert_eq!(mesh_cloud(&m).points, m.vertices);
}
