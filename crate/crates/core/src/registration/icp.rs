use super::{kabsch_fit, IcpParams, RegistrationResult};
use crate::geom::{KdTree, PointCloud, RigidTransform, Vec3};
use crate::{Error, Result};

struct Matches {
    pairs: Vec<(Vec3, Vec3)>,
    sum_sq: f64,
}

fn correspond(source: &PointCloud, tree: &KdTree, t: &RigidTransform, gate: f64) -> Matches {
    let mut pairs = Vec::with_capacity(source.len());
    let mut sum_sq = 0.0;
    for s in &source.points {
        let moved = t.apply(s);
        if let Some((j, d)) = tree.nearest(&moved) {
            if d <= gate {
                sum_sq += d * d;
                pairs.push((moved, *tree.point(j)));
            }
        }
    }
    Matches { pairs, sum_sq }
}

/// Point-to-point ICP with distance-gated correspondence rejection.
///
/// Starts from `seed` (`target_from_source`) and alternates nearest-neighbour matching with a
/// Kabsch fit until the inlier RMSE changes by less than the tolerance or the iteration
/// budget runs out. The returned transform includes the seed.
pub fn icp(
    source: &PointCloud,
    target: &PointCloud,
    seed: &RigidTransform,
    params: &IcpParams,
) -> Result<RegistrationResult> {
    params.validate()?;
    if source.is_empty() || target.is_empty() {
        return Err(Error::EmptyInput("icp needs non-empty source and target clouds"));
    }
    let tree = KdTree::from_cloud(target);
    let gate = params.max_correspondence_distance;
    let mut transform = *seed;
    let mut history = Vec::new();
    let mut prev_rmse: Option<f64> = None;
    let mut settled = false;
    let mut iterations = 0;

    let mut matches = correspond(source, &tree, &transform, gate);
    loop {
        if matches.pairs.is_empty() {
            return Err(Error::NoCorrespondences);
        }
        let rmse = (matches.sum_sq / matches.pairs.len() as f64).sqrt();
        history.push(rmse);
        if prev_rmse.is_some_and(|p| (p - rmse).abs() < params.convergence_tolerance) {
            settled = true;
            break;
        }
        if iterations == params.max_iterations {
            break;
        }
        let step = kabsch_fit(&matches.pairs)?;
        transform = step.compose(&transform).orthonormalized();
        iterations += 1;
        prev_rmse = Some(rmse);
        matches = correspond(source, &tree, &transform, gate);
    }

    let inlier_fraction = matches.pairs.len() as f64 / source.len() as f64;
    Ok(RegistrationResult {
        transform,
        rmse: *history.last().expect("at least one iteration"),
        inlier_fraction,
        iterations,
        converged: settled && inlier_fraction >= params.min_inlier_fraction,
        rmse_history: history,
    })
}

/// Iteration cap of each widened stage of [`icp_staged`]; they only need to move the seed
/// into the final stage's basin.
const COARSE_STAGE_ITERATIONS: usize = 60;

/// Runs [`icp`] with the gate widened by each factor in `gate_scales` in turn, then once with
/// `params` as given. Coarse stages only move the seed; the returned result is the final
/// stage's, with `iterations` counting every stage.
pub fn icp_staged(
    source: &PointCloud,
    target: &PointCloud,
    seed: &RigidTransform,
    params: &IcpParams,
    gate_scales: &[f64],
) -> Result<RegistrationResult> {
    let mut current = *seed;
    let mut spent = 0;
    for &scale in gate_scales {
        let wide = IcpParams {
            max_correspondence_distance: params.max_correspondence_distance * scale,
            max_iterations: params.max_iterations.min(COARSE_STAGE_ITERATIONS),
            ..*params
        };
        match icp(source, target, &current, &wide) {
            Ok(r) => {
                current = r.transform;
                spent += r.iterations;
            }
            Err(Error::NoCorrespondences | Error::DegenerateInput(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let mut last = icp(source, target, &current, params)?;
    last.iterations += spent;
    Ok(last)
}
