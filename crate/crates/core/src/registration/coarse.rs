//! Four-point congruent set (4PCS) coarse alignment.
//!
//! Approximately coplanar 4-point bases are drawn from the target. Each base is described by
//! the lengths of its two diagonals and the two affine-invariant ratios at which the diagonals
//! intersect; congruent 4-point sets are then looked up in the source by matching the
//! intersection points implied by those ratios. Every congruent set yields a candidate
//! transform, scored by its largest-common-pointset support at distance `delta`.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{kabsch_fit, RegistrationResult};
use crate::geom::{voxel_downsample, KdTree, PointCloud, RigidTransform, Vec3};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoarseParams {
    /// Expected fraction of the source that overlaps the target, in `(0, 1]`.
    pub overlap_estimate: f64,
    /// Support distance (meters).
    pub delta: f64,
    pub n_bases: usize,
    /// Maximum distance of the fourth base point from the plane of the first three.
    pub coplanarity_tolerance: f64,
    /// Number of candidates scored against the full clouds.
    pub max_evaluations: usize,
    /// Both clouds are voxel-downsampled to at most this many points for the base search.
    pub max_sample_points: usize,
    /// ICP iterations applied to each evaluated candidate on the downsampled clouds.
    pub polish_iterations: usize,
    pub seed: u64,
}

impl CoarseParams {
    pub fn new(overlap_estimate: f64, delta: f64) -> Self {
        Self {
            overlap_estimate,
            delta,
            n_bases: 32,
            coplanarity_tolerance: 0.005,
            max_evaluations: 512,
            max_sample_points: 400,
            polish_iterations: 5,
            seed: 0,
        }
    }
}

const MAX_SETS_PER_BASE: usize = 20_000;
const QUICK_SCORE_POINTS: usize = 48;
const BASE_ATTEMPTS: usize = 40;

#[derive(Debug, Clone, Copy)]
struct Base {
    pts: [Vec3; 4],
    d1: f64,
    d2: f64,
    r1: f64,
    r2: f64,
    cos_angle: f64,
}

fn downsample_to(cloud: &PointCloud, start_cell: f64, max_points: usize) -> (PointCloud, f64) {
    let mut cell = start_cell;
    loop {
        let s = voxel_downsample(cloud, cell).expect("positive cell");
        if s.len() <= max_points.max(4) {
            return (s, cell);
        }
        cell *= 1.25;
    }
}

/// Parameters `(s, t)` of the closest points of lines `a + s·u` and `b + t·v`.
fn line_params(a: &Vec3, u: &Vec3, b: &Vec3, v: &Vec3) -> Option<(f64, f64)> {
    let w = a - b;
    let (uu, uv, vv) = (u.dot(u), u.dot(v), v.dot(v));
    let (uw, vw) = (u.dot(&w), v.dot(&w));
    let den = uu * vv - uv * uv;
    if den.abs() < 1e-12 * uu * vv {
        return None;
    }
    Some(((uv * vw - vv * uw) / den, (uu * vw - uv * uw) / den))
}

fn make_base(p: [Vec3; 4]) -> Option<Base> {
    // try the three pairings, preferring the one whose diagonals cross inside both segments
    let pairings = [[0, 1, 2, 3], [0, 2, 1, 3], [0, 3, 1, 2]];
    let mut fallback = None;
    for pr in pairings {
        let pts = [p[pr[0]], p[pr[1]], p[pr[2]], p[pr[3]]];
        let u = pts[1] - pts[0];
        let v = pts[3] - pts[2];
        let Some((s, t)) = line_params(&pts[0], &u, &pts[2], &v) else {
            continue;
        };
        let base = Base {
            pts,
            d1: u.norm(),
            d2: v.norm(),
            r1: s,
            r2: t,
            cos_angle: u.dot(&v) / (u.norm() * v.norm()),
        };
        if (0.0..=1.0).contains(&s) && (0.0..=1.0).contains(&t) {
            return Some(base);
        }
        fallback.get_or_insert(base);
    }
    fallback
}

fn select_base(
    pts: &[Vec3],
    rng: &mut ChaCha8Rng,
    max_dist: f64,
    coplanarity: f64,
) -> Option<Base> {
    let n = pts.len();
    let mut best: Option<([usize; 3], f64)> = None;
    for _ in 0..BASE_ATTEMPTS {
        let (i, j, k) = (rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n));
        if i == j || j == k || i == k {
            continue;
        }
        let (a, b, c) = (pts[i], pts[j], pts[k]);
        if (a - b).norm() > max_dist || (b - c).norm() > max_dist || (a - c).norm() > max_dist {
            continue;
        }
        let area = (b - a).cross(&(c - a)).norm();
        if best.is_none_or(|(_, s)| area > s) {
            best = Some(([i, j, k], area));
        }
    }
    let ([i, j, k], area) = best?;
    if area <= 0.0 {
        return None;
    }
    let (a, b, c) = (pts[i], pts[j], pts[k]);
    let normal = (b - a).cross(&(c - a)).normalize();
    let mut fourth: Option<(usize, f64)> = None;
    for (l, p) in pts.iter().enumerate() {
        if l == i || l == j || l == k || (p - a).dot(&normal).abs() > coplanarity {
            continue;
        }
        if (p - a).norm() > max_dist || (p - b).norm() > max_dist || (p - c).norm() > max_dist {
            continue;
        }
        let spread = (p - a).norm().min((p - b).norm()).min((p - c).norm());
        if fourth.is_none_or(|(_, s)| spread > s) {
            fourth = Some((l, spread));
        }
    }
    let (l, _) = fourth?;
    make_base([a, b, c, pts[l]])
}

struct PairPoint {
    i: usize,
    j: usize,
    e: Vec3,
}

fn pairs_with_length(pts: &[Vec3], len: f64, ratio: f64, tol: f64) -> Vec<PairPoint> {
    let mut out = Vec::new();
    for i in 0..pts.len() {
        for j in 0..pts.len() {
            if i != j && ((pts[i] - pts[j]).norm() - len).abs() <= tol {
                out.push(PairPoint {
                    i,
                    j,
                    e: pts[i] + (pts[j] - pts[i]) * ratio,
                });
            }
        }
    }
    out
}

fn congruent_transforms(base: &Base, src: &[Vec3], tol: f64) -> Vec<RigidTransform> {
    let set1 = pairs_with_length(src, base.d1, base.r1, tol);
    let set2 = pairs_with_length(src, base.d2, base.r2, tol);
    if set1.is_empty() || set2.is_empty() {
        return Vec::new();
    }
    let e2: Vec<Vec3> = set2.iter().map(|p| p.e).collect();
    let tree = KdTree::build(&e2);
    let angle_tol = (2.0 * tol / base.d1.min(base.d2)).clamp(0.05, 0.5);
    let mut out = Vec::new();
    for p1 in &set1 {
        for m in tree.within(&p1.e, tol) {
            let p2 = &set2[m];
            if p2.i == p1.i || p2.i == p1.j || p2.j == p1.i || p2.j == p1.j {
                continue;
            }
            let u = src[p1.j] - src[p1.i];
            let v = src[p2.j] - src[p2.i];
            if (u.dot(&v) / (u.norm() * v.norm()) - base.cos_angle).abs() > angle_tol {
                continue;
            }
            let quad = [src[p1.i], src[p1.j], src[p2.i], src[p2.j]];
            let pairs: Vec<(Vec3, Vec3)> = quad.iter().copied().zip(base.pts).collect();
            let Ok(t) = kabsch_fit(&pairs) else { continue };
            if pairs.iter().all(|(s, d)| (t.apply(s) - d).norm() <= 2.0 * tol) {
                out.push(t);
                if out.len() >= MAX_SETS_PER_BASE {
                    return out;
                }
            }
        }
    }
    out
}

fn polish(t: RigidTransform, src: &[Vec3], tree: &KdTree, gate: f64, iterations: usize) -> RigidTransform {
    let mut t = t;
    for _ in 0..iterations {
        let pairs: Vec<(Vec3, Vec3)> = src
            .iter()
            .filter_map(|s| {
                let m = t.apply(s);
                tree.nearest(&m).filter(|(_, d)| *d <= gate).map(|(j, _)| (m, *tree.point(j)))
            })
            .collect();
        match kabsch_fit(&pairs) {
            Ok(step) => t = step.compose(&t).orthonormalized(),
            Err(_) => break,
        }
    }
    t
}

/// Inlier count and inlier RMSE of `source` against `tree` at distance `delta`.
/// Gives up early (returning `None`) once `must_reach` inliers are out of reach.
fn support(
    t: &RigidTransform,
    source: &[Vec3],
    tree: &KdTree,
    delta: f64,
    must_reach: usize,
) -> Option<(usize, f64)> {
    let mut inliers = 0usize;
    let mut sum_sq = 0.0;
    for (n, s) in source.iter().enumerate() {
        let (_, d) = tree.nearest(&t.apply(s)).expect("non-empty target");
        if d <= delta {
            inliers += 1;
            sum_sq += d * d;
        }
        if inliers + (source.len() - n - 1) < must_reach {
            return None;
        }
    }
    Some((inliers, if inliers > 0 { (sum_sq / inliers as f64).sqrt() } else { 0.0 }))
}

/// Global alignment of `source` onto `target` without an initial guess.
///
/// Returns the candidate with the largest support (fraction of source points within `delta`
/// of the target); ties go to lower inlier RMSE, then to the earlier candidate.
pub fn coarse_align(
    source: &PointCloud,
    target: &PointCloud,
    params: &CoarseParams,
) -> Result<RegistrationResult> {
    if source.len() < 4 || target.len() < 4 {
        return Err(Error::invalid("coarse_align needs at least 4 points in each cloud"));
    }
    if !(params.overlap_estimate > 0.0 && params.overlap_estimate <= 1.0) {
        return Err(Error::invalid("overlap_estimate must be in (0, 1]"));
    }
    if !(params.delta > 0.0) {
        return Err(Error::invalid("delta must be > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let (src_s, c1) = downsample_to(source, params.delta, params.max_sample_points);
    let (tgt_s, c2) = downsample_to(target, params.delta, params.max_sample_points);
    let tol = params.delta + c1.max(c2);
    let tgt_tree_s = KdTree::from_cloud(&tgt_s);
    let diameter = tgt_s.bounding_box().map_or(0.0, |b| b.diagonal());
    let max_dist = diameter * params.overlap_estimate.max(0.25) * 0.9;

    let mut quick_idx: Vec<usize> = (0..src_s.len()).collect();
    quick_idx.shuffle(&mut rng);
    quick_idx.truncate(QUICK_SCORE_POINTS);
    let quick_pts: Vec<Vec3> = quick_idx.iter().map(|&i| src_s.points[i]).collect();

    let mut candidates: Vec<(usize, RigidTransform)> = Vec::new();
    // quick-score histogram; a candidate that cannot beat `cutoff` would be truncated anyway
    let mut hist = vec![0usize; quick_pts.len() + 1];
    let mut cutoff: Option<usize> = None;
    let mut bases_found = 0;
    for _ in 0..params.n_bases * 4 {
        if bases_found == params.n_bases {
            break;
        }
        let Some(base) = select_base(&tgt_s.points, &mut rng, max_dist, params.coplanarity_tolerance.max(1e-9))
        else {
            continue;
        };
        bases_found += 1;
        for t in congruent_transforms(&base, &src_s.points, tol) {
            let mut quick = 0;
            let mut alive = true;
            for (n, p) in quick_pts.iter().enumerate() {
                if tgt_tree_s.nearest(&t.apply(p)).is_some_and(|(_, d)| d <= tol) {
                    quick += 1;
                }
                if cutoff.is_some_and(|c| quick + (quick_pts.len() - n - 1) <= c) {
                    alive = false;
                    break;
                }
            }
            if !alive {
                continue;
            }
            candidates.push((quick, t));
            hist[quick] += 1;
            let mut above = 0;
            cutoff = (0..hist.len()).rev().find(|&s| {
                above += hist[s];
                above >= params.max_evaluations
            });
        }
    }
    // stable sort keeps discovery order among equal quick scores
    candidates.sort_by(|a, b| b.0.cmp(&a.0));
    candidates.truncate(params.max_evaluations);

    let tree = KdTree::from_cloud(target);
    let mut best: Option<(usize, f64, RigidTransform)> = None;
    for (_, t) in &candidates {
        let t = polish(*t, &src_s.points, &tgt_tree_s, tol, params.polish_iterations);
        let must_reach = best.as_ref().map_or(0, |b| b.0);
        let Some((inliers, rmse)) = support(&t, &source.points, &tree, params.delta, must_reach) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some((bi, br, _)) => inliers > *bi || (inliers == *bi && rmse < *br),
        };
        if better {
            best = Some((inliers, rmse, t));
        }
    }

    let (inliers, rmse, transform) = best.ok_or(Error::NoAlignmentFound)?;
    let fraction = inliers as f64 / source.len() as f64;
    if fraction < params.overlap_estimate {
        return Err(Error::NoAlignmentFound);
    }
    Ok(RegistrationResult {
        transform,
        rmse,
        inlier_fraction: fraction,
        iterations: candidates.len(),
        converged: true,
        rmse_history: Vec::new(),
    })
}

/// Fraction of `source` points within `delta` of `target` after `t`, by linear scan.
pub fn brute_force_support(t: &RigidTransform, source: &PointCloud, target: &PointCloud, delta: f64) -> f64 {
    let hits = source
        .points
        .iter()
        .filter(|s| {
            let m = t.apply(s);
            target.points.iter().any(|p| (m - p).norm() <= delta)
        })
        .count();
    hits as f64 / source.len() as f64
}
