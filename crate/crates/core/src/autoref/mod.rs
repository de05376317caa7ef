//! Automatic referencing by sliding a shape descriptor over the scene.
//!
//! The descriptor of a window summarizes the points inside it: their centroid relative to
//! the window's min corner, the eigen-decomposition of their covariance and the fraction of
//! points in each of `n` equal horizontal bands of the window height. "Vertical" is world +z.

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::geom::{crop_aabb, Aabb, PointCloud, RigidTransform, Vec3};
use crate::registration::{
    dilate_diagonal, icp, icp_staged, IcpParams, Referencing, ReferencingMethod, RegistrationResult,
    SEED_CROP_DILATION,
};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceDescriptor {
    /// Mean of the window's points relative to the window min corner (m).
    pub centroid: Vec3,
    /// Covariance eigenvalues, descending (m²).
    pub eigenvalues: [f64; 3],
    /// Unit eigenvectors matching `eigenvalues`; each has a positive largest-magnitude component.
    pub eigenvectors: [Vec3; 3],
    /// Fraction of points per band, bottom band first.
    pub slice_counts: Vec<f64>,
    pub point_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchParams {
    pub n_slices: usize,
    /// Grid spacing of window positions (m). `None` picks a quarter of the smallest
    /// horizontal window extent.
    pub stride: Option<f64>,
    /// Per-axis growth of the robot box used as search window.
    pub dilation: f64,
    /// Weights of the centroid, eigenvalue, eigenvector and slice terms.
    pub weights: [f64; 4],
    pub top_k: usize,
}

impl Default for SearchParams {
    fn default() -> Self {
        Self {
            n_slices: 8,
            stride: None,
            dilation: 1.2,
            weights: [1.0; 4],
            top_k: 5,
        }
    }
}

impl SearchParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_slices < 1 {
            return Err(Error::invalid("n_slices must be >= 1"));
        }
        if self.stride.is_some_and(|s| !(s > 0.0)) {
            return Err(Error::invalid("stride must be > 0"));
        }
        if !(self.dilation >= 1.0) {
            return Err(Error::invalid("dilation must be >= 1"));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0)) || self.weights.iter().all(|w| *w == 0.0) {
            return Err(Error::invalid("weights must be non-negative and not all zero"));
        }
        if self.top_k < 1 {
            return Err(Error::invalid("top_k must be >= 1"));
        }
        Ok(())
    }

    pub fn stride_for(&self, window_size: &Vec3) -> f64 {
        self.stride.unwrap_or(0.25 * window_size.x.min(window_size.y))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateBox {
    #[serde(rename = "box")]
    pub bbox: Aabb,
    /// Descriptor distance to the template; lower is better.
    pub score: f64,
}

fn descriptor_of(points: &[Vec3], window: &Aabb, n_slices: usize) -> SliceDescriptor {
    let n = points.len() as f64;
    let mean: Vec3 = points.iter().sum::<Vec3>() / n;
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - mean;
        cov += d * d.transpose();
    }
    cov /= n;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues = order.map(|i| eig.eigenvalues[i].max(0.0));
    let eigenvectors = order.map(|i| {
        let v: Vec3 = eig.eigenvectors.column(i).normalize();
        let lead = (0..3)
            .max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs()).then(b.cmp(&a)))
            .expect("three components");
        if v[lead] < 0.0 {
            -v
        } else {
            v
        }
    });

    let height = window.max.z - window.min.z;
    let mut slices = vec![0.0; n_slices];
    for p in points {
        let band = if height > 0.0 {
            (((p.z - window.min.z) / height * n_slices as f64).floor().max(0.0) as usize).min(n_slices - 1)
        } else {
            0
        };
        slices[band] += 1.0;
    }
    for s in &mut slices {
        *s /= n;
    }
    SliceDescriptor {
        centroid: mean - window.min,
        eigenvalues,
        eigenvectors,
        slice_counts: slices,
        point_count: points.len(),
    }
}

/// Descriptor of the points of `cloud` inside `window` (inclusive bounds).
pub fn compute_descriptor(cloud: &PointCloud, window: &Aabb, n_slices: usize) -> Result<SliceDescriptor> {
    if n_slices < 1 {
        return Err(Error::invalid("n_slices must be >= 1"));
    }
    let inside: Vec<Vec3> = cloud.points.iter().filter(|p| window.contains(p)).copied().collect();
    if inside.is_empty() {
        return Err(Error::EmptyWindow);
    }
    Ok(descriptor_of(&inside, window, n_slices))
}

/// Weighted sum of four dissimilarities: centroid offset over `scale`, relative eigenvalue
/// differences, `1 − |cos|` between matching eigenvectors and the L1 distance of the slice
/// fractions.
pub fn descriptor_distance(a: &SliceDescriptor, b: &SliceDescriptor, weights: &[f64; 4], scale: f64) -> Result<f64> {
    if a.slice_counts.len() != b.slice_counts.len() {
        return Err(Error::invalid("descriptors have different slice counts"));
    }
    if !(scale > 0.0) {
        return Err(Error::invalid("descriptor scale must be > 0"));
    }
    const EPS: f64 = 1e-12;
    let centroid = (a.centroid - b.centroid).norm() / scale;
    let eigen: f64 = (0..3)
        .map(|i| (a.eigenvalues[i] - b.eigenvalues[i]).abs() / (a.eigenvalues[i] + b.eigenvalues[i] + EPS))
        .sum();
    let vectors: f64 = (0..3)
        .map(|i| 1.0 - a.eigenvectors[i].dot(&b.eigenvectors[i]).abs().min(1.0))
        .sum();
    let slices: f64 = a.slice_counts.iter().zip(&b.slice_counts).map(|(x, y)| (x - y).abs()).sum();
    Ok(weights[0] * centroid + weights[1] * eigen + weights[2] * vectors + weights[3] * slices)
}

fn grid_count(extent: f64, size: f64, stride: f64) -> usize {
    if extent <= size {
        1
    } else {
        ((extent - size) / stride).ceil() as usize + 1
    }
}

/// Scores every non-empty window of `window_size` on a grid anchored at the scene box min
/// corner. Returns at most `top_k` candidates in ascending score; ties keep the
/// lexicographic order of window min corners (x, then y, then z).
pub fn sliding_search(
    scene: &PointCloud,
    template: &SliceDescriptor,
    window_size: &Vec3,
    params: &SearchParams,
) -> Result<Vec<CandidateBox>> {
    params.validate()?;
    if (0..3).any(|i| !(window_size[i] > 0.0)) {
        return Err(Error::invalid("window size must be > 0 componentwise"));
    }
    let bounds = scene.bounding_box().ok_or(Error::EmptyInput("scene cloud is empty"))?;
    if template.slice_counts.len() != params.n_slices {
        return Err(Error::invalid("template slice count differs from n_slices"));
    }
    let stride = params.stride_for(window_size);
    let extent = bounds.size();
    let counts = [0, 1, 2].map(|a| grid_count(extent[a], window_size[a], stride));
    let scale = window_size.norm();

    let mut by_x: Vec<Vec3> = scene.points.clone();
    by_x.sort_by(|a, b| a.x.total_cmp(&b.x));

    let mut out = Vec::new();
    let mut inside = Vec::new();
    for i in 0..counts[0] {
        let x0 = bounds.min.x + i as f64 * stride;
        let lo = by_x.partition_point(|p| p.x < x0);
        let hi = by_x.partition_point(|p| p.x <= x0 + window_size.x);
        for j in 0..counts[1] {
            for k in 0..counts[2] {
                let min = bounds.min + Vector3::new(i as f64, j as f64, k as f64) * stride;
                let window = Aabb { min, max: min + window_size };
                inside.clear();
                inside.extend(by_x[lo..hi].iter().filter(|p| window.contains(p)));
                if inside.is_empty() {
                    continue;
                }
                let d = descriptor_of(&inside, &window, params.n_slices);
                let score = descriptor_distance(&d, template, &params.weights, scale)?;
                out.push(CandidateBox { bbox: window, score });
            }
        }
    }
    // generated in lexicographic order already; a stable sort keeps it for equal scores
    out.sort_by(|a, b| a.score.total_cmp(&b.score));
    out.truncate(params.top_k);
    for cand in &mut out {
        *cand = recenter(&by_x, template, cand, params, scale)?;
    }
    out.sort_by(|a, b| a.score.total_cmp(&b.score));
    Ok(out)
}

/// Shifts a grid window until its point centroid sits where the template's does, then
/// rescores it. Grid windows are off by up to half a stride; this removes most of that.
fn recenter(
    by_x: &[Vec3],
    template: &SliceDescriptor,
    cand: &CandidateBox,
    params: &SearchParams,
    scale: f64,
) -> Result<CandidateBox> {
    let size = cand.bbox.size();
    let mut current = *cand;
    let mut window = cand.bbox;
    for _ in 0..RECENTER_STEPS {
        let lo = by_x.partition_point(|p| p.x < window.min.x);
        let hi = by_x.partition_point(|p| p.x <= window.max.x);
        let inside: Vec<Vec3> = by_x[lo..hi].iter().filter(|p| window.contains(p)).copied().collect();
        if inside.is_empty() {
            break;
        }
        let d = descriptor_of(&inside, &window, params.n_slices);
        current = CandidateBox { bbox: window, score: descriptor_distance(&d, template, &params.weights, scale)? };
        let shift = d.centroid - template.centroid;
        if shift.norm() < 1e-4 * scale {
            break;
        }
        let min = window.min + shift;
        window = Aabb { min, max: min + size };
    }
    Ok(current)
}

const RECENTER_STEPS: usize = 6;

/// Removes a dominant floor: if the most populated 2 cm height bin sits at the bottom of the
/// cloud and holds at least a fifth of the points, everything up to 1 cm above it is dropped.
pub fn strip_floor(scene: &PointCloud) -> PointCloud {
    const BIN: f64 = 0.02;
    let Some(bounds) = scene.bounding_box() else {
        return scene.clone();
    };
    let bins = ((bounds.max.z - bounds.min.z) / BIN).floor() as usize + 1;
    let mut hist = vec![0usize; bins];
    for p in &scene.points {
        hist[(((p.z - bounds.min.z) / BIN).floor() as usize).min(bins - 1)] += 1;
    }
    let (peak, &count) = hist
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.cmp(b.1).then(b.0.cmp(&a.0)))
        .expect("at least one bin");
    if peak > 2 || (count as f64) < 0.2 * scene.len() as f64 {
        return scene.clone();
    }
    let cut = bounds.min.z + (peak + 1) as f64 * BIN + 0.01;
    scene.points.iter().filter(|p| p.z > cut).copied().collect()
}

/// Gate multipliers of the coarse ICP stages run from each hypothesis.
const HYPOTHESIS_GATES: [f64; 3] = [6.0, 3.0, 1.5];

/// Finds the robot in `scene` without a user seed.
///
/// The template is the robot surface cloud inside its bounding box dilated per axis by
/// `params.dilation`, with the horizontal footprint made square so that the window does not
/// depend on the unknown yaw; candidates come from [`search_candidates`] on the scene with its
/// floor stripped. For each candidate window, in ascending score, registration is
/// seeded by moving the template centroid onto the window's point centroid under each of four
/// yaw hypotheses (0°, 90°, 180°, 270°). The best converged hypothesis is refined with the
/// full template and returned if that refinement converges too; otherwise the next candidate
/// is tried.
pub fn automatic_reference(
    scene: &PointCloud,
    robot_surface: &PointCloud,
    params: &SearchParams,
    icp_params: &IcpParams,
) -> Result<Referencing> {
    params.validate()?;
    icp_params.validate()?;
    let robot_box = robot_surface
        .bounding_box()
        .ok_or(Error::EmptyInput("robot surface cloud is empty"))?;
    if scene.is_empty() {
        return Err(Error::EmptyInput("scene cloud is empty"));
    }
    let robot_centroid = robot_surface.centroid().expect("non-empty");
    let search_cloud = strip_floor(scene);
    let candidates = search_candidates(&search_cloud, robot_surface, &robot_box, params)?;

    // hypotheses are screened with a thinned template and a looser tolerance; only the
    // winner of a candidate is refined with the full template
    let thin: PointCloud = robot_surface.points.iter().step_by(HYPOTHESIS_THINNING).copied().collect();
    let screen = IcpParams {
        convergence_tolerance: icp_params.convergence_tolerance.max(1e-6),
        ..*icp_params
    };
    for cand in &candidates {
        let local = crop_aabb(&search_cloud, &cand.bbox, true);
        let Some(window_centroid) = local.centroid() else { continue };
        let crop = crop_aabb(scene, &dilate_diagonal(&cand.bbox, SEED_CROP_DILATION), true);
        let mut best: Option<RegistrationResult> = None;
        for quarter in 0..4 {
            let yaw = quarter as f64 * std::f64::consts::FRAC_PI_2;
            let seed = RigidTransform::from_translation(window_centroid)
                .compose(&RigidTransform::rot_z(yaw))
                .compose(&RigidTransform::from_translation(-robot_centroid));
            let Ok(r) = icp_staged(&thin, &crop, &seed, &screen, &HYPOTHESIS_GATES) else {
                continue;
            };
            if r.converged
                && best.as_ref().is_none_or(|b| {
                    (r.inlier_fraction, -r.rmse) > (b.inlier_fraction, -b.rmse)
                })
            {
                best = Some(r);
            }
        }
        let Some(b) = best else { continue };
        let r = icp(robot_surface, &crop, &b.transform, icp_params)?;
        if r.converged {
            return Referencing::from_registration(r, ReferencingMethod::Automatic);
        }
    }
    Err(Error::AutoReferencingFailed(candidates))
}

/// Every this many template points are used while screening yaw hypotheses.
const HYPOTHESIS_THINNING: usize = 4;

/// Height above the robot's lowest point that a stripped floor takes with it (m).
const FLOOR_BAND: f64 = 0.025;

/// Number of template yaws tried by [`search_candidates`], evenly spread over a full turn.
pub const TEMPLATE_YAWS: usize = 8;

/// Sliding search with the template turned to each of [`TEMPLATE_YAWS`] yaws about the
/// vertical through the robot box center. The descriptor is not yaw invariant, so a single
/// template misses robots standing at other headings. Candidates of all yaws are merged,
/// best first, at most `top_k`, dropping any window that overlaps a better one by half or more.
pub fn search_candidates(
    search_cloud: &PointCloud,
    robot_surface: &PointCloud,
    robot_box: &Aabb,
    params: &SearchParams,
) -> Result<Vec<CandidateBox>> {
    if search_cloud.is_empty() {
        return Ok(Vec::new());
    }
    let window = search_window(robot_box, params.dilation);
    let half = window.size() * 0.5;
    let center = window.center();
    let mut all = Vec::new();
    for k in 0..TEMPLATE_YAWS {
        let yaw = k as f64 * std::f64::consts::TAU / TEMPLATE_YAWS as f64;
        let turn = RigidTransform::from_translation(center)
            .compose(&RigidTransform::rot_z(yaw))
            .compose(&RigidTransform::from_translation(-center));
        let turned: PointCloud = turn
            .apply_cloud(robot_surface)
            .points
            .into_iter()
            .filter(|p| p.z > robot_box.min.z + FLOOR_BAND)
            .collect();
        let template = compute_descriptor(&turned, &Aabb::from_center(center, half), params.n_slices)?;
        all.extend(sliding_search(search_cloud, &template, &window.size(), params)?);
    }
    // yaw-major order before the stable sort keeps ties deterministic
    all.sort_by(|a, b| a.score.total_cmp(&b.score));
    let mut kept: Vec<CandidateBox> = Vec::with_capacity(params.top_k);
    for c in all {
        if kept.len() == params.top_k {
            break;
        }
        // windows found by several yaws describe the same spot
        if kept.iter().all(|k| k.bbox.iou(&c.bbox) < 0.5) {
            kept.push(c);
        }
    }
    Ok(kept)
}

/// Robot box dilated per axis around its center, with x and y extents equalized.
pub fn search_window(robot_box: &Aabb, dilation: f64) -> Aabb {
    let size = robot_box.size() * dilation;
    let side = size.x.max(size.y);
    Aabb::from_center(robot_box.center(), Vector3::new(side, side, size.z) * 0.5)
}
