use nalgebra::{Matrix3, Vector3};

use crate::geom::{RigidTransform, Vec3};
use crate::{Error, Result};

/// Least-squares rigid transform mapping each source point onto its target.
///
/// Minimizes `Σ ‖T·sᵢ − tᵢ‖²` over proper rotations (reflections are removed by the
/// determinant correction).
pub fn kabsch_fit(pairs: &[(Vec3, Vec3)]) -> Result<RigidTransform> {
    if pairs.len() < 3 {
        return Err(Error::DegenerateInput("kabsch_fit needs at least 3 correspondences"));
    }
    let n = pairs.len() as f64;
    let cs = pairs.iter().map(|p| p.0).sum::<Vector3<f64>>() / n;
    let ct = pairs.iter().map(|p| p.1).sum::<Vector3<f64>>() / n;

    let mut h = Matrix3::zeros();
    let mut spread = Matrix3::zeros();
    for (s, t) in pairs {
        let ds = s - cs;
        h += ds * (t - ct).transpose();
        spread += ds * ds.transpose();
    }

    // non-collinear sources ⇔ scatter matrix rank ≥ 2
    let mut sv = spread.symmetric_eigenvalues();
    sv.as_mut_slice().sort_by(|a, b| b.total_cmp(a));
    if !(sv[0] > 0.0) || sv[1] <= sv[0] * 1e-12 {
        return Err(Error::DegenerateInput("correspondences are collinear or coincident"));
    }

    let svd = h.svd(true, true);
    let u = svd.u.expect("u requested");
    let v = svd.v_t.expect("v_t requested").transpose();
    let mut d = Matrix3::identity();
    if (v * u.transpose()).determinant() < 0.0 {
        d[(2, 2)] = -1.0;
    }
    let rotation = v * d * u.transpose();
    Ok(RigidTransform::new(rotation, ct - rotation * cs))
}
