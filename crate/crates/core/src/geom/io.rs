//! ASCII PLY point clouds and Wavefront OBJ meshes.
//!
//! Values are written with 17 significant digits so finite values round-trip bit-exactly.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::{PointCloud, TriangleMesh, Vec3};
use crate::{Error, Result};

fn fmt_f64(out: &mut String, v: f64) {
    let _ = write!(out, "{v:.16e}");
}

fn fmt_vec(out: &mut String, prefix: &str, p: &Vec3) {
    out.push_str(prefix);
    for i in 0..3 {
        if i > 0 || !prefix.is_empty() {
            out.push(' ');
        }
        fmt_f64(out, p[i]);
    }
    out.push('\n');
}

pub fn write_ply(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(64 + cloud.len() * 72);
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", cloud.len());
    out.push_str("property double x\nproperty double y\nproperty double z\nend_header\n");
    for p in &cloud.points {
        fmt_vec(&mut out, "", p);
    }
    out
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| Error::parse(line, "missing coordinate"))?;
    let v: f64 = tok
        .parse()
        .map_err(|_| Error::parse(line, format!("invalid number {tok:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(line, "non-finite coordinate"));
    }
    Ok(v)
}

fn parse_xyz<'a>(mut toks: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec3> {
    let x = parse_f64(toks.next(), line)?;
    let y = parse_f64(toks.next(), line)?;
    let z = parse_f64(toks.next(), line)?;
    Ok(Vector3::new(x, y, z))
}

pub fn read_ply(text: &str) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(Error::parse(1, "missing 'ply' magic")),
    }
    let mut count: Option<usize> = None;
    let mut props = Vec::new();
    let mut in_vertex = false;
    let mut header_done = false;
    for (ln, l) in lines.by_ref() {
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.as_slice() {
            ["format", "ascii", _] => {}
            ["format", ..] => return Err(Error::parse(ln, "only ascii PLY is supported")),
            ["comment", ..] | [] => {}
            ["element", "vertex", n] => {
                count = Some(n.parse().map_err(|_| Error::parse(ln, "invalid vertex count"))?);
                in_vertex = true;
            }
            ["element", ..] => in_vertex = false,
            ["property", ty, name] if in_vertex => {
                if !matches!(*ty, "double" | "float64" | "float" | "float32") {
                    return Err(Error::parse(ln, format!("unsupported property type {ty}")));
                }
                props.push(name.to_string());
            }
            ["property", ..] => {}
            ["end_header"] => {
                header_done = true;
                break;
            }
            _ => return Err(Error::parse(ln, format!("unexpected header line {l:?}"))),
        }
    }
    if !header_done {
        return Err(Error::parse(text.lines().count(), "missing end_header"));
    }
    let count = count.ok_or_else(|| Error::parse(1, "missing vertex element"))?;
    if props != ["x", "y", "z"] {
        return Err(Error::parse(1, "vertex properties must be x y z"));
    }
    let mut points = Vec::with_capacity(count);
    for (ln, l) in lines {
        if points.len() == count {
            if !l.is_empty() {
                return Err(Error::parse(ln, "trailing data after vertices"));
            }
            continue;
        }
        let mut toks = l.split_whitespace();
        points.push(parse_xyz(toks.by_ref(), ln)?);
        if toks.next().is_some() {
            return Err(Error::parse(ln, "too many values on vertex line"));
        }
    }
    if points.len() != count {
        return Err(Error::parse(
            text.lines().count(),
            format!("expected {count} vertices, found {}", points.len()),
        ));
    }
    Ok(PointCloud::new(points))
}

pub fn write_obj(mesh: &TriangleMesh) -> String {
    let mut out = String::with_capacity(mesh.vertices.len() * 72 + mesh.triangles.len() * 24);
    for v in &mesh.vertices {
        fmt_vec(&mut out, "v", v);
    }
    for t in &mesh.triangles {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

/// Reads `v` and `f` records; `f` entries may carry `/vt/vn` suffixes, which are ignored.
/// Polygons with more than three vertices are fan-triangulated.
pub fn read_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut faces: Vec<(usize, Vec<i64>)> = Vec::new();
    for (i, l) in text.lines().enumerate() {
        let ln = i + 1;
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some("v") => vertices.push(parse_xyz(toks, ln)?),
            Some("f") => {
                let idx = toks
                    .map(|t| {
                        t.split('/')
                            .next()
                            .and_then(|s| s.parse::<i64>().ok())
                            .ok_or_else(|| Error::parse(ln, format!("invalid face index {t:?}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                if idx.len() < 3 {
                    return Err(Error::parse(ln, "face needs at least 3 vertices"));
                }
                faces.push((ln, idx));
            }
            _ => {}
        }
    }
    let n = vertices.len() as i64;
    let mut triangles = Vec::with_capacity(faces.len());
    for (ln, idx) in faces {
        let resolved = idx
            .iter()
            .map(|&k| {
                let r = if k < 0 { n + k } else { k - 1 };
                if (0..n).contains(&r) {
                    Ok(r as usize)
                } else {
                    Err(Error::parse(ln, format!("face index {k} out of range")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        for w in 1..resolved.len() - 1 {
            triangles.push([resolved[0], resolved[w], resolved[w + 1]]);
        }
    }
    let mesh = TriangleMesh {
        vertices,
        triangles,
    };
    mesh.validate()?;
    Ok(mesh)
}

pub fn save_ply(cloud: &PointCloud, path: impl AsRef<Path>) -> Result<()> {
    Ok(std::fs::write(path, write_ply(cloud))?)
}

pub fn load_ply(path: impl AsRef<Path>) -> Result<PointCloud> {
    read_ply(&std::fs::read_to_string(path)?)
}

pub fn save_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<()> {
    Ok(std::fs::write(path, write_obj(mesh))?)
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    read_obj(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn finite() -> impl Strategy<Value = f64> {
        prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO
    }

    proptest! {
        #[test]
        fn ply_round_trip_is_bit_exact(raw in prop::collection::vec((finite(), finite(), finite()), 0..40)) {
            let cloud = PointCloud::new(raw.iter().map(|&(x, y, z)| Vector3::new(x, y, z)).collect());
            let back = read_ply(&write_ply(&cloud)).unwrap();
            prop_assert_eq!(back.len(), cloud.len());
            for (a, b) in back.points.iter().zip(&cloud.points) {
                for i in 0..3 {
                    prop_assert_eq!(a[i].to_bits(), b[i].to_bits());
                }
            }
        }

        #[test]
        fn obj_round_trip_is_bit_exact(raw in prop::collection::vec((finite(), finite(), finite()), 3..30)) {
            let vertices: Vec<Vec3> = raw.iter().map(|&(x, y, z)| Vector3::new(x, y, z)).collect();
            let triangles = (0..vertices.len() - 2).map(|i| [i, i + 1, i + 2]).collect();
            let mesh = TriangleMesh { vertices, triangles };
            let back = read_obj(&write_obj(&mesh)).unwrap();
            prop_assert_eq!(&back.triangles, &mesh.triangles);
            for (a, b) in back.vertices.iter().zip(&mesh.vertices) {
                for i in 0..3 {
                    prop_assert_eq!(a[i].to_bits(), b[i].to_bits());
                }
            }
        }
    }

    #[test]
    fn truncated_ply_reports_line() {
        let text = write_ply(&PointCloud::new(vec![Vector3::zeros(), Vector3::x()]));
        let cut: String = text.lines().take(8).collect::<Vec<_>>().join("\n");
        assert!(matches!(read_ply(&cut), Err(Error::Parse { .. })));
        let bad = text.replace("1.0000000000000000e0", "abc");
        match read_ply(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 9),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn obj_quads_and_slashes() {
        let m = read_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3 4/4/4\n").unwrap();
        assert_eq!(m.triangles, vec![[0, 1, 2], [0, 2, 3]]);
        assert!(matches!(read_obj("v 0 0 0\nf 1 2 3\n"), Err(Error::Parse { line: 2, .. })));
    }
}
