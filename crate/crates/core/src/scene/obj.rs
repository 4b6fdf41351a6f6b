//! Wavefront OBJ subset: `v`, `vn`, `vt` and `f` records.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use thiserror::Error;

use super::mesh::Mesh;
use crate::math::Vec3;

#[derive(Debug, Error)]
pub enum ObjError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: non-finite coordinate")]
    NonFinite { line: usize },
    #[error("OBJ contains no faces")]
    Empty,
}

fn parse_err(line: usize, message: impl Into<String>) -> ObjError {
    ObjError::Parse { line, message: message.into() }
}

fn parse_floats<const N: usize>(line: usize, fields: &[&str]) -> Result<[f64; N], ObjError> {
    if fields.len() < N {
        return Err(parse_err(line, format!("expected {N} numbers, found {}", fields.len())));
    }
    let mut out = [0.0; N];
    for (o, f) in out.iter_mut().zip(fields) {
        *o = f.parse::<f64>().map_err(|_| parse_err(line, format!("invalid number `{f}`")))?;
        if !o.is_finite() {
            return Err(ObjError::NonFinite { line });
        }
    }
    Ok(out)
}

/// Resolves a 1-based (or negative, relative) OBJ index.
fn resolve(line: usize, raw: &str, count: usize, what: &str) -> Result<usize, ObjError> {
    let i: i64 = raw
        .parse()
        .map_err(|_| parse_err(line, format!("invalid {what} index `{raw}`")))?;
    let idx = if i > 0 { i - 1 } else { count as i64 + i };
    if i == 0 || idx < 0 || idx as usize >= count {
        return Err(parse_err(line, format!("{what} index {i} out of range ({count} defined)")));
    }
    Ok(idx as usize)
}

type Corner = (usize, Option<usize>, Option<usize>);

/// Parses OBJ text into a [`Mesh`]. Missing normals are computed from faces;
/// missing UVs are planar-projected over the two largest AABB extents.
pub fn parse_obj(text: &str) -> Result<Mesh, ObjError> {
    let mut positions: Vec<Vec3> = Vec::new();
    let mut normals: Vec<Vec3> = Vec::new();
    let mut texcoords: Vec<[f64; 2]> = Vec::new();
    let mut faces: Vec<[Corner; 3]> = Vec::new();

    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut fields = content.split_whitespace();
        let tag = fields.next().unwrap_or("");
        let rest: Vec<&str> = fields.collect();
        match tag {
            "v" => positions.push(Vec3::from_array(parse_floats::<3>(line, &rest)?)),
            "vn" => {
                let v = Vec3::from_array(parse_floats::<3>(line, &rest)?);
                normals.push(v.try_normalized().ok_or_else(|| parse_err(line, "zero-length normal"))?);
            }
            "vt" => {
                // `vt u [v [w]]`
                let u = parse_floats::<1>(line, &rest)?[0];
                let v = if rest.len() > 1 { parse_floats::<1>(line, &rest[1..])?[0] } else { 0.0 };
                texcoords.push([u, v]);
            }
            "f" => {
                if rest.len() < 3 {
                    return Err(parse_err(line, "face needs at least 3 vertices"));
                }
                let mut corners = Vec::with_capacity(rest.len());
                for c in &rest {
                    let mut parts = c.split('/');
                    let v = resolve(line, parts.next().unwrap_or(""), positions.len(), "vertex")?;
                    let vt = match parts.next() {
                        Some("") | None => None,
                        Some(s) => Some(resolve(line, s, texcoords.len(), "texcoord")?),
                    };
                    let vn = match parts.next() {
                        Some("") | None => None,
                        Some(s) => Some(resolve(line, s, normals.len(), "normal")?),
                    };
                    corners.push((v, vt, vn));
                }
                for k in 1..corners.len() - 1 {
                    faces.push([corners[0], corners[k], corners[k + 1]]);
                }
            }
            // Groups, objects, materials and smoothing are ignored.
            "g" | "o" | "s" | "usemtl" | "mtllib" | "l" | "p" => {}
            other => return Err(parse_err(line, format!("unsupported record `{other}`"))),
        }
    }
    if faces.is_empty() {
        return Err(ObjError::Empty);
    }

    // Unique corners ordered by their source indices, so files with one
    // `v/vt/vn` triple per position keep their vertex order.
    let mut keys: Vec<Corner> = faces.iter().flatten().copied().collect();
    keys.sort_unstable();
    keys.dedup();
    let map: HashMap<Corner, u32> = keys.iter().enumerate().map(|(i, &k)| (k, i as u32)).collect();
    let triangles: Vec<[u32; 3]> = faces.iter().map(|f| f.map(|c| map[&c])).collect();

    let vertices: Vec<Vec3> = keys.iter().map(|k| positions[k.0]).collect();
    let computed = Mesh::face_weighted_normals(&vertices, &triangles);
    let mesh_normals = keys
        .iter()
        .zip(&computed)
        .map(|(k, &c)| k.2.map(|i| normals[i]).unwrap_or(c))
        .collect();

    let bb = crate::math::Aabb::from_points(vertices.iter().copied());
    let e = bb.extent();
    let mut axes = [0usize, 1, 2];
    axes.sort_by(|&a, &b| e[b].partial_cmp(&e[a]).unwrap_or(std::cmp::Ordering::Equal));
    let (ua, va) = (axes[0], axes[1]);
    let planar = |p: Vec3| {
        let u = if e[ua] > 0.0 { (p[ua] - bb.min[ua]) / e[ua] } else { 0.0 };
        let v = if e[va] > 0.0 { (p[va] - bb.min[va]) / e[va] } else { 0.0 };
        [u, v]
    };
    let uvs = keys
        .iter()
        .zip(&vertices)
        .map(|(k, &p)| k.1.map(|i| texcoords[i]).unwrap_or_else(|| planar(p)))
        .collect();

    Ok(Mesh { vertices, normals: mesh_normals, uvs, triangles, material_slot: "default".into() })
}

/// Reads and parses an OBJ file.
pub fn load_obj(path: impl AsRef<Path>) -> Result<Mesh, ObjError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ObjError::Io { path: path.display().to_string(), source })?;
    parse_obj(&text)
}

/// Serializes a mesh as OBJ text with 6 decimal places. Each vertex emits
/// one `v`, `vt` and `vn` record so faces use `a/a/a` corners.
pub fn write_obj(mesh: &Mesh) -> String {
    let mut s = String::with_capacity(mesh.vertices.len() * 96);
    let _ = writeln!(s, "# {} vertices, {} triangles", mesh.vertices.len(), mesh.triangles.len());
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {:.6} {:.6} {:.6}", v.x, v.y, v.z);
    }
    for t in &mesh.uvs {
        let _ = writeln!(s, "vt {:.6} {:.6}", t[0], t[1]);
    }
    for n in &mesh.normals {
        let _ = writeln!(s, "vn {:.6} {:.6} {:.6}", n.x, n.y, n.z);
    }
    for tri in &mesh.triangles {
        let [a, b, c] = tri.map(|i| i + 1);
        let _ = writeln!(s, "f {a}/{a}/{a} {b}/{b}/{b} {c}/{c}/{c}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    const CUBE: &str = "\
v 0 0 0
v 1 0 0
v 1 1 0
v 0 1 0
v 0 0 1
v 1 0 1
v 1 1 1
v 0 1 1
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 4 8 7
f 4 7 3
f 1 5 8
f 1 8 4
f 2 3 7
f 2 7 6
";

    #[test]
    fn single_triangle() {
        let m = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.triangle_count(), 1);
        m.validate().unwrap();
        for n in &m.normals {
            assert!((*n - Vec3::Z).length() < 1e-12);
        }
    }

    #[test]
    fn unit_cube() {
        let m = parse_obj(CUBE).unwrap();
        assert_eq!(m.triangle_count(), 12);
        assert_eq!(m.vertex_count(), 8);
        let bb = m.aabb();
        assert_eq!(bb.min, Vec3::ZERO);
        assert_eq!(bb.max, Vec3::ONE);
        assert!(m.uvs.iter().all(|uv| (0.0..=1.0).contains(&uv[0]) && (0.0..=1.0).contains(&uv[1])));
    }

    #[test]
    fn out_of_range_face_names_line() {
        let err = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n").unwrap_err();
        match err {
            ObjError::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other}"),
        }
        assert!(err_string("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n").contains("line 4"));
    }

    fn err_string(s: &str) -> String {
        parse_obj(s).unwrap_err().to_string()
    }

    #[test]
    fn quads_fan_and_full_corners() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nvt 0 0\nvt 1 0\nvt 1 1\nvt 0 1\nvn 0 0 2\n\
                    f 1/1/1 2/2/1 3/3/1 4/4/1\n";
        let m = parse_obj(text).unwrap();
        assert_eq!(m.triangle_count(), 2);
        assert_eq!(m.uvs[2], [1.0, 1.0]);
        assert!((m.normals[0] - Vec3::Z).length() < 1e-12);
        let neg = parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n").unwrap();
        assert_eq!(neg.triangle_count(), 1);
    }

    #[test]
    fn errors_are_distinct() {
        assert!(matches!(parse_obj("v 0 0 0\n"), Err(ObjError::Empty)));
        assert!(matches!(parse_obj("v 0 inf 0\n"), Err(ObjError::NonFinite { line: 1 })));
        assert!(matches!(parse_obj("v 0 0\n"), Err(ObjError::Parse { line: 1, .. })));
        assert!(matches!(load_obj("/definitely/not/here.obj"), Err(ObjError::Io { .. })));
    }

    #[test]
    fn write_then_parse_round_trips() {
        let m = crate::scene::Mesh::uv_sphere(1.3, 10, 6);
        let back = parse_obj(&write_obj(&m)).unwrap();
        assert_eq!(back.vertex_count(), m.vertex_count());
        assert_eq!(back.triangles, m.triangles);
        for (a, b) in m.vertices.iter().zip(&back.vertices) {
            assert!((*a - *b).length() < 1e-6);
        }
    }
}
