//! ASCII OBJ reading and writing (vertices and triangle faces only).

use anyhow::{bail, Context, Result};
use nalgebra::Point3;

/// Parse `v` and `f` records; faces with more than three vertices are
/// fan-triangulated, `v/vt/vn` references keep only the vertex index.
pub fn parse_obj(text: &str) -> Result<(Vec<Point3<f64>>, Vec<[u32; 3]>)> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let mut coord = |what| {
                    fields
                        .next()
                        .with_context(|| format!("line {}: missing {what}", lineno + 1))?
                        .parse::<f64>()
                        .with_context(|| format!("line {}: bad {what}", lineno + 1))
                };
                let x = coord("x")?;
                let y = coord("y")?;
                let z = coord("z")?;
                vertices.push(Point3::new(x, y, z));
            }
            Some("f") => {
                let mut ids = Vec::new();
                for field in fields {
                    let first = field.split('/').next().unwrap_or(field);
                    let idx: i64 = first
                        .parse()
                        .with_context(|| format!("line {}: bad face index {field}", lineno + 1))?;
                    let resolved = if idx < 0 {
                        vertices.len() as i64 + idx
                    } else {
                        idx - 1
                    };
                    if resolved < 0 {
                        bail!("line {}: face index out of range", lineno + 1);
                    }
                    ids.push(resolved as u32);
                }
                if ids.len() < 3 {
                    bail!("line {}: face with fewer than 3 vertices", lineno + 1);
                }
                for k in 1..ids.len() - 1 {
                    faces.push([ids[0], ids[k], ids[k + 1]]);
                }
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

pub fn write_obj(vertices: &[Point3<f64>], faces: &[[u32; 3]]) -> String {
    let mut out = String::new();
    for v in vertices {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for f in faces {
        out.push_str(&format!("f {} {} {}\n", f[0] + 1, f[1] + 1, f[2] + 1));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_vertices_faces_and_fans() {
        let text = "# comment\nv 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1/1/1 2/2/2 3/3/3 4/4/4\n";
        let (v, f) = parse_obj(text).unwrap();
        assert_eq!(v.len(), 4);
        assert_eq!(f, vec![[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn negative_indices_resolve_from_the_end() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf -3 -2 -1\n";
        let (_, f) = parse_obj(text).unwrap();
        assert_eq!(f, vec![[0, 1, 2]]);
    }

    #[test]
    fn roundtrip_is_stable() {
        let v = vec![Point3::new(0.25, -1.5, 3.0), Point3::new(0.0, 0.0, 1.0), Point3::new(1.0, 0.0, 0.0)];
        let f = vec![[0u32, 1, 2]];
        let text = write_obj(&v, &f);
        let (v2, f2) = parse_obj(&text).unwrap();
        assert_eq!(v, v2);
        assert_eq!(f, f2);
    }

    #[test]
    fn bad_face_is_an_error() {
        assert!(parse_obj("f 1 2\n").is_err());
        assert!(parse_obj("v 0 0\n").is_err());
    }
}
