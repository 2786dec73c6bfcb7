//! Binary STL reading and writing.

use anyhow::{bail, Result};
use nalgebra::Point3;

/// Parse binary STL: 80-byte header, u32 triangle count, then 50-byte
/// records (normal, three vertices, attribute). Vertices are deduplicated
/// exactly so shared corners become shared indices.
pub fn parse_stl(bytes: &[u8]) -> Result<(Vec<Point3<f64>>, Vec<[u32; 3]>)> {
    if bytes.len() < 84 {
        bail!("stl too short: {} bytes", bytes.len());
    }
    let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
    let need = 84 + count * 50;
    if bytes.len() < need {
        bail!("stl truncated: {} bytes for {count} triangles", bytes.len());
    }
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut faces = Vec::with_capacity(count);
    let mut index: std::collections::HashMap<[u32; 3], u32> = std::collections::HashMap::new();

    let read_f32 = |off: usize| -> f32 {
        f32::from_le_bytes([bytes[off], bytes[off + 1], bytes[off + 2], bytes[off + 3]])
    };

    for t in 0..count {
        let base = 84 + t * 50 + 12; // skip the normal
        let mut ids = [0u32; 3];
        for (v, id) in ids.iter_mut().enumerate() {
            let off = base + v * 12;
            let x = read_f32(off);
            let y = read_f32(off + 4);
            let z = read_f32(off + 8);
            let key = [x.to_bits(), y.to_bits(), z.to_bits()];
            *id = *index.entry(key).or_insert_with(|| {
                vertices.push(Point3::new(x as f64, y as f64, z as f64));
                (vertices.len() - 1) as u32
            });
        }
        faces.push(ids);
    }
    Ok((vertices, faces))
}

pub fn write_stl(vertices: &[Point3<f64>], faces: &[[u32; 3]]) -> Vec<u8> {
    let mut out = vec![0u8; 80];
    out.extend((faces.len() as u32).to_le_bytes());
    for f in faces {
        let a = vertices[f[0] as usize];
        let b = vertices[f[1] as usize];
        let c = vertices[f[2] as usize];
        let n = (b - a).cross(&(c - a));
        let n = if n.norm() > 1e-12 { n.normalize() } else { n };
        for v in [n.x, n.y, n.z] {
            out.extend((v as f32).to_le_bytes());
        }
        for p in [a, b, c] {
            for v in [p.x, p.y, p.z] {
                out.extend((v as f32).to_le_bytes());
            }
        }
        out.extend(0u16.to_le_bytes());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_dedupes_shared_vertices() {
        let v = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(1.0, 1.0, 0.0),
        ];
        let f = vec![[0u32, 1, 2], [1, 3, 2]];
        let bytes = write_stl(&v, &f);
        let (v2, f2) = parse_stl(&bytes).unwrap();
        assert_eq!(v2.len(), 4, "shared vertices must deduplicate");
        assert_eq!(f2.len(), 2);
        for (orig, parsed) in v.iter().zip(&v2) {
            assert!((orig - parsed).norm() < 1e-6);
        }
    }

    #[test]
    fn truncated_stl_is_an_error() {
        assert!(parse_stl(&[0u8; 10]).is_err());
        let mut bytes = vec![0u8; 84];
        bytes[80] = 3; // claims 3 triangles, has none
        assert!(parse_stl(&bytes).is_err());
    }
}
