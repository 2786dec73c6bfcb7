//! File formats: OBJ/STL meshes, TOML configuration and JSON snapshots.

pub mod config;
pub mod obj;
pub mod snapshot;
pub mod stl;

use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::Point3;

use sitkit_core::geom::{Mesh, PhysicalAttributes};

use config::AttributesFile;

/// Load a chair mesh from OBJ or binary STL, pulling physical attributes
/// from a `<stem>.attrs.toml` sidecar when present and estimating them from
/// the geometry otherwise.
pub fn load_mesh(path: &Path) -> Result<Mesh> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase())
        .unwrap_or_default();
    let (vertices, faces) = match ext.as_str() {
        "obj" => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            obj::parse_obj(&text)?
        }
        "stl" => {
            let bytes =
                std::fs::read(path).with_context(|| format!("reading {}", path.display()))?;
            stl::parse_stl(&bytes)?
        }
        other => bail!("unsupported mesh format '{other}' (expected obj or stl)"),
    };

    let placeholder = PhysicalAttributes::new(
        1.0,
        Point3::origin(),
        nalgebra::Matrix3::identity(),
        0.7,
    );
    let (mut mesh, dropped) = Mesh::new(vertices, faces, placeholder)?;
    if dropped > 0 {
        log::warn!("{}: dropped {dropped} degenerate triangles", path.display());
    }

    let sidecar = path.with_extension("attrs.toml");
    if sidecar.exists() {
        let text = std::fs::read_to_string(&sidecar)
            .with_context(|| format!("reading {}", sidecar.display()))?;
        let attrs: AttributesFile = toml::from_str(&text)
            .with_context(|| format!("parsing {}", sidecar.display()))?;
        apply_attributes(&mut mesh, &attrs);
    } else {
        log::info!(
            "{}: no attributes sidecar, estimating from geometry",
            path.display()
        );
        mesh.estimate_attributes(3.0, 0.7);
    }
    Ok(mesh)
}

fn apply_attributes(mesh: &mut Mesh, attrs: &AttributesFile) {
    // Start from geometric estimates so partial sidecars stay physical.
    mesh.estimate_attributes(attrs.mass, attrs.friction.unwrap_or(0.7));
    if let Some(com) = attrs.center_of_mass {
        mesh.attributes.center_of_mass = Point3::new(com[0], com[1], com[2]);
    }
    if let Some(inertia) = attrs.inertia() {
        mesh.attributes.inertia = inertia;
    }
}

/// Write a mesh as OBJ plus its attributes sidecar.
pub fn save_mesh(path: &Path, mesh: &Mesh) -> Result<()> {
    let text = obj::write_obj(&mesh.vertices, &mesh.faces);
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    let a = &mesh.attributes;
    let attrs = AttributesFile {
        mass: a.mass,
        center_of_mass: Some([a.center_of_mass.x, a.center_of_mass.y, a.center_of_mass.z]),
        inertia_diagonal: Some([a.inertia[(0, 0)], a.inertia[(1, 1)], a.inertia[(2, 2)]]),
        inertia_products: Some([a.inertia[(0, 1)], a.inertia[(1, 2)], a.inertia[(2, 0)]]),
        friction: Some(a.friction),
    };
    let sidecar = path.with_extension("attrs.toml");
    std::fs::write(&sidecar, toml::to_string_pretty(&attrs)?)
        .with_context(|| format!("writing {}", sidecar.display()))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use sitkit_core::chairgen::{generate_chair, ChairGenParams, ChairVariant};

    #[test]
    fn obj_save_load_roundtrip_keeps_attributes() {
        let dir = tempfile::tempdir().unwrap();
        let chair = generate_chair(&ChairGenParams::new(ChairVariant::Standard, 77)).unwrap();
        let path = dir.path().join("chair.obj");
        save_mesh(&path, &chair.mesh).unwrap();
        let loaded = load_mesh(&path).unwrap();
        assert_eq!(loaded.vertices.len(), chair.mesh.vertices.len());
        assert_eq!(loaded.faces, chair.mesh.faces);
        assert!((loaded.attributes.mass - chair.mesh.attributes.mass).abs() < 1e-9);
        assert!(
            (loaded.attributes.center_of_mass - chair.mesh.attributes.center_of_mass).norm() < 1e-9
        );
        assert!((loaded.attributes.inertia - chair.mesh.attributes.inertia).norm() < 1e-9);
    }

    #[test]
    fn stl_save_load_works_without_sidecar() {
        let dir = tempfile::tempdir().unwrap();
        let chair = generate_chair(&ChairGenParams::new(ChairVariant::StoolNoBack, 78)).unwrap();
        let path = dir.path().join("chair.stl");
        std::fs::write(&path, stl::write_stl(&chair.mesh.vertices, &chair.mesh.faces)).unwrap();
        let loaded = load_mesh(&path).unwrap();
        // Geometry survives the f32 narrowing; attributes are estimated.
        assert!(loaded.attributes.mass > 0.0);
        let (min0, max0) = chair.mesh.aabb();
        let (min1, max1) = loaded.aabb();
        assert!((min0 - min1).norm() < 1e-5 && (max0 - max1).norm() < 1e-5);
    }

    #[test]
    fn unsupported_extension_is_an_error() {
        assert!(load_mesh(Path::new("/tmp/whatever.ply")).is_err());
    }
}
