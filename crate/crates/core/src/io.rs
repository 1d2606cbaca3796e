//! Field persistence.
//!
//! A field on disk is a directory holding `manifest.json` plus one raw
//! binary file per component per snapshot: little-endian IEEE f64, x1
//! varying fastest, no header. Round trips are bit-exact.

use crate::error::{Error, Result};
use crate::field::{FieldKind, Snapshot, SpaceTimeField};
use crate::grid::Grid3;
use crate::scalar::{lit, Scalar};
use serde::{Deserialize, Serialize};
use std::fs;
use std::io::{Read, Write};
use std::path::Path;

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    n: usize,
    box_length: f64,
    dt: f64,
    times: Vec<f64>,
    kind: FieldKind,
    components: Vec<String>,
    endianness: String,
}

fn payload_name(comp: &str, snap: usize) -> String {
    format!("{comp}_{snap:05}.raw")
}

/// Write `field` under `dir` (created if missing).
pub fn persist_field<T: Scalar>(field: &SpaceTimeField<T>, dir: &Path) -> Result<()> {
    persist_field_named(field, dir, None)
}

/// Like [`persist_field`] with explicit component names (used by the
/// pressure decompositions, whose scalars carry names like `pi1`).
pub fn persist_field_named<T: Scalar>(
    field: &SpaceTimeField<T>,
    dir: &Path,
    names: Option<&[&str]>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let grid = field.grid();
    let components: Vec<String> = match names {
        Some(names) => {
            if names.len() != field.kind().n_comps() {
                return Err(Error::Storage(format!(
                    "{} component names given for a {}-component field",
                    names.len(),
                    field.kind().n_comps()
                )));
            }
            names.iter().map(|s| s.to_string()).collect()
        }
        None => field
            .kind()
            .component_names()
            .iter()
            .map(|s| s.to_string())
            .collect(),
    };
    let manifest = Manifest {
        n: grid.n(),
        box_length: grid.box_length().to_f64().unwrap(),
        dt: field.dt().to_f64().unwrap(),
        times: field.times().iter().map(|t| t.to_f64().unwrap()).collect(),
        kind: field.kind(),
        components: components.clone(),
        endianness: "little".into(),
    };
    let text = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Storage(format!("manifest encode: {e}")))?;
    fs::write(dir.join("manifest.json"), text)?;

    for (si, snap) in field.snapshots().iter().enumerate() {
        for (ci, comp) in components.iter().enumerate() {
            let mut bytes = Vec::with_capacity(snap.comp(ci).len() * 8);
            for &v in snap.comp(ci) {
                bytes.extend_from_slice(&v.to_f64().unwrap().to_le_bytes());
            }
            let mut f = fs::File::create(dir.join(payload_name(comp, si)))?;
            f.write_all(&bytes)?;
        }
    }
    Ok(())
}

/// Load a field from `dir`.
pub fn load_field<T: Scalar>(dir: &Path) -> Result<SpaceTimeField<T>> {
    let text = fs::read_to_string(dir.join("manifest.json"))
        .map_err(|e| Error::Storage(format!("manifest read: {e}")))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| Error::Storage(format!("corrupt manifest: {e}")))?;
    if manifest.endianness != "little" {
        return Err(Error::Storage(format!(
            "unsupported endianness flag '{}'",
            manifest.endianness
        )));
    }
    if manifest.components.len() != manifest.kind.n_comps() {
        return Err(Error::Storage(format!(
            "manifest lists {} components but kind {:?} needs {}",
            manifest.components.len(),
            manifest.kind,
            manifest.kind.n_comps()
        )));
    }
    if manifest.times.is_empty() {
        return Err(Error::Storage("manifest lists no snapshots".into()));
    }
    let grid = Grid3::<T>::new(manifest.n, lit::<T>(manifest.box_length))?;
    let node_count = grid.len();

    let mut snapshots = Vec::with_capacity(manifest.times.len());
    for (si, &t) in manifest.times.iter().enumerate() {
        let mut comps = Vec::with_capacity(manifest.components.len());
        for comp in &manifest.components {
            let path = dir.join(payload_name(comp, si));
            let mut bytes = Vec::new();
            fs::File::open(&path)
                .map_err(|e| Error::Storage(format!("missing payload {comp}_{si:05}: {e}")))?
                .read_to_end(&mut bytes)?;
            if bytes.len() != node_count * 8 {
                return Err(Error::Storage(format!(
                    "payload {} is short: {} bytes, expected {} ({} nodes)",
                    payload_name(comp, si),
                    bytes.len(),
                    node_count * 8,
                    node_count
                )));
            }
            let data: Vec<T> = bytes
                .chunks_exact(8)
                .map(|c| lit::<T>(f64::from_le_bytes(c.try_into().unwrap())))
                .collect();
            comps.push(data);
        }
        snapshots.push(Snapshot::new(grid, lit::<T>(t), comps)?);
    }
    SpaceTimeField::new(manifest.kind, snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generate::{generate_field, FlowParams, GenKind};

    #[test]
    fn roundtrip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid3::new(32, 2.0 * std::f64::consts::PI).unwrap();
        let params = FlowParams::new(1.0, 0.04, 0.01, 1.0).unwrap();
        let f = generate_field(GenKind::TaylorGreen2d, &params, grid).unwrap();
        persist_field(&f, dir.path()).unwrap();
        let g: SpaceTimeField<f64> = load_field(dir.path()).unwrap();
        assert_eq!(f.len(), g.len());
        for (a, b) in f.snapshots().iter().zip(g.snapshots()) {
            assert_eq!(a.time().to_bits(), b.time().to_bits());
            for (ca, cb) in a.comps().iter().zip(b.comps()) {
                for (x, y) in ca.iter().zip(cb) {
                    assert_eq!(x.to_bits(), y.to_bits());
                }
            }
        }
    }

    #[test]
    fn zero_field_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid3::new(16, 1.0).unwrap();
        let params = FlowParams::new(1.0, 0.02, 0.01, 0.0).unwrap();
        let f = generate_field(GenKind::Zero, &params, grid).unwrap();
        persist_field(&f, dir.path()).unwrap();
        let g: SpaceTimeField<f64> = load_field(dir.path()).unwrap();
        assert_eq!(g.max_abs(), 0.0);
    }

    #[test]
    fn truncated_payload_names_component() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid3::new(16, 1.0).unwrap();
        let params = FlowParams::new(1.0, 0.02, 0.01, 1.0).unwrap();
        let f = generate_field(GenKind::Shear, &params, grid).unwrap();
        persist_field(&f, dir.path()).unwrap();
        let victim = dir.path().join("u2_00001.raw");
        let bytes = fs::read(&victim).unwrap();
        fs::write(&victim, &bytes[..bytes.len() - 8]).unwrap();
        let err = load_field::<f64>(dir.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("u2_00001"), "message was: {msg}");
        assert!(msg.contains("short"));
    }

    #[test]
    fn corrupt_manifest_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("manifest.json"), "{ not json").unwrap();
        assert!(load_field::<f64>(dir.path()).is_err());
    }

    #[test]
    fn unsupported_endianness_is_an_error() {
        let dir = tempfile::tempdir().unwrap();
        let grid = Grid3::new(16, 1.0).unwrap();
        let params = FlowParams::new(1.0, 0.02, 0.01, 1.0).unwrap();
        let f = generate_field(GenKind::Shear, &params, grid).unwrap();
        persist_field(&f, dir.path()).unwrap();
        let m = dir.path().join("manifest.json");
        let text = fs::read_to_string(&m).unwrap().replace("little", "big");
        fs::write(&m, text).unwrap();
        let err = load_field::<f64>(dir.path()).unwrap_err();
        assert!(err.to_string().contains("endianness"));
    }
}
