//! Binary field snapshots: `<stem>.bin` holds little-endian `f64` pairs
//! `(re, im)` in row-major order, `<stem>.json` the grid and frame.

use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{Axis, Field, FieldError, Frame, Grid};

pub const SNAPSHOT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDescriptor {
    pub format_version: u32,
    pub dim: usize,
    pub half_extent: Vec<f64>,
    pub points: Vec<usize>,
    pub frame: Frame,
    pub time: f64,
    pub encoding: String,
}

fn paths(stem: &Path) -> (PathBuf, PathBuf) {
    (stem.with_extension("bin"), stem.with_extension("json"))
}

/// Writes `stem.bin` and `stem.json`.
pub fn write_snapshot(stem: &Path, field: &Field) -> Result<(), FieldError> {
    let (bin, json) = paths(stem);
    let mut bytes = Vec::with_capacity(16 * field.values.len());
    for v in &field.values {
        bytes.extend_from_slice(&v.re.to_le_bytes());
        bytes.extend_from_slice(&v.im.to_le_bytes());
    }
    fs::write(bin, bytes)?;
    let desc = SnapshotDescriptor {
        format_version: SNAPSHOT_FORMAT_VERSION,
        dim: field.grid.dim(),
        half_extent: field.grid.axes().iter().map(|a| a.half_extent).collect(),
        points: field.grid.axes().iter().map(|a| a.points).collect(),
        frame: field.frame,
        time: field.time,
        encoding: "f64-le-interleaved-row-major".into(),
    };
    let text = serde_json::to_string_pretty(&desc).map_err(|e| FieldError::Snapshot(e.to_string()))?;
    fs::write(json, text)?;
    Ok(())
}

pub fn read_snapshot(stem: &Path) -> Result<Field, FieldError> {
    let (bin, json) = paths(stem);
    let desc: SnapshotDescriptor = serde_json::from_str(&fs::read_to_string(&json)?)
        .map_err(|e| FieldError::Snapshot(format!("{}: {e}", json.display())))?;
    if desc.format_version != SNAPSHOT_FORMAT_VERSION {
        return Err(FieldError::Snapshot(format!(
            "unsupported format version {}",
            desc.format_version
        )));
    }
    if desc.half_extent.len() != desc.dim || desc.points.len() != desc.dim {
        return Err(FieldError::Snapshot("descriptor axis lists do not match dim".into()));
    }
    let grid = Grid::new(
        desc.half_extent
            .iter()
            .zip(&desc.points)
            .map(|(&half_extent, &points)| Axis { half_extent, points })
            .collect(),
    )?;
    let bytes = fs::read(&bin)?;
    if bytes.len() != 16 * grid.len() {
        return Err(FieldError::Snapshot(format!(
            "{}: expected {} bytes, found {}",
            bin.display(),
            16 * grid.len(),
            bytes.len()
        )));
    }
    let values = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    Field::new(grid, values, desc.frame, desc.time)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn snapshot_round_trip_is_bit_exact(seed in any::<u64>(), t in 0.0f64..1.0, two_d in any::<bool>()) {
            let grid = if two_d { Grid::cube(2, 3.0, 8).unwrap() } else { Grid::line(3.0, 16).unwrap() };
            let f = Field::from_fn(grid, Frame::V, t, |x| {
                let s = (seed % 1000) as f64 * 1e-3;
                Complex64::new((x[0] + s).sin(), (x[1] - s).cos() / 3.0)
            });
            let dir = tempfile::tempdir().unwrap();
            let stem = dir.path().join("snap");
            write_snapshot(&stem, &f).unwrap();
            let g = read_snapshot(&stem).unwrap();
            prop_assert_eq!(f, g);
        }
    }

    #[test]
    fn layout_is_interleaved_little_endian() {
        let grid = Grid::line(1.0, 2).unwrap();
        let f = Field::new(
            grid,
            vec![Complex64::new(1.5, -2.0), Complex64::new(0.25, 8.0)],
            Frame::U,
            0.5,
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("s");
        write_snapshot(&stem, &f).unwrap();
        let bytes = fs::read(stem.with_extension("bin")).unwrap();
        assert_eq!(bytes.len(), 32);
        assert_eq!(f64::from_le_bytes(bytes[8..16].try_into().unwrap()), -2.0);
        assert_eq!(f64::from_le_bytes(bytes[16..24].try_into().unwrap()), 0.25);
        let desc: SnapshotDescriptor =
            serde_json::from_str(&fs::read_to_string(stem.with_extension("json")).unwrap()).unwrap();
        assert_eq!(desc.frame, Frame::U);
        assert_eq!(desc.points, vec![2]);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let grid = Grid::line(1.0, 4).unwrap();
        let f = Field::zeros(grid, Frame::V, 0.0);
        let dir = tempfile::tempdir().unwrap();
        let stem = dir.path().join("s");
        write_snapshot(&stem, &f).unwrap();
        fs::write(stem.with_extension("bin"), [0u8; 10]).unwrap();
        assert!(matches!(read_snapshot(&stem), Err(FieldError::Snapshot(_))));
    }
}
