//! Field persistence.
//!
//! Container layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "GRSHFLD\0"
//! version  u32
//! hlen     u64      length of the JSON header in bytes
//! header   hlen bytes of UTF-8 JSON (see FieldHeader)
//! payload  for each header field, grid.len() f64 values in node order
//! ```
//!
//! Nodes outside a field's margin are stored as NaN.

use std::fmt::Write as _;
use std::fs;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::geometry::GrushinParams;
use crate::grid::{Grid, GridSpec, ScalarField};
use crate::solutions::{Provenance, SolutionPair, DEFAULT_PSI_MIN};

pub const MAGIC: &[u8; 8] = b"GRSHFLD\0";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldEntry {
    pub name: String,
    pub margin: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub version: u32,
    pub params: GrushinParams,
    pub grid: GridSpec,
    pub fields: Vec<FieldEntry>,
    #[serde(default)]
    pub meta: Value,
}

#[derive(Debug)]
pub struct FieldFile {
    pub grid: Arc<Grid>,
    pub fields: Vec<(String, ScalarField)>,
    pub meta: Value,
}

impl FieldFile {
    pub fn field(&self, name: &str) -> Result<&ScalarField> {
        self.fields
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, f)| f)
            .ok_or_else(|| Error::Format(format!("no field named '{name}'")))
    }
}

/// Serialises fields into the container format.
pub fn encode_fields(fields: &[(&str, &ScalarField)], meta: Value) -> Result<Vec<u8>> {
    let grid = fields.first().ok_or_else(|| Error::Format("nothing to write".into()))?.1.grid().clone();
    if fields.iter().any(|(_, f)| **f.grid() != *grid) {
        return Err(Error::GridMismatch);
    }
    let header = FieldHeader {
        version: FORMAT_VERSION,
        params: *grid.params(),
        grid: grid.spec().clone(),
        fields: fields.iter().map(|(n, f)| FieldEntry { name: n.to_string(), margin: f.margin() }).collect(),
        meta,
    };
    let json = serde_json::to_vec(&header)?;
    let mut out = Vec::with_capacity(20 + json.len() + fields.len() * grid.len() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, f) in fields {
        for v in f.data() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_fields(bytes: &[u8]) -> Result<FieldFile> {
    let mut cur = bytes;
    let mut magic = [0u8; 8];
    cur.read_exact(&mut magic).map_err(|_| Error::Format("truncated header".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let mut b4 = [0u8; 4];
    cur.read_exact(&mut b4).map_err(|_| Error::Format("truncated header".into()))?;
    let version = u32::from_le_bytes(b4);
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported container version {version}")));
    }
    let mut b8 = [0u8; 8];
    cur.read_exact(&mut b8).map_err(|_| Error::Format("truncated header".into()))?;
    let hlen = u64::from_le_bytes(b8) as usize;
    if cur.len() < hlen {
        return Err(Error::Format("truncated header".into()));
    }
    let header: FieldHeader = serde_json::from_slice(&cur[..hlen])?;
    cur = &cur[hlen..];
    let grid = Grid::new(header.params, header.grid)?;
    let need = header.fields.len() * grid.len() * 8;
    if cur.len() != need {
        return Err(Error::Format(format!("payload has {} bytes, expected {need}", cur.len())));
    }
    let mut fields = Vec::with_capacity(header.fields.len());
    for (entry, chunk) in header.fields.iter().zip(cur.chunks_exact(grid.len() * 8)) {
        let data = chunk.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk"))).collect();
        fields.push((entry.name.clone(), ScalarField::from_data(grid.clone(), data, entry.margin)?));
    }
    Ok(FieldFile { grid, fields, meta: header.meta })
}

pub fn write_fields(path: &Path, fields: &[(&str, &ScalarField)], meta: Value) -> Result<()> {
    let bytes = encode_fields(fields, meta)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_fields(path: &Path) -> Result<FieldFile> {
    decode_fields(&fs::read(path)?)
}

#[derive(Serialize, Deserialize)]
struct PairMeta {
    label: String,
    psi_min: f64,
    provenance: Provenance,
    #[serde(default)]
    extra: Value,
}

/// Persists `u`, `w`, `V` together with the pair's label and provenance.
pub fn write_pair(path: &Path, pair: &SolutionPair, extra: Value) -> Result<()> {
    let meta = PairMeta { label: pair.label.clone(), psi_min: pair.k.psi_min, provenance: pair.provenance.clone(), extra };
    write_fields(path, &[("u", &pair.u), ("w", &pair.w), ("V", &pair.v)], serde_json::to_value(meta)?)
}

/// Loads a pair and recomputes its residuals and `K` estimates.
pub fn read_pair(path: &Path) -> Result<SolutionPair> {
    let file = read_fields(path)?;
    let meta: Option<PairMeta> = serde_json::from_value(file.meta.clone()).ok();
    let (label, psi_min, provenance) = match meta {
        Some(m) => (m.label, m.psi_min, m.provenance),
        None => (path.display().to_string(), DEFAULT_PSI_MIN, Provenance::Loaded),
    };
    SolutionPair::from_fields(
        label,
        file.field("u")?.clone(),
        file.field("w")?.clone(),
        file.field("V")?.clone(),
        psi_min,
        provenance,
    )
}

/// CSV of a 2-D slice: axes `a`, `b` vary, the others are fixed at node indices `fixed`.
///
/// Rows are `coord_a,coord_b,value` in row-major order; invalid nodes are skipped.
pub fn slice_csv(field: &ScalarField, a: usize, b: usize, fixed: &[usize]) -> Result<String> {
    let grid = field.grid();
    let d = grid.dim();
    if a >= d || b >= d || a == b {
        return Err(Error::InvalidParameter(format!("slice axes ({a}, {b}) invalid for dimension {d}")));
    }
    if fixed.len() != d {
        return Err(Error::DimensionMismatch { expected: d, got: fixed.len() });
    }
    let name = |k: usize| {
        let m = grid.params().m();
        if k < m {
            format!("x{}", k + 1)
        } else {
            format!("y{}", k - m + 1)
        }
    };
    let mut out = format!("{},{},value\n", name(a), name(b));
    let mut multi = fixed.to_vec();
    for i in 0..grid.nodes()[a] {
        for j in 0..grid.nodes()[b] {
            multi[a] = i;
            multi[b] = j;
            if multi.iter().zip(grid.nodes()).any(|(m, n)| m >= n) {
                return Err(Error::InvalidParameter("fixed index out of range".into()));
            }
            let idx = grid.encode(&multi);
            if field.is_valid(idx) {
                writeln!(out, "{:e},{:e},{:e}", grid.axis(a)[i], grid.axis(b)[j], field.get(idx)).expect("string write");
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solutions::manufacture;

    #[test]
    fn round_trip_preserves_bits_and_masks() {
        let g = Grid::cube(GrushinParams::new(3, 1, 1.0).unwrap(), 1.2, 9).unwrap();
        let pair = manufacture("exp", |c| c[0].exp(), &g, 1e-6).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pair.grf");
        write_pair(&path, &pair, Value::Null).unwrap();
        let back = read_pair(&path).unwrap();
        assert_eq!(back.label, "exp");
        assert_eq!(back.v.margin(), 2);
        for (a, b) in pair.v.data().iter().zip(back.v.data()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back.k, pair.k);
    }

    #[test]
    fn rejects_corrupt_input() {
        assert!(matches!(decode_fields(b"nope"), Err(Error::Format(_))));
        let g = Grid::cube(GrushinParams::new(1, 1, 1.0).unwrap(), 1.0, 9).unwrap();
        let f = ScalarField::constant(&g, 2.0);
        let mut bytes = encode_fields(&[("f", &f)], Value::Null).unwrap();
        bytes.pop();
        assert!(matches!(decode_fields(&bytes), Err(Error::Format(_))));
    }

    #[test]
    fn csv_slice_shape() {
        let g = Grid::cube(GrushinParams::new(1, 1, 1.0).unwrap(), 1.0, 9).unwrap();
        let f = ScalarField::sample(&g, |c| c[0] + c[1]).unwrap();
        let csv = slice_csv(&f, 0, 1, &[0, 0]).unwrap();
        assert_eq!(csv.lines().count(), 1 + 64);
        assert!(csv.starts_with("x1,y1,value\n"));
    }
}
