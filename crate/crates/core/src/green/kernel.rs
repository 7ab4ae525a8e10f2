//! Kernel tables G_x(y) on a torus grid and their binary/JSON persistence.

use super::grid::{OperatorSpec, TorusGrid};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

const MAGIC: &[u8; 4] = b"PCKT";
const VERSION: u32 = 1;
/// Largest table accepted by the readers.
pub const MAX_POINTS: usize = 1 << 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelMeta {
    pub schema: u32,
    pub grid: TorusGrid,
    pub spec: OperatorSpec,
    pub source: Vec<usize>,
    pub method: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

/// Values of G(x, .) at every grid point. The entry at y = x is the discrete
/// diagonal value; `singular_index` marks it.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    pub meta: KernelMeta,
    pub values: Vec<f64>,
}

impl KernelTable {
    pub fn new(grid: TorusGrid, spec: OperatorSpec, source: Vec<usize>, method: &str, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Domain(format!("{} values for a grid of {}", values.len(), grid.len())));
        }
        if source.len() != grid.n as usize || source.iter().any(|&i| i >= grid.points) {
            return Err(Error::Domain("source point outside the grid".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("kernel values must be finite".into()));
        }
        let meta = KernelMeta { schema: 1, grid, spec, source, method: method.to_string(), params: BTreeMap::new() };
        Ok(KernelTable { meta, values })
    }

    pub fn param(mut self, key: &str, v: f64) -> Self {
        self.meta.params.insert(key.to_string(), v);
        self
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.meta.grid
    }

    pub fn singular_index(&self) -> usize {
        self.meta.grid.index(&self.meta.source)
    }

    pub fn at(&self, y: &[usize]) -> f64 {
        self.values[self.meta.grid.index(y)]
    }

    /// max |G(y)| over points at distance in [lo, hi], excluding y = x.
    pub fn shell_max(&self, lo: f64, hi: f64) -> Option<f64> {
        let g = &self.meta.grid;
        let mut best: Option<f64> = None;
        for (i, &v) in self.values.iter().enumerate() {
            let d = g.dist(&g.coords(i), &self.meta.source);
            if d > 0.0 && d >= lo && d <= hi {
                best = Some(best.map_or(v.abs(), |b: f64| b.max(v.abs())));
            }
        }
        best
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let g = &self.meta.grid;
        let mut out = Vec::with_capacity(16 + 4 * g.n as usize + 8 * self.values.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&g.n.to_le_bytes());
        out.extend_from_slice(&(g.points as u32).to_le_bytes());
        for &s in &self.meta.source {
            out.extend_from_slice(&(s as u32).to_le_bytes());
        }
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn sidecar_json(&self) -> String {
        serde_json::to_string_pretty(&self.meta).expect("metadata serializes")
    }

    /// Reads a table from its binary body and JSON sidecar; both must agree.
    pub fn from_parts(bytes: &[u8], sidecar: &str) -> Result<Self> {
        let body = parse_body(bytes)?;
        let meta = parse_sidecar(sidecar)?;
        if meta.grid.n != body.n || meta.grid.points != body.points || meta.source != body.source {
            return Err(Error::Parse("sidecar disagrees with the binary header".into()));
        }
        KernelTable::new(meta.grid, meta.spec.clone(), meta.source.clone(), &meta.method, body.values)
            .map(|mut t| {
                t.meta = meta;
                t
            })
            .map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        std::fs::write(sidecar_path(path), self.sidecar_json())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        let side = std::fs::read_to_string(sidecar_path(path))?;
        Self::from_parts(&bytes, &side)
    }

    /// max |G_x(y) - G_y(x)| over all pairs of sources, relative to max |G_x(y)| off the diagonal.
    pub fn symmetry_defect(tables: &[KernelTable]) -> Result<f64> {
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for a in tables {
            for b in tables {
                if a.meta.grid != b.meta.grid {
                    return Err(Error::Domain("tables on different grids".into()));
                }
                let gab = a.at(&b.meta.source);
                let gba = b.at(&a.meta.source);
                worst = worst.max((gab - gba).abs());
                if a.meta.source != b.meta.source {
                    scale = scale.max(gab.abs());
                }
            }
        }
        Ok(if scale > 0.0 { worst / scale } else { worst })
    }
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

#[derive(Debug, Clone, PartialEq)]
pub struct KernelBody {
    pub n: u32,
    pub points: usize,
    pub source: Vec<usize>,
    pub values: Vec<f64>,
}

fn read_u32(b: &[u8], at: usize) -> Result<u32> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| Error::Parse("truncated header".into()))
}

pub fn parse_body(b: &[u8]) -> Result<KernelBody> {
    if b.len() < 16 || &b[..4] != MAGIC {
        return Err(Error::Parse("not a kernel table (bad magic)".into()));
    }
    let version = read_u32(b, 4)?;
    if version != VERSION {
        return Err(Error::Parse(format!("unsupported table version {version}")));
    }
    let n = read_u32(b, 8)?;
    let points = read_u32(b, 12)? as usize;
    if !(2..=3).contains(&n) || points < 16 || points % 2 == 1 {
        return Err(Error::Parse(format!("bad grid shape n={n}, N={points}")));
    }
    let count = points.checked_pow(n).filter(|&c| c <= MAX_POINTS).ok_or_else(|| Error::Parse("grid too large".into()))?;
    let mut at = 16;
    let mut source = Vec::with_capacity(n as usize);
    for _ in 0..n {
        let s = read_u32(b, at)? as usize;
        if s >= points {
            return Err(Error::Parse("source index outside the grid".into()));
        }
        source.push(s);
        at += 4;
    }
    if b.len() != at + 8 * count {
        return Err(Error::Parse(format!("expected {} value bytes, found {}", 8 * count, b.len().saturating_sub(at))));
    }
    let values: Vec<f64> = b[at..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Parse("non-finite kernel value".into()));
    }
    Ok(KernelBody { n, points, source, values })
}

pub fn parse_sidecar(text: &str) -> Result<KernelMeta> {
    let meta: KernelMeta = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if meta.schema != 1 {
        return Err(Error::Parse(format!("unsupported sidecar schema {}", meta.schema)));
    }
    let g = meta.grid;
    TorusGrid::with_budget(g.n, g.side, g.points, MAX_POINTS).map_err(|e| Error::Parse(e.to_string()))?;
    meta.spec.validate().map_err(|e| Error::Parse(e.to_string()))?;
    if meta.spec.n != g.n {
        return Err(Error::Parse("operator and grid dimensions differ".into()));
    }
    if meta.source.len() != g.n as usize || meta.source.iter().any(|&s| s >= g.points) {
        return Err(Error::Parse("source index outside the grid".into()));
    }
    if meta.params.values().any(|v| !v.is_finite()) {
        return Err(Error::Parse("non-finite build parameter".into()));
    }
    Ok(meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::DimPair;

    fn table() -> KernelTable {
        let g = TorusGrid::new(3, 1.0, 16).unwrap();
        let spec = OperatorSpec::new(DimPair::new(3, 1).unwrap(), vec![1.0]).unwrap();
        let vals = (0..g.len()).map(|i| i as f64 * 0.5 - 3.0).collect();
        KernelTable::new(g, spec, vec![3, 5, 0], "test", vals).unwrap().param("depth", 2.0)
    }

    #[test]
    fn round_trip() {
        let t = table();
        let back = KernelTable::from_parts(&t.to_bytes(), &t.sidecar_json()).unwrap();
        assert_eq!(back, t);
        let dir = std::env::temp_dir().join(format!("pckt-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let p = dir.join("k.bin");
        t.save(&p).unwrap();
        assert_eq!(KernelTable::load(&p).unwrap(), t);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn rejects_corruption() {
        let t = table();
        let b = t.to_bytes();
        assert!(parse_body(&b[..b.len() - 1]).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(parse_body(&bad).is_err());
        let mut big = b.clone();
        big[12..16].copy_from_slice(&(1u32 << 20).to_le_bytes());
        assert!(parse_body(&big).is_err());
        let side = t.sidecar_json().replace("\"test\"", "\"test\", \"extra\": 1");
        assert!(parse_sidecar(&side).is_err());
        let mut other = t.clone();
        other.meta.source = vec![0, 0, 0];
        assert!(KernelTable::from_parts(&b, &other.sidecar_json()).is_err());
    }
}
