//! Artifact I/O: atomic writes, CSV formatting, run metadata and the binary kernel-field format.
//!
//! A kernel field is stored as a little-endian binary file
//! (`b"HTWK"`, format version `u32`, `nr: u64`, `nv: u64`, `r[nr]`, `dr[nr]`, `v0`, `dv`,
//! then `nr * nv` complex samples as `(re, im)` pairs, rows in `r`) next to a JSON sidecar
//! (same path with extension `json`) holding the index, component, dimensions, diagnostics
//! and the run metadata.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::special::cutoff::MOLLIFIER_ID;
use crate::wave::{Component, DecompositionIndex, FieldDiagnostics, KernelField, RadialGrid, V_NOTE};
use num_complex::Complex64;

const MAGIC: &[u8; 4] = b"HTWK";
const FORMAT_VERSION: u32 = 1;

/// A float with 17 significant digits (round-trip exact).
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    format!("{x:.16e}")
}

/// Joins fields into one RFC-4180 CSV record (quoting fields that need it).
pub fn csv_record<S: AsRef<str>>(fields: &[S]) -> String {
    let mut out = String::new();
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let f = f.as_ref();
        if f.contains([',', '"', '\n', '\r']) {
            out.push('"');
            out.push_str(&f.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(f);
        }
    }
    out.push_str("\r\n");
    out
}

/// Writes `bytes` to `path` through a temporary file in the same directory and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().ok_or_else(|| Error::InvalidArgument(format!("{} has no file name", path.display())))?;
    let tmp: PathBuf = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        Error::from(e)
    })
}

/// Lower-case hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Metadata block attached to every artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    /// SHA-256 of the canonical JSON of the run configuration.
    pub config_hash: String,
    pub seed: u64,
    /// Tolerances and quadrature budgets in effect.
    pub tolerances: serde_json::Value,
    pub mollifier: String,
    pub crate_version: String,
}

impl RunMetadata {
    pub fn new<C: Serialize>(config: &C, seed: u64, tolerances: serde_json::Value) -> Result<Self> {
        let canonical = serde_json::to_vec(config)?;
        Ok(Self {
            config_hash: sha256_hex(&canonical),
            seed,
            tolerances,
            mollifier: MOLLIFIER_ID.to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }
}

/// JSON sidecar of a stored field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSidecar {
    pub index: DecompositionIndex,
    pub component: Component,
    pub d1: usize,
    pub d2: usize,
    pub rescaled: bool,
    pub diagnostics: FieldDiagnostics,
    pub coordinates: String,
    pub metadata: RunMetadata,
}

/// Path of the JSON sidecar of a binary field file.
pub fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Writes `field` in the binary format plus its JSON sidecar, both atomically.
pub fn write_field(path: &Path, field: &KernelField, metadata: &RunMetadata) -> Result<()> {
    let g = &field.grid;
    let mut buf = Vec::with_capacity(32 + 16 * (g.nr() * (1 + g.nv)));
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(g.nr() as u64).to_le_bytes());
    buf.extend_from_slice(&(g.nv as u64).to_le_bytes());
    for x in g.r.iter().chain(&g.dr) {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf.extend_from_slice(&g.v0.to_le_bytes());
    buf.extend_from_slice(&g.dv.to_le_bytes());
    for z in &field.values {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    let sidecar = FieldSidecar {
        index: field.index,
        component: field.component,
        d1: field.d1,
        d2: field.d2,
        rescaled: field.rescaled,
        diagnostics: field.diagnostics.clone(),
        coordinates: V_NOTE.to_string(),
        metadata: metadata.clone(),
    };
    write_atomic(path, &buf)?;
    write_atomic(&sidecar_path(path), &serde_json::to_vec_pretty(&sidecar)?)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| Error::InvalidArgument("truncated field file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

/// Reads a field written by [`write_field`] together with its metadata.
pub fn read_field(path: &Path) -> Result<(KernelField, RunMetadata)> {
    let bytes = fs::read(path)?;
    let sidecar: FieldSidecar = serde_json::from_slice(&fs::read(sidecar_path(path))?)?;
    let mut rd = Reader { bytes: &bytes, pos: 0 };
    if rd.take(4)? != MAGIC {
        return Err(Error::InvalidArgument(format!("{} is not a kernel field file", path.display())));
    }
    let version = u32::from_le_bytes(rd.take(4)?.try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::InvalidArgument(format!("unsupported field format version {version}")));
    }
    let nr = rd.u64()? as usize;
    let nv = rd.u64()? as usize;
    let cells = nr.checked_mul(nv).filter(|&c| c.checked_mul(16).is_some_and(|b| b <= bytes.len()));
    let cells = cells.ok_or_else(|| Error::InvalidArgument("field dimensions exceed the file size".into()))?;
    let r = (0..nr).map(|_| rd.f64()).collect::<Result<Vec<_>>>()?;
    let dr = (0..nr).map(|_| rd.f64()).collect::<Result<Vec<_>>>()?;
    let v0 = rd.f64()?;
    let dv = rd.f64()?;
    let values = (0..cells).map(|_| Ok(Complex64::new(rd.f64()?, rd.f64()?))).collect::<Result<Vec<_>>>()?;
    if rd.pos != bytes.len() {
        return Err(Error::InvalidArgument("trailing bytes in field file".into()));
    }
    let field = KernelField {
        index: sidecar.index,
        component: sidecar.component,
        d1: sidecar.d1,
        d2: sidecar.d2,
        grid: RadialGrid { r, dr, v0, dv, nv },
        values,
        rescaled: sidecar.rescaled,
        diagnostics: sidecar.diagnostics,
    };
    Ok((field, sidecar.metadata))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, std::f64::consts::PI] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(format_float(0.0), "0");
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_record(&["a", "b,c", "d\"e"]), "a,\"b,c\",\"d\"\"e\"\r\n");
    }

    #[test]
    fn hash_is_stable() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
