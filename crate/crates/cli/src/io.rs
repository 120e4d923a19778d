//! Artifact writers: atomic files, JSON, CSV tables, 16-bit PGM, run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use expforge::dynamics::{OrbitStatus, OrbitTrace};
use expforge::probe::{EscapeCurve, FieldImage, INVALID};
use expforge::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {message}")]
    File { path: PathBuf, message: String },
    #[error("format error: {0}")]
    Format(String),
}

fn file_err(path: &Path, e: impl ToString) -> IoError {
    IoError::File { path: path.to_path_buf(), message: e.to_string() }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Write to a temporary file in the target directory, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), IoError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| file_err(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| file_err(dir, e))?;
    tmp.write_all(bytes).map_err(|e| file_err(path, e))?;
    tmp.as_file().sync_all().map_err(|e| file_err(path, e))?;
    tmp.persist(path).map_err(|e| file_err(path, e.error))?;
    Ok(())
}

pub fn to_json<T: Serialize>(value: &T) -> Result<Vec<u8>, IoError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| IoError::Format(e.to_string()))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// One row per orbit point; the last row carries the orbit's status.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrbitRecord {
    pub index: usize,
    pub re: f64,
    pub im: f64,
    pub status: String,
}

pub fn orbit_records(trace: &OrbitTrace) -> Vec<OrbitRecord> {
    let last = trace.points.len().saturating_sub(1);
    trace
        .points
        .iter()
        .enumerate()
        .map(|(index, z)| {
            let status = if index < last {
                "point"
            } else {
                match trace.status {
                    OrbitStatus::Completed => "completed",
                    OrbitStatus::Escaped(_) => "escaped",
                    OrbitStatus::Overflowed(_) => "overflowed",
                }
            };
            OrbitRecord { index, re: z.re, im: z.im, status: status.into() }
        })
        .collect()
}

pub fn trace_from_records(records: &[OrbitRecord]) -> Result<OrbitTrace, IoError> {
    let points: Vec<Complex64> = records.iter().map(|r| Complex64::new(r.re, r.im)).collect();
    let status = match records.last().map(|r| r.status.as_str()) {
        Some("completed") => OrbitStatus::Completed,
        Some("escaped") => OrbitStatus::Escaped(points.len() - 1),
        Some("overflowed") => OrbitStatus::Overflowed(points.len()),
        other => return Err(IoError::Format(format!("bad final orbit status {other:?}"))),
    };
    Ok(OrbitTrace { points, status })
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<Vec<u8>, IoError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| IoError::Format(e.to_string()))?;
    }
    w.into_inner().map_err(|e| IoError::Format(e.to_string()))
}

pub fn from_csv<T: for<'de> Deserialize<'de>>(bytes: &[u8]) -> Result<Vec<T>, IoError> {
    csv::Reader::from_reader(bytes)
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| IoError::Format(e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub threshold: f64,
    pub fraction: f64,
}

pub fn curve_rows(curve: &EscapeCurve) -> Vec<CurveRow> {
    curve.points.iter().map(|&(threshold, fraction)| CurveRow { threshold, fraction }).collect()
}

/// Largest sample value; [`INVALID`] pixels are written as this value.
pub const PGM_MAX: u16 = u16::MAX;

/// Binary 16-bit PGM, big-endian samples. Counts saturate at `PGM_MAX − 1`.
pub fn encode_pgm(image: &FieldImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n{}\n", image.nx, image.ny, PGM_MAX).into_bytes();
    out.reserve(2 * image.values.len());
    for &v in &image.values {
        let sample = if v == INVALID { PGM_MAX } else { v.min(u32::from(PGM_MAX - 1)) as u16 };
        out.extend_from_slice(&sample.to_be_bytes());
    }
    out
}

/// `(nx, ny, samples)` of a PGM written by [`encode_pgm`].
pub fn decode_pgm(bytes: &[u8]) -> Result<(usize, usize, Vec<u16>), IoError> {
    let bad = |m: &str| IoError::Format(format!("PGM: {m}"));
    let mut fields = Vec::new();
    let mut pos = 0;
    while fields.len() < 4 {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header"));
        }
        fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header not ASCII"))?);
    }
    pos += 1;
    if fields[0] != "P5" {
        return Err(bad("not P5"));
    }
    let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
    let (nx, ny, maxval) = (num(fields[1])?, num(fields[2])?, num(fields[3])?);
    if maxval != PGM_MAX as usize {
        return Err(bad("expected 16-bit samples"));
    }
    let data = bytes.get(pos..).ok_or_else(|| bad("missing data"))?;
    if data.len() != 2 * nx * ny {
        return Err(bad("sample count mismatch"));
    }
    Ok((nx, ny, data.chunks_exact(2).map(|c| u16::from_be_bytes([c[0], c[1]])).collect()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageOutcome {
    pub stage: String,
    pub ok: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub timestamp: u64,
    pub command: String,
    pub config: serde_json::Value,
    pub input_hash: String,
    pub stages: Vec<StageOutcome>,
    pub outputs: Vec<OutputEntry>,
}

/// Collects outputs under one directory and finishes with `manifest.json`.
#[derive(Debug)]
pub struct RunWriter {
    dir: PathBuf,
    manifest: RunManifest,
}

impl RunWriter {
    pub fn new(dir: &Path, command: &str, config: serde_json::Value) -> Self {
        let canonical = serde_json::to_vec(&config).unwrap_or_default();
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        RunWriter {
            dir: dir.to_path_buf(),
            manifest: RunManifest {
                tool: "expforge".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                timestamp,
                command: command.into(),
                config,
                input_hash: sha256_hex(&canonical),
                stages: Vec::new(),
                outputs: Vec::new(),
            },
        }
    }

    pub fn stage(&mut self, stage: &str, ok: bool, detail: impl Into<String>) {
        self.manifest.stages.push(StageOutcome { stage: stage.into(), ok, detail: detail.into() });
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf, IoError> {
        let path = self.dir.join(name);
        write_atomic(&path, bytes)?;
        self.manifest.outputs.push(OutputEntry { path: name.into(), sha256: sha256_hex(bytes), bytes: bytes.len() });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<PathBuf, IoError> {
        self.write(name, &to_json(value)?)
    }

    pub fn finish(self) -> Result<RunManifest, IoError> {
        write_atomic(&self.dir.join("manifest.json"), &to_json(&self.manifest)?)?;
        Ok(self.manifest)
    }
}
