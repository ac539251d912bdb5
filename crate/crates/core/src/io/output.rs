use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagnosticsRecord, TrackerState};
use crate::error::{Error, Result};
use crate::model::{ModelParams, State};
use crate::spectral::{Grid, ScalarField, SymTensorField, VectorField};

pub const LEDGER_FILE: &str = "ledger.csv";
pub const CHECKPOINT_STATE: &str = "checkpoint.bin";
pub const CHECKPOINT_META: &str = "checkpoint.json";

/// Full-precision scientific notation: 17 significant digits.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV ledger with a fixed header: `step,time` then the record columns.
pub struct LedgerWriter {
    path: PathBuf,
    out: BufWriter<File>,
    columns: Vec<String>,
    rows: usize,
}

impl LedgerWriter {
    pub fn create(path: &Path, record: &DiagnosticsRecord) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let columns: Vec<String> = record.columns().iter().map(|c| c.to_string()).collect();
        let mut w = LedgerWriter { path: path.to_owned(), out: BufWriter::new(file), columns, rows: 0 };
        let header = format!("step,time,{}\n", w.columns.join(","));
        w.out.write_all(header.as_bytes()).map_err(|e| Error::io(path, e))?;
        Ok(w)
    }

    /// Reopens a ledger keeping its header and first `rows` rows.
    pub fn reopen(path: &Path, rows: usize) -> Result<Self> {
        let (columns, kept) = read_lines(path, rows)?;
        let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
        for line in &kept {
            writeln!(file, "{line}").map_err(|e| Error::io(path, e))?;
        }
        drop(file);
        let file = OpenOptions::new().append(true).open(path).map_err(|e| Error::io(path, e))?;
        Ok(LedgerWriter { path: path.to_owned(), out: BufWriter::new(file), columns, rows })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn write(&mut self, record: &DiagnosticsRecord) -> Result<()> {
        if record.columns().into_iter().ne(self.columns.iter().map(String::as_str)) {
            return Err(Error::config("ledger row does not match the header"));
        }
        let mut line = format!("{},{}", record.step, format_value(record.time));
        for v in record.values() {
            line.push(',');
            line.push_str(&format_value(v));
        }
        line.push('\n');
        let path = &self.path;
        self.out.write_all(line.as_bytes()).map_err(|e| Error::io(path, e))?;
        self.out.flush().map_err(|e| Error::io(path, e))?;
        self.rows += 1;
        Ok(())
    }
}

fn read_lines(path: &Path, rows: usize) -> Result<(Vec<String>, Vec<String>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = Vec::new();
    for line in BufReader::new(file).lines().take(rows + 1) {
        lines.push(line.map_err(|e| Error::io(path, e))?);
    }
    if lines.len() != rows + 1 {
        return Err(Error::config(format!("{}: expected {rows} rows, found {}", path.display(), lines.len().saturating_sub(1))));
    }
    let columns = lines[0].split(',').skip(2).map(str::to_string).collect();
    Ok((columns, lines))
}

/// Parsed ledger: header names (including `step` and `time`) and rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Ledger {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Ledger {
    pub fn read(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = match lines.next() {
            Some(h) => h.map_err(|e| Error::io(path, e))?,
            None => return Err(Error::config(format!("{}: empty ledger", path.display()))),
        };
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for line in lines {
            let line = line.map_err(|e| Error::io(path, e))?;
            let row = line
                .split(',')
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
            if row.len() != columns.len() {
                return Err(Error::config(format!("{}: ragged row", path.display())));
            }
            rows.push(row);
        }
        Ok(Ledger { columns, rows })
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

const MAGIC: &[u8; 4] = b"OB2D";
pub const SNAPSHOT_VERSION: u32 = 1;
const HEADER_BYTES: usize = 4 + 4 + 8 + 8 * 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub format_version: u32,
    pub n: usize,
    pub length: f64,
    pub time: f64,
    pub alpha: f64,
    pub gamma_u: f64,
}

/// Header then `u1, u2, tau11, tau12, tau22`, each `n*n` little-endian f64.
pub fn write_snapshot(path: &Path, state: &State, params: &ModelParams) -> Result<()> {
    let grid = state.grid();
    let n = grid.n();
    let mut buf = Vec::with_capacity(HEADER_BYTES + 5 * n * n * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&SNAPSHOT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(n as u64).to_le_bytes());
    for v in [grid.length(), state.time, params.alpha, params.gamma_u] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    let fields = [&state.u.components[0], &state.u.components[1], &state.tau.xx, &state.tau.xy, &state.tau.yy];
    for f in fields {
        for v in f.values() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    write_atomic(path, &buf)
}

pub fn read_snapshot(path: &Path) -> Result<(SnapshotHeader, State)> {
    let bad = |reason: String| Error::Snapshot { path: path.to_owned(), reason };
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    if bytes.len() < HEADER_BYTES {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[0..4] != MAGIC {
        return Err(bad("missing OB2D magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().expect("4 bytes"));
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().expect("8 bytes"));
    let f64_at = |o: usize| f64::from_bits(u64_at(o));
    let version = u32_at(4);
    if version != SNAPSHOT_VERSION {
        return Err(bad(format!("unsupported format version {version}")));
    }
    let n = usize::try_from(u64_at(8)).map_err(|_| bad("grid size overflows".into()))?;
    let header = SnapshotHeader {
        format_version: version,
        n,
        length: f64_at(16),
        time: f64_at(24),
        alpha: f64_at(32),
        gamma_u: f64_at(40),
    };
    let payload = n.checked_mul(n).and_then(|m| m.checked_mul(40)).ok_or_else(|| bad("grid size overflows".into()))?;
    if bytes.len() != HEADER_BYTES + payload {
        return Err(bad(format!("payload is {} bytes, expected {payload}", bytes.len() - HEADER_BYTES)));
    }
    let grid = Grid::new(n, header.length).map_err(|e| bad(e.to_string()))?;
    let field = |k: usize| -> Result<ScalarField> {
        let start = HEADER_BYTES + k * n * n * 8;
        let values = (0..n * n).map(|i| f64_at(start + 8 * i)).collect();
        ScalarField::from_values(&grid, values)
    };
    let u = VectorField::new(field(0)?, field(1)?);
    let tau = SymTensorField::new(field(2)?, field(3)?, field(4)?);
    Ok((header, State::new(header.time, u, tau)))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Everything besides the state needed to continue a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub step: usize,
    pub ledger_rows: usize,
    /// Rows up to the last one on the diagnostics cadence.
    pub cadence_rows: usize,
    pub tracker: TrackerState,
}

pub fn write_checkpoint(dir: &Path, state: &State, params: &ModelParams, meta: &CheckpointMeta) -> Result<()> {
    write_snapshot(&dir.join(CHECKPOINT_STATE), state, params)?;
    let path = dir.join(CHECKPOINT_META);
    let text = serde_json::to_string_pretty(meta).map_err(|e| Error::Json { path: path.clone(), source: e })?;
    write_atomic(&path, text.as_bytes())
}

pub fn read_checkpoint(dir: &Path, grid: &Arc<Grid>) -> Result<(State, CheckpointMeta)> {
    let path = dir.join(CHECKPOINT_META);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let meta: CheckpointMeta = serde_json::from_str(&text).map_err(|e| Error::Json { path, source: e })?;
    let snap = dir.join(CHECKPOINT_STATE);
    let (header, state) = read_snapshot(&snap)?;
    if header.n != grid.n() || header.length != grid.length() {
        return Err(Error::config(format!("{}: grid does not match the configuration", snap.display())));
    }
    // rebuild on the caller's grid so plans are shared
    let rebuild = |f: &ScalarField| ScalarField::from_values(grid, f.values().to_vec());
    let u = VectorField::new(rebuild(&state.u.components[0])?, rebuild(&state.u.components[1])?);
    let tau = SymTensorField::new(rebuild(&state.tau.xx)?, rebuild(&state.tau.xy)?, rebuild(&state.tau.yy)?);
    Ok((State::new(state.time, u, tau), meta))
}
