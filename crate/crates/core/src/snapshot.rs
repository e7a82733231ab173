//! Binary Q-table snapshots and percent-strength agent resolution.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "QARN" | version u16 | game u8 | reserved u8 | alpha f64 | gamma f64
//! | epsilon f64 | episodes u64 | entries u64
//! | { key_len u16, key bytes, n u16, n x f64 }*
//! | crc32 u32 over everything before it
//! ```
//!
//! Entries are written in key order so equal tables give equal files.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::agents::AgentSpec;
use crate::game::{GameId, StateKey};
use crate::trainer::{QTable, RunManifest, TrainingRun};

pub const MAGIC: &[u8; 4] = b"QARN";
pub const VERSION: u16 = 1;
const HEADER_LEN: usize = 4 + 2 + 1 + 1 + 8 * 3 + 8 + 8;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: not a snapshot file", path.display())]
    BadMagic { path: PathBuf },
    #[error("{}: unsupported snapshot version {version}", path.display())]
    UnsupportedVersion { path: PathBuf, version: u16 },
    #[error("{}: corrupt snapshot ({reason})", path.display())]
    Corrupt { path: PathBuf, reason: &'static str },
    #[error("run has no convergence-FS episode")]
    RunNotConverged,
    #[error("no snapshot within {max_gap} episodes of target {target} (nearest {nearest:?})")]
    SnapshotGap { target: u64, nearest: Option<u64>, max_gap: u64 },
    #[error("{}: bad run manifest: {reason}", path.display())]
    Manifest { path: PathBuf, reason: String },
}

impl SnapshotError {
    pub fn code(&self) -> &'static str {
        match self {
            SnapshotError::Io { .. } => "io",
            SnapshotError::BadMagic { .. } => "bad_magic",
            SnapshotError::UnsupportedVersion { .. } => "unsupported_version",
            SnapshotError::Corrupt { .. } => "corrupt",
            SnapshotError::RunNotConverged => "run_not_converged",
            SnapshotError::SnapshotGap { .. } => "snapshot_gap",
            SnapshotError::Manifest { .. } => "bad_manifest",
        }
    }
}

/// Serializes `q` in the canonical layout.
pub fn encode(q: &QTable) -> Vec<u8> {
    let rows = q.sorted_entries();
    let mut buf = Vec::with_capacity(HEADER_LEN + rows.len() * 48 + 4);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(q.game().code());
    buf.push(0);
    buf.extend_from_slice(&q.alpha.to_le_bytes());
    buf.extend_from_slice(&q.gamma.to_le_bytes());
    buf.extend_from_slice(&q.epsilon.to_le_bytes());
    buf.extend_from_slice(&q.episodes_trained.to_le_bytes());
    buf.extend_from_slice(&(rows.len() as u64).to_le_bytes());
    for (key, values) in rows {
        let bytes = key.as_bytes();
        buf.extend_from_slice(&(bytes.len() as u16).to_le_bytes());
        buf.extend_from_slice(bytes);
        buf.extend_from_slice(&(values.len() as u16).to_le_bytes());
        for v in values {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&buf);
    buf.extend_from_slice(&crc.to_le_bytes());
    buf
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let out = self.buf.get(self.pos..self.pos.checked_add(n)?)?;
        self.pos += n;
        Some(out)
    }

    fn u8(&mut self) -> Option<u8> {
        self.take(1).map(|b| b[0])
    }

    fn u16(&mut self) -> Option<u16> {
        self.take(2).map(|b| u16::from_le_bytes(b.try_into().unwrap()))
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().unwrap()))
    }

    fn f64(&mut self) -> Option<f64> {
        self.u64().map(f64::from_bits)
    }
}

/// Inverse of [`encode`]. `path` is only used in error messages.
pub fn decode(bytes: &[u8], path: &Path) -> Result<QTable, SnapshotError> {
    let corrupt = |reason| SnapshotError::Corrupt { path: path.to_path_buf(), reason };
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(SnapshotError::BadMagic { path: path.to_path_buf() });
    }
    if bytes.len() < 6 {
        return Err(corrupt("truncated header"));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(SnapshotError::UnsupportedVersion { path: path.to_path_buf(), version });
    }
    if bytes.len() < HEADER_LEN + 4 {
        return Err(corrupt("truncated header"));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(corrupt("checksum mismatch"));
    }

    let mut r = Reader { buf: body, pos: 6 };
    let game = r.u8().and_then(GameId::from_code).ok_or_else(|| corrupt("unknown game id"))?;
    r.u8();
    let alpha = r.f64().unwrap();
    let gamma = r.f64().unwrap();
    let epsilon = r.f64().unwrap();
    let episodes = r.u64().unwrap();
    let count = r.u64().unwrap();
    let mut q = QTable::new(game, alpha, gamma, epsilon);
    q.episodes_trained = episodes;
    for _ in 0..count {
        let klen = r.u16().ok_or_else(|| corrupt("truncated entry"))?;
        let key = r.take(klen as usize).ok_or_else(|| corrupt("truncated entry"))?;
        let n = r.u16().ok_or_else(|| corrupt("truncated entry"))?;
        let values = (0..n).map(|_| r.f64()).collect::<Option<Vec<f64>>>().ok_or_else(|| corrupt("truncated entry"))?;
        q.insert_row(StateKey::from_bytes(key), values);
    }
    if r.pos != body.len() {
        return Err(corrupt("trailing bytes"));
    }
    if q.len() as u64 != count {
        return Err(corrupt("duplicate key"));
    }
    Ok(q)
}

/// Writes `q` to `path` and syncs it to disk before returning.
pub fn save_snapshot(q: &QTable, path: impl AsRef<Path>) -> Result<(), SnapshotError> {
    let path = path.as_ref();
    let io_err = |source| SnapshotError::Io { path: path.to_path_buf(), source };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err)?;
    }
    let mut file = File::create(path).map_err(io_err)?;
    file.write_all(&encode(q)).map_err(io_err)?;
    file.sync_all().map_err(io_err)
}

pub fn load_snapshot(path: impl AsRef<Path>) -> Result<QTable, SnapshotError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| SnapshotError::Io { path: path.to_path_buf(), source })?;
    decode(&bytes, path)
}

/// Picks the snapshot episode for a `percent`-trained agent out of the
/// available episodes. The target is `round(percent / 100 * n_fs)`; the
/// nearest available episode wins, the earlier one on a tie.
pub fn resolve_percent(
    available: impl IntoIterator<Item = u64>,
    n_fs: Option<u64>,
    snapshot_every: u64,
    percent: f64,
) -> Result<u64, SnapshotError> {
    let n_fs = n_fs.ok_or(SnapshotError::RunNotConverged)?;
    let target = (percent / 100.0 * n_fs as f64).round() as u64;
    let nearest = available.into_iter().min_by_key(|&e| (e.abs_diff(target), e));
    let max_gap = 2 * snapshot_every.max(1);
    match nearest {
        Some(e) if e.abs_diff(target) <= max_gap => Ok(e),
        _ => Err(SnapshotError::SnapshotGap { target, nearest, max_gap }),
    }
}

/// Greedy agent playing from the snapshot `percent` of the way to the
/// run's convergence-FS episode.
pub fn percent_agent(run: &TrainingRun, percent: f64) -> Result<AgentSpec, SnapshotError> {
    let episode = resolve_percent(run.snapshots.keys().copied(), run.convergence_fs, run.snapshot_every, percent)?;
    Ok(AgentSpec::QSnapshot(run.snapshots[&episode].clone()))
}

/// Same as [`percent_agent`] but for a finished run on disk, read through
/// its manifest. Returns the snapshot path.
pub fn percent_snapshot_in_dir(run_dir: &Path, percent: f64) -> Result<PathBuf, SnapshotError> {
    let manifest = RunManifest::read(run_dir)?;
    let snapshots = manifest.snapshot_paths(run_dir);
    let episode =
        resolve_percent(snapshots.keys().copied(), manifest.convergence_fs, manifest.snapshot_every, percent)?;
    Ok(snapshots[&episode].clone())
}

/// Percent-labelled snapshots of a converged run: `(percent, episode, path)`
/// for 10, 20, ..., 100. Percents that cannot be resolved are left out.
pub fn percent_ladder(run_dir: &Path) -> Result<Vec<(u32, u64, PathBuf)>, SnapshotError> {
    let manifest = RunManifest::read(run_dir)?;
    let snapshots: BTreeMap<u64, PathBuf> = manifest.snapshot_paths(run_dir);
    let mut out = Vec::new();
    for pct in (10..=100).step_by(10) {
        if let Ok(e) =
            resolve_percent(snapshots.keys().copied(), manifest.convergence_fs, manifest.snapshot_every, f64::from(pct))
        {
            out.push((pct, e, snapshots[&e].clone()));
        }
    }
    Ok(out)
}
