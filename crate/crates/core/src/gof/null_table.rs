//! Monte Carlo null distributions for the goodness-of-fit statistics.
//!
//! Tables are built lazily, once per key, and shared through a process-wide
//! cache. When `RATEFIT_NULL_CACHE` names a directory, tables are also
//! persisted there and reloaded on later runs. A table is a deterministic
//! function of its key, so the disk cache never changes results.

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock, RwLock};

/// Environment variable naming the on-disk null-table cache directory.
pub const CACHE_DIR_ENV: &str = "RATEFIT_NULL_CACHE";

/// Maximum number of order statistics retained per table.
const GRID_POINTS: usize = 10_001;
const MAGIC: &[u8; 8] = b"RFNULL01";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum TableKind {
    Lilliefors,
    KsNcx2 { skew_bin: i32, rho_bin: i32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) struct TableKey {
    pub kind: TableKind,
    pub n: usize,
    pub seed: u64,
    pub replicates: usize,
}

impl TableKey {
    fn file_name(&self) -> String {
        match self.kind {
            TableKind::Lilliefors => format!(
                "lilliefors-n{}-s{:016x}-r{}.bin",
                self.n, self.seed, self.replicates
            ),
            TableKind::KsNcx2 { skew_bin, rho_bin } => format!(
                "ksncx2-n{}-k{}-p{}-s{:016x}-r{}.bin",
                self.n, skew_bin, rho_bin, self.seed, self.replicates
            ),
        }
    }

    /// Tag folded into the table's generator seed.
    pub fn tag(&self) -> u64 {
        let (kind, a, b) = match self.kind {
            TableKind::Lilliefors => (1u64, 0i64, 0i64),
            TableKind::KsNcx2 { skew_bin, rho_bin } => (2, skew_bin as i64, rho_bin as i64),
        };
        kind << 56 ^ (self.n as u64) << 24 ^ ((a + 512) as u64) << 8 ^ (b + 128) as u64
    }
}

/// Null distribution of a statistic, stored as (a grid of) sorted replicates.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct NullTable {
    replicates: usize,
    /// Order statistics at evenly spaced ranks, ascending.
    grid: Vec<f64>,
}

impl NullTable {
    pub fn from_replicates(mut stats: Vec<f64>) -> Self {
        stats.sort_by(f64::total_cmp);
        let replicates = stats.len();
        let grid = if replicates <= GRID_POINTS {
            stats
        } else {
            (0..GRID_POINTS)
                .map(|j| stats[rank_of(j, replicates)])
                .collect()
        };
        Self { replicates, grid }
    }

    /// Upper-tail probability `P(D ≥ d)` under the null.
    pub fn p_value(&self, d: f64) -> f64 {
        let g = &self.grid;
        let idx = g.partition_point(|v| *v < d);
        let n = self.replicates as f64;
        if g.len() == self.replicates {
            return (self.replicates - idx) as f64 / n;
        }
        if idx == 0 {
            return 1.0;
        }
        if idx == g.len() {
            return 0.0;
        }
        let (r0, r1) = (
            rank_of(idx - 1, self.replicates) as f64,
            rank_of(idx, self.replicates) as f64,
        );
        let (v0, v1) = (g[idx - 1], g[idx]);
        let frac = if v1 > v0 { (d - v0) / (v1 - v0) } else { 1.0 };
        let rank = r0 + frac * (r1 - r0);
        ((n - rank) / n).clamp(0.0, 1.0)
    }

    fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&(self.replicates as u64).to_le_bytes())?;
        w.write_all(&(self.grid.len() as u64).to_le_bytes())?;
        for v in &self.grid {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    fn read_from(mut r: impl Read) -> Option<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).ok()?;
        if &magic != MAGIC {
            return None;
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word).ok()?;
        let replicates = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word).ok()?;
        let len = u64::from_le_bytes(word) as usize;
        if len == 0 || len > GRID_POINTS.max(replicates) {
            return None;
        }
        let mut grid = Vec::with_capacity(len);
        for _ in 0..len {
            r.read_exact(&mut word).ok()?;
            grid.push(f64::from_le_bytes(word));
        }
        Some(Self { replicates, grid })
    }
}

fn rank_of(j: usize, replicates: usize) -> usize {
    ((j as f64) * (replicates - 1) as f64 / (GRID_POINTS - 1) as f64).round() as usize
}

type Cache = RwLock<HashMap<TableKey, Arc<NullTable>>>;

fn cache() -> &'static Cache {
    static CACHE: OnceLock<Cache> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

fn disk_path(key: &TableKey) -> Option<PathBuf> {
    let dir = std::env::var_os(CACHE_DIR_ENV)?;
    if dir.is_empty() {
        return None;
    }
    Some(Path::new(&dir).join(key.file_name()))
}

fn load_disk(path: &Path) -> Option<NullTable> {
    let file = std::fs::File::open(path).ok()?;
    NullTable::read_from(std::io::BufReader::new(file))
}

fn store_disk(path: &Path, table: &NullTable) {
    let Some(dir) = path.parent() else { return };
    if std::fs::create_dir_all(dir).is_err() {
        return;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    let written = std::fs::File::create(&tmp).and_then(|f| {
        let mut w = std::io::BufWriter::new(f);
        table.write_to(&mut w)?;
        w.flush()
    });
    // a failed write only costs a rebuild next time
    if written.is_ok() {
        let _ = std::fs::rename(&tmp, path);
    } else {
        let _ = std::fs::remove_file(&tmp);
    }
}

/// Returns the cached table for `key`, building it with `build` on a miss.
pub(crate) fn get_or_build(key: TableKey, build: impl FnOnce() -> Vec<f64>) -> Arc<NullTable> {
    if let Some(t) = cache().read().expect("null-table cache poisoned").get(&key) {
        return Arc::clone(t);
    }
    let path = disk_path(&key);
    let table = path
        .as_deref()
        .and_then(load_disk)
        .filter(|t| t.replicates == key.replicates)
        .unwrap_or_else(|| {
            let t = NullTable::from_replicates(build());
            if let Some(p) = &path {
                store_disk(p, &t);
            }
            t
        });
    let mut guard = cache().write().expect("null-table cache poisoned");
    Arc::clone(guard.entry(key).or_insert_with(|| Arc::new(table)))
}
