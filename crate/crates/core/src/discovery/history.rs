use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::platform::Source;

pub const HISTORY_HEADER: &str = "# history v1";

/// One answered discovery.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct HistoryRecord {
    pub tick: u64,
    pub source: Source,
    /// Canonical form of the query (sorted, lowercased concept lists).
    pub query: String,
    pub results: Vec<String>,
}

impl HistoryRecord {
    /// `<tick>\t<source>\t<query>\t<id,id,...>`
    pub fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}",
            self.tick,
            self.source.as_str(),
            self.query,
            self.results.join(",")
        )
    }

    pub fn from_line(line: &str) -> Result<Self, String> {
        let fields: Vec<&str> = line.split('\t').collect();
        let [tick, source, query, results] = fields[..] else {
            return Err(format!("expected 4 tab-separated fields in `{line}`"));
        };
        let tick = tick.parse().map_err(|_| format!("bad tick `{tick}`"))?;
        let source = match source {
            "local" => Source::Local,
            "central" => Source::Central,
            other => return Err(format!("bad source `{other}`")),
        };
        let results = if results.is_empty() {
            Vec::new()
        } else {
            results.split(',').map(str::to_string).collect()
        };
        Ok(Self {
            tick,
            source,
            query: query.to_string(),
            results,
        })
    }
}

/// Append-only query history, optionally journaled to disk.
#[derive(Debug, Default)]
pub struct History {
    records: Vec<HistoryRecord>,
    path: Option<PathBuf>,
}

impl History {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Replays `path` if it exists; later records are appended to it.
    pub fn open(path: &Path) -> Result<Self, String> {
        let mut records = Vec::new();
        if path.exists() {
            let file = File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
            for (n, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(|e| e.to_string())?;
                if n == 0 {
                    if line != HISTORY_HEADER {
                        return Err(format!("{}: missing `{HISTORY_HEADER}` header", path.display()));
                    }
                    continue;
                }
                if line.is_empty() {
                    continue;
                }
                records.push(HistoryRecord::from_line(&line).map_err(|e| format!("line {}: {e}", n + 1))?);
            }
        }
        Ok(Self {
            records,
            path: Some(path.to_path_buf()),
        })
    }

    pub fn append(&mut self, record: HistoryRecord) -> Result<(), String> {
        if let Some(path) = &self.path {
            let fresh = !path.exists();
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| format!("{}: {e}", path.display()))?;
            let mut text = String::new();
            if fresh {
                text.push_str(HISTORY_HEADER);
                text.push('\n');
            }
            text.push_str(&record.to_line());
            text.push('\n');
            f.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
        }
        self.records.push(record);
        Ok(())
    }

    pub fn records(&self) -> &[HistoryRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// `(local answers, all answers)`.
    pub fn hits(&self) -> (u64, u64) {
        let local = self.records.iter().filter(|r| r.source == Source::Local).count();
        (local as u64, self.records.len() as u64)
    }
}
