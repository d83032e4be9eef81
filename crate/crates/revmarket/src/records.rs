//! JSON-lines prediction records: one record per line, appended as completed.

use std::collections::BTreeSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use revmarket_core::{GameVariant, PredictionRecord};

use crate::error::DataError;

/// Identifies a record for resume purposes.
pub type RecordKey = (GameVariant, u32, NaiveDate);

pub fn key(r: &PredictionRecord) -> RecordKey {
    (r.variant, r.param_set, r.date)
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Parses every line of `path`; any malformed line is an error naming it.
pub fn read_records(path: &Path) -> Result<Vec<PredictionRecord>, DataError> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| DataError::Row {
            path: path.to_path_buf(),
            line: i as u64 + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Single writer of a records file.
pub struct RecordStore {
    path: PathBuf,
    file: File,
    done: BTreeSet<RecordKey>,
}

impl RecordStore {
    /// Opens `path` for appending. Existing complete lines are kept and
    /// indexed; a torn final line (no newline, from an interrupted write) is
    /// cut off.
    pub fn open(path: &Path) -> Result<Self, DataError> {
        let mut done = BTreeSet::new();
        if path.exists() {
            let bytes = std::fs::read(path).map_err(io_err(path))?;
            let complete = bytes.iter().rposition(|&b| b == b'\n').map_or(0, |p| p + 1);
            if complete < bytes.len() {
                log::warn!("{}: dropping incomplete last line", path.display());
                let f = OpenOptions::new()
                    .write(true)
                    .open(path)
                    .map_err(io_err(path))?;
                f.set_len(complete as u64).map_err(io_err(path))?;
            }
            for r in read_records(path)? {
                done.insert(key(&r));
            }
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err(path))?;
        Ok(Self {
            path: path.to_path_buf(),
            file,
            done,
        })
    }

    pub fn contains(&self, k: &RecordKey) -> bool {
        self.done.contains(k)
    }

    pub fn len(&self) -> usize {
        self.done.len()
    }

    pub fn is_empty(&self) -> bool {
        self.done.is_empty()
    }

    /// Appends `records`, one `write` call per line, then syncs.
    pub fn append(&mut self, records: &[PredictionRecord]) -> Result<(), DataError> {
        for r in records {
            let mut line = serde_json::to_string(r).expect("record serializes");
            line.push('\n');
            self.file
                .write_all(line.as_bytes())
                .map_err(io_err(&self.path))?;
            self.done.insert(key(r));
        }
        self.file.sync_data().map_err(io_err(&self.path))
    }
}
