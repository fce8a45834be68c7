//! Storage backends: an in-memory no-op and a single-file store with a
//! write-ahead journal.
//!
//! On disk the file backend keeps two files in its data directory:
//!
//! - `mdr.db`: a header line carrying the format stamp, then one JSON
//!   document holding the model and change log as of the last checkpoint.
//! - `mdr.journal`: one JSON line per committed transaction since that
//!   checkpoint. Every line is flushed to disk before the commit is published.
//!
//! A torn final journal line (crash mid-append) is discarded on open.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ChangeRecord, Mutation, Result, StoreError};
use crate::model::Model;

pub const DATA_FILE: &str = "mdr.db";
pub const JOURNAL_FILE: &str = "mdr.journal";
const FORMAT_STAMP: &str = "mdr-store format=1";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PersistedState {
    pub model: Model,
    pub changes: Vec<ChangeRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JournalEntry {
    pub version: u64,
    pub txn: u64,
    pub mutations: Vec<Mutation>,
    pub changes: Vec<ChangeRecord>,
}

/// Persistence hook behind [`super::Store`]. Calls are serialized by the writer lock.
pub trait StorageBackend: Send {
    /// Last checkpoint (if any) plus the journal entries written after it.
    fn load(&mut self) -> Result<(Option<PersistedState>, Vec<JournalEntry>)>;
    fn append(&mut self, entry: &JournalEntry) -> Result<()>;
    fn checkpoint(&mut self, state: &PersistedState) -> Result<()>;
}

#[derive(Debug, Default)]
pub struct MemoryBackend;

impl StorageBackend for MemoryBackend {
    fn load(&mut self) -> Result<(Option<PersistedState>, Vec<JournalEntry>)> {
        Ok((None, Vec::new()))
    }

    fn append(&mut self, _entry: &JournalEntry) -> Result<()> {
        Ok(())
    }

    fn checkpoint(&mut self, _state: &PersistedState) -> Result<()> {
        Ok(())
    }
}

#[derive(Debug)]
pub struct FileBackend {
    dir: PathBuf,
    journal: Option<File>,
}

impl FileBackend {
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        Ok(Self { dir, journal: None })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn data_path(&self) -> PathBuf {
        self.dir.join(DATA_FILE)
    }

    fn journal_path(&self) -> PathBuf {
        self.dir.join(JOURNAL_FILE)
    }

    fn read_data_file(&self) -> Result<Option<PersistedState>> {
        let path = self.data_path();
        if !path.exists() {
            return Ok(None);
        }
        let text = fs::read_to_string(&path)?;
        let (header, body) = text
            .split_once('\n')
            .ok_or_else(|| StoreError::Corrupt(format!("{} has no header", path.display())))?;
        if header.trim() != FORMAT_STAMP {
            return Err(StoreError::Corrupt(format!("unsupported data file header `{header}`")));
        }
        serde_json::from_str(body)
            .map(Some)
            .map_err(|e| StoreError::Corrupt(format!("{}: {e}", path.display())))
    }

    fn read_journal(&self) -> Result<Vec<JournalEntry>> {
        let path = self.journal_path();
        if !path.exists() {
            return Ok(Vec::new());
        }
        let mut entries = Vec::new();
        let mut valid_len = 0u64;
        let mut torn = false;
        let reader = BufReader::new(File::open(&path)?);
        let lines: Vec<Vec<u8>> = reader.split(b'\n').collect::<std::io::Result<_>>()?;
        let total = lines.len();
        for (i, line) in lines.into_iter().enumerate() {
            let width = line.len() as u64 + 1;
            if line.iter().all(u8::is_ascii_whitespace) {
                valid_len += width;
                continue;
            }
            match serde_json::from_slice::<JournalEntry>(&line) {
                Ok(entry) => {
                    entries.push(entry);
                    valid_len += width;
                }
                Err(_) if i + 1 == total => torn = true,
                Err(e) => {
                    return Err(StoreError::Corrupt(format!("journal line {}: {e}", i + 1)));
                }
            }
        }
        if torn {
            let file = OpenOptions::new().write(true).open(&path)?;
            file.set_len(valid_len)?;
            file.sync_all()?;
        }
        Ok(entries)
    }

    fn journal_file(&mut self) -> Result<&mut File> {
        if self.journal.is_none() {
            let file = OpenOptions::new().create(true).append(true).open(self.journal_path())?;
            self.journal = Some(file);
        }
        Ok(self.journal.as_mut().expect("opened above"))
    }
}

impl StorageBackend for FileBackend {
    fn load(&mut self) -> Result<(Option<PersistedState>, Vec<JournalEntry>)> {
        Ok((self.read_data_file()?, self.read_journal()?))
    }

    fn append(&mut self, entry: &JournalEntry) -> Result<()> {
        let mut line = serde_json::to_string(entry).map_err(|e| StoreError::Io(e.to_string()))?;
        line.push('\n');
        let file = self.journal_file()?;
        file.write_all(line.as_bytes())?;
        file.sync_data()?;
        Ok(())
    }

    fn checkpoint(&mut self, state: &PersistedState) -> Result<()> {
        let tmp = self.dir.join(format!("{DATA_FILE}.tmp"));
        {
            let mut file = File::create(&tmp)?;
            writeln!(file, "{FORMAT_STAMP}")?;
            serde_json::to_writer(&mut file, state).map_err(|e| StoreError::Io(e.to_string()))?;
            file.write_all(b"\n")?;
            file.sync_all()?;
        }
        fs::rename(&tmp, self.data_path())?;
        self.journal = None;
        let journal = File::create(self.journal_path())?;
        journal.sync_all()?;
        Ok(())
    }
}
