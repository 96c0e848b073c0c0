//! Offline task dataset and its on-disk form.
//!
//! One record per task: a JSON header (objective spec, per-task seed, trial
//! count) followed by a binary trial block of length-prefixed candidate
//! strings and 64-bit little-endian objective values. Records are written
//! back to back so readers can stream.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::objectives::{CombinatorialProblem, SyntheticObjective};
use crate::space::SearchSpace;

const MAGIC: [u8; 4] = *b"ETRD";
const VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TaskObjective {
    Synthetic(SyntheticObjective),
    Combinatorial(CombinatorialProblem),
}

impl TaskObjective {
    pub fn search_space(&self) -> SearchSpace {
        match self {
            Self::Synthetic(obj) => obj.space().clone(),
            Self::Combinatorial(prob) => prob.search_space(),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Self::Synthetic(obj) => obj.base().name().to_string(),
            Self::Combinatorial(prob) => prob.kind().name().to_string(),
        }
    }

    /// Evaluate on the maximization scale the whole pipeline optimizes:
    /// synthetic functions are negated, combinatorial values pass through.
    pub fn eval_max(&self, cand: &crate::space::Candidate) -> Result<f64, crate::error::ObjectiveError> {
        match self {
            Self::Synthetic(obj) => Ok(-obj.eval(cand)?),
            Self::Combinatorial(prob) => prob.eval(cand),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskHeader {
    pub seed: u64,
    pub objective: TaskObjective,
    pub trial_count: usize,
}

/// One task: header plus its trajectory of (candidate string, raw y) pairs
/// on the maximization scale.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskRecord {
    pub header: TaskHeader,
    pub trials: Vec<(String, f64)>,
}

pub fn write_dataset(path: &Path, records: &[TaskRecord]) -> Result<(), HarnessError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for record in records {
        let header = serde_json::to_vec(&record.header)
            .map_err(|e| HarnessError::Config(format!("task header: {e}")))?;
        w.write_all(&(header.len() as u32).to_le_bytes())?;
        w.write_all(&header)?;
        w.write_all(&(record.trials.len() as u32).to_le_bytes())?;
        for (cand, y) in &record.trials {
            w.write_all(&(cand.len() as u32).to_le_bytes())?;
            w.write_all(cand.as_bytes())?;
            w.write_all(&y.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Vec<TaskRecord>, HarnessError> {
    DatasetReader::open(path)?.collect()
}

/// Streaming reader over dataset records.
pub struct DatasetReader {
    reader: BufReader<File>,
}

impl DatasetReader {
    pub fn open(path: &Path) -> Result<Self, HarnessError> {
        let mut reader = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        reader.read_exact(&mut magic)?;
        if magic != MAGIC {
            return Err(HarnessError::Config(format!(
                "dataset {path:?} has bad magic {magic:?}"
            )));
        }
        let mut ver = [0u8; 2];
        reader.read_exact(&mut ver)?;
        let ver = u16::from_le_bytes(ver);
        if ver != VERSION {
            return Err(HarnessError::Config(format!(
                "dataset {path:?} is format version {ver}, expected {VERSION}"
            )));
        }
        Ok(Self { reader })
    }

    fn read_record(&mut self) -> Result<Option<TaskRecord>, HarnessError> {
        let mut len = [0u8; 4];
        match self.reader.read_exact(&mut len) {
            Ok(()) => {}
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
            Err(e) => return Err(e.into()),
        }
        let header_len = u32::from_le_bytes(len) as usize;
        let mut header_bytes = vec![0u8; header_len];
        self.reader.read_exact(&mut header_bytes)?;
        let header: TaskHeader = serde_json::from_slice(&header_bytes)
            .map_err(|e| HarnessError::Config(format!("task header: {e}")))?;
        let mut count = [0u8; 4];
        self.reader.read_exact(&mut count)?;
        let count = u32::from_le_bytes(count) as usize;
        let mut trials = Vec::with_capacity(count);
        for _ in 0..count {
            let mut slen = [0u8; 4];
            self.reader.read_exact(&mut slen)?;
            let slen = u32::from_le_bytes(slen) as usize;
            let mut sbytes = vec![0u8; slen];
            self.reader.read_exact(&mut sbytes)?;
            let s = String::from_utf8(sbytes)
                .map_err(|_| HarnessError::Config("candidate string is not UTF-8".into()))?;
            let mut ybytes = [0u8; 8];
            self.reader.read_exact(&mut ybytes)?;
            trials.push((s, f64::from_le_bytes(ybytes)));
        }
        Ok(Some(TaskRecord { header, trials }))
    }
}

impl Iterator for DatasetReader {
    type Item = Result<TaskRecord, HarnessError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.read_record().transpose()
    }
}
