//! Append-only file persistence for embeddings.
//!
//! Layout: magic `ETRC`, version `u16` LE, then records of
//! `key_hash: u64 LE, d: u32 LE, d little-endian floats`. The version pins
//! the element width (1 = f32, 2 = f64) so persisted vectors reload
//! bit-identically for the scalar type that wrote them. A truncated or
//! garbled tail is skipped with a warning; affected keys are recomputed.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;

use crate::error::EmbedError;
use crate::num::Scalar;

const MAGIC: [u8; 4] = *b"ETRC";

fn version_for<T: Scalar>() -> u16 {
    match std::mem::size_of::<T>() {
        4 => 1,
        8 => 2,
        other => unreachable!("unsupported scalar width {other}"),
    }
}

#[derive(Debug)]
pub struct FileCache<T> {
    file: File,
    entries: HashMap<u64, Vec<T>>,
}

impl<T: Scalar> FileCache<T> {
    /// Open or create a cache file, loading every intact record.
    pub fn open(path: &Path) -> Result<Self, EmbedError> {
        let mut file = OpenOptions::new().read(true).append(true).create(true).open(path)?;
        let len = file.metadata()?.len();
        let mut entries = HashMap::new();
        if len == 0 {
            file.write_all(&MAGIC)?;
            file.write_all(&version_for::<T>().to_le_bytes())?;
            file.flush()?;
        } else {
            let mut reader = BufReader::new(&mut file);
            reader.seek(SeekFrom::Start(0))?;
            let mut magic = [0u8; 4];
            reader.read_exact(&mut magic)?;
            if magic != MAGIC {
                return Err(EmbedError::Config(format!(
                    "embedding cache {path:?} has bad magic {magic:?}"
                )));
            }
            let mut ver = [0u8; 2];
            reader.read_exact(&mut ver)?;
            let ver = u16::from_le_bytes(ver);
            if ver != version_for::<T>() {
                return Err(EmbedError::Config(format!(
                    "embedding cache {path:?} is format version {ver}, runtime scalar needs {}",
                    version_for::<T>()
                )));
            }
            loop {
                match read_record::<T>(&mut reader) {
                    Ok(Some((key, values))) => {
                        entries.insert(key, values);
                    }
                    Ok(None) => break,
                    Err(_) => {
                        eprintln!(
                            "warning: embedding cache {path:?} has a corrupt tail record; skipping"
                        );
                        break;
                    }
                }
            }
        }
        Ok(Self { file, entries })
    }

    pub fn get(&self, key: u64) -> Option<&Vec<T>> {
        self.entries.get(&key)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, key: u64, values: &[T]) -> Result<(), EmbedError> {
        if self.entries.contains_key(&key) {
            return Ok(());
        }
        let mut buf = Vec::with_capacity(12 + values.len() * std::mem::size_of::<T>());
        buf.extend_from_slice(&key.to_le_bytes());
        buf.extend_from_slice(&(values.len() as u32).to_le_bytes());
        for v in values {
            match version_for::<T>() {
                1 => buf.extend_from_slice(&(v.as_f64() as f32).to_le_bytes()),
                _ => buf.extend_from_slice(&v.as_f64().to_le_bytes()),
            }
        }
        self.file.write_all(&buf)?;
        self.file.flush()?;
        self.entries.insert(key, values.to_vec());
        Ok(())
    }
}

fn read_record<T: Scalar>(reader: &mut impl Read) -> std::io::Result<Option<(u64, Vec<T>)>> {
    let mut key = [0u8; 8];
    match reader.read_exact(&mut key) {
        Ok(()) => {}
        Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e),
    }
    let mut dlen = [0u8; 4];
    reader.read_exact(&mut dlen)?;
    let d = u32::from_le_bytes(dlen) as usize;
    if d > 1 << 20 {
        return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, "implausible dim"));
    }
    let mut values = Vec::with_capacity(d);
    for _ in 0..d {
        match version_for::<T>() {
            1 => {
                let mut b = [0u8; 4];
                reader.read_exact(&mut b)?;
                values.push(T::of(f32::from_le_bytes(b) as f64));
            }
            _ => {
                let mut b = [0u8; 8];
                reader.read_exact(&mut b)?;
                values.push(T::of(f64::from_le_bytes(b)));
            }
        }
    }
    Ok(Some((u64::from_le_bytes(key), values)))
}
