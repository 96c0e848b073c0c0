//! Checkpoint serialization.
//!
//! Layout: magic `ETRR`, format version `u16` LE (1 = f32 tensors, 2 = f64
//! tensors), `u32` config-JSON length, the config JSON, `u32` tensor count,
//! then per tensor: `u16` name length, UTF-8 name, `u8` rank, `u32` dims,
//! little-endian floats at the version's width. Loading validates the magic,
//! version, and every shape against the config-derived table; a mismatch or
//! truncation fails without a partial load.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::CheckpointError;
use crate::num::Scalar;
use crate::tensor::Tensor;

use super::{expected_shapes, RegressorConfig, RegressorParams};

const MAGIC: [u8; 4] = *b"ETRR";

fn version_for<T: Scalar>() -> u16 {
    match std::mem::size_of::<T>() {
        4 => 1,
        8 => 2,
        other => unreachable!("unsupported scalar width {other}"),
    }
}

pub fn save_checkpoint<T: Scalar>(
    params: &RegressorParams<T>,
    config: &RegressorConfig,
    path: &Path,
) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&version_for::<T>().to_le_bytes())?;
    let config_json =
        serde_json::to_vec(config).map_err(|e| CheckpointError::Json(e.to_string()))?;
    w.write_all(&(config_json.len() as u32).to_le_bytes())?;
    w.write_all(&config_json)?;
    w.write_all(&(params.len() as u32).to_le_bytes())?;
    for (name, tensor) in params.names().iter().zip(params.tensors()) {
        w.write_all(&(name.len() as u16).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&[tensor.shape().len() as u8])?;
        for &dim in tensor.shape() {
            w.write_all(&(dim as u32).to_le_bytes())?;
        }
        for v in tensor.data() {
            match version_for::<T>() {
                1 => w.write_all(&(v.as_f64() as f32).to_le_bytes())?,
                _ => w.write_all(&v.as_f64().to_le_bytes())?,
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint<T: Scalar>(
    path: &Path,
) -> Result<(RegressorParams<T>, RegressorConfig), CheckpointError> {
    let file = File::open(path)?;
    let total = file.metadata()?.len() as usize;
    let mut r = CountingReader { inner: BufReader::new(file), read: 0, total };

    let mut magic = [0u8; 4];
    r.read_exact_or_truncated(&mut magic)?;
    if magic != MAGIC {
        return Err(CheckpointError::BadMagic { expected: MAGIC, found: magic });
    }
    let version = {
        let mut b = [0u8; 2];
        r.read_exact_or_truncated(&mut b)?;
        u16::from_le_bytes(b)
    };
    if version != version_for::<T>() {
        return Err(CheckpointError::VersionMismatch { found: version, expected: version_for::<T>() });
    }
    let config_len = r.read_u32()? as usize;
    let mut config_bytes = vec![0u8; config_len];
    r.read_exact_or_truncated(&mut config_bytes)?;
    let config: RegressorConfig = serde_json::from_slice(&config_bytes)
        .map_err(|e| CheckpointError::Json(e.to_string()))?;
    config.validate().map_err(|e| CheckpointError::Json(e.to_string()))?;

    let expected: Vec<(String, Vec<usize>)> = expected_shapes(&config);
    let count = r.read_u32()? as usize;
    let mut pairs: Vec<(String, Tensor<T>)> = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = {
            let mut b = [0u8; 2];
            r.read_exact_or_truncated(&mut b)?;
            u16::from_le_bytes(b) as usize
        };
        let mut name_bytes = vec![0u8; name_len];
        r.read_exact_or_truncated(&mut name_bytes)?;
        let name = String::from_utf8(name_bytes)
            .map_err(|_| CheckpointError::Json("tensor name is not UTF-8".into()))?;
        let rank = {
            let mut b = [0u8; 1];
            r.read_exact_or_truncated(&mut b)?;
            b[0] as usize
        };
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.read_u32()? as usize);
        }
        let Some((_, want)) = expected.iter().find(|(n, _)| *n == name) else {
            return Err(CheckpointError::UnexpectedTensor(name));
        };
        if &shape != want {
            return Err(CheckpointError::ShapeMismatch {
                name,
                expected: want.clone(),
                found: shape,
            });
        }
        let numel: usize = shape.iter().product();
        let mut data = Vec::with_capacity(numel);
        for _ in 0..numel {
            match version {
                1 => {
                    let mut b = [0u8; 4];
                    r.read_exact_or_truncated(&mut b)?;
                    data.push(T::of(f32::from_le_bytes(b) as f64));
                }
                _ => {
                    let mut b = [0u8; 8];
                    r.read_exact_or_truncated(&mut b)?;
                    data.push(T::of(f64::from_le_bytes(b)));
                }
            }
        }
        pairs.push((name, Tensor::from_vec(shape[0], shape[1], data).expect("validated shape")));
    }
    for (name, _) in &expected {
        if !pairs.iter().any(|(n, _)| n == name) {
            return Err(CheckpointError::MissingTensor(name.clone()));
        }
    }
    Ok((RegressorParams::from_named(pairs), config))
}

struct CountingReader<R> {
    inner: R,
    read: usize,
    total: usize,
}

impl<R: Read> CountingReader<R> {
    fn read_exact_or_truncated(&mut self, buf: &mut [u8]) -> Result<(), CheckpointError> {
        match self.inner.read_exact(buf) {
            Ok(()) => {
                self.read += buf.len();
                Ok(())
            }
            Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => {
                Err(CheckpointError::Truncated {
                    expected: buf.len(),
                    present: self.total.saturating_sub(self.read),
                })
            }
            Err(e) => Err(CheckpointError::Io(e)),
        }
    }

    fn read_u32(&mut self) -> Result<u32, CheckpointError> {
        let mut b = [0u8; 4];
        self.read_exact_or_truncated(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embed::EmbeddingVector;
    use crate::regressor::{predict, RegressorConfig, RegressorParams};
    use crate::rng::rng_from_seed;
    use rand::RngExt;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("sembo-ckpt-tests");
        std::fs::create_dir_all(&dir).unwrap();
        dir.join(format!("{name}-{}", std::process::id()))
    }

    fn tiny_config() -> RegressorConfig {
        RegressorConfig {
            d_model: 16,
            n_layers: 1,
            n_heads: 2,
            d_ff: 32,
            d_embed: 8,
            ..RegressorConfig::desk_scale()
        }
    }

    #[test]
    fn round_trip_preserves_predictions_bit_exactly() {
        let config = tiny_config();
        let params = RegressorParams::<f64>::init(&config, 42);
        let path = tmp("roundtrip");
        save_checkpoint(&params, &config, &path).unwrap();
        let (loaded, loaded_config) = load_checkpoint::<f64>(&path).unwrap();
        assert_eq!(loaded_config, config);
        assert_eq!(loaded.tensors(), params.tensors());

        let mut rng = rng_from_seed(1);
        let history: Vec<_> = (0..4)
            .map(|_| {
                let e = EmbeddingVector::new((0..8).map(|_| rng.random_range(-1.0..1.0)).collect());
                (e, rng.random_range(0.0..1.0))
            })
            .collect();
        let target = [EmbeddingVector::new((0..8).map(|_| rng.random_range(-1.0..1.0)).collect())];
        let before = predict(&params, &config, &history, &target, None).unwrap();
        let after = predict(&loaded, &loaded_config, &history, &target, None).unwrap();
        assert_eq!(before, after);
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn truncated_file_reports_byte_counts() {
        let config = tiny_config();
        let params = RegressorParams::<f64>::init(&config, 7);
        let path = tmp("truncated");
        save_checkpoint(&params, &config, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        match load_checkpoint::<f64>(&path) {
            Err(CheckpointError::Truncated { expected, present }) => {
                assert!(expected > present || expected > 0);
            }
            other => panic!("expected Truncated, got {other:?}"),
        }
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn version_mismatch_names_both_versions() {
        let config = tiny_config();
        let params = RegressorParams::<f32>::init(&config, 7);
        let path = tmp("version");
        save_checkpoint(&params, &config, &path).unwrap();
        match load_checkpoint::<f64>(&path) {
            Err(CheckpointError::VersionMismatch { found, expected }) => {
                assert_eq!((found, expected), (1, 2));
            }
            other => panic!("expected VersionMismatch, got {other:?}"),
        }
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn bad_magic_is_rejected() {
        let path = tmp("magic");
        std::fs::write(&path, b"NOPE....").unwrap();
        assert!(matches!(load_checkpoint::<f64>(&path), Err(CheckpointError::BadMagic { .. })));
        std::fs::remove_file(&path).unwrap();
    }

    #[test]
    fn f32_round_trip_is_exact_for_f32() {
        let config = tiny_config();
        let params = RegressorParams::<f32>::init(&config, 9);
        let path = tmp("f32");
        save_checkpoint(&params, &config, &path).unwrap();
        let (loaded, _) = load_checkpoint::<f32>(&path).unwrap();
        assert_eq!(loaded.tensors(), params.tensors());
        std::fs::remove_file(&path).unwrap();
    }
}
