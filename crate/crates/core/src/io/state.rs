//! Binary snapshots of a trained classifier.
//!
//! Little-endian layout: magic "FOST", version `u32` = 1, dim `D` (`u64`),
//! class count `C` (`u64`), gamma (`f64`), samples seen (`u64`), then `C`
//! class ids (`u32`), `W` row-major (`D * C` `f64`) and `R` row-major
//! (`D * D` `f64`).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::classifier::ClassifierState;

use super::FormatError;

const MAGIC: [u8; 4] = *b"FOST";
const VERSION: u32 = 1;

pub fn write_state(state: &ClassifierState, path: impl AsRef<Path>) -> Result<(), FormatError> {
    let path = path.as_ref();
    let io = |e| FormatError::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    let dim = state.dim();
    let mut buf = Vec::with_capacity(40 + 4 * state.num_classes());
    buf.extend_from_slice(&MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(dim as u64).to_le_bytes());
    buf.extend_from_slice(&(state.num_classes() as u64).to_le_bytes());
    buf.extend_from_slice(&state.gamma().to_le_bytes());
    buf.extend_from_slice(&state.samples_seen().to_le_bytes());
    for id in state.class_ids() {
        buf.extend_from_slice(&id.to_le_bytes());
    }
    out.write_all(&buf).map_err(io)?;
    for m in [state.weights(), state.autocorrelation_inverse()] {
        for row in m.row_iter() {
            for v in row.iter() {
                out.write_all(&v.to_le_bytes()).map_err(io)?;
            }
        }
    }
    out.flush().map_err(io)
}

pub fn read_state(path: impl AsRef<Path>) -> Result<ClassifierState, FormatError> {
    let path = path.as_ref();
    let io = |e| FormatError::io(path, e);
    let invalid = |reason: String| FormatError::InvalidState {
        path: path.to_path_buf(),
        reason,
    };
    let mut input = BufReader::new(File::open(path).map_err(io)?);
    let mut head = [0u8; 40];
    input
        .read_exact(&mut head)
        .map_err(|_| invalid("file shorter than header".into()))?;
    if head[0..4] != MAGIC {
        return Err(invalid("bad magic".into()));
    }
    let version = u32::from_le_bytes(head[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(invalid(format!("unsupported version {version}")));
    }
    let dim = u64::from_le_bytes(head[8..16].try_into().unwrap()) as usize;
    let classes = u64::from_le_bytes(head[16..24].try_into().unwrap()) as usize;
    let gamma = f64::from_le_bytes(head[24..32].try_into().unwrap());
    let seen = u64::from_le_bytes(head[32..40].try_into().unwrap());

    let mut read_vec = |count: usize, width: usize| -> Result<Vec<u8>, FormatError> {
        let mut buf = vec![0u8; count * width];
        input
            .read_exact(&mut buf)
            .map_err(|_| invalid("truncated payload".into()))?;
        Ok(buf)
    };
    let ids = read_vec(classes, 4)?
        .chunks_exact(4)
        .map(|c| u32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let floats = |bytes: Vec<u8>| -> Vec<f64> {
        bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect()
    };
    let w = floats(read_vec(dim * classes, 8)?);
    let r = floats(read_vec(dim * dim, 8)?);
    ClassifierState::from_parts(
        DMatrix::from_row_slice(dim, classes, &w),
        DMatrix::from_row_slice(dim, dim, &r),
        gamma,
        ids,
        seen,
    )
    .map_err(|e| invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::ActivationBatch;

    #[test]
    fn state_round_trip() {
        let mut c = ClassifierState::new(3, 2.0).unwrap();
        let x = ActivationBatch::from_rows(&[vec![0.1, 0.2, 0.3], vec![0.9, 0.1, 0.4]]).unwrap();
        c.update(&x, &vec![8, 2].into()).unwrap();
        c.expand_classes(&[5]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.fost");
        write_state(&c, &path).unwrap();
        assert_eq!(read_state(&path).unwrap(), c);
    }

    #[test]
    fn rejects_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.fost");
        std::fs::write(&path, b"FOAL0000").unwrap();
        assert!(read_state(&path).is_err());
    }
}
