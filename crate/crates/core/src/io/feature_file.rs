//! Binary per-block feature files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! offset  size  field
//!      0     4  magic, ASCII "FOAL"
//!      4     4  version (u32) = 1
//!      8     8  sample count V (u64)
//!     16     4  block count n (u32)
//!     20     4  block dim E (u32)
//!     24     1  labeled flag (0 or 1)
//!     25     3  reserved, zero
//!     28        payload
//! ```
//!
//! Each payload record is an optional `u32` class id (present iff labeled)
//! followed by `n * E` IEEE-754 `f32` values, block 0 first.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use crate::classifier::ClassId;
use crate::features::BlockFeatureSet;

use super::FormatError;

pub const MAGIC: [u8; 4] = *b"FOAL";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 28;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureHeader {
    pub sample_count: u64,
    pub block_count: u32,
    pub block_dim: u32,
    pub labeled: bool,
}

impl FeatureHeader {
    /// Bytes per payload record.
    pub fn record_len(&self) -> u64 {
        let floats = u64::from(self.block_count) * u64::from(self.block_dim) * 4;
        floats + if self.labeled { 4 } else { 0 }
    }

    /// Total file size implied by the header.
    pub fn file_len(&self) -> u64 {
        HEADER_LEN + self.sample_count * self.record_len()
    }

    fn encode(&self) -> [u8; HEADER_LEN as usize] {
        let mut buf = [0u8; HEADER_LEN as usize];
        buf[0..4].copy_from_slice(&MAGIC);
        buf[4..8].copy_from_slice(&VERSION.to_le_bytes());
        buf[8..16].copy_from_slice(&self.sample_count.to_le_bytes());
        buf[16..20].copy_from_slice(&self.block_count.to_le_bytes());
        buf[20..24].copy_from_slice(&self.block_dim.to_le_bytes());
        buf[24] = u8::from(self.labeled);
        buf
    }

    fn decode(buf: &[u8; HEADER_LEN as usize], path: &Path) -> Result<Self, FormatError> {
        let bad = |offset: u64, reason: String| FormatError::BadHeader {
            path: path.to_path_buf(),
            offset,
            reason,
        };
        if buf[0..4] != MAGIC {
            return Err(bad(0, format!("bad magic {:?}", &buf[0..4])));
        }
        let version = u32::from_le_bytes(buf[4..8].try_into().unwrap());
        if version != VERSION {
            return Err(bad(4, format!("unsupported version {version}")));
        }
        let header = Self {
            sample_count: u64::from_le_bytes(buf[8..16].try_into().unwrap()),
            block_count: u32::from_le_bytes(buf[16..20].try_into().unwrap()),
            block_dim: u32::from_le_bytes(buf[20..24].try_into().unwrap()),
            labeled: match buf[24] {
                0 => false,
                1 => true,
                other => return Err(bad(24, format!("label flag must be 0 or 1, got {other}"))),
            },
        };
        if header.block_count == 0 {
            return Err(bad(16, "block count is zero".into()));
        }
        if header.block_dim == 0 {
            return Err(bad(20, "block dim is zero".into()));
        }
        if buf[25..28] != [0, 0, 0] {
            return Err(bad(25, "reserved bytes are not zero".into()));
        }
        Ok(header)
    }
}

/// One decoded record.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSample {
    pub label: Option<ClassId>,
    pub features: BlockFeatureSet,
}

/// Streaming writer. The sample count is patched into the header by
/// [`FeatureWriter::finish`].
pub struct FeatureWriter {
    path: PathBuf,
    out: BufWriter<File>,
    header: FeatureHeader,
}

impl FeatureWriter {
    pub fn create(
        path: impl AsRef<Path>,
        block_count: u32,
        block_dim: u32,
        labeled: bool,
    ) -> Result<Self, FormatError> {
        let path = path.as_ref().to_path_buf();
        let file = File::create(&path).map_err(|e| FormatError::io(&path, e))?;
        let header = FeatureHeader {
            sample_count: 0,
            block_count,
            block_dim,
            labeled,
        };
        let mut out = BufWriter::new(file);
        out.write_all(&header.encode())
            .map_err(|e| FormatError::io(&path, e))?;
        Ok(Self { path, out, header })
    }

    pub fn write_sample(
        &mut self,
        label: Option<ClassId>,
        sample: &BlockFeatureSet,
    ) -> Result<(), FormatError> {
        let shape = (sample.block_count(), sample.block_dim());
        let expected = (
            self.header.block_count as usize,
            self.header.block_dim as usize,
        );
        if shape != expected {
            return Err(FormatError::ShapeMismatch {
                path: self.path.clone(),
                sample: self.header.sample_count,
                expected,
                found: shape,
            });
        }
        if label.is_some() != self.header.labeled {
            return Err(FormatError::LabelPresence {
                path: self.path.clone(),
                sample: self.header.sample_count,
                labeled: self.header.labeled,
            });
        }
        let mut record = Vec::with_capacity(self.header.record_len() as usize);
        if let Some(id) = label {
            record.extend_from_slice(&id.to_le_bytes());
        }
        for block in sample.blocks() {
            for v in block {
                record.extend_from_slice(&v.to_le_bytes());
            }
        }
        self.out
            .write_all(&record)
            .map_err(|e| FormatError::io(&self.path, e))?;
        self.header.sample_count += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<FeatureHeader, FormatError> {
        let path = self.path.clone();
        let io = |e| FormatError::io(&path, e);
        self.out.flush().map_err(io)?;
        let mut file = self.out.into_inner().map_err(|e| io(e.into_error()))?;
        file.seek(SeekFrom::Start(8)).map_err(io)?;
        file.write_all(&self.header.sample_count.to_le_bytes())
            .map_err(io)?;
        file.sync_all().map_err(io)?;
        Ok(self.header)
    }
}

/// Writes labeled samples to `path`. All samples must share one shape; an
/// empty list produces a header-only file with `n = E = 1`.
pub fn write_features(
    samples: &[(ClassId, BlockFeatureSet)],
    path: impl AsRef<Path>,
) -> Result<FeatureHeader, FormatError> {
    let (n, e) = samples
        .first()
        .map(|(_, s)| (s.block_count(), s.block_dim()))
        .unwrap_or((1, 1));
    let mut writer = FeatureWriter::create(path, n as u32, e as u32, true)?;
    for (label, sample) in samples {
        writer.write_sample(Some(*label), sample)?;
    }
    writer.finish()
}

/// Lazy reader over a feature file. Holds one record in memory at a time.
pub struct FeatureReader {
    path: PathBuf,
    input: BufReader<File>,
    header: FeatureHeader,
    next: u64,
    buf: Vec<u8>,
    done: bool,
}

impl FeatureReader {
    pub fn header(&self) -> FeatureHeader {
        self.header
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn offset_of(&self, sample: u64) -> u64 {
        HEADER_LEN + sample * self.header.record_len()
    }

    fn read_record(&mut self) -> Result<FeatureSample, FormatError> {
        let sample = self.next;
        let offset = self.offset_of(sample);
        self.buf.resize(self.header.record_len() as usize, 0);
        if let Err(e) = self.input.read_exact(&mut self.buf) {
            return Err(if e.kind() == ErrorKind::UnexpectedEof {
                FormatError::Truncated {
                    path: self.path.clone(),
                    sample,
                    offset,
                }
            } else {
                FormatError::io(&self.path, e)
            });
        }
        let (label, floats) = if self.header.labeled {
            let id = u32::from_le_bytes(self.buf[0..4].try_into().unwrap());
            (Some(id), &self.buf[4..])
        } else {
            (None, &self.buf[..])
        };
        let dim = self.header.block_dim as usize;
        let mut blocks = Vec::with_capacity(self.header.block_count as usize);
        for (b, chunk) in floats.chunks_exact(dim * 4).enumerate() {
            let block: Vec<f32> = chunk
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            if let Some(entry) = block.iter().position(|v| !v.is_finite()) {
                return Err(FormatError::NonFinite {
                    path: self.path.clone(),
                    sample,
                    block: b,
                    entry,
                });
            }
            blocks.push(block);
        }
        let features = BlockFeatureSet::new(blocks).expect("validated record");
        Ok(FeatureSample { label, features })
    }

    fn check_eof(&mut self) -> Result<(), FormatError> {
        let mut probe = [0u8; 1];
        match self.input.read(&mut probe) {
            Ok(0) => Ok(()),
            Ok(_) => Err(FormatError::TrailingBytes {
                path: self.path.clone(),
                offset: self.offset_of(self.header.sample_count),
            }),
            Err(e) => Err(FormatError::io(&self.path, e)),
        }
    }
}

impl Iterator for FeatureReader {
    type Item = Result<FeatureSample, FormatError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        if self.next == self.header.sample_count {
            self.done = true;
            return self.check_eof().err().map(Err);
        }
        let record = self.read_record();
        if record.is_err() {
            self.done = true;
        } else {
            self.next += 1;
        }
        Some(record)
    }
}

/// Opens `path` and validates its header. Samples are decoded lazily.
pub fn read_features(path: impl AsRef<Path>) -> Result<FeatureReader, FormatError> {
    let path = path.as_ref().to_path_buf();
    let file = File::open(&path).map_err(|e| FormatError::io(&path, e))?;
    let mut input = BufReader::new(file);
    let mut buf = [0u8; HEADER_LEN as usize];
    if let Err(e) = input.read_exact(&mut buf) {
        return Err(if e.kind() == ErrorKind::UnexpectedEof {
            FormatError::BadHeader {
                path,
                offset: 0,
                reason: "file shorter than header".into(),
            }
        } else {
            FormatError::io(&path, e)
        });
    }
    let header = FeatureHeader::decode(&buf, &path)?;
    Ok(FeatureReader {
        path,
        input,
        header,
        next: 0,
        buf: Vec::new(),
        done: false,
    })
}

/// Reads only the header.
pub fn read_header(path: impl AsRef<Path>) -> Result<FeatureHeader, FormatError> {
    read_features(path).map(|r| r.header())
}

/// Reads a whole labeled file into memory.
pub fn read_all_labeled(
    path: impl AsRef<Path>,
) -> Result<Vec<(ClassId, BlockFeatureSet)>, FormatError> {
    let reader = read_features(path)?;
    let path = reader.path().to_path_buf();
    reader
        .enumerate()
        .map(|(i, s)| {
            let s = s?;
            let label = s.label.ok_or(FormatError::LabelPresence {
                path: path.clone(),
                sample: i as u64,
                labeled: false,
            })?;
            Ok((label, s.features))
        })
        .collect()
}
