//! IDX containers (the MNIST distribution format): big-endian header, unsigned-byte payload,
//! optionally gzip-compressed.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use flate2::read::GzDecoder;

use crate::data::Dataset;
use crate::error::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;
const UNSIGNED_BYTE: u8 = 0x08;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxImageSet {
    pub n: usize,
    pub rows: usize,
    pub cols: usize,
    /// `n × (rows·cols)` pixels, row-major.
    pub pixels: Vec<u8>,
    pub labels: Option<Vec<u8>>,
}

impl IdxImageSet {
    pub fn image(&self, i: usize) -> &[u8] {
        let d = self.rows * self.cols;
        &self.pixels[i * d..(i + 1) * d]
    }

    pub fn to_dataset(&self) -> Result<Dataset> {
        Dataset::from_row_major(self.n, self.rows * self.cols, self.pixels.iter().map(|&p| p as f64).collect())
    }

    /// Appends `other`, which must have the same image shape and label presence.
    pub fn append(&mut self, other: IdxImageSet) -> Result<()> {
        if (self.rows, self.cols) != (other.rows, other.cols) || self.labels.is_some() != other.labels.is_some() {
            return Err(Error::invalid("IDX image sets have different shapes"));
        }
        self.n += other.n;
        self.pixels.extend(other.pixels);
        if let (Some(a), Some(b)) = (self.labels.as_mut(), other.labels) {
            a.extend(b);
        }
        Ok(())
    }
}

fn idx_error(offset: usize, message: impl Into<String>) -> Error {
    Error::Idx {
        offset: offset as u64,
        message: message.into(),
    }
}

/// Decompresses when the stream starts with the gzip signature.
pub fn maybe_gunzip(bytes: Vec<u8>) -> Result<Vec<u8>> {
    if bytes.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(bytes.as_slice()).read_to_end(&mut out)?;
        Ok(out)
    } else {
        Ok(bytes)
    }
}

/// Parses an unsigned-byte IDX tensor, returning its dimensions and payload.
fn parse_tensor(bytes: &[u8], expected_magic: u32) -> Result<(Vec<usize>, &[u8])> {
    if bytes.len() < 4 {
        return Err(idx_error(bytes.len(), "truncated magic number"));
    }
    if bytes[0] != 0 || bytes[1] != 0 {
        return Err(idx_error(0, format!("bad magic prefix {:02x}{:02x}", bytes[0], bytes[1])));
    }
    if bytes[2] != UNSIGNED_BYTE {
        return Err(idx_error(2, format!("unsupported element type 0x{:02x}", bytes[2])));
    }
    let magic = u32::from_be_bytes([bytes[0], bytes[1], bytes[2], bytes[3]]);
    if magic != expected_magic {
        return Err(idx_error(0, format!("magic 0x{magic:08x}, expected 0x{expected_magic:08x}")));
    }
    let ndim = bytes[3] as usize;
    let mut dims = Vec::with_capacity(ndim);
    let mut total: usize = 1;
    for k in 0..ndim {
        let at = 4 + 4 * k;
        let Some(raw) = bytes.get(at..at + 4) else {
            return Err(idx_error(bytes.len(), format!("truncated header: dimension {k} missing")));
        };
        let dim = u32::from_be_bytes(raw.try_into().expect("four bytes")) as usize;
        total = total
            .checked_mul(dim)
            .ok_or_else(|| idx_error(at, "dimension product overflows"))?;
        dims.push(dim);
    }
    let start = 4 + 4 * ndim;
    let end = start
        .checked_add(total)
        .ok_or_else(|| idx_error(start, "payload size overflows"))?;
    if bytes.len() < end {
        return Err(idx_error(bytes.len(), format!("truncated payload: expected {total} bytes from offset {start}")));
    }
    if bytes.len() > end {
        return Err(idx_error(end, format!("{} trailing bytes after payload", bytes.len() - end)));
    }
    Ok((dims, &bytes[start..end]))
}

/// Parses an image file (3 dimensions: count, rows, cols).
pub fn read_idx_images(bytes: &[u8]) -> Result<IdxImageSet> {
    let (dims, payload) = parse_tensor(bytes, IMAGES_MAGIC)?;
    Ok(IdxImageSet {
        n: dims[0],
        rows: dims[1],
        cols: dims[2],
        pixels: payload.to_vec(),
        labels: None,
    })
}

/// Parses a label file (1 dimension).
pub fn read_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let (_, payload) = parse_tensor(bytes, LABELS_MAGIC)?;
    Ok(payload.to_vec())
}

pub fn write_idx_images<W: Write>(set: &IdxImageSet, mut out: W) -> Result<()> {
    let header = |v: usize| u32::try_from(v).map_err(|_| Error::invalid(format!("dimension {v} exceeds u32")));
    out.write_all(&IMAGES_MAGIC.to_be_bytes())?;
    for v in [set.n, set.rows, set.cols] {
        out.write_all(&header(v)?.to_be_bytes())?;
    }
    out.write_all(&set.pixels)?;
    Ok(())
}

pub fn write_idx_labels<W: Write>(labels: &[u8], mut out: W) -> Result<()> {
    let n = u32::try_from(labels.len()).map_err(|_| Error::invalid("too many labels"))?;
    out.write_all(&LABELS_MAGIC.to_be_bytes())?;
    out.write_all(&n.to_be_bytes())?;
    out.write_all(labels)?;
    Ok(())
}

pub fn read_idx_images_file(path: &Path) -> Result<IdxImageSet> {
    read_idx_images(&maybe_gunzip(fs::read(path)?)?)
}

pub fn read_idx_labels_file(path: &Path) -> Result<Vec<u8>> {
    read_idx_labels(&maybe_gunzip(fs::read(path)?)?)
}

/// Reads an image file and its label file into one set.
pub fn read_labeled(images: &Path, labels: &Path) -> Result<IdxImageSet> {
    let mut set = read_idx_images_file(images)?;
    let l = read_idx_labels_file(labels)?;
    if l.len() != set.n {
        return Err(Error::invalid(format!("{} images but {} labels", set.n, l.len())));
    }
    set.labels = Some(l);
    Ok(set)
}

fn locate(dir: &Path, stem: &str) -> Result<PathBuf> {
    for name in [stem.to_string(), format!("{stem}.gz"), stem.replacen("-idx", ".idx", 1)] {
        let p = dir.join(&name);
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(Error::invalid(format!("{stem}[.gz] not found in {}", dir.display())))
}

/// Loads the standard training and test files from `dir` and concatenates them
/// (training images first).
pub fn load_mnist(dir: &Path) -> Result<IdxImageSet> {
    let mut all = read_labeled(
        &locate(dir, "train-images-idx3-ubyte")?,
        &locate(dir, "train-labels-idx1-ubyte")?,
    )?;
    all.append(read_labeled(
        &locate(dir, "t10k-images-idx3-ubyte")?,
        &locate(dir, "t10k-labels-idx1-ubyte")?,
    )?)?;
    Ok(all)
}
