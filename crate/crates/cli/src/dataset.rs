//! Binary dataset files holding channel tensors.
//!
//! Layout: magic `UWMD`, then little-endian u32 version (currently 1),
//! u32 M, u32 R, u32 T, u64 sample count, then all coefficients as
//! little-endian f64 in `[sample][i][j][r][t]` order.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use uwmmse_core::CsiTensor;

pub const MAGIC: [u8; 4] = *b"UWMD";
pub const VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("not a dataset file (magic {0:?})")]
    BadMagic([u8; 4]),
    #[error("unsupported dataset version {0}, expected {VERSION}")]
    BadVersion(u32),
    #[error("file ends early: {0}")]
    Truncated(String),
    #[error("{0} trailing bytes after the last sample")]
    TrailingData(u64),
    #[error("{0}")]
    Invalid(String),
}

fn read_u32(r: &mut impl Read, what: &str) -> Result<u32, DatasetError> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)
        .map_err(|_| DatasetError::Truncated(format!("while reading {what}")))?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read, what: &str) -> Result<u64, DatasetError> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|_| DatasetError::Truncated(format!("while reading {what}")))?;
    Ok(u64::from_le_bytes(buf))
}

pub fn write_dataset(path: &Path, tensors: &[CsiTensor]) -> Result<(), DatasetError> {
    let first = tensors
        .first()
        .ok_or_else(|| DatasetError::Invalid("refusing to write an empty dataset".into()))?;
    let (m, r, t) = (first.users(), first.rx(), first.tx());
    for (k, h) in tensors.iter().enumerate() {
        if h.users() != m || h.rx() != r || h.tx() != t {
            return Err(DatasetError::Invalid(format!(
                "sample {k} is {}x{}x{}, dataset is {m}x{r}x{t}",
                h.users(),
                h.rx(),
                h.tx()
            )));
        }
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(m as u32).to_le_bytes())?;
    w.write_all(&(r as u32).to_le_bytes())?;
    w.write_all(&(t as u32).to_le_bytes())?;
    w.write_all(&(tensors.len() as u64).to_le_bytes())?;
    for h in tensors {
        for &x in h.data() {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset(path: &Path) -> Result<Vec<CsiTensor>, DatasetError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| DatasetError::Truncated("while reading magic".into()))?;
    if magic != MAGIC {
        return Err(DatasetError::BadMagic(magic));
    }
    let version = read_u32(&mut r, "version")?;
    if version != VERSION {
        return Err(DatasetError::BadVersion(version));
    }
    let m = read_u32(&mut r, "user count")? as usize;
    let rx = read_u32(&mut r, "receive antenna count")? as usize;
    let tx = read_u32(&mut r, "transmit antenna count")? as usize;
    let n = read_u64(&mut r, "sample count")? as usize;
    if m == 0 || rx == 0 || tx == 0 {
        return Err(DatasetError::Invalid(format!("degenerate dimensions M={m} R={rx} T={tx}")));
    }

    let per_sample = m * m * rx * tx;
    let mut tensors = Vec::with_capacity(n);
    let mut buf = vec![0u8; per_sample * 8];
    for k in 0..n {
        r.read_exact(&mut buf)
            .map_err(|_| DatasetError::Truncated(format!("in sample {k} of {n}")))?;
        let data: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let tensor = CsiTensor::new(m, rx, tx, data)
            .map_err(|e| DatasetError::Invalid(format!("sample {k}: {e}")))?;
        tensors.push(tensor);
    }
    let mut rest = Vec::new();
    r.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(DatasetError::TrailingData(rest.len() as u64));
    }
    Ok(tensors)
}
