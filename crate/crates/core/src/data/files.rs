use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::io_util::{write_atomic, Reader};
use crate::matrix::Matrix;
use crate::setfn::GroundSet;

pub const EMBEDDINGS_MAGIC: &[u8; 8] = b"DSPNEMB1";

fn read(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| Error::io(path, e))
}

/// Binary layout: magic `DSPNEMB1`, `n: u32`, `d: u32`, then `n·d` `f32`
/// values row-major, all little-endian.
pub fn save_embeddings(path: &Path, m: &Matrix) -> Result<()> {
    let n = u32::try_from(m.rows()).map_err(|_| Error::TooLarge {
        n: m.rows(),
        max: u32::MAX as usize,
    })?;
    let d = u32::try_from(m.cols()).map_err(|_| Error::TooLarge {
        n: m.cols(),
        max: u32::MAX as usize,
    })?;
    let mut out = Vec::with_capacity(16 + m.as_slice().len() * 4);
    out.extend_from_slice(EMBEDDINGS_MAGIC);
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&d.to_le_bytes());
    for &x in m.as_slice() {
        out.extend_from_slice(&(x as f32).to_le_bytes());
    }
    write_atomic(path, &out)
}

/// Text alternative: header `n d`, then one tab-separated row per line.
pub fn save_embeddings_tsv(path: &Path, m: &Matrix) -> Result<()> {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|&x| (x as f32).to_string()).collect();
        writeln!(out, "{}", row.join("\t")).expect("writing to a String");
    }
    write_atomic(path, out.as_bytes())
}

fn decode_binary(bytes: &[u8], path: &Path) -> Result<Matrix> {
    let mut r = Reader::new(bytes, path);
    if r.bytes(8)? != EMBEDDINGS_MAGIC {
        return Err(Error::format(path, "bad magic (expected DSPNEMB1)"));
    }
    let n = r.u32()? as usize;
    let d = r.u32()? as usize;
    if n == 0 || d == 0 {
        return Err(Error::format(
            path,
            format!("empty embedding matrix ({n}×{d})"),
        ));
    }
    let count = n
        .checked_mul(d)
        .ok_or_else(|| Error::format(path, format!("n·d overflows ({n}×{d})")))?;
    let expected = count
        .checked_mul(4)
        .and_then(|b| b.checked_add(16))
        .ok_or_else(|| Error::format(path, format!("n·d overflows ({n}×{d})")))?;
    if bytes.len() != expected {
        if bytes.len() < expected {
            return Err(Error::Truncated {
                path: path.to_path_buf(),
                expected: expected as u64,
                actual: bytes.len() as u64,
            });
        }
        return Err(Error::format(
            path,
            format!("expected {expected} bytes, found {}", bytes.len()),
        ));
    }
    let data: Vec<f64> = r
        .bytes(count * 4)?
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    r.finish()?;
    if data.iter().any(|x| !x.is_finite()) {
        return Err(Error::format(path, "non-finite embedding value"));
    }
    Matrix::from_vec(n, d, data)
}

fn decode_tsv(text: &str, path: &Path) -> Result<Matrix> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::format(path, "empty file"))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::format(path, format!("bad header '{header}': {e}")))?;
    let [n, d] = dims[..] else {
        return Err(Error::format(
            path,
            format!("header must be 'n d', got '{header}'"),
        ));
    };
    if n == 0 || d == 0 {
        return Err(Error::format(
            path,
            format!("empty embedding matrix ({n}×{d})"),
        ));
    }
    let mut data = Vec::with_capacity(n.saturating_mul(d));
    let mut rows = 0;
    for (i, line) in lines.enumerate() {
        let vals: Vec<f64> = line
            .split('\t')
            .map(|t| t.trim().parse::<f32>().map(f64::from))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::format(path, format!("row {}: {e}", i + 1)))?;
        if vals.len() != d {
            return Err(Error::format(
                path,
                format!("row {} has {} values, expected {d}", i + 1, vals.len()),
            ));
        }
        data.extend(vals);
        rows += 1;
    }
    if rows != n {
        return Err(Error::format(
            path,
            format!("expected {n} rows, found {rows}"),
        ));
    }
    Matrix::from_vec(n, d, data)
}

/// Reads either format, chosen by the leading magic bytes.
pub fn load_embeddings(path: &Path) -> Result<Matrix> {
    let bytes = read(path)?;
    if bytes.starts_with(EMBEDDINGS_MAGIC) || bytes.starts_with(b"DSPN") {
        return decode_binary(&bytes, path);
    }
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Error::format(path, "bad magic (expected DSPNEMB1)"))?;
    decode_tsv(text, path)
}

/// One decimal label per line.
pub fn save_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        writeln!(out, "{l}").expect("writing to a String");
    }
    write_atomic(path, out.as_bytes())
}

pub fn load_labels(path: &Path, n: usize) -> Result<Vec<usize>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let labels: Vec<usize> = text
        .lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            l.trim()
                .parse()
                .map_err(|e| Error::format(path, format!("line {}: {e}", i + 1)))
        })
        .collect::<Result<_>>()?;
    if labels.len() != n {
        return Err(Error::format(
            path,
            format!("label count mismatch: {} labels for {n} rows", labels.len()),
        ));
    }
    Ok(labels)
}

pub fn load_ground(embeddings: &Path, labels: Option<&Path>) -> Result<GroundSet> {
    let m = load_embeddings(embeddings)?;
    let labels = labels.map(|p| load_labels(p, m.rows())).transpose()?;
    GroundSet::new(m, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Matrix {
        Matrix::from_rows(&[vec![0.5, -1.25, 3.0], vec![1e-3f32 as f64, 2.0, -0.0]]).unwrap()
    }

    #[test]
    fn binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.bin");
        save_embeddings(&p, &sample()).unwrap();
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 16 + 6 * 4);
        assert_eq!(load_embeddings(&p).unwrap(), sample());
    }

    #[test]
    fn tsv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.tsv");
        save_embeddings_tsv(&p, &sample()).unwrap();
        assert_eq!(load_embeddings(&p).unwrap(), sample());
    }

    #[test]
    fn truncated_names_byte_counts() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.bin");
        save_embeddings(&p, &sample()).unwrap();
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        let err = load_embeddings(&p).unwrap_err();
        assert!(matches!(
            err,
            Error::Truncated {
                expected: 40,
                actual: 37,
                ..
            }
        ));
        assert!(err.to_string().contains("40") && err.to_string().contains("37"));
    }

    #[test]
    fn rejects_bad_headers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.bin");
        let mut b = b"DSPNEMB1".to_vec();
        b.extend_from_slice(&0u32.to_le_bytes());
        b.extend_from_slice(&2u32.to_le_bytes());
        std::fs::write(&p, &b).unwrap();
        assert!(load_embeddings(&p).is_err());
        let mut b = b"DSPNEMB1".to_vec();
        b.extend_from_slice(&u32::MAX.to_le_bytes());
        b.extend_from_slice(&u32::MAX.to_le_bytes());
        std::fs::write(&p, &b).unwrap();
        assert!(load_embeddings(&p).is_err());
        std::fs::write(&p, b"DSPNEMB2\0\0\0\0").unwrap();
        assert!(load_embeddings(&p).is_err());
    }

    #[test]
    fn labels() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.txt");
        save_labels(&p, &[3, 0, 1]).unwrap();
        assert_eq!(load_labels(&p, 3).unwrap(), vec![3, 0, 1]);
        assert!(load_labels(&p, 4).is_err());
    }
}
