//! Readers and writers for the standard interchange formats: fvecs, bvecs,
//! ivecs (ground truth), and per-point label text files. All binary formats
//! are little-endian with a 4-byte signed count prefix per record.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::dataset::{ElementKind, LabelAssignment, VectorData, VectorDataset};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorFileFormat {
    Fvecs,
    Bvecs,
}

impl std::str::FromStr for VectorFileFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fvecs" => Ok(VectorFileFormat::Fvecs),
            "bvecs" => Ok(VectorFileFormat::Bvecs),
            other => Err(Error::Param(format!("unknown vector format '{other}'"))),
        }
    }
}

fn format_err(path: &Path, offset: u64, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        offset,
        msg: msg.into(),
    }
}

/// Reads the 4-byte count prefix of a record. Returns `Ok(None)` on a clean
/// EOF at the record boundary; EOF inside the field is a format error.
fn read_count_or_eof<R: Read>(r: &mut R, path: &Path, record_start: u64) -> Result<Option<i32>> {
    let mut buf = [0u8; 4];
    let mut filled = 0;
    while filled < 4 {
        match r.read(&mut buf[filled..]) {
            Ok(0) => {
                if filled == 0 {
                    return Ok(None);
                }
                return Err(format_err(path, record_start, "truncated count field"));
            }
            Ok(n) => filled += n,
            Err(e) if e.kind() == std::io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Some(i32::from_le_bytes(buf)))
}

/// Reads an fvecs or bvecs file into a dataset.
///
/// Every record must carry the same leading dimension; a short read inside a
/// record is reported with the byte offset of the record that failed.
pub fn read_vectors(path: impl AsRef<Path>, format: VectorFileFormat) -> Result<VectorDataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let mut reader = BufReader::new(file);

    let elem_bytes = match format {
        VectorFileFormat::Fvecs => 4usize,
        VectorFileFormat::Bvecs => 1usize,
    };

    let mut dim: Option<usize> = None;
    let mut n_points = 0usize;
    let mut raw: Vec<u8> = Vec::new();
    let mut offset: u64 = 0;

    loop {
        let record_start = offset;
        let d = match read_count_or_eof(&mut reader, path, record_start)? {
            Some(d) => d,
            None => break,
        };
        offset += 4;
        if d <= 0 {
            return Err(format_err(
                path,
                record_start,
                format!("non-positive dimension {d}"),
            ));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(expected) if expected != d => {
                return Err(format_err(
                    path,
                    record_start,
                    format!(
                        "inconsistent dimension {d} at record {n_points} (expected {expected})"
                    ),
                ));
            }
            _ => {}
        }

        let payload = d * elem_bytes;
        let start = raw.len();
        raw.resize(start + payload, 0);
        reader.read_exact(&mut raw[start..]).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                format_err(path, record_start, "truncated record payload")
            } else {
                e.into()
            }
        })?;
        offset += payload as u64;
        n_points += 1;
    }

    let dim = dim.ok_or_else(|| format_err(path, 0, "file contains no records"))?;
    let data = match format {
        VectorFileFormat::Fvecs => {
            let floats = raw
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect();
            VectorData::F32(floats)
        }
        VectorFileFormat::Bvecs => VectorData::U8(raw),
    };
    VectorDataset::new(n_points, dim, data)
}

/// Writes a dataset back out in its native format (fvecs for f32, bvecs for
/// u8). Decoding then re-encoding reproduces the original bytes exactly.
pub fn write_vectors(path: impl AsRef<Path>, dataset: &VectorDataset) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    let dim = dataset.dim() as i32;
    match dataset.data() {
        VectorData::F32(v) => {
            for row in v.chunks_exact(dataset.dim()) {
                w.write_i32::<LittleEndian>(dim)?;
                for x in row {
                    w.write_f32::<LittleEndian>(*x)?;
                }
            }
        }
        VectorData::U8(v) => {
            for row in v.chunks_exact(dataset.dim()) {
                w.write_i32::<LittleEndian>(dim)?;
                w.write_all(row)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn native_format(kind: ElementKind) -> VectorFileFormat {
    match kind {
        ElementKind::F32 => VectorFileFormat::Fvecs,
        ElementKind::U8 => VectorFileFormat::Bvecs,
    }
}

/// Reads a label file: one line per point, comma-separated non-negative
/// integers, empty lines allowed (point with no labels).
pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelAssignment> {
    let file = File::open(path.as_ref())?;
    let reader = BufReader::new(file);
    let mut lists = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            lists.push(Vec::new());
            continue;
        }
        let mut labels = Vec::new();
        for token in trimmed.split(',') {
            let token = token.trim();
            let value: u32 = token.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("invalid label token '{token}'"),
            })?;
            labels.push(value);
        }
        lists.push(labels);
    }
    Ok(LabelAssignment::from_lists(lists))
}

/// Writes one comma-separated line per point.
pub fn write_labels(path: impl AsRef<Path>, labels: &LabelAssignment) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for list in labels.iter() {
        let line = list
            .iter()
            .map(|l| l.to_string())
            .collect::<Vec<_>>()
            .join(",");
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Writes per-query neighbor id lists in ivecs layout. All queries must share
/// the same k.
pub fn write_ground_truth(path: impl AsRef<Path>, gt: &[Vec<u32>]) -> Result<()> {
    let path = path.as_ref();
    let k = gt.first().map(|g| g.len()).unwrap_or(0);
    for (i, g) in gt.iter().enumerate() {
        if g.len() != k {
            return Err(Error::Param(format!(
                "ragged ground truth: query 0 has k={k} but query {i} has k={}",
                g.len()
            )));
        }
    }
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for g in gt {
        w.write_i32::<LittleEndian>(k as i32)?;
        for id in g {
            w.write_i32::<LittleEndian>(*id as i32)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads ivecs-style neighbor lists; enforces a uniform k (k = 0 is valid).
pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<Vec<Vec<u32>>> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let mut reader = BufReader::new(file);
    let mut out: Vec<Vec<u32>> = Vec::new();
    let mut offset = 0u64;
    let mut k: Option<usize> = None;
    loop {
        let record_start = offset;
        let len = match read_count_or_eof(&mut reader, path, record_start)? {
            Some(v) => v,
            None => break,
        };
        offset += 4;
        if len < 0 {
            return Err(format_err(path, record_start, format!("negative count {len}")));
        }
        let len = len as usize;
        match k {
            None => k = Some(len),
            Some(expected) if expected != len => {
                return Err(format_err(
                    path,
                    record_start,
                    format!(
                        "ragged k at record {}: expected {expected}, got {len}",
                        out.len()
                    ),
                ));
            }
            _ => {}
        }
        let mut ids = Vec::with_capacity(len);
        for _ in 0..len {
            let id = reader.read_i32::<LittleEndian>().map_err(|e| {
                if e.kind() == std::io::ErrorKind::UnexpectedEof {
                    format_err(path, record_start, "truncated record payload")
                } else {
                    Error::Io(e)
                }
            })?;
            offset += 4;
            ids.push(id as u32);
        }
        out.push(ids);
    }
    Ok(out)
}

/// Reads a query label expression file: one expression per line, either a
/// bare label, `a & b & ...`, or `a | b | ...`.
pub fn read_query_labels(path: impl AsRef<Path>) -> Result<Vec<crate::multilabel::LabelExpr>> {
    let file = File::open(path.as_ref())?;
    let reader = BufReader::new(file);
    let mut exprs = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let expr = crate::multilabel::LabelExpr::parse(&line).map_err(|e| Error::Parse {
            line: lineno + 1,
            msg: e.to_string(),
        })?;
        exprs.push(expr);
    }
    Ok(exprs)
}

/// Writes one label expression per line.
pub fn write_query_labels(
    path: impl AsRef<Path>,
    exprs: &[crate::multilabel::LabelExpr],
) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for e in exprs {
        writeln!(w, "{e}")?;
    }
    w.flush()?;
    Ok(())
}
