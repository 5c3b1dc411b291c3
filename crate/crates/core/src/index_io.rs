//! Versioned binary index container: header, vectors, graph partition, scan
//! partition, predicate table. All integers little-endian fixed width.
//! Posting lists and the partition are rebuilt from the predicate table on
//! load and cross-checked against the stored label lists.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::dataset::{ElementKind, VectorData, VectorDataset};
use crate::distance::Metric;
use crate::engine::{FilteredIndex, IndexConfig};
use crate::error::{Error, Result};
use crate::hs_graph::HsIndex;
use crate::ls_scan::LsIndex;
use crate::predicate::PredicateTable;

const MAGIC: &[u8; 4] = b"FVIX";
const VERSION: u32 = 1;

pub fn save_index(index: &FilteredIndex, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    write_index(index, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_index(path: impl AsRef<Path>) -> Result<FilteredIndex> {
    let file = File::open(path)?;
    let mut r = BufReader::new(file);
    read_index(&mut r)
}

pub fn write_index<W: Write>(index: &FilteredIndex, w: &mut W) -> Result<()> {
    let cfg = index.config();
    let vectors = index.vectors();
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(VERSION)?;
    w.write_u8(match vectors.element_kind() {
        ElementKind::F32 => 0,
        ElementKind::U8 => 1,
    })?;
    w.write_u8(cfg.metric.to_tag())?;
    w.write_u32::<LittleEndian>(cfg.threshold)?;
    w.write_u32::<LittleEndian>(cfg.graph_degree)?;
    w.write_u32::<LittleEndian>(cfg.group_width)?;
    w.write_u32::<LittleEndian>(index.ls().chunk_elems())?;
    w.write_u32::<LittleEndian>(vectors.dim() as u32)?;
    w.write_u64::<LittleEndian>(vectors.n_points() as u64)?;

    write_elements(w, vectors.data())?;

    // Graph partition.
    let hs = index.hs();
    w.write_u32::<LittleEndian>(hs.n_labels() as u32)?;
    write_u32s(w, hs.labels())?;
    write_u32s(w, hs.sizes())?;
    write_u64s(w, hs.offsets())?;
    w.write_u64::<LittleEndian>(hs.mapping().len() as u64)?;
    write_u32s(w, hs.mapping())?;
    w.write_u64::<LittleEndian>(hs.graph().len() as u64)?;
    write_u32s(w, hs.graph())?;

    // Scan partition.
    let ls = index.ls();
    w.write_u32::<LittleEndian>(ls.n_labels() as u32)?;
    write_u32s(w, ls.labels())?;
    write_u32s(w, ls.sizes())?;
    write_u64s(w, ls.slot_offsets())?;
    w.write_u64::<LittleEndian>(ls.mapping().len() as u64)?;
    write_u32s(w, ls.mapping())?;
    w.write_u64::<LittleEndian>(ls.blocks().len() as u64)?;
    write_elements(w, ls.blocks())?;

    // Predicate table.
    let pred = index.predicate_table();
    w.write_u64::<LittleEndian>(pred.n_points() as u64)?;
    write_u32s(w, pred.counts())?;
    w.write_u64::<LittleEndian>(pred.global_labels().len() as u64)?;
    write_u32s(w, pred.global_labels())?;

    Ok(())
}

pub fn read_index<R: Read>(r: &mut R) -> Result<FilteredIndex> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::CorruptIndex("bad magic".to_string()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != VERSION {
        return Err(Error::CorruptIndex(format!(
            "unsupported version {version} (expected {VERSION})"
        )));
    }
    let kind = match r.read_u8()? {
        0 => ElementKind::F32,
        1 => ElementKind::U8,
        t => return Err(Error::CorruptIndex(format!("unknown element kind {t}"))),
    };
    let metric = Metric::from_tag(r.read_u8()?)?;
    let threshold = r.read_u32::<LittleEndian>()?;
    let graph_degree = r.read_u32::<LittleEndian>()?;
    let group_width = r.read_u32::<LittleEndian>()?;
    let chunk_elems = r.read_u32::<LittleEndian>()?;
    let dim = r.read_u32::<LittleEndian>()? as usize;
    let n_points = r.read_u64::<LittleEndian>()? as usize;

    let data = read_elements(r, kind, n_points * dim)?;
    let vectors = VectorDataset::new(n_points, dim, data)?;

    let n_hs = r.read_u32::<LittleEndian>()? as usize;
    let hs_labels = read_u32s(r, n_hs)?;
    let hs_sizes = read_u32s(r, n_hs)?;
    let hs_offsets = read_u64s(r, n_hs)?;
    let map_len = r.read_u64::<LittleEndian>()? as usize;
    let hs_mapping = read_u32s(r, map_len)?;
    let graph_len = r.read_u64::<LittleEndian>()? as usize;
    let hs_graph = read_u32s(r, graph_len)?;
    let hs = HsIndex::from_parts(hs_labels, hs_sizes, hs_offsets, hs_graph, hs_mapping, graph_degree)?;

    let n_ls = r.read_u32::<LittleEndian>()? as usize;
    let ls_labels = read_u32s(r, n_ls)?;
    let ls_sizes = read_u32s(r, n_ls)?;
    let ls_slot_offsets = read_u64s(r, n_ls)?;
    let ls_map_len = r.read_u64::<LittleEndian>()? as usize;
    let ls_mapping = read_u32s(r, ls_map_len)?;
    let block_elems = r.read_u64::<LittleEndian>()? as usize;
    let blocks = read_elements(r, kind, block_elems)?;
    let ls = LsIndex::from_parts(
        ls_labels,
        ls_sizes,
        ls_slot_offsets,
        blocks,
        ls_mapping,
        dim,
        group_width,
        chunk_elems,
    )?;

    let pred_points = r.read_u64::<LittleEndian>()? as usize;
    if pred_points != n_points {
        return Err(Error::CorruptIndex(
            "predicate table point count mismatch".to_string(),
        ));
    }
    let counts = read_u32s(r, pred_points)?;
    let mut offsets = Vec::with_capacity(pred_points);
    let mut next = 0u64;
    for &c in &counts {
        offsets.push(next);
        next += c as u64;
    }
    let global_len = r.read_u64::<LittleEndian>()? as usize;
    let global = read_u32s(r, global_len)?;
    let predicate = PredicateTable::from_parts(global, offsets, counts)?;

    let config = IndexConfig {
        threshold,
        graph_degree,
        group_width,
        metric,
    };
    FilteredIndex::from_parts(config, vectors, hs, ls, predicate)
}

fn write_u32s<W: Write>(w: &mut W, values: &[u32]) -> Result<()> {
    for v in values {
        w.write_u32::<LittleEndian>(*v)?;
    }
    Ok(())
}

fn write_u64s<W: Write>(w: &mut W, values: &[u64]) -> Result<()> {
    for v in values {
        w.write_u64::<LittleEndian>(*v)?;
    }
    Ok(())
}

fn read_u32s<R: Read>(r: &mut R, n: usize) -> Result<Vec<u32>> {
    let mut out = vec![0u32; n];
    r.read_u32_into::<LittleEndian>(&mut out)?;
    Ok(out)
}

fn read_u64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<u64>> {
    let mut out = vec![0u64; n];
    r.read_u64_into::<LittleEndian>(&mut out)?;
    Ok(out)
}

fn write_elements<W: Write>(w: &mut W, data: &VectorData) -> Result<()> {
    match data {
        VectorData::F32(v) => {
            for x in v {
                w.write_f32::<LittleEndian>(*x)?;
            }
        }
        VectorData::U8(v) => w.write_all(v)?,
    }
    Ok(())
}

fn read_elements<R: Read>(r: &mut R, kind: ElementKind, n: usize) -> Result<VectorData> {
    match kind {
        ElementKind::F32 => {
            let mut out = vec![0f32; n];
            r.read_f32_into::<LittleEndian>(&mut out)?;
            Ok(VectorData::F32(out))
        }
        ElementKind::U8 => {
            let mut out = vec![0u8; n];
            r.read_exact(&mut out)?;
            Ok(VectorData::U8(out))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hs_graph::SearchParams;
    use crate::multilabel::{AndPolicy, LabelExpr};
    use crate::synthetic::{gen_uniform_vectors, gen_zipf_labels};

    #[test]
    fn roundtrip_is_bit_exact_and_replays_searches() {
        let n = 1_500;
        let data = gen_uniform_vectors(n, 6, 3);
        let labels = gen_zipf_labels(n, 10, 2.0, 1.0, 4).unwrap();
        let idx = FilteredIndex::build(
            data,
            &labels,
            IndexConfig {
                threshold: 200,
                graph_degree: 8,
                group_width: 32,
                metric: Metric::SquaredL2,
            },
        )
        .unwrap();

        let mut bytes = Vec::new();
        write_index(&idx, &mut bytes).unwrap();
        let loaded = read_index(&mut bytes.as_slice()).unwrap();

        let mut bytes2 = Vec::new();
        write_index(&loaded, &mut bytes2).unwrap();
        assert_eq!(bytes, bytes2, "re-serialization must be bit-exact");

        // Replay: identical results on a fixed query set.
        let queries = gen_uniform_vectors(10, 6, 9);
        let qm = queries.to_f32_matrix();
        let params = SearchParams { itopk: 16, k: 5, seed: 11, ..Default::default() };
        let all_labels: Vec<u32> = idx.posting().labels().collect();
        for (i, q) in qm.chunks_exact(6).enumerate() {
            let expr = LabelExpr::single(all_labels[i % all_labels.len()]);
            let a = idx.search(q, &expr, AndPolicy::Greedy, &params).unwrap();
            let b = loaded.search(q, &expr, AndPolicy::Greedy, &params).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn corrupt_magic_is_rejected() {
        let mut bytes = b"NOPE".to_vec();
        bytes.extend_from_slice(&[0u8; 64]);
        assert!(matches!(
            read_index(&mut bytes.as_slice()),
            Err(Error::CorruptIndex(_))
        ));
    }

    #[test]
    fn u8_dataset_roundtrips() {
        let data = VectorDataset::from_u8(64, 8, (0..512).map(|i| (i % 251) as u8).collect())
            .unwrap();
        let labels = gen_zipf_labels(64, 6, 2.0, 1.0, 8).unwrap();
        let idx = FilteredIndex::build(
            data,
            &labels,
            IndexConfig {
                threshold: 20,
                graph_degree: 4,
                group_width: 32,
                metric: Metric::SquaredL2,
            },
        )
        .unwrap();
        let mut bytes = Vec::new();
        write_index(&idx, &mut bytes).unwrap();
        let loaded = read_index(&mut bytes.as_slice()).unwrap();
        assert_eq!(loaded.vectors(), idx.vectors());
        assert_eq!(loaded.ls().chunk_elems(), 16);
    }
}
