//! Compressed sparse fiber: a prefix tree over sorted coordinates. Level
//! `k` holds one node per distinct prefix of length `k + 1`; `fids[k]` are
//! the node labels and `fptrs[k]` delimit each node's children in level
//! `k + 1`. Leaves line up with `values`.
//!
//! The two top levels live in a single header row. Deeper levels and the
//! values are split into chunk rows of `chunk_len` entries so a slice on
//! the first dimension only fetches the chunks under its subtree.

use crate::error::{Error, Result};
use crate::store::row::{ColumnValue, Row};
use crate::store::table::{Predicate, ScanStats, TableHandle};
use crate::tensor::{CooTensor, ElementType, Shape, TensorId};

pub const LAYOUT: &str = "CSF";
pub const DEFAULT_CHUNK_LEN: usize = 65_536;
const HEADER: &str = "header";
const VALUES: &str = "values";

#[derive(Debug, Clone, PartialEq)]
pub struct CsfTensor {
    pub dense_shape: Shape,
    /// One label array per level.
    pub fids: Vec<Vec<usize>>,
    /// One pointer array per non-leaf level, each `fids[k].len() + 1` long.
    pub fptrs: Vec<Vec<usize>>,
    pub values: Vec<f64>,
}

pub fn encode(c: &CooTensor) -> Result<CsfTensor> {
    let n = c.rank();
    if n < 2 {
        return Err(Error::RankTooLow(n));
    }
    let nnz = c.nnz();
    // first dimension where entry r differs from entry r - 1
    let first_diff: Vec<usize> = (0..nnz)
        .map(|r| {
            if r == 0 {
                return 0;
            }
            let (a, b) = (c.coord(r - 1), c.coord(r));
            a.iter().zip(b).position(|(x, y)| x != y).unwrap_or(n)
        })
        .collect();
    // level by level: a node starts at entry r when the prefix changes there
    let starts: Vec<Vec<usize>> = (0..n)
        .map(|k| (0..nnz).filter(|&r| first_diff[r] <= k).collect())
        .collect();
    let fids = starts
        .iter()
        .enumerate()
        .map(|(k, s)| s.iter().map(|&r| c.coord(r)[k]).collect())
        .collect();
    let fptrs = (0..n - 1)
        .map(|k| {
            let children = &starts[k + 1];
            let mut ptr = Vec::with_capacity(starts[k].len() + 1);
            let mut j = 0;
            for &r in &starts[k] {
                while children[j] < r {
                    j += 1;
                }
                ptr.push(j);
            }
            ptr.push(children.len());
            ptr
        })
        .collect();
    Ok(CsfTensor {
        dense_shape: c.shape().clone(),
        fids,
        fptrs,
        values: c.values().to_vec(),
    })
}

fn check_structure(t: &CsfTensor) -> Result<()> {
    let n = t.dense_shape.rank();
    if n < 2 {
        return Err(Error::RankTooLow(n));
    }
    if t.fids.len() != n || t.fptrs.len() != n - 1 {
        return Err(Error::InconsistentShape(format!(
            "{} fid levels and {} pointer levels for rank {n}",
            t.fids.len(),
            t.fptrs.len()
        )));
    }
    for k in 0..n - 1 {
        let p = &t.fptrs[k];
        let children = t.fids[k + 1].len();
        if p.len() != t.fids[k].len() + 1
            || p[0] != 0
            || p[p.len() - 1] != children
            || p.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(Error::MalformedPointers(format!("level {k}")));
        }
    }
    if t.values.len() != t.fids[n - 1].len() {
        return Err(Error::LengthMismatch {
            expected: t.fids[n - 1].len(),
            actual: t.values.len(),
        });
    }
    Ok(())
}

/// Expands the tree back to coordinates. `t` may be a subtree whose
/// pointers are rebased to its own arrays.
pub fn decode(t: &CsfTensor) -> Result<CooTensor> {
    check_structure(t)?;
    let n = t.dense_shape.rank();
    let dims = t.dense_shape.dims();
    // parent[k][j]: index in level k - 1 of node j's parent
    let mut parent: Vec<Vec<usize>> = vec![Vec::new(); n];
    for k in 0..n - 1 {
        let p = &t.fptrs[k];
        let mut up = Vec::with_capacity(t.fids[k + 1].len());
        for i in 0..t.fids[k].len() {
            up.extend(std::iter::repeat_n(i, p[i + 1] - p[i]));
        }
        parent[k + 1] = up;
    }
    let check_siblings = |k: usize, lo: usize, hi: usize| -> Result<()> {
        let seg = &t.fids[k][lo..hi];
        if seg.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedPointers(format!("level {k} labels not increasing")));
        }
        if let Some(&bad) = seg.iter().find(|&&f| f >= dims[k]) {
            return Err(Error::OutOfBounds {
                index: vec![bad],
                shape: vec![dims[k]],
            });
        }
        Ok(())
    };
    check_siblings(0, 0, t.fids[0].len())?;
    for k in 0..n - 1 {
        for w in t.fptrs[k].windows(2) {
            check_siblings(k + 1, w[0], w[1])?;
        }
    }
    let leaves = t.values.len();
    let mut indices = vec![0usize; leaves * n];
    for leaf in 0..leaves {
        let mut node = leaf;
        for k in (0..n).rev() {
            indices[leaf * n + k] = t.fids[k][node];
            if k > 0 {
                node = parent[k][node];
            }
        }
    }
    CooTensor::new(t.dense_shape.clone(), indices, t.values.clone())
}

/// The subtree of first-level nodes `[lo, hi)`, pointers rebased.
fn subtree(t: &CsfTensor, lo: usize, hi: usize) -> CsfTensor {
    let n = t.fids.len();
    let mut ranges = vec![(lo, hi)];
    for k in 0..n - 1 {
        let (a, b) = ranges[k];
        ranges.push((t.fptrs[k][a], t.fptrs[k][b]));
    }
    CsfTensor {
        dense_shape: t.dense_shape.clone(),
        fids: ranges.iter().zip(&t.fids).map(|(&(a, b), f)| f[a..b].to_vec()).collect(),
        fptrs: (0..n - 1)
            .map(|k| {
                let (a, b) = ranges[k];
                let base = ranges[k + 1].0;
                t.fptrs[k][a..=b].iter().map(|p| p - base).collect()
            })
            .collect(),
        values: t.values[ranges[n - 1].0..ranges[n - 1].1].to_vec(),
    }
}

/// First-level node range whose labels fall in `[start, end)`.
fn top_range(fid_zero: &[usize], start: usize, end: usize) -> (usize, usize) {
    (
        fid_zero.partition_point(|&f| f < start),
        fid_zero.partition_point(|&f| f < end),
    )
}

/// Entries with first coordinate in `[start, end)`, coordinates unshifted.
pub fn slice_first_dim(t: &CsfTensor, start: usize, end: usize) -> Result<CooTensor> {
    check_structure(t)?;
    let (lo, hi) = top_range(&t.fids[0], start, end);
    decode(&subtree(t, lo, hi))
}

fn i64s(v: &[usize]) -> Vec<i64> {
    v.iter().map(|&x| x as i64).collect()
}

fn usizes(v: &[i64]) -> Result<Vec<usize>> {
    v.iter()
        .map(|&x| usize::try_from(x).map_err(|_| Error::malformed(format!("negative value {x}"))))
        .collect()
}

fn fids_kind(k: usize) -> String {
    format!("fids{k}")
}

fn fptrs_kind(k: usize) -> String {
    format!("fptrs{k}")
}

/// Chunked arrays in storage order: deeper levels, then values.
fn chunked_kinds(n: usize) -> Vec<String> {
    let mut kinds = Vec::new();
    for k in 2..n {
        kinds.push(fids_kind(k));
        if k < n - 1 {
            kinds.push(fptrs_kind(k));
        }
    }
    kinds.push(VALUES.to_string());
    kinds
}

fn empty_cells(id: &TensorId, chunk_len: usize, kind: &str, seq: i64) -> Vec<ColumnValue> {
    vec![
        ColumnValue::Text(id.to_string()),
        ColumnValue::Text(LAYOUT.into()),
        ColumnValue::I64List(Vec::new()),
        ColumnValue::I64List(Vec::new()),
        ColumnValue::I64List(Vec::new()),
        ColumnValue::I64List(Vec::new()),
        ColumnValue::I64List(Vec::new()),
        ColumnValue::I64(chunk_len as i64),
        ColumnValue::Text(kind.into()),
        ColumnValue::I64(seq),
        ColumnValue::I64List(Vec::new()),
        ColumnValue::F64List(Vec::new()),
    ]
}

pub fn to_rows(t: &CsfTensor, id: &TensorId, chunk_len: usize) -> Vec<Row> {
    let chunk_len = chunk_len.max(1);
    let n = t.fids.len();
    let mut header = empty_cells(id, chunk_len, HEADER, -1);
    header[2] = ColumnValue::I64List(t.dense_shape.to_i64());
    header[3] = ColumnValue::I64List(i64s(&t.fptrs[0]));
    header[4] = ColumnValue::I64List(i64s(&t.fids[0]));
    if n > 2 {
        header[5] = ColumnValue::I64List(i64s(&t.fptrs[1]));
    }
    header[6] = ColumnValue::I64List(i64s(&t.fids[1]));
    let mut rows = vec![Row(header)];
    for kind in chunked_kinds(n) {
        if kind == VALUES {
            for (seq, part) in t.values.chunks(chunk_len).enumerate() {
                let mut cells = empty_cells(id, chunk_len, &kind, seq as i64);
                cells[11] = ColumnValue::F64List(part.to_vec());
                rows.push(Row(cells));
            }
            continue;
        }
        let arr = array_of(t, &kind);
        for (seq, part) in arr.chunks(chunk_len).enumerate() {
            let mut cells = empty_cells(id, chunk_len, &kind, seq as i64);
            cells[10] = ColumnValue::I64List(i64s(part));
            rows.push(Row(cells));
        }
    }
    rows
}

fn array_of<'a>(t: &'a CsfTensor, kind: &str) -> &'a [usize] {
    if let Some(k) = kind.strip_prefix("fids") {
        &t.fids[k.parse::<usize>().unwrap()]
    } else {
        &t.fptrs[kind.strip_prefix("fptrs").unwrap().parse::<usize>().unwrap()]
    }
}

#[derive(Debug)]
struct Header {
    dense_shape: Shape,
    fptr_zero: Vec<usize>,
    fid_zero: Vec<usize>,
    fptr_one: Vec<usize>,
    fid_one: Vec<usize>,
    chunk_len: usize,
}

impl Header {
    fn from_row(r: &Row) -> Result<Self> {
        let chunk_len = usize::try_from(r.i64(7)?)
            .ok()
            .filter(|&l| l > 0)
            .ok_or_else(|| Error::InconsistentMeta("chunk_len must be positive".into()))?;
        Ok(Header {
            dense_shape: Shape::from_i64(r.i64_list(2)?)?,
            fptr_zero: usizes(r.i64_list(3)?)?,
            fid_zero: usizes(r.i64_list(4)?)?,
            fptr_one: usizes(r.i64_list(5)?)?,
            fid_one: usizes(r.i64_list(6)?)?,
            chunk_len,
        })
    }
}

/// Contiguous runs of chunked arrays, keyed by kind: `(first entry, data)`.
#[derive(Debug, Default)]
struct Pieces {
    ints: std::collections::HashMap<String, (usize, Vec<usize>)>,
    floats: (usize, Vec<f64>),
}

/// Splits rows into the header and per-kind runs, checking each run is
/// gap-free.
fn gather(rows: &[Row]) -> Result<(Header, Pieces)> {
    let mut header = None;
    let mut chunks: Vec<(&str, i64, &Row)> = Vec::new();
    for r in rows {
        if r.text(1)? != LAYOUT {
            return Err(Error::InconsistentMeta(format!("layout {:?}", r.text(1)?)));
        }
        match r.text(8)? {
            HEADER if header.is_some() => {
                return Err(Error::InconsistentMeta("two header rows".into()))
            }
            HEADER => header = Some(Header::from_row(r)?),
            kind => chunks.push((kind, r.i64(9)?, r)),
        }
    }
    let header = header.ok_or_else(|| Error::InconsistentMeta("missing header row".into()))?;
    chunks.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    let mut pieces = Pieces::default();
    let mut i = 0;
    while i < chunks.len() {
        let kind = chunks[i].0;
        let first = chunks[i].1;
        let mut ints = Vec::new();
        let mut floats = Vec::new();
        let mut seq = first;
        while i < chunks.len() && chunks[i].0 == kind {
            let (_, s, r) = chunks[i];
            if s != seq || s < 0 {
                return Err(Error::MissingChunk(seq.max(0) as usize));
            }
            if r.i64(7)? as usize != header.chunk_len {
                return Err(Error::InconsistentMeta(format!("{kind} chunk {s} chunk_len")));
            }
            if kind == VALUES {
                floats.extend_from_slice(r.f64_list(11)?);
            } else {
                ints.extend(usizes(r.i64_list(10)?)?);
            }
            seq += 1;
            i += 1;
        }
        let offset = first as usize * header.chunk_len;
        if kind == VALUES {
            pieces.floats = (offset, floats);
        } else {
            pieces.ints.insert(kind.to_string(), (offset, ints));
        }
    }
    Ok((header, pieces))
}

impl Pieces {
    fn int_range(&self, kind: &str, a: usize, b: usize) -> Result<Vec<usize>> {
        if a == b {
            return Ok(Vec::new());
        }
        let (off, data) = self
            .ints
            .get(kind)
            .ok_or(Error::MissingChunk(a))?;
        if a < *off || b > off + data.len() {
            return Err(Error::MissingChunk(a));
        }
        Ok(data[a - off..b - off].to_vec())
    }

    fn value_range(&self, a: usize, b: usize) -> Result<Vec<f64>> {
        if a == b {
            return Ok(Vec::new());
        }
        let (off, data) = &self.floats;
        if a < *off || b > off + data.len() {
            return Err(Error::MissingChunk(a));
        }
        Ok(data[a - off..b - off].to_vec())
    }
}

/// Walks down from first-level nodes `[lo, hi)`, reading each level's
/// pointer range from `pieces`. Returns the rebased subtree.
fn assemble(h: &Header, p: &Pieces, lo: usize, hi: usize) -> Result<CsfTensor> {
    let n = h.dense_shape.rank();
    if n < 2 {
        return Err(Error::RankTooLow(n));
    }
    let top = |v: &[usize], a: usize, b: usize, what: &str| -> Result<Vec<usize>> {
        v.get(a..b)
            .map(<[usize]>::to_vec)
            .ok_or_else(|| Error::MalformedPointers(format!("{what} too short")))
    };
    let mut ranges = vec![(lo, hi)];
    let mut fids = vec![top(&h.fid_zero, lo, hi, "fid_zero")?];
    let mut raw_ptrs = vec![top(&h.fptr_zero, lo, hi + 1, "fptr_zero")?];
    for k in 1..n {
        let ptr = &raw_ptrs[k - 1];
        let (a, b) = (ptr[0], ptr[ptr.len() - 1]);
        if a > b {
            return Err(Error::MalformedPointers(format!("level {}", k - 1)));
        }
        ranges.push((a, b));
        fids.push(if k == 1 {
            top(&h.fid_one, a, b, "fid_one")?
        } else {
            p.int_range(&fids_kind(k), a, b)?
        });
        if k < n - 1 {
            raw_ptrs.push(if k == 1 {
                top(&h.fptr_one, a, b + 1, "fptr_one")?
            } else {
                p.int_range(&fptrs_kind(k), a, b + 1)?
            });
        }
    }
    let (va, vb) = ranges[n - 1];
    let fptrs = raw_ptrs
        .into_iter()
        .enumerate()
        .map(|(k, ptr)| {
            let base = ranges[k + 1].0;
            ptr.into_iter().map(|x| x - base).collect()
        })
        .collect();
    Ok(CsfTensor {
        dense_shape: h.dense_shape.clone(),
        fids,
        fptrs,
        values: p.value_range(va, vb)?,
    })
}

pub fn from_rows(rows: &[Row]) -> Result<CsfTensor> {
    let (h, p) = gather(rows)?;
    let t = assemble(&h, &p, 0, h.fid_zero.len())?;
    // a full read must consume every stored entry
    let n = t.fids.len();
    for k in 2..n {
        let stored = p.ints.get(&fids_kind(k)).map_or(0, |e| e.1.len());
        if stored != t.fids[k].len() {
            return Err(Error::LengthMismatch {
                expected: t.fids[k].len(),
                actual: stored,
            });
        }
    }
    if p.floats.1.len() != t.values.len() {
        return Err(Error::LengthMismatch {
            expected: t.values.len(),
            actual: p.floats.1.len(),
        });
    }
    Ok(t)
}

pub fn write(
    table: &mut TableHandle,
    c: &CooTensor,
    dtype: ElementType,
    id: &TensorId,
    chunk_len: usize,
) -> Result<()> {
    let rows = to_rows(&encode(c)?, id, chunk_len);
    table.append_tensor(id, LAYOUT, c.shape(), dtype, &rows)?;
    Ok(())
}

pub fn read(table: &TableHandle, id: &TensorId) -> Result<(CooTensor, ScanStats)> {
    if !table.contains(id) {
        return Err(Error::UnknownId(id.to_string()));
    }
    let (rows, stats) = table.scan(id)?;
    Ok((decode(&from_rows(&rows)?)?, stats))
}

/// Fetches the header plus exactly the chunks under first-dimension
/// labels `[start, end)`: one scan per tree level.
pub fn fetch_slice(
    table: &TableHandle,
    id: &TensorId,
    start: usize,
    end: usize,
) -> Result<(Vec<Row>, ScanStats)> {
    let entry = table
        .tensor(id)
        .ok_or_else(|| Error::UnknownId(id.to_string()))?;
    let d0 = entry.dense_shape.dims()[0];
    if start >= end || end > d0 {
        return Err(Error::RangeOutOfBounds(format!("[{start}, {end}) not within [0, {d0})")));
    }
    let (mut rows, mut stats) = table.scan_filtered(
        id,
        &Predicate::new(&["array_kind"], |v| v[0].as_text() == Some(HEADER)),
    )?;
    let h = match rows.as_slice() {
        [r] => Header::from_row(r)?,
        _ => return Err(Error::InconsistentMeta("expected one header row".into())),
    };
    let n = h.dense_shape.rank();
    let (lo, hi) = top_range(&h.fid_zero, start, end);
    let len = h.chunk_len;
    let seqs = |a: usize, b: usize| -> (i64, i64) {
        if a == b {
            (0, -1)
        } else {
            ((a / len) as i64, ((b - 1) / len) as i64)
        }
    };
    let mut fetch = |wanted: Vec<(String, (i64, i64))>| -> Result<Vec<Row>> {
        let pred = Predicate::new(&["array_kind", "chunk_seq"], move |v| {
            let (Some(kind), Some(seq)) = (v[0].as_text(), v[1].as_i64()) else {
                return false;
            };
            wanted
                .iter()
                .any(|(k, (a, b))| k == kind && (*a..=*b).contains(&seq))
        });
        let (got, s) = table.scan_filtered(id, &pred)?;
        stats.merge(s);
        Ok(got)
    };
    // level ranges known from the header
    let ptr_at = |v: &[usize], i: usize| -> Result<usize> {
        v.get(i)
            .copied()
            .ok_or_else(|| Error::MalformedPointers("pointer index out of range".into()))
    };
    let (mut a, mut b) = (ptr_at(&h.fptr_zero, lo)?, ptr_at(&h.fptr_zero, hi)?);
    if n > 2 {
        (a, b) = (ptr_at(&h.fptr_one, a)?, ptr_at(&h.fptr_one, b)?);
    }
    for k in 2..n {
        let mut wanted = vec![(fids_kind(k), seqs(a, b))];
        if k < n - 1 {
            wanted.push((fptrs_kind(k), seqs(a, b + 1)));
        }
        let got = fetch(wanted)?;
        if k < n - 1 {
            let (_, pieces) = gather_partial(&got, &h)?;
            let ptr = pieces.int_range(&fptrs_kind(k), a, b + 1)?;
            (a, b) = (ptr[0], ptr[ptr.len() - 1]);
        }
        rows.extend(got);
    }
    rows.extend(fetch(vec![(VALUES.to_string(), seqs(a, b))])?);
    Ok((rows, stats))
}

fn gather_partial(rows: &[Row], h: &Header) -> Result<(Header, Pieces)> {
    let mut with_header = Vec::with_capacity(rows.len() + 1);
    let mut cells = empty_cells(&TensorId::new("h")?, h.chunk_len, HEADER, -1);
    cells[2] = ColumnValue::I64List(h.dense_shape.to_i64());
    with_header.push(Row(cells));
    with_header.extend_from_slice(rows);
    gather(&with_header)
}

/// Rebuilds the entries with first coordinate in `[start, end)` from the
/// rows `fetch_slice` returned. Coordinates keep the tensor's own frame.
pub fn decode_slice(rows: &[Row], start: usize, end: usize) -> Result<CooTensor> {
    let (h, p) = gather(rows)?;
    let (lo, hi) = top_range(&h.fid_zero, start, end);
    decode(&assemble(&h, &p, lo, hi)?)
}

pub fn read_slice(
    table: &TableHandle,
    id: &TensorId,
    start: usize,
    end: usize,
) -> Result<(CooTensor, ScanStats)> {
    let (rows, stats) = fetch_slice(table, id, start, end)?;
    Ok((decode_slice(&rows, start, end)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::object_store::MemoryStore;
    use crate::store::table::create_table;
    use crate::tensor::SliceSpec;
    use std::sync::Arc;

    /// The four-nonzero rank-3 example used throughout the docs.
    fn small() -> CooTensor {
        CooTensor::from_entries(
            Shape::new(vec![3, 3, 3]).unwrap(),
            vec![
                (vec![0, 0, 1], 1.0),
                (vec![0, 2, 0], 2.0),
                (vec![0, 2, 2], 3.0),
                (vec![2, 1, 1], 4.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn arrays_by_hand() {
        let t = encode(&small()).unwrap();
        assert_eq!(t.fids, vec![vec![0, 2], vec![0, 2, 1], vec![1, 0, 2, 1]]);
        assert_eq!(t.fptrs, vec![vec![0, 2, 3], vec![0, 1, 3, 4]]);
        assert_eq!(t.values, vec![1.0, 2.0, 3.0, 4.0]);
        assert!(decode(&t).unwrap().bitwise_eq(&small()));
    }

    #[test]
    fn rank_two_and_rank_one() {
        let m = CooTensor::from_entries(
            Shape::new(vec![2, 3]).unwrap(),
            vec![(vec![0, 1], 1.0), (vec![1, 0], 2.0), (vec![1, 2], 3.0)],
        )
        .unwrap();
        let t = encode(&m).unwrap();
        assert_eq!(t.fptrs, vec![vec![0, 1, 3]]);
        assert_eq!(t.fids[1], vec![1, 0, 2]);
        let rows = to_rows(&t, &TensorId::new("m").unwrap(), 2);
        assert_eq!(from_rows(&rows).unwrap(), t);
        let v = CooTensor::empty(Shape::new(vec![4]).unwrap());
        assert!(matches!(encode(&v), Err(Error::RankTooLow(1))));
    }

    #[test]
    fn rank_four_chunk_rows() {
        let entries: Vec<(Vec<usize>, f64)> = (0..10)
            .map(|i| (vec![i % 3, i % 2, i, (i * 7) % 5], i as f64 + 1.0))
            .collect();
        let c = CooTensor::from_entries(Shape::new(vec![3, 2, 10, 5]).unwrap(), entries).unwrap();
        let t = encode(&c).unwrap();
        let rows = to_rows(&t, &TensorId::new("q").unwrap(), 4);
        let kinds: Vec<&str> = rows.iter().map(|r| r.text(8).unwrap()).collect();
        fn expect(kind: &str, len: usize) -> (&str, usize) {
            (kind, len.div_ceil(4))
        }
        let count = |k: &str| kinds.iter().filter(|&&x| x == k).count();
        assert_eq!(count("header"), 1);
        for (k, n) in [
            expect("fids2", t.fids[2].len()),
            expect("fptrs2", t.fptrs[2].len()),
            expect("fids3", t.fids[3].len()),
            expect("values", 10),
        ] {
            assert_eq!(count(k), n, "{k}");
        }
        assert_eq!(rows.len(), 1 + count("fids2") + count("fptrs2") + count("fids3") + count("values"));
        let mut shuffled = rows.clone();
        shuffled.reverse();
        assert!(decode(&from_rows(&shuffled).unwrap()).unwrap().bitwise_eq(&c));
    }

    #[test]
    fn empty_tensor() {
        let c = CooTensor::empty(Shape::new(vec![4, 4, 4]).unwrap());
        let t = encode(&c).unwrap();
        assert_eq!(t.fptrs, vec![vec![0], vec![0]]);
        let rows = to_rows(&t, &TensorId::new("e").unwrap(), 8);
        assert!(decode(&from_rows(&rows).unwrap()).unwrap().bitwise_eq(&c));
    }

    #[test]
    fn malformed_structure_detected() {
        let mut t = encode(&small()).unwrap();
        t.fptrs[0][1] = 3;
        assert!(matches!(decode(&t), Err(Error::MalformedPointers(_))));
        let mut t = encode(&small()).unwrap();
        t.values.pop();
        assert!(matches!(decode(&t), Err(Error::LengthMismatch { .. })));
        let mut t = encode(&small()).unwrap();
        t.fids[2].swap(1, 2);
        assert!(matches!(decode(&t), Err(Error::MalformedPointers(_))));
    }

    #[test]
    fn slice_fetches_subtree_only() {
        let mut entries = Vec::new();
        for i in 0..40 {
            for j in 0..3 {
                entries.push((vec![i, j, (i + j) % 4, (i * j) % 5], (i * 10 + j) as f64 + 0.25));
            }
        }
        let c = CooTensor::from_entries(Shape::new(vec![40, 3, 4, 5]).unwrap(), entries).unwrap();
        let mut table = create_table(Arc::new(MemoryStore::new()), "csf", "csf.v1").unwrap();
        let id = TensorId::new("s").unwrap();
        write(&mut table, &c, ElementType::F64, &id, 8).unwrap();
        let (full, all_stats) = read(&table, &id).unwrap();
        assert!(full.bitwise_eq(&c));
        for (a, b) in [(0, 1), (5, 9), (39, 40), (0, 40)] {
            let (got, stats) = read_slice(&table, &id, a, b).unwrap();
            let want = c.restrict(&SliceSpec::leading(4, a, b)).unwrap();
            assert!(got.bitwise_eq(&want), "[{a}, {b})");
            if b - a < 10 {
                assert!(stats.rows_scanned < all_stats.rows_scanned / 2);
            }
        }
        assert!(slice_first_dim(&encode(&c).unwrap(), 5, 9)
            .unwrap()
            .bitwise_eq(&c.restrict(&SliceSpec::leading(4, 5, 9)).unwrap()));
        assert!(matches!(read_slice(&table, &id, 3, 3), Err(Error::RangeOutOfBounds(_))));
    }
}
