//! Flattened tensor storage: a rank-N dense tensor becomes
//! `d_1 * ... * d_{N-c}` rows, each holding one trailing rank-c chunk as a
//! nested `.dten` payload. Chunk ordinals are 1-based and enumerate the
//! leading coordinates in row-major order.

use crate::container::{decode_dense, encode_dense};
use crate::error::{Error, Result};
use crate::store::row::{ColumnValue, Row};
use crate::store::table::{Predicate, ScanStats, TableHandle};
use crate::tensor::{DenseTensor, ElementType, Shape, SliceSpec, TensorData, TensorId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FtsfMeta {
    pub dimensions: Shape,
    pub chunk_dim_count: usize,
    pub dtype: ElementType,
}

impl FtsfMeta {
    pub fn dim_count(&self) -> usize {
        self.dimensions.rank()
    }

    fn chunk_shape(&self) -> Shape {
        let n = self.dim_count() - self.chunk_dim_count;
        Shape::new(self.dimensions.dims()[n..].to_vec()).expect("chunk dims are valid")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FtsfRow {
    pub id: TensorId,
    /// 1-based ordinal in the chunk array.
    pub chunk_index: usize,
    pub chunk_bytes: Vec<u8>,
    pub meta: FtsfMeta,
}

impl FtsfRow {
    pub fn to_row(&self) -> Row {
        Row(vec![
            ColumnValue::Text(self.id.to_string()),
            ColumnValue::I64(self.chunk_index as i64),
            ColumnValue::Bytes(self.chunk_bytes.clone()),
            ColumnValue::I64(self.meta.dim_count() as i64),
            ColumnValue::I64List(self.meta.dimensions.to_i64()),
            ColumnValue::I64(self.meta.chunk_dim_count as i64),
            ColumnValue::I64(self.meta.dtype.tag() as i64),
        ])
    }

    pub fn from_row(row: &Row) -> Result<Self> {
        let dimensions = Shape::from_i64(row.i64_list(4)?)?;
        if row.i64(3)? != dimensions.rank() as i64 {
            return Err(Error::InconsistentMeta("dim_count differs from dimensions".into()));
        }
        let chunk_dim_count = usize::try_from(row.i64(5)?)
            .map_err(|_| Error::InconsistentMeta("negative chunk_dim_count".into()))?;
        let dtype = u8::try_from(row.i64(6)?)
            .map_err(|_| Error::InconsistentMeta("dtype tag".into()))
            .and_then(ElementType::from_tag)?;
        let chunk_index = usize::try_from(row.i64(1)?)
            .map_err(|_| Error::InconsistentMeta("negative chunk_index".into()))?;
        Ok(FtsfRow {
            id: TensorId::new(row.text(0)?)?,
            chunk_index,
            chunk_bytes: row.bytes(2)?.to_vec(),
            meta: FtsfMeta {
                dimensions,
                chunk_dim_count,
                dtype,
            },
        })
    }
}

fn check_chunk_dim(shape: &Shape, chunk_dim: usize) -> Result<()> {
    let max = shape.rank().saturating_sub(1);
    if chunk_dim < 1 || chunk_dim > max {
        return Err(Error::BadChunkDim { chunk_dim, max });
    }
    Ok(())
}

/// Number of rows `encode` produces: the product of the leading
/// `N - chunk_dim` dimensions.
pub fn chunk_count(shape: &Shape, chunk_dim: usize) -> Result<usize> {
    check_chunk_dim(shape, chunk_dim)?;
    Ok(shape.dims()[..shape.rank() - chunk_dim].iter().product())
}

pub fn encode(t: &DenseTensor, chunk_dim: usize, id: &TensorId) -> Result<Vec<FtsfRow>> {
    let count = chunk_count(t.shape(), chunk_dim)?;
    let meta = FtsfMeta {
        dimensions: t.shape().clone(),
        chunk_dim_count: chunk_dim,
        dtype: t.dtype(),
    };
    let chunk_shape = meta.chunk_shape();
    let chunk_len = chunk_shape.element_count();
    (0..count)
        .map(|k| {
            let chunk = DenseTensor::new(chunk_shape.clone(), t.data().range(k * chunk_len, chunk_len))?;
            Ok(FtsfRow {
                id: id.clone(),
                chunk_index: k + 1,
                chunk_bytes: encode_dense(&chunk),
                meta: meta.clone(),
            })
        })
        .collect()
}

fn decode_chunk(row: &FtsfRow, chunk_shape: &Shape) -> Result<TensorData> {
    let chunk = decode_dense(&row.chunk_bytes)?;
    if chunk.shape() != chunk_shape || chunk.dtype() != row.meta.dtype {
        return Err(Error::ShapeMismatch(format!(
            "chunk {} has shape {} ({:?}), expected {} ({:?})",
            row.chunk_index,
            chunk.shape(),
            chunk.dtype(),
            chunk_shape,
            row.meta.dtype
        )));
    }
    Ok(chunk.into_data())
}

fn append_data(out: &mut Vec<u8>, data: &TensorData) {
    out.extend_from_slice(&data.to_le_bytes());
}

/// Reassembles a tensor from all of its rows, in any order.
pub fn decode(rows: &[FtsfRow]) -> Result<DenseTensor> {
    let first = rows.first().ok_or(Error::MissingChunk(1))?;
    let meta = &first.meta;
    check_chunk_dim(&meta.dimensions, meta.chunk_dim_count)?;
    if let Some(r) = rows.iter().find(|r| r.meta != *meta || r.id != first.id) {
        return Err(Error::InconsistentMeta(format!(
            "chunk {} disagrees with chunk {}",
            r.chunk_index, first.chunk_index
        )));
    }
    let count = chunk_count(&meta.dimensions, meta.chunk_dim_count)?;
    let mut slots: Vec<Option<&FtsfRow>> = vec![None; count];
    for r in rows {
        let slot = r
            .chunk_index
            .checked_sub(1)
            .and_then(|k| slots.get_mut(k))
            .ok_or_else(|| Error::InconsistentMeta(format!("chunk index {} out of range", r.chunk_index)))?;
        if slot.replace(r).is_some() {
            return Err(Error::InconsistentMeta(format!("duplicate chunk {}", r.chunk_index)));
        }
    }
    let chunk_shape = meta.chunk_shape();
    let mut bytes = Vec::with_capacity(meta.dimensions.element_count() * meta.dtype.byte_width());
    for (k, slot) in slots.iter().enumerate() {
        let row = slot.ok_or(Error::MissingChunk(k + 1))?;
        append_data(&mut bytes, &decode_chunk(row, &chunk_shape)?);
    }
    DenseTensor::new(
        meta.dimensions.clone(),
        TensorData::from_le_bytes(meta.dtype, &bytes)?,
    )
}

pub fn to_rows(rows: &[FtsfRow]) -> Vec<Row> {
    rows.iter().map(FtsfRow::to_row).collect()
}

pub fn from_rows(rows: &[Row]) -> Result<Vec<FtsfRow>> {
    rows.iter().map(FtsfRow::from_row).collect()
}

/// Leading-dimension bounds of `s`, rejecting slices of merged dimensions.
fn leading_bounds(dims: &Shape, chunk_dim: usize, s: &SliceSpec) -> Result<Vec<(usize, usize)>> {
    let bounds = s.bounds(dims)?;
    let lead = dims.rank() - chunk_dim;
    for (j, &(a, b)) in bounds.iter().enumerate().skip(lead) {
        if (a, b) != (0, dims.dims()[j]) {
            return Err(Error::MergedDimSliced(j));
        }
    }
    Ok(bounds[..lead].to_vec())
}

/// Fetches only the chunk rows whose leading coordinate lies inside `s`.
/// The chunk dimension is read off each row, so one scan suffices.
pub fn fetch_slice(
    table: &TableHandle,
    id: &TensorId,
    s: &SliceSpec,
) -> Result<(Vec<FtsfRow>, ScanStats)> {
    let entry = table
        .tensor(id)
        .ok_or_else(|| Error::UnknownId(id.to_string()))?;
    let dims = entry.dense_shape.clone();
    let bounds = s.bounds(&dims)?;
    let pred = Predicate::new(&["chunk_index", "chunk_dim_count"], move |v| {
        let (Some(k), Some(c)) = (v[0].as_i64(), v[1].as_i64()) else {
            return false;
        };
        let Some(lead) = usize::try_from(c).ok().and_then(|c| dims.rank().checked_sub(c)) else {
            return false;
        };
        let lead_dims = &dims.dims()[..lead];
        let Some(mut off) = usize::try_from(k).ok().and_then(|k| k.checked_sub(1)) else {
            return false;
        };
        // unravel the ordinal over the leading dims, last dim fastest
        for j in (0..lead).rev() {
            let i = off % lead_dims[j];
            off /= lead_dims[j];
            if i < bounds[j].0 || i >= bounds[j].1 {
                return false;
            }
        }
        off == 0
    });
    let (rows, stats) = table.scan_filtered(id, &pred)?;
    let rows = from_rows(&rows)?;
    if let Some(first) = rows.first() {
        leading_bounds(&first.meta.dimensions, first.meta.chunk_dim_count, s)?;
    }
    Ok((rows, stats))
}

/// Assembles fetched chunks into `slice_dense(full, s)`.
pub fn assemble_slice(rows: &[FtsfRow], dims: &Shape, s: &SliceSpec) -> Result<DenseTensor> {
    let out_shape = s.output_shape(dims)?;
    let Some(first) = rows.first() else {
        return Err(Error::MissingChunk(1));
    };
    let meta = &first.meta;
    let bounds = leading_bounds(dims, meta.chunk_dim_count, s)?;
    let expected: usize = bounds.iter().map(|(a, b)| b - a).product();
    let mut sorted: Vec<&FtsfRow> = rows.iter().collect();
    sorted.sort_by_key(|r| r.chunk_index);
    if sorted.len() != expected || sorted.windows(2).any(|w| w[0].chunk_index == w[1].chunk_index) {
        return Err(Error::InconsistentMeta(format!(
            "slice needs {expected} chunks, fetched {}",
            sorted.len()
        )));
    }
    let chunk_shape = meta.chunk_shape();
    let mut bytes = Vec::with_capacity(out_shape.element_count() * meta.dtype.byte_width());
    for r in sorted {
        if r.meta != *meta {
            return Err(Error::InconsistentMeta(format!("chunk {}", r.chunk_index)));
        }
        append_data(&mut bytes, &decode_chunk(r, &chunk_shape)?);
    }
    DenseTensor::new(out_shape, TensorData::from_le_bytes(meta.dtype, &bytes)?)
}

pub fn write(table: &mut TableHandle, t: &DenseTensor, chunk_dim: usize, id: &TensorId) -> Result<()> {
    let rows = to_rows(&encode(t, chunk_dim, id)?);
    table.append_tensor(id, "FTSF", t.shape(), t.dtype(), &rows)?;
    Ok(())
}

pub fn read(table: &TableHandle, id: &TensorId) -> Result<DenseTensor> {
    if table.tensor(id).is_none() {
        return Err(Error::UnknownId(id.to_string()));
    }
    let (rows, _) = table.scan(id)?;
    decode(&from_rows(&rows)?)
}

/// Slice read with chunk pushdown; `stats.rows_scanned` equals the number
/// of chunks inside the slice.
pub fn read_slice(
    table: &TableHandle,
    id: &TensorId,
    s: &SliceSpec,
) -> Result<(DenseTensor, ScanStats)> {
    let (rows, stats) = fetch_slice(table, id, s)?;
    let dims = &table.tensor(id).expect("checked by fetch").dense_shape;
    Ok((assemble_slice(&rows, dims, s)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::object_store::MemoryStore;
    use crate::store::table::create_table;
    use crate::tensor::{slice_dense, DimRange};
    use std::sync::Arc;

    fn shape(d: &[usize]) -> Shape {
        Shape::new(d.to_vec()).unwrap()
    }

    fn id() -> TensorId {
        TensorId::new("t1").unwrap()
    }

    fn ramp(s: Shape) -> DenseTensor {
        let n = s.element_count();
        DenseTensor::from_f64(s, (0..n).map(|i| i as f64 + 0.5).collect()).unwrap()
    }

    #[test]
    fn row_count_law_for_image_batch() {
        let s = shape(&[24, 3, 1024, 1024]);
        assert_eq!(chunk_count(&s, 3).unwrap(), 24);
        assert_eq!(chunk_count(&s, 2).unwrap(), 72);
        assert_eq!(chunk_count(&s, 1).unwrap(), 24 * 3 * 1024);
        assert!(matches!(chunk_count(&s, 4), Err(Error::BadChunkDim { .. })));
        assert!(matches!(chunk_count(&s, 0), Err(Error::BadChunkDim { .. })));
    }

    #[test]
    fn two_by_two_row_split() {
        let t = DenseTensor::from_f64(shape(&[2, 2]), vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let rows = encode(&t, 1, &id()).unwrap();
        assert_eq!(rows.len(), 2);
        let c0 = decode_dense(&rows[0].chunk_bytes).unwrap();
        let c1 = decode_dense(&rows[1].chunk_bytes).unwrap();
        assert_eq!(c0.data(), &TensorData::F64(vec![1.0, 2.0]));
        assert_eq!(c1.data(), &TensorData::F64(vec![3.0, 4.0]));
        assert_eq!((rows[0].chunk_index, rows[1].chunk_index), (1, 2));
    }

    #[test]
    fn rank_one_has_no_valid_chunk_dim() {
        let t = ramp(shape(&[5]));
        assert!(matches!(encode(&t, 1, &id()), Err(Error::BadChunkDim { chunk_dim: 1, max: 0 })));
    }

    #[test]
    fn decode_is_order_independent_and_detects_gaps() {
        let t = DenseTensor::new(
            shape(&[24, 3, 4, 4]),
            TensorData::U8((0..24 * 3 * 16).map(|i| (i % 251) as u8).collect()),
        )
        .unwrap();
        let mut rows = encode(&t, 3, &id()).unwrap();
        assert_eq!(rows.len(), 24);
        assert!(rows.iter().all(|r| r.meta == rows[0].meta));
        rows.reverse();
        assert!(decode(&rows).unwrap().bitwise_eq(&t));
        let missing: Vec<FtsfRow> = rows.iter().filter(|r| r.chunk_index != 3).cloned().collect();
        assert!(matches!(decode(&missing), Err(Error::MissingChunk(3))));
        let mut bad = rows.clone();
        bad[0].meta.chunk_dim_count = 2;
        assert!(matches!(decode(&bad), Err(Error::InconsistentMeta(_))));
        let mut wrong = rows.clone();
        wrong[5].chunk_bytes = encode_dense(&ramp(shape(&[3, 4, 3])).cast(ElementType::U8));
        assert!(matches!(decode(&wrong), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn concatenated_chunks_reproduce_buffer() {
        let t = ramp(shape(&[3, 2, 5]));
        let rows = encode(&t, 1, &id()).unwrap();
        let mut bytes = Vec::new();
        for r in &rows {
            bytes.extend(decode_dense(&r.chunk_bytes).unwrap().data().to_le_bytes());
        }
        assert_eq!(bytes, t.data().to_le_bytes());
    }

    #[test]
    fn slice_pushdown_fetches_only_selected_chunks() {
        let mut table = create_table(Arc::new(MemoryStore::new()), "f", "ftsf.v1").unwrap();
        let t = ramp(shape(&[24, 3, 8, 8]));
        write(&mut table, &t, 3, &id()).unwrap();
        let s = SliceSpec::leading(4, 0, 2);
        let (out, stats) = read_slice(&table, &id(), &s).unwrap();
        assert!(out.bitwise_eq(&slice_dense(&t, &s).unwrap()));
        assert_eq!(stats.rows_scanned, 2);

        let (all, stats) = read_slice(&table, &id(), &SliceSpec::full(4)).unwrap();
        assert!(all.bitwise_eq(&t));
        assert_eq!(stats.rows_scanned, 24);
        assert!(read(&table, &id()).unwrap().bitwise_eq(&t));

        let merged = SliceSpec::new(vec![
            DimRange::Full,
            DimRange::range(0, 1),
            DimRange::Full,
            DimRange::Full,
        ]);
        assert!(matches!(read_slice(&table, &id(), &merged), Err(Error::MergedDimSliced(1))));
        let unknown = TensorId::new("nope").unwrap();
        assert!(matches!(read_slice(&table, &unknown, &s), Err(Error::UnknownId(_))));
    }

    #[test]
    fn two_leading_dims_slice() {
        let mut table = create_table(Arc::new(MemoryStore::new()), "f", "ftsf.v1").unwrap();
        let t = ramp(shape(&[4, 3, 5]));
        write(&mut table, &t, 1, &id()).unwrap();
        let s = SliceSpec::new(vec![DimRange::range(1, 3), DimRange::range(2, 3), DimRange::Full]);
        let (out, stats) = read_slice(&table, &id(), &s).unwrap();
        assert!(out.bitwise_eq(&slice_dense(&t, &s).unwrap()));
        assert_eq!(stats.rows_scanned, 2);
    }
}
