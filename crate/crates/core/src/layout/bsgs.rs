//! Block-sparse grid storage. The trailing `M` dimensions are tiled by a
//! block shape (edge blocks are zero padded); leading dimensions get
//! blocks of extent 1. Each nonempty block is one row holding its grid
//! coordinate and its dense contents.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::store::row::{ColumnValue, Row};
use crate::store::table::{Predicate, ScanStats, TableHandle};
use crate::tensor::{is_zero, CooTensor, ElementType, Shape, SliceSpec, TensorId};

pub const LAYOUT: &str = "BSGS";

#[derive(Debug, Clone, PartialEq)]
pub struct BsgsBlockRow {
    pub id: TensorId,
    pub dense_shape: Shape,
    /// Extents of the trailing dimensions only.
    pub block_shape: Vec<usize>,
    /// Full-rank grid coordinate.
    pub indices: Vec<usize>,
    /// Row-major block contents, `prod(block_shape)` long.
    pub values: Vec<f64>,
}

fn check_block_shape(shape: &Shape, block: &[usize]) -> Result<()> {
    if block.is_empty() || block.len() > shape.rank() || block.contains(&0) {
        return Err(Error::BadBlockShape(format!(
            "{block:?} does not tile the trailing dims of {shape}"
        )));
    }
    Ok(())
}

/// Block extent per dimension, padded to full rank with leading ones.
fn full_block(rank: usize, block: &[usize]) -> Vec<usize> {
    let mut b = vec![1; rank - block.len()];
    b.extend_from_slice(block);
    b
}

pub fn grid_shape(shape: &Shape, block: &[usize]) -> Result<Vec<usize>> {
    check_block_shape(shape, block)?;
    Ok(shape
        .dims()
        .iter()
        .zip(full_block(shape.rank(), block))
        .map(|(&d, b)| d.div_ceil(b))
        .collect())
}

/// The default block shape: the trailing two dims, each clipped to 32.
pub fn default_block_shape(shape: &Shape) -> Vec<usize> {
    let d = shape.dims();
    d[d.len().saturating_sub(2)..].iter().map(|&x| x.min(32)).collect()
}

pub fn encode(c: &CooTensor, block_shape: &[usize], id: &TensorId) -> Result<Vec<BsgsBlockRow>> {
    let shape = c.shape();
    check_block_shape(shape, block_shape)?;
    let full = full_block(shape.rank(), block_shape);
    let block_len: usize = block_shape.iter().product();
    let inner = Shape::new(full.clone())?;
    let mut blocks: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
    let mut within = vec![0; full.len()];
    for (idx, v) in c.iter() {
        let grid: Vec<usize> = idx.iter().zip(&full).map(|(i, b)| i / b).collect();
        for ((w, i), b) in within.iter_mut().zip(idx).zip(&full) {
            *w = i % b;
        }
        let off = inner.linear_offset(&within);
        blocks.entry(grid).or_insert_with(|| vec![0.0; block_len])[off] = v;
    }
    Ok(blocks
        .into_iter()
        .map(|(indices, values)| BsgsBlockRow {
            id: id.clone(),
            dense_shape: shape.clone(),
            block_shape: block_shape.to_vec(),
            indices,
            values,
        })
        .collect())
}

/// Rebuilds the tensor from block rows in any order; `shape_hint` covers
/// the all-zero case where no rows exist.
pub fn decode(rows: &[BsgsBlockRow], shape_hint: Option<&Shape>) -> Result<CooTensor> {
    let Some(first) = rows.first() else {
        return shape_hint
            .map(|s| CooTensor::empty(s.clone()))
            .ok_or_else(|| Error::InconsistentShape("no rows and no shape".into()));
    };
    let shape = &first.dense_shape;
    let grid = grid_shape(shape, &first.block_shape)?;
    let full = full_block(shape.rank(), &first.block_shape);
    let inner = Shape::new(full.clone())?;
    let block_len = inner.element_count();
    let mut seen = std::collections::HashSet::new();
    let mut offsets = Vec::new();
    let mut values = Vec::new();
    let mut within = vec![0; full.len()];
    let mut coord = vec![0; full.len()];
    for r in rows {
        if r.dense_shape != *shape || r.block_shape != first.block_shape {
            return Err(Error::InconsistentMeta("blocks disagree on shape".into()));
        }
        if r.values.len() != block_len {
            return Err(Error::ShapeMismatch(format!(
                "block {:?} holds {} values, expected {block_len}",
                r.indices,
                r.values.len()
            )));
        }
        if r.indices.len() != grid.len() || r.indices.iter().zip(&grid).any(|(i, g)| i >= g) {
            return Err(Error::OutOfBounds {
                index: r.indices.clone(),
                shape: grid.clone(),
            });
        }
        if !seen.insert(r.indices.clone()) {
            return Err(Error::DuplicateBlock(r.indices.clone()));
        }
        for (k, &v) in r.values.iter().enumerate() {
            if is_zero(v) {
                continue;
            }
            inner.unravel_into(k, &mut within);
            for j in 0..coord.len() {
                coord[j] = r.indices[j] * full[j] + within[j];
            }
            if !shape.contains(&coord) {
                return Err(Error::ShapeMismatch(format!("nonzero padding in block {:?}", r.indices)));
            }
            offsets.push(shape.linear_offset(&coord));
            values.push(v);
        }
    }
    let mut order: Vec<usize> = (0..offsets.len()).collect();
    order.sort_unstable_by_key(|&k| offsets[k]);
    let sorted: Vec<usize> = order.iter().map(|&k| offsets[k]).collect();
    let vals = order.iter().map(|&k| values[k]).collect();
    Ok(CooTensor::from_sorted_offsets(shape.clone(), &sorted, vals))
}

impl BsgsBlockRow {
    pub fn to_row(&self) -> Row {
        let ints = |v: &[usize]| ColumnValue::I64List(v.iter().map(|&x| x as i64).collect());
        Row(vec![
            ColumnValue::Text(self.id.to_string()),
            ColumnValue::I64List(self.dense_shape.to_i64()),
            ints(&self.block_shape),
            ints(&self.indices),
            ColumnValue::F64List(self.values.clone()),
        ])
    }

    pub fn from_row(row: &Row) -> Result<Self> {
        let ints = |i: usize| -> Result<Vec<usize>> {
            row.i64_list(i)?
                .iter()
                .map(|&x| usize::try_from(x).map_err(|_| Error::malformed(format!("negative {x}"))))
                .collect()
        };
        Ok(BsgsBlockRow {
            id: TensorId::new(row.text(0)?)?,
            dense_shape: Shape::from_i64(row.i64_list(1)?)?,
            block_shape: ints(2)?,
            indices: ints(3)?,
            values: row.f64_list(4)?.to_vec(),
        })
    }
}

pub fn to_rows(rows: &[BsgsBlockRow]) -> Vec<Row> {
    rows.iter().map(BsgsBlockRow::to_row).collect()
}

pub fn from_rows(rows: &[Row]) -> Result<Vec<BsgsBlockRow>> {
    rows.iter().map(BsgsBlockRow::from_row).collect()
}

pub fn write(
    table: &mut TableHandle,
    c: &CooTensor,
    block_shape: &[usize],
    dtype: ElementType,
    id: &TensorId,
) -> Result<()> {
    let rows = to_rows(&encode(c, block_shape, id)?);
    table.append_tensor(id, LAYOUT, c.shape(), dtype, &rows)?;
    Ok(())
}

pub fn read(table: &TableHandle, id: &TensorId) -> Result<(CooTensor, ScanStats)> {
    let entry = table
        .tensor(id)
        .ok_or_else(|| Error::UnknownId(id.to_string()))?;
    let (rows, stats) = table.scan(id)?;
    Ok((decode(&from_rows(&rows)?, Some(&entry.dense_shape))?, stats))
}

/// True when the block at `grid` covers part of `bounds`.
pub fn block_intersects(
    dims: &[usize],
    block_shape: &[usize],
    grid: &[usize],
    bounds: &[(usize, usize)],
) -> bool {
    if grid.len() != dims.len() || block_shape.is_empty() || block_shape.len() > dims.len() {
        return false;
    }
    let full = full_block(dims.len(), block_shape);
    grid.iter()
        .zip(&full)
        .zip(dims)
        .zip(bounds)
        .all(|(((&g, &b), &d), &(lo, hi))| {
            let start = g * b;
            let end = (start + b).min(d);
            start < hi && lo < end
        })
}

/// Fetches only blocks overlapping `s`; the filter runs on the stored
/// block coordinates before any values are decoded.
pub fn fetch_slice(
    table: &TableHandle,
    id: &TensorId,
    s: &SliceSpec,
) -> Result<(Vec<BsgsBlockRow>, ScanStats)> {
    let entry = table
        .tensor(id)
        .ok_or_else(|| Error::UnknownId(id.to_string()))?;
    let dims = entry.dense_shape.dims().to_vec();
    let bounds = s.bounds(&entry.dense_shape)?;
    let pred = Predicate::new(&["block_shape", "indices"], move |v| {
        let (Some(block), Some(grid)) = (v[0].as_i64_list(), v[1].as_i64_list()) else {
            return false;
        };
        let to_usize = |x: &[i64]| x.iter().map(|&i| usize::try_from(i).ok()).collect::<Option<Vec<_>>>();
        match (to_usize(block), to_usize(grid)) {
            (Some(b), Some(g)) => block_intersects(&dims, &b, &g, &bounds),
            _ => false,
        }
    });
    let (rows, stats) = table.scan_filtered(id, &pred)?;
    Ok((from_rows(&rows)?, stats))
}

/// Entries of the fetched blocks inside `s`, rebased onto the slice.
pub fn decode_slice(rows: &[BsgsBlockRow], shape: &Shape, s: &SliceSpec) -> Result<CooTensor> {
    decode(rows, Some(shape))?.slice(s)
}

pub fn read_slice(
    table: &TableHandle,
    id: &TensorId,
    s: &SliceSpec,
) -> Result<(CooTensor, ScanStats)> {
    let (rows, stats) = fetch_slice(table, id, s)?;
    let shape = &table.tensor(id).expect("checked by fetch").dense_shape;
    Ok((decode_slice(&rows, shape, s)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::object_store::MemoryStore;
    use crate::store::table::create_table;
    use crate::tensor::DimRange;
    use std::sync::Arc;

    /// Seven nonzeros in a [3, 4, 2] tensor.
    fn small() -> CooTensor {
        CooTensor::from_entries(
            Shape::new(vec![3, 4, 2]).unwrap(),
            vec![
                (vec![0, 0, 0], 1.0),
                (vec![0, 1, 0], 2.0),
                (vec![0, 0, 1], 3.0),
                (vec![1, 2, 0], 4.0),
                (vec![1, 3, 0], 5.0),
                (vec![2, 0, 1], 6.0),
                (vec![2, 1, 1], 7.0),
            ],
        )
        .unwrap()
    }

    fn id() -> TensorId {
        TensorId::new("b").unwrap()
    }

    #[test]
    fn blocks_by_hand() {
        let c = small();
        assert_eq!(grid_shape(c.shape(), &[2, 1]).unwrap(), vec![3, 2, 2]);
        let rows = encode(&c, &[2, 1], &id()).unwrap();
        let got: Vec<(Vec<usize>, Vec<f64>)> =
            rows.iter().map(|r| (r.indices.clone(), r.values.clone())).collect();
        assert_eq!(
            got,
            vec![
                (vec![0, 0, 0], vec![1.0, 2.0]),
                (vec![0, 0, 1], vec![3.0, 0.0]),
                (vec![1, 1, 0], vec![4.0, 5.0]),
                (vec![2, 0, 1], vec![6.0, 7.0]),
            ]
        );
        assert!(decode(&rows, None).unwrap().bitwise_eq(&c));
    }

    #[test]
    fn padding_and_errors() {
        let c = small();
        let rows = encode(&c, &[3, 3], &id()).unwrap();
        assert!(rows.iter().all(|r| r.values.len() == 9));
        assert!(decode(&rows, None).unwrap().bitwise_eq(&c));
        assert!(matches!(encode(&c, &[1, 1, 1, 1], &id()), Err(Error::BadBlockShape(_))));
        assert!(matches!(encode(&c, &[0, 1], &id()), Err(Error::BadBlockShape(_))));
        let mut dup = rows.clone();
        dup.push(rows[0].clone());
        assert!(matches!(decode(&dup, None), Err(Error::DuplicateBlock(_))));
        let mut short = rows.clone();
        short[0].values.pop();
        assert!(matches!(decode(&short, None), Err(Error::ShapeMismatch(_))));
        let mut pad = rows;
        pad[0].values[8] = 1.0; // [0, 2, 2] lies outside the last dim
        assert!(matches!(decode(&pad, None), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn slice_reads_only_intersecting_blocks() {
        let c = small();
        let mut table = create_table(Arc::new(MemoryStore::new()), "b", "bsgs.v1").unwrap();
        write(&mut table, &c, &[2, 1], ElementType::F64, &id()).unwrap();
        let (full, _) = read(&table, &id()).unwrap();
        assert!(full.bitwise_eq(&c));
        let s = SliceSpec::new(vec![DimRange::range(0, 2), DimRange::range(1, 3), DimRange::index(0)]);
        let (got, stats) = read_slice(&table, &id(), &s).unwrap();
        assert!(got.bitwise_eq(&c.slice(&s).unwrap()));
        // blocks (0,0,0) and (1,1,0) overlap; (0,0,1) and (2,0,1) do not
        assert_eq!(stats.rows_scanned, 2);
        assert_eq!(stats.rows_evaluated, 4);
    }
}
