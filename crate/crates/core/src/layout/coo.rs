//! One row per nonzero: the full coordinate plus the value.

use crate::error::{Error, Result};
use crate::store::row::{ColumnValue, Row};
use crate::store::table::{ScanStats, TableHandle};
use crate::tensor::{CooTensor, ElementType, Shape, TensorId};

pub const LAYOUT: &str = "COO";

#[derive(Debug, Clone, PartialEq)]
pub struct CooRow {
    pub id: TensorId,
    pub dense_shape: Shape,
    pub indices: Vec<usize>,
    pub value: f64,
}

impl CooRow {
    pub fn to_row(&self) -> Row {
        Row(vec![
            ColumnValue::Text(self.id.to_string()),
            ColumnValue::Text(LAYOUT.into()),
            ColumnValue::I64List(self.dense_shape.to_i64()),
            ColumnValue::I64List(self.indices.iter().map(|&i| i as i64).collect()),
            ColumnValue::F64(self.value),
        ])
    }

    pub fn from_row(row: &Row) -> Result<Self> {
        if row.text(1)? != LAYOUT {
            return Err(Error::InconsistentMeta(format!("layout {:?} in a COO table", row.text(1)?)));
        }
        let indices = row
            .i64_list(3)?
            .iter()
            .map(|&i| usize::try_from(i).map_err(|_| Error::malformed(format!("negative index {i}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(CooRow {
            id: TensorId::new(row.text(0)?)?,
            dense_shape: Shape::from_i64(row.i64_list(2)?)?,
            indices,
            value: row.f64(4)?,
        })
    }
}

pub fn encode(c: &CooTensor, id: &TensorId) -> Vec<CooRow> {
    c.iter()
        .map(|(idx, v)| CooRow {
            id: id.clone(),
            dense_shape: c.shape().clone(),
            indices: idx.to_vec(),
            value: v,
        })
        .collect()
}

/// Rebuilds the tensor from rows in any order. An all-zero tensor has no
/// rows, so its shape comes from `shape_hint`.
pub fn decode(rows: &[CooRow], shape_hint: Option<&Shape>) -> Result<CooTensor> {
    let shape = match (rows.first(), shape_hint) {
        (Some(r), _) => r.dense_shape.clone(),
        (None, Some(s)) => s.clone(),
        (None, None) => return Err(Error::InconsistentShape("no rows and no shape".into())),
    };
    if let Some(h) = shape_hint {
        if *h != shape {
            return Err(Error::InconsistentShape(format!("rows say {shape}, manifest says {h}")));
        }
    }
    let mut indices = Vec::with_capacity(rows.len() * shape.rank());
    let mut values = Vec::with_capacity(rows.len());
    for r in rows {
        if r.dense_shape != shape {
            return Err(Error::InconsistentShape(format!("{} vs {}", r.dense_shape, shape)));
        }
        if r.indices.len() != shape.rank() {
            return Err(Error::OutOfBounds {
                index: r.indices.clone(),
                shape: shape.dims().to_vec(),
            });
        }
        indices.extend_from_slice(&r.indices);
        values.push(r.value);
    }
    CooTensor::new(shape, indices, values)
}

pub fn to_rows(rows: &[CooRow]) -> Vec<Row> {
    rows.iter().map(CooRow::to_row).collect()
}

pub fn from_rows(rows: &[Row]) -> Result<Vec<CooRow>> {
    rows.iter().map(CooRow::from_row).collect()
}

pub fn write(table: &mut TableHandle, c: &CooTensor, dtype: ElementType, id: &TensorId) -> Result<()> {
    table.append_tensor(id, LAYOUT, c.shape(), dtype, &to_rows(&encode(c, id)))?;
    Ok(())
}

pub fn read(table: &TableHandle, id: &TensorId) -> Result<(CooTensor, ScanStats)> {
    let entry = table
        .tensor(id)
        .ok_or_else(|| Error::UnknownId(id.to_string()))?;
    let (rows, stats) = table.scan(id)?;
    Ok((decode(&from_rows(&rows)?, Some(&entry.dense_shape))?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::object_store::MemoryStore;
    use crate::store::table::create_table;
    use std::sync::Arc;

    fn id() -> TensorId {
        TensorId::new("c").unwrap()
    }

    #[test]
    fn one_row_per_nonzero_any_order() {
        let shape = Shape::new(vec![3, 4]).unwrap();
        let c = CooTensor::from_entries(
            shape.clone(),
            vec![(vec![2, 3], 1.5), (vec![0, 1], -2.0), (vec![1, 0], 7.0)],
        )
        .unwrap();
        let mut rows = encode(&c, &id());
        assert_eq!(rows.len(), 3);
        rows.reverse();
        assert!(decode(&rows, None).unwrap().bitwise_eq(&c));
        let mut dup = rows.clone();
        dup.push(rows[0].clone());
        assert!(matches!(decode(&dup, None), Err(Error::DuplicateCoordinate(_))));
        let mut off = rows.clone();
        off[0].dense_shape = Shape::new(vec![3, 5]).unwrap();
        assert!(matches!(decode(&off, None), Err(Error::InconsistentShape(_))));
        let mut oob = rows;
        oob[1].indices = vec![3, 0];
        assert!(matches!(decode(&oob, None), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn empty_tensor_uses_manifest_shape() {
        let mut table = create_table(Arc::new(MemoryStore::new()), "c", "coo.v1").unwrap();
        let shape = Shape::new(vec![5, 5, 5]).unwrap();
        let c = CooTensor::empty(shape.clone());
        write(&mut table, &c, ElementType::F64, &id()).unwrap();
        let (back, stats) = read(&table, &id()).unwrap();
        assert!(back.bitwise_eq(&c));
        assert_eq!(stats.rows_scanned, 0);
    }

    #[test]
    fn negative_zero_is_stored() {
        let shape = Shape::new(vec![2]).unwrap();
        let c = CooTensor::from_entries(shape, vec![(vec![1], -0.0)]).unwrap();
        assert_eq!(c.nnz(), 1);
        let back = decode(&from_rows(&to_rows(&encode(&c, &id()))).unwrap(), None).unwrap();
        assert_eq!(back.values()[0].to_bits(), (-0.0f64).to_bits());
    }
}
