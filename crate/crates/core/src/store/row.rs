use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ColumnType {
    Text,
    I64,
    F64,
    Bytes,
    I64List,
    F64List,
}

impl ColumnType {
    pub fn tag(self) -> u8 {
        match self {
            ColumnType::Text => 0,
            ColumnType::I64 => 1,
            ColumnType::F64 => 2,
            ColumnType::Bytes => 3,
            ColumnType::I64List => 4,
            ColumnType::F64List => 5,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            0 => ColumnType::Text,
            1 => ColumnType::I64,
            2 => ColumnType::F64,
            3 => ColumnType::Bytes,
            4 => ColumnType::I64List,
            5 => ColumnType::F64List,
            other => return Err(Error::malformed(format!("unknown column type tag {other}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ColumnValue {
    Text(String),
    I64(i64),
    F64(f64),
    Bytes(Vec<u8>),
    I64List(Vec<i64>),
    F64List(Vec<f64>),
}

impl ColumnValue {
    pub fn column_type(&self) -> ColumnType {
        match self {
            ColumnValue::Text(_) => ColumnType::Text,
            ColumnValue::I64(_) => ColumnType::I64,
            ColumnValue::F64(_) => ColumnType::F64,
            ColumnValue::Bytes(_) => ColumnType::Bytes,
            ColumnValue::I64List(_) => ColumnType::I64List,
            ColumnValue::F64List(_) => ColumnType::F64List,
        }
    }

    pub fn as_text(&self) -> Option<&str> {
        match self {
            ColumnValue::Text(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_i64(&self) -> Option<i64> {
        match self {
            ColumnValue::I64(v) => Some(*v),
            _ => None,
        }
    }

    pub fn as_i64_list(&self) -> Option<&[i64]> {
        match self {
            ColumnValue::I64List(v) => Some(v),
            _ => None,
        }
    }

    /// Bitwise equality; `PartialEq` follows IEEE semantics for floats.
    pub fn bitwise_eq(&self, other: &ColumnValue) -> bool {
        match (self, other) {
            (ColumnValue::F64(a), ColumnValue::F64(b)) => a.to_bits() == b.to_bits(),
            (ColumnValue::F64List(a), ColumnValue::F64List(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => self == other,
        }
    }
}

/// One table record; values are positional, aligned with the schema's columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Row(pub Vec<ColumnValue>);

impl Row {
    pub fn get(&self, i: usize) -> &ColumnValue {
        &self.0[i]
    }

    pub fn text(&self, i: usize) -> Result<&str> {
        match self.0.get(i) {
            Some(ColumnValue::Text(s)) => Ok(s),
            _ => Err(type_error(i, ColumnType::Text)),
        }
    }

    pub fn i64(&self, i: usize) -> Result<i64> {
        match self.0.get(i) {
            Some(ColumnValue::I64(v)) => Ok(*v),
            _ => Err(type_error(i, ColumnType::I64)),
        }
    }

    pub fn f64(&self, i: usize) -> Result<f64> {
        match self.0.get(i) {
            Some(ColumnValue::F64(v)) => Ok(*v),
            _ => Err(type_error(i, ColumnType::F64)),
        }
    }

    pub fn bytes(&self, i: usize) -> Result<&[u8]> {
        match self.0.get(i) {
            Some(ColumnValue::Bytes(v)) => Ok(v),
            _ => Err(type_error(i, ColumnType::Bytes)),
        }
    }

    pub fn i64_list(&self, i: usize) -> Result<&[i64]> {
        match self.0.get(i) {
            Some(ColumnValue::I64List(v)) => Ok(v),
            _ => Err(type_error(i, ColumnType::I64List)),
        }
    }

    pub fn f64_list(&self, i: usize) -> Result<&[f64]> {
        match self.0.get(i) {
            Some(ColumnValue::F64List(v)) => Ok(v),
            _ => Err(type_error(i, ColumnType::F64List)),
        }
    }

    pub fn bitwise_eq(&self, other: &Row) -> bool {
        self.0.len() == other.0.len() && self.0.iter().zip(&other.0).all(|(a, b)| a.bitwise_eq(b))
    }
}

fn type_error(i: usize, ty: ColumnType) -> Error {
    Error::SchemaViolation(format!("column {i} is not {ty:?}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColumnDef {
    pub name: &'static str,
    pub ty: ColumnType,
}

const fn col(name: &'static str, ty: ColumnType) -> ColumnDef {
    ColumnDef { name, ty }
}

/// Named row schema. Column 0 is always the text `id` column.
#[derive(Debug, PartialEq, Eq)]
pub struct Schema {
    pub name: &'static str,
    pub columns: &'static [ColumnDef],
}

impl Schema {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn validate(&self, row: &Row) -> Result<()> {
        if row.0.len() != self.columns.len() {
            return Err(Error::SchemaViolation(format!(
                "{}: row has {} columns, schema has {}",
                self.name,
                row.0.len(),
                self.columns.len()
            )));
        }
        for (v, c) in row.0.iter().zip(self.columns) {
            if v.column_type() != c.ty {
                return Err(Error::SchemaViolation(format!(
                    "{}: column {:?} expects {:?}, got {:?}",
                    self.name,
                    c.name,
                    c.ty,
                    v.column_type()
                )));
            }
        }
        Ok(())
    }
}

use ColumnType::*;

pub static FTSF_V1: Schema = Schema {
    name: "ftsf.v1",
    columns: &[
        col("id", Text),
        col("chunk_index", I64),
        col("chunk", Bytes),
        col("dim_count", I64),
        col("dimensions", I64List),
        col("chunk_dim_count", I64),
        col("dtype", I64),
    ],
};

pub static COO_V1: Schema = Schema {
    name: "coo.v1",
    columns: &[
        col("id", Text),
        col("layout", Text),
        col("dense_shape", I64List),
        col("indices", I64List),
        col("value", F64),
    ],
};

const CSR_COLUMNS: &[ColumnDef] = &[
    col("id", Text),
    col("layout", Text),
    col("dense_shape", I64List),
    col("flattened_shape", I64List),
    col("pointer_array", I64List),
    col("chunk_seq", I64),
    col("minor_indices", I64List),
    col("values", F64List),
];

pub static CSR_V1: Schema = Schema {
    name: "csr.v1",
    columns: CSR_COLUMNS,
};

pub static CSC_V1: Schema = Schema {
    name: "csc.v1",
    columns: CSR_COLUMNS,
};

pub static CSF_V1: Schema = Schema {
    name: "csf.v1",
    columns: &[
        col("id", Text),
        col("layout", Text),
        col("dense_shape", I64List),
        col("fptr_zero", I64List),
        col("fid_zero", I64List),
        col("fptr_one", I64List),
        col("fid_one", I64List),
        col("chunk_len", I64),
        col("array_kind", Text),
        col("chunk_seq", I64),
        col("i64_payload", I64List),
        col("f64_payload", F64List),
    ],
};

pub static BSGS_V1: Schema = Schema {
    name: "bsgs.v1",
    columns: &[
        col("id", Text),
        col("dense_shape", I64List),
        col("block_shape", I64List),
        col("indices", I64List),
        col("values", F64List),
    ],
};

pub static SCHEMAS: [&Schema; 6] = [&FTSF_V1, &COO_V1, &CSR_V1, &CSC_V1, &CSF_V1, &BSGS_V1];

pub fn schema_by_name(name: &str) -> Result<&'static Schema> {
    SCHEMAS
        .iter()
        .copied()
        .find(|s| s.name == name)
        .ok_or_else(|| Error::SchemaViolation(format!("unknown schema {name:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_schema_starts_with_text_id() {
        for s in SCHEMAS {
            assert_eq!(s.columns[0], col("id", Text), "{}", s.name);
            assert!(std::ptr::eq(schema_by_name(s.name).unwrap(), s));
        }
        assert!(schema_by_name("parquet").is_err());
    }

    #[test]
    fn validate_reports_arity_and_type() {
        let row = Row(vec![
            ColumnValue::Text("a".into()),
            ColumnValue::Text("COO".into()),
            ColumnValue::I64List(vec![2]),
            ColumnValue::I64List(vec![1]),
        ]);
        assert!(matches!(COO_V1.validate(&row), Err(Error::SchemaViolation(_))));
        let mut row = row;
        row.0.push(ColumnValue::I64(1));
        assert!(matches!(COO_V1.validate(&row), Err(Error::SchemaViolation(_))));
        row.0[4] = ColumnValue::F64(1.0);
        COO_V1.validate(&row).unwrap();
        assert!(matches!(COO_V1.column_index("nope"), Err(Error::UnknownColumn(_))));
    }
}
