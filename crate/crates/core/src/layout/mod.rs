//! The five tensor-to-row layouts and a uniform front over them.
//!
//! Each layout module converts between an in-memory tensor and rows of its
//! own schema. [`encode`] and [`decode`] dispatch on [`Layout`] so callers
//! can time the tensor/row conversion apart from segment I/O.

pub mod bsgs;
pub mod coo;
pub mod csf;
pub mod csr;
pub mod ftsf;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::store::row::Row;
use crate::store::table::TensorEntry;
use crate::tensor::{coo_to_dense, dense_to_coo, CooTensor, DenseTensor, ElementType, Shape, TensorId};

use csr::Orientation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Layout {
    Ftsf,
    Coo,
    Csr,
    Csc,
    Csf,
    Bsgs,
}

impl Layout {
    pub const ALL: [Layout; 6] = [
        Layout::Ftsf,
        Layout::Coo,
        Layout::Csr,
        Layout::Csc,
        Layout::Csf,
        Layout::Bsgs,
    ];

    /// Lower-case name used on the command line and in reports.
    pub fn name(self) -> &'static str {
        match self {
            Layout::Ftsf => "ftsf",
            Layout::Coo => "coo",
            Layout::Csr => "csr",
            Layout::Csc => "csc",
            Layout::Csf => "csf",
            Layout::Bsgs => "bsgs",
        }
    }

    /// The layout tag recorded in the table manifest.
    pub fn tag(self) -> &'static str {
        match self {
            Layout::Ftsf => "FTSF",
            Layout::Coo => coo::LAYOUT,
            Layout::Csr => Orientation::Row.layout(),
            Layout::Csc => Orientation::Col.layout(),
            Layout::Csf => csf::LAYOUT,
            Layout::Bsgs => bsgs::LAYOUT,
        }
    }

    pub fn from_tag(tag: &str) -> Result<Self> {
        Layout::ALL
            .into_iter()
            .find(|l| l.tag() == tag)
            .ok_or_else(|| Error::InconsistentMeta(format!("unknown layout tag {tag:?}")))
    }

    pub fn schema_name(self) -> &'static str {
        match self {
            Layout::Ftsf => "ftsf.v1",
            Layout::Coo => "coo.v1",
            Layout::Csr => "csr.v1",
            Layout::Csc => "csc.v1",
            Layout::Csf => "csf.v1",
            Layout::Bsgs => "bsgs.v1",
        }
    }

    pub fn is_sparse(self) -> bool {
        self != Layout::Ftsf
    }

    /// Whether the layout can hold a tensor of this rank.
    pub fn supports_rank(self, rank: usize) -> bool {
        match self {
            Layout::Ftsf | Layout::Csf => rank >= 2,
            _ => rank >= 1,
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Layout::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Parse {
                token: s.to_string(),
                position: 0,
                reason: "unknown layout".into(),
            })
    }
}

/// A tensor in either family.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyTensor {
    Dense(DenseTensor),
    Sparse(CooTensor),
}

impl AnyTensor {
    pub fn shape(&self) -> &Shape {
        match self {
            AnyTensor::Dense(t) => t.shape(),
            AnyTensor::Sparse(c) => c.shape(),
        }
    }

    pub fn to_coo(&self) -> CooTensor {
        match self {
            AnyTensor::Dense(t) => dense_to_coo(t),
            AnyTensor::Sparse(c) => c.clone(),
        }
    }

    pub fn to_dense(&self) -> Result<DenseTensor> {
        match self {
            AnyTensor::Dense(t) => Ok(t.clone()),
            AnyTensor::Sparse(c) => coo_to_dense(c),
        }
    }

    /// Element type; sparse values are always f64.
    pub fn dtype(&self) -> ElementType {
        match self {
            AnyTensor::Dense(t) => t.dtype(),
            AnyTensor::Sparse(_) => ElementType::F64,
        }
    }

    /// Exact equality: same family, shape, and bits.
    pub fn bitwise_eq(&self, other: &AnyTensor) -> bool {
        match (self, other) {
            (AnyTensor::Dense(a), AnyTensor::Dense(b)) => a.bitwise_eq(b),
            (AnyTensor::Sparse(a), AnyTensor::Sparse(b)) => a.bitwise_eq(b),
            _ => false,
        }
    }
}

impl From<DenseTensor> for AnyTensor {
    fn from(t: DenseTensor) -> Self {
        AnyTensor::Dense(t)
    }
}

impl From<CooTensor> for AnyTensor {
    fn from(c: CooTensor) -> Self {
        AnyTensor::Sparse(c)
    }
}

/// Per-layout knobs; `None` picks the default for the tensor's shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodeOptions {
    /// FTSF chunk rank; defaults to `rank - 1`.
    pub chunk_dim: Option<usize>,
    /// BSGS block extents over the trailing dims.
    pub block_shape: Option<Vec<usize>>,
    /// Entries per chunk row for CSR/CSC/CSF arrays.
    pub chunk_len: usize,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        EncodeOptions {
            chunk_dim: None,
            block_shape: None,
            chunk_len: csf::DEFAULT_CHUNK_LEN,
        }
    }
}

/// Rows of one tensor in one layout, ready to append to a table.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedTable {
    pub layout: Layout,
    pub id: TensorId,
    pub dense_shape: Shape,
    pub dtype: ElementType,
    pub rows: Vec<Row>,
}

pub fn encode(layout: Layout, t: &AnyTensor, id: &TensorId, opts: &EncodeOptions) -> Result<EncodedTable> {
    let shape = t.shape().clone();
    let rows = match layout {
        Layout::Ftsf => {
            let dense = t.to_dense()?;
            let chunk_dim = opts.chunk_dim.unwrap_or(shape.rank().saturating_sub(1));
            ftsf::to_rows(&ftsf::encode(&dense, chunk_dim, id)?)
        }
        Layout::Coo => coo::to_rows(&coo::encode(&t.to_coo(), id)),
        Layout::Csr => csr::to_rows(&csr::encode(&t.to_coo(), Orientation::Row), id, opts.chunk_len),
        Layout::Csc => csr::to_rows(&csr::encode(&t.to_coo(), Orientation::Col), id, opts.chunk_len),
        Layout::Csf => csf::to_rows(&csf::encode(&t.to_coo())?, id, opts.chunk_len),
        Layout::Bsgs => {
            let block = opts
                .block_shape
                .clone()
                .unwrap_or_else(|| bsgs::default_block_shape(&shape));
            bsgs::to_rows(&bsgs::encode(&t.to_coo(), &block, id)?)
        }
    };
    Ok(EncodedTable {
        layout,
        id: id.clone(),
        dense_shape: shape,
        dtype: t.dtype(),
        rows,
    })
}

/// Rebuilds a whole tensor from all of its rows. FTSF yields a dense
/// tensor, every other layout a sparse one.
pub fn decode(layout: Layout, rows: &[Row], entry: &TensorEntry) -> Result<AnyTensor> {
    let shape = &entry.dense_shape;
    let out: AnyTensor = match layout {
        Layout::Ftsf => ftsf::decode(&ftsf::from_rows(rows)?)?.into(),
        Layout::Coo => coo::decode(&coo::from_rows(rows)?, Some(shape))?.into(),
        Layout::Csr | Layout::Csc => csr::decode(&csr::from_rows(rows)?)?.into(),
        Layout::Csf => csf::decode(&csf::from_rows(rows)?)?.into(),
        Layout::Bsgs => bsgs::decode(&bsgs::from_rows(rows)?, Some(shape))?.into(),
    };
    if out.shape() != shape {
        return Err(Error::InconsistentShape(format!(
            "rows decode to {}, manifest says {shape}",
            out.shape()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_and_tags_roundtrip() {
        for l in Layout::ALL {
            assert_eq!(l.name().parse::<Layout>().unwrap(), l);
            assert_eq!(l.name().to_uppercase().parse::<Layout>().unwrap(), l);
            assert_eq!(Layout::from_tag(l.tag()).unwrap(), l);
            crate::store::row::schema_by_name(l.schema_name()).unwrap();
        }
        assert!("auto".parse::<Layout>().is_err());
    }

    #[test]
    fn dispatch_roundtrip_every_layout() {
        let shape = Shape::new(vec![3, 4, 5]).unwrap();
        let data: Vec<f64> = (0..60).map(|i| if i % 7 == 0 { i as f64 + 0.5 } else { 0.0 }).collect();
        let dense = DenseTensor::from_f64(shape.clone(), data).unwrap();
        let id = TensorId::new("x").unwrap();
        for l in Layout::ALL {
            let src = if l.is_sparse() {
                AnyTensor::Sparse(dense_to_coo(&dense))
            } else {
                AnyTensor::Dense(dense.clone())
            };
            let enc = encode(l, &src, &id, &EncodeOptions::default()).unwrap();
            let entry = TensorEntry {
                layout: l.tag().into(),
                dense_shape: shape.clone(),
                dtype: enc.dtype,
                rows: enc.rows.len() as u64,
            };
            let back = decode(l, &enc.rows, &entry).unwrap();
            assert!(back.bitwise_eq(&src), "{l}");
        }
    }
}
