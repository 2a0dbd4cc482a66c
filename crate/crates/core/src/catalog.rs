//! A directory of tables, one per layout, addressed by tensor id.
//!
//! Each layout's table lives under its own prefix (`ftsf/`, `coo/`, ...)
//! in a shared object store. Ids are unique across the whole catalog.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::layout::{self, bsgs, csf, ftsf, AnyTensor, EncodeOptions, EncodedTable, Layout};
use crate::store::object_store::{LocalFsStore, ObjectStore};
use crate::store::row::Row;
use crate::store::table::{create_table, open_table, ScanStats, TableHandle, TensorEntry, MANIFEST_NAME};
use crate::tensor::{SliceSpec, TensorId};

#[derive(Debug)]
pub struct Catalog {
    store: Arc<dyn ObjectStore>,
    tables: BTreeMap<Layout, TableHandle>,
}

/// Rows fetched for a slice, before decoding.
#[derive(Debug, Clone)]
pub enum SliceFetch {
    Ftsf(Vec<ftsf::FtsfRow>),
    Bsgs(Vec<bsgs::BsgsBlockRow>),
    /// CSF rows under the first-dimension range of the slice.
    Csf(Vec<Row>),
    /// Layouts without pushdown: every row.
    Full(Layout, Vec<Row>),
}

/// One table's contents as reported by `inspect`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableSummary {
    pub layout: Layout,
    pub schema: &'static str,
    pub size_bytes: u64,
    pub segments: usize,
    pub tensors: Vec<(String, TensorEntry)>,
}

fn prefix(layout: Layout) -> &'static str {
    layout.name()
}

impl Catalog {
    /// Opens every layout table already present in `store`.
    pub fn open(store: Arc<dyn ObjectStore>) -> Result<Self> {
        let mut tables = BTreeMap::new();
        for l in Layout::ALL {
            let key = format!("{}/{MANIFEST_NAME}", prefix(l));
            match store.get(&key) {
                Ok(_) => {
                    tables.insert(l, open_table(store.clone(), prefix(l))?);
                }
                Err(Error::NotFound(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(Catalog { store, tables })
    }

    /// Opens (creating if needed) a catalog rooted at a local directory.
    pub fn open_dir(root: impl AsRef<Path>) -> Result<Self> {
        Catalog::open(Arc::new(LocalFsStore::new(root.as_ref())?))
    }

    pub fn store(&self) -> &Arc<dyn ObjectStore> {
        &self.store
    }

    pub fn table(&self, layout: Layout) -> Option<&TableHandle> {
        self.tables.get(&layout)
    }

    fn table_mut(&mut self, layout: Layout) -> Result<&mut TableHandle> {
        if !self.tables.contains_key(&layout) {
            let t = create_table(self.store.clone(), prefix(layout), layout.schema_name())?;
            self.tables.insert(layout, t);
        }
        Ok(self.tables.get_mut(&layout).expect("just inserted"))
    }

    /// Layout holding `id`, if any.
    pub fn locate(&self, id: &TensorId) -> Option<Layout> {
        self.tables
            .iter()
            .find(|(_, t)| t.contains(id))
            .map(|(&l, _)| l)
    }

    fn located(&self, id: &TensorId) -> Result<(Layout, &TableHandle)> {
        let l = self.locate(id).ok_or_else(|| Error::UnknownId(id.to_string()))?;
        Ok((l, &self.tables[&l]))
    }

    pub fn entry(&self, id: &TensorId) -> Result<&TensorEntry> {
        let (_, t) = self.located(id)?;
        Ok(t.tensor(id).expect("located"))
    }

    /// Appends pre-encoded rows as a new tensor.
    pub fn persist(&mut self, enc: &EncodedTable) -> Result<()> {
        if let Some(l) = self.locate(&enc.id) {
            return Err(Error::AlreadyExists(format!("{} (in {l})", enc.id)));
        }
        self.table_mut(enc.layout)?.append_tensor(
            &enc.id,
            enc.layout.tag(),
            &enc.dense_shape,
            enc.dtype,
            &enc.rows,
        )?;
        Ok(())
    }

    pub fn write(&mut self, t: &AnyTensor, layout: Layout, id: &TensorId, opts: &EncodeOptions) -> Result<()> {
        if let Some(l) = self.locate(id) {
            return Err(Error::AlreadyExists(format!("{id} (in {l})")));
        }
        let enc = layout::encode(layout, t, id, opts)?;
        self.persist(&enc)
    }

    /// All rows of `id`, undecoded.
    pub fn fetch(&self, id: &TensorId) -> Result<(Layout, Vec<Row>, ScanStats)> {
        let (l, t) = self.located(id)?;
        let (rows, stats) = t.scan(id)?;
        Ok((l, rows, stats))
    }

    pub fn read(&self, id: &TensorId) -> Result<(AnyTensor, ScanStats)> {
        let (l, rows, stats) = self.fetch(id)?;
        Ok((layout::decode(l, &rows, self.entry(id)?)?, stats))
    }

    /// Fetches the rows a slice needs. FTSF and BSGS filter at the
    /// storage layer, CSF fetches the subtree under the first-dimension
    /// range, and the rest read everything.
    pub fn fetch_slice(&self, id: &TensorId, s: &SliceSpec) -> Result<(SliceFetch, ScanStats)> {
        let (l, t) = self.located(id)?;
        let shape = &t.tensor(id).expect("located").dense_shape;
        let bounds = s.bounds(shape)?;
        match l {
            Layout::Ftsf => match ftsf::fetch_slice(t, id, s) {
                Ok((rows, stats)) => Ok((SliceFetch::Ftsf(rows), stats)),
                // slices that cut through a chunk fall back to a full read
                Err(Error::MergedDimSliced(_)) => {
                    let (rows, stats) = t.scan(id)?;
                    Ok((SliceFetch::Full(l, rows), stats))
                }
                Err(e) => Err(e),
            },
            Layout::Bsgs => {
                let (rows, stats) = bsgs::fetch_slice(t, id, s)?;
                Ok((SliceFetch::Bsgs(rows), stats))
            }
            Layout::Csf => {
                let (rows, stats) = csf::fetch_slice(t, id, bounds[0].0, bounds[0].1)?;
                Ok((SliceFetch::Csf(rows), stats))
            }
            _ => {
                let (rows, stats) = t.scan(id)?;
                Ok((SliceFetch::Full(l, rows), stats))
            }
        }
    }

    /// Turns fetched rows into the slice, rebased onto its own shape.
    pub fn decode_slice(&self, id: &TensorId, fetched: &SliceFetch, s: &SliceSpec) -> Result<AnyTensor> {
        let entry = self.entry(id)?;
        let shape = &entry.dense_shape;
        Ok(match fetched {
            SliceFetch::Ftsf(rows) => ftsf::assemble_slice(rows, shape, s)?.into(),
            SliceFetch::Bsgs(rows) => bsgs::decode_slice(rows, shape, s)?.into(),
            SliceFetch::Csf(rows) => {
                let b = s.bounds(shape)?;
                csf::decode_slice(rows, b[0].0, b[0].1)?.slice(s)?.into()
            }
            SliceFetch::Full(l, rows) => match layout::decode(*l, rows, entry)? {
                AnyTensor::Dense(t) => crate::tensor::slice_dense(&t, s)?.into(),
                AnyTensor::Sparse(c) => c.slice(s)?.into(),
            },
        })
    }

    pub fn read_slice(&self, id: &TensorId, s: &SliceSpec) -> Result<(AnyTensor, ScanStats)> {
        let (fetched, stats) = self.fetch_slice(id, s)?;
        Ok((self.decode_slice(id, &fetched, s)?, stats))
    }

    pub fn inspect(&self) -> Vec<TableSummary> {
        self.tables
            .iter()
            .map(|(&l, t)| TableSummary {
                layout: l,
                schema: t.schema().name,
                size_bytes: t.table_size_bytes(),
                segments: t.manifest().segments.len(),
                tensors: t
                    .manifest()
                    .tensors
                    .iter()
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect(),
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::object_store::MemoryStore;
    use crate::tensor::{dense_to_coo, slice_dense, DenseTensor, DimRange, Shape};

    fn sample() -> DenseTensor {
        let shape = Shape::new(vec![4, 3, 5]).unwrap();
        let data = (0..60).map(|i| if i % 4 == 1 { i as f64 } else { 0.0 }).collect();
        DenseTensor::from_f64(shape, data).unwrap()
    }

    #[test]
    fn every_layout_through_one_catalog() {
        let store: Arc<dyn ObjectStore> = Arc::new(MemoryStore::new());
        let mut cat = Catalog::open(store.clone()).unwrap();
        let dense = sample();
        let specs = [
            SliceSpec::leading(3, 1, 3),
            SliceSpec::new(vec![DimRange::index(2), DimRange::range(1, 3), DimRange::range(0, 4)]),
        ];
        for l in Layout::ALL {
            let id = TensorId::new(format!("t-{l}")).unwrap();
            let src: AnyTensor = if l.is_sparse() {
                dense_to_coo(&dense).into()
            } else {
                dense.clone().into()
            };
            cat.write(&src, l, &id, &EncodeOptions::default()).unwrap();
            assert_eq!(cat.locate(&id), Some(l));
            assert!(cat.read(&id).unwrap().0.bitwise_eq(&src));
            for s in &specs {
                let want = slice_dense(&dense, s).unwrap();
                let (got, _) = cat.read_slice(&id, s).unwrap();
                let want: AnyTensor = if l.is_sparse() {
                    dense_to_coo(&want).into()
                } else {
                    want.into()
                };
                assert!(got.bitwise_eq(&want), "{l} {s:?}");
            }
        }
        let dup = TensorId::new("t-coo").unwrap();
        assert!(matches!(
            cat.write(&dense.clone().into(), Layout::Csr, &dup, &EncodeOptions::default()),
            Err(Error::AlreadyExists(_))
        ));
        let reopened = Catalog::open(store).unwrap();
        assert_eq!(reopened.inspect().len(), 6);
        assert!(matches!(
            reopened.read(&TensorId::new("missing").unwrap()),
            Err(Error::UnknownId(_))
        ));
    }
}
