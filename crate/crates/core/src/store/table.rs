use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::store::object_store::ObjectStore;
use crate::store::row::{schema_by_name, ColumnValue, Row, Schema};
use crate::store::segment::{write_segment, SegmentReader};
use crate::tensor::{ElementType, Shape, TensorId};

pub const MANIFEST_NAME: &str = "manifest.json";
pub const MANIFEST_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentEntry {
    pub key: String,
    pub size_bytes: u64,
    pub rows: u64,
}

/// Per-tensor record kept in the manifest, so zero-row tensors still
/// decode to the right shape.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub layout: String,
    pub dense_shape: Shape,
    pub dtype: ElementType,
    pub rows: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: String,
    pub format_version: u16,
    pub segments: Vec<SegmentEntry>,
    /// id -> keys of the segments holding its rows.
    pub id_index: BTreeMap<String, Vec<String>>,
    pub tensors: BTreeMap<String, TensorEntry>,
}

/// Counters for one scan.
///
/// `rows_scanned` counts rows materialized and returned; `rows_evaluated`
/// counts rows of the requested id on which a predicate ran.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanStats {
    pub rows_scanned: u64,
    pub rows_evaluated: u64,
    pub bytes_read: u64,
    pub segments_opened: u64,
}

impl ScanStats {
    pub fn merge(&mut self, other: ScanStats) {
        self.rows_scanned += other.rows_scanned;
        self.rows_evaluated += other.rows_evaluated;
        self.bytes_read += other.bytes_read;
        self.segments_opened += other.segments_opened;
    }
}

type RowTest = dyn Fn(&[&ColumnValue]) -> bool + Send + Sync;

/// Row condition over named columns. The closure receives the referenced
/// columns' values in the order they were named.
pub struct Predicate {
    columns: Vec<String>,
    test: Box<RowTest>,
}

impl Predicate {
    pub fn new<F>(columns: &[&str], test: F) -> Self
    where
        F: Fn(&[&ColumnValue]) -> bool + Send + Sync + 'static,
    {
        Predicate {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            test: Box::new(test),
        }
    }

    pub fn always(result: bool) -> Self {
        Predicate::new(&[], move |_| result)
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Predicate")
            .field("columns", &self.columns)
            .finish_non_exhaustive()
    }
}

fn join_key(prefix: &str, name: &str) -> String {
    if prefix.is_empty() {
        name.to_string()
    } else {
        format!("{prefix}/{name}")
    }
}

/// An append-only table of immutable segments plus a JSON manifest.
/// One writer at a time; readers see the manifest as of open.
#[derive(Debug, Clone)]
pub struct TableHandle {
    store: Arc<dyn ObjectStore>,
    prefix: String,
    schema: &'static Schema,
    manifest: Manifest,
}

pub fn create_table(
    store: Arc<dyn ObjectStore>,
    prefix: &str,
    schema: &str,
) -> Result<TableHandle> {
    let schema = schema_by_name(schema)?;
    let list_prefix = if prefix.is_empty() {
        String::new()
    } else {
        format!("{prefix}/")
    };
    if !store.list(&list_prefix)?.is_empty() {
        return Err(Error::AlreadyExists(prefix.to_string()));
    }
    let table = TableHandle {
        store,
        prefix: prefix.to_string(),
        schema,
        manifest: Manifest {
            schema: schema.name.to_string(),
            format_version: MANIFEST_VERSION,
            segments: Vec::new(),
            id_index: BTreeMap::new(),
            tensors: BTreeMap::new(),
        },
    };
    table.write_manifest()?;
    Ok(table)
}

pub fn open_table(store: Arc<dyn ObjectStore>, prefix: &str) -> Result<TableHandle> {
    let bytes = store.get(&join_key(prefix, MANIFEST_NAME))?;
    let manifest: Manifest = serde_json::from_slice(&bytes)?;
    if manifest.format_version != MANIFEST_VERSION {
        return Err(Error::UnsupportedVersion(manifest.format_version));
    }
    let schema = schema_by_name(&manifest.schema)?;
    Ok(TableHandle {
        store,
        prefix: prefix.to_string(),
        schema,
        manifest,
    })
}

impl TableHandle {
    pub fn schema(&self) -> &'static Schema {
        self.schema
    }

    pub fn prefix(&self) -> &str {
        &self.prefix
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    pub fn store(&self) -> &Arc<dyn ObjectStore> {
        &self.store
    }

    pub fn manifest_bytes(&self) -> Vec<u8> {
        serde_json::to_vec_pretty(&self.manifest).expect("manifest serializes")
    }

    fn write_manifest(&self) -> Result<()> {
        self.store
            .put(&join_key(&self.prefix, MANIFEST_NAME), &self.manifest_bytes())
    }

    pub fn tensor(&self, id: &TensorId) -> Option<&TensorEntry> {
        self.manifest.tensors.get(id.as_str())
    }

    pub fn contains(&self, id: &TensorId) -> bool {
        self.manifest.tensors.contains_key(id.as_str())
            || self.manifest.id_index.contains_key(id.as_str())
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        let mut ids: Vec<&str> = self
            .manifest
            .tensors
            .keys()
            .chain(self.manifest.id_index.keys())
            .map(String::as_str)
            .collect();
        ids.sort_unstable();
        ids.dedup();
        ids.into_iter()
    }

    /// Rows stored for `id` across all segments.
    pub fn row_count(&self, id: &TensorId) -> u64 {
        self.manifest
            .tensors
            .get(id.as_str())
            .map(|t| t.rows)
            .unwrap_or(0)
    }

    /// Writes `rows` as one new segment and records it in the manifest.
    pub fn append_rows(&mut self, rows: &[Row]) -> Result<String> {
        let bytes = write_segment(self.schema, rows)?;
        let mut ids: Vec<String> = Vec::new();
        for row in rows {
            let id = row.text(0)?;
            TensorId::new(id)?;
            if ids.last().map(String::as_str) != Some(id) && !ids.iter().any(|x| x == id) {
                ids.push(id.to_string());
            }
        }
        let seq = self.manifest.segments.len();
        let key = join_key(&self.prefix, &format!("segments/{seq:06}.seg"));
        self.store.put(&key, &bytes)?;
        self.manifest.segments.push(SegmentEntry {
            key: key.clone(),
            size_bytes: bytes.len() as u64,
            rows: rows.len() as u64,
        });
        for id in ids {
            let n = rows.iter().filter(|r| r.text(0).ok() == Some(&id)).count() as u64;
            if let Some(t) = self.manifest.tensors.get_mut(&id) {
                t.rows += n;
            }
            self.manifest.id_index.entry(id).or_default().push(key.clone());
        }
        self.write_manifest()?;
        Ok(key)
    }

    /// Registers a new tensor and appends its rows (possibly none) in one
    /// segment. Returns the segment key when rows were written.
    pub fn append_tensor(
        &mut self,
        id: &TensorId,
        layout: &str,
        dense_shape: &Shape,
        dtype: ElementType,
        rows: &[Row],
    ) -> Result<Option<String>> {
        if self.contains(id) {
            return Err(Error::AlreadyExists(id.to_string()));
        }
        if let Some(r) = rows.iter().find(|r| r.text(0).ok() != Some(id.as_str())) {
            return Err(Error::SchemaViolation(format!(
                "row id {:?} differs from tensor id {id}",
                r.get(0)
            )));
        }
        self.manifest.tensors.insert(
            id.to_string(),
            TensorEntry {
                layout: layout.to_string(),
                dense_shape: dense_shape.clone(),
                dtype,
                rows: 0,
            },
        );
        if rows.is_empty() {
            self.write_manifest()?;
            return Ok(None);
        }
        match self.append_rows(rows) {
            Ok(key) => Ok(Some(key)),
            Err(e) => {
                self.manifest.tensors.remove(id.as_str());
                Err(e)
            }
        }
    }

    pub fn scan(&self, id: &TensorId) -> Result<(Vec<Row>, ScanStats)> {
        self.scan_impl(id, None)
    }

    pub fn scan_filtered(
        &self,
        id: &TensorId,
        predicate: &Predicate,
    ) -> Result<(Vec<Row>, ScanStats)> {
        let cols = predicate
            .columns
            .iter()
            .map(|c| self.schema.column_index(c))
            .collect::<Result<Vec<_>>>()?;
        self.scan_impl(id, Some((predicate, cols)))
    }

    fn scan_impl(
        &self,
        id: &TensorId,
        predicate: Option<(&Predicate, Vec<usize>)>,
    ) -> Result<(Vec<Row>, ScanStats)> {
        let mut stats = ScanStats::default();
        let mut out = Vec::new();
        let Some(keys) = self.manifest.id_index.get(id.as_str()) else {
            return Ok((out, stats));
        };
        let ncols = self.schema.columns.len();
        for key in keys {
            let reader = SegmentReader::open(self.store.get(key)?)?;
            if reader.schema_name() != self.schema.name || reader.columns().len() != ncols {
                return Err(Error::SchemaViolation(format!(
                    "segment {key} does not match schema {}",
                    self.schema.name
                )));
            }
            stats.segments_opened += 1;
            stats.bytes_read += reader.header_len() as u64;
            let mut decoded: Vec<Option<Vec<ColumnValue>>> = vec![None; ncols];
            let mut load = |c: usize, decoded: &mut Vec<Option<Vec<ColumnValue>>>| -> Result<()> {
                if decoded[c].is_none() {
                    decoded[c] = Some(reader.decode(c)?);
                    stats.bytes_read += reader.payload_len(c) as u64;
                }
                Ok(())
            };
            load(0, &mut decoded)?;
            let mut selected: Vec<usize> = decoded[0]
                .as_ref()
                .unwrap()
                .iter()
                .enumerate()
                .filter(|(_, v)| v.as_text() == Some(id.as_str()))
                .map(|(i, _)| i)
                .collect();
            if let Some((pred, cols)) = &predicate {
                for &c in cols {
                    load(c, &mut decoded)?;
                }
                stats.rows_evaluated += selected.len() as u64;
                selected.retain(|&i| {
                    let args: Vec<&ColumnValue> = cols
                        .iter()
                        .map(|&c| &decoded[c].as_ref().unwrap()[i])
                        .collect();
                    (pred.test)(&args)
                });
            }
            if selected.is_empty() {
                continue;
            }
            for c in 0..ncols {
                load(c, &mut decoded)?;
            }
            stats.rows_scanned += selected.len() as u64;
            for i in selected {
                out.push(Row(
                    decoded.iter().map(|col| col.as_ref().unwrap()[i].clone()).collect(),
                ));
            }
        }
        Ok((out, stats))
    }

    /// Bytes of all segments plus the manifest.
    pub fn table_size_bytes(&self) -> u64 {
        self.manifest
            .segments
            .iter()
            .map(|s| s.size_bytes)
            .sum::<u64>()
            + self.manifest_bytes().len() as u64
    }
}
