//! Persistence: an append-only table of columnar segments over an
//! object store.

pub mod object_store;
pub mod row;
pub mod segment;
pub mod table;

pub use object_store::{LocalFsStore, MemoryStore, ObjectStore};
pub use row::{schema_by_name, ColumnDef, ColumnType, ColumnValue, Row, Schema};
pub use segment::{read_segment, write_segment, Encoding, SegmentReader};
pub use table::{
    create_table, open_table, Manifest, Predicate, ScanStats, SegmentEntry, TableHandle,
    TensorEntry,
};
