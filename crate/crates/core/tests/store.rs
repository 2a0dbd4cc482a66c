use std::sync::Arc;

use dtstore::catalog::Catalog;
use dtstore::layout::{coo, EncodeOptions, Layout};
use dtstore::store::{
    create_table, open_table, schema_by_name, Encoding, LocalFsStore, MemoryStore, ObjectStore,
    Predicate, SegmentReader,
};
use dtstore::{dense_to_coo, DenseTensor, Error, Shape, TensorId};

fn sample(seed: u64) -> DenseTensor {
    let shape = Shape::new(vec![9, 7, 5]).unwrap();
    let data = (0..shape.element_count() as u64)
        .map(|i| if (i * 7 + seed).is_multiple_of(5) { (i % 13) as f64 + 0.5 } else { 0.0 })
        .collect();
    DenseTensor::from_f64(shape, data).unwrap()
}

fn build(root: &std::path::Path) {
    let mut cat = Catalog::open_dir(root).unwrap();
    for (k, l) in Layout::ALL.into_iter().enumerate() {
        let t = sample(k as u64);
        let src = if l.is_sparse() { dense_to_coo(&t).into() } else { t.into() };
        let id = TensorId::new(format!("x{k}")).unwrap();
        cat.write(&src, l, &id, &EncodeOptions { chunk_len: 16, ..Default::default() }).unwrap();
    }
}

fn files(root: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let store = LocalFsStore::new(root).unwrap();
    let keys = store.list("").unwrap();
    keys.into_iter().map(|k| (k.clone(), store.get(&k).unwrap())).collect()
}

#[test]
fn local_builds_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    build(a.path());
    build(b.path());
    let (fa, fb) = (files(a.path()), files(b.path()));
    assert_eq!(fa.len(), 12, "a manifest and one segment per layout");
    assert_eq!(fa, fb);
}

#[test]
fn reopen_sees_every_tensor() {
    let dir = tempfile::tempdir().unwrap();
    build(dir.path());
    let cat = Catalog::open_dir(dir.path()).unwrap();
    for (k, l) in Layout::ALL.into_iter().enumerate() {
        let id = TensorId::new(format!("x{k}")).unwrap();
        assert_eq!(cat.locate(&id), Some(l));
        let (t, stats) = cat.read(&id).unwrap();
        assert!(t.to_dense().unwrap().bitwise_eq(&sample(k as u64)));
        assert_eq!(stats.rows_scanned, cat.table(l).unwrap().row_count(&id));
    }
}

#[test]
fn flipped_payload_byte_is_caught() {
    let store = Arc::new(MemoryStore::new());
    let mut table = create_table(store.clone(), "coo", "coo.v1").unwrap();
    let c = dense_to_coo(&sample(1));
    let id = TensorId::new("x").unwrap();
    let rows = coo::to_rows(&coo::encode(&c, &id));
    let key = table
        .append_tensor(&id, "COO", c.shape(), dtstore::ElementType::F64, &rows)
        .unwrap()
        .unwrap();

    let bytes = store.get(&key).unwrap();
    let reader = SegmentReader::open(bytes.clone()).unwrap();
    assert_eq!(reader.row_count(), rows.len());
    // the repeated id column compresses to one run
    assert!(matches!(reader.columns()[0].encoding, Encoding::DictRle | Encoding::DictRleZstd));

    let mut bad = bytes.clone();
    let last = bad.len() - 1;
    bad[last] ^= 0x10;
    store.put(&key, &bad).unwrap();
    let reopened = open_table(store.clone(), "coo").unwrap();
    assert!(matches!(reopened.scan(&id), Err(Error::CorruptColumn(_))));

    let mut bad = bytes;
    bad[0] = b'X';
    store.put(&key, &bad).unwrap();
    assert!(matches!(reopened.scan(&id), Err(Error::BadMagic)));
}

#[test]
fn predicate_decodes_only_what_matches() {
    let store = Arc::new(MemoryStore::new());
    let mut table = create_table(store, "coo", "coo.v1").unwrap();
    let c = dense_to_coo(&sample(2));
    for name in ["a", "b"] {
        let id = TensorId::new(name).unwrap();
        let rows = coo::to_rows(&coo::encode(&c, &id));
        table.append_tensor(&id, "COO", c.shape(), dtstore::ElementType::F64, &rows).unwrap();
    }
    let id = TensorId::new("b").unwrap();
    let first = Predicate::new(&["indices"], |v| v[0].as_i64_list().unwrap()[0] == 3);
    let (rows, stats) = table.scan_filtered(&id, &first).unwrap();
    let want = c.iter().filter(|(ix, _)| ix[0] == 3).count() as u64;
    assert_eq!(rows.len() as u64, want);
    assert_eq!(stats.rows_scanned, want);
    assert_eq!(stats.rows_evaluated, c.nnz() as u64);
    assert_eq!(stats.segments_opened, 1, "segment of tensor a is skipped");
}

#[test]
fn schemas_and_keys_are_checked() {
    let store = Arc::new(MemoryStore::new());
    assert!(schema_by_name("nope.v9").is_err());
    assert!(create_table(store.clone(), "t", "nope.v9").is_err());
    create_table(store.clone(), "t", "coo.v1").unwrap();
    assert!(matches!(create_table(store.clone(), "t", "coo.v1"), Err(Error::AlreadyExists(_))));
    assert!(store.put("../escape", b"x").is_err());
    assert!(matches!(store.get("t/none"), Err(Error::NotFound(_))));
}
