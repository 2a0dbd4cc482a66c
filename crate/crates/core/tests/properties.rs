use std::sync::Arc;

use dtstore::catalog::Catalog;
use dtstore::cli::parse_slice_spec;
use dtstore::container::{decode_coo, decode_dense, encode_coo, encode_dense};
use dtstore::layout::{bsgs, csf, csr, ftsf, AnyTensor, EncodeOptions, Layout};
use dtstore::store::{read_segment, schema_by_name, write_segment, MemoryStore};
use dtstore::{
    coo_to_dense, dense_to_coo, slice_dense, DenseTensor, DimRange, Shape, SliceSpec, TensorId,
};
use proptest::prelude::*;

fn value() -> impl Strategy<Value = f64> {
    prop_oneof![
        4 => Just(0.0),
        2 => -1e6f64..1e6,
        1 => (1u32..100).prop_map(f64::from),
        1 => Just(-0.0),
    ]
}

fn dense(max_rank: usize, max_dim: usize) -> impl Strategy<Value = DenseTensor> {
    prop::collection::vec(1..=max_dim, 1..=max_rank).prop_flat_map(|dims| {
        let n: usize = dims.iter().product();
        prop::collection::vec(value(), n).prop_map(move |data| {
            DenseTensor::from_f64(Shape::new(dims.clone()).unwrap(), data).unwrap()
        })
    })
}

/// A tensor plus a slice of it; every range is non-empty.
fn dense_and_slice() -> impl Strategy<Value = (DenseTensor, SliceSpec)> {
    dense(4, 6).prop_flat_map(|t| {
        let ranges: Vec<_> = t
            .shape()
            .dims()
            .iter()
            .map(|&d| {
                prop_oneof![
                    Just(DimRange::Full),
                    (0..d).prop_flat_map(move |a| (a + 1..=d).prop_map(move |b| DimRange::range(a, b))),
                ]
            })
            .collect();
        (Just(t), ranges.prop_map(SliceSpec::new))
    })
}

fn id() -> TensorId {
    TensorId::new("p").unwrap()
}

fn source_for(layout: Layout, t: &DenseTensor) -> AnyTensor {
    if layout.is_sparse() {
        dense_to_coo(t).into()
    } else {
        t.clone().into()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dense_coo_dense_is_identity(t in dense(5, 5)) {
        let c = dense_to_coo(&t);
        prop_assert!(coo_to_dense(&c).unwrap().bitwise_eq(&t));
        prop_assert_eq!(c.nnz(), c.values().iter().filter(|v| v.to_bits() != 0).count());
    }

    #[test]
    fn containers_roundtrip(t in dense(4, 6)) {
        prop_assert!(decode_dense(&encode_dense(&t)).unwrap().bitwise_eq(&t));
        let c = dense_to_coo(&t);
        prop_assert!(decode_coo(&encode_coo(&c)).unwrap().bitwise_eq(&c));
    }

    #[test]
    fn every_layout_roundtrips_through_storage(t in dense(4, 6), chunk_len in 1usize..20) {
        let mut cat = Catalog::open(Arc::new(MemoryStore::new())).unwrap();
        let opts = EncodeOptions { chunk_len, ..EncodeOptions::default() };
        for layout in Layout::ALL.into_iter().filter(|l| l.supports_rank(t.shape().rank())) {
            let src = source_for(layout, &t);
            let tid = TensorId::new(format!("t-{layout}")).unwrap();
            cat.write(&src, layout, &tid, &opts).unwrap();
            let (back, _) = cat.read(&tid).unwrap();
            prop_assert!(back.bitwise_eq(&src), "{}", layout);
        }
    }

    #[test]
    fn slices_match_dense_oracle((t, s) in dense_and_slice()) {
        let mut cat = Catalog::open(Arc::new(MemoryStore::new())).unwrap();
        let want = slice_dense(&t, &s).unwrap();
        for layout in Layout::ALL.into_iter().filter(|l| l.supports_rank(t.shape().rank())) {
            let tid = TensorId::new(format!("t-{layout}")).unwrap();
            cat.write(&source_for(layout, &t), layout, &tid, &EncodeOptions::default()).unwrap();
            let (got, _) = cat.read_slice(&tid, &s).unwrap();
            prop_assert!(got.bitwise_eq(&source_for(layout, &want)), "{} {}", layout, s);
        }
    }

    #[test]
    fn ftsf_chunks_concatenate_to_buffer(t in dense(4, 5), pick in 0usize..8) {
        let rank = t.shape().rank();
        prop_assume!(rank >= 2);
        let chunk_dim = 1 + pick % (rank - 1);
        let rows = ftsf::encode(&t, chunk_dim, &id()).unwrap();
        prop_assert_eq!(rows.len(), ftsf::chunk_count(t.shape(), chunk_dim).unwrap());
        let mut bytes = Vec::new();
        for (k, r) in rows.iter().enumerate() {
            prop_assert_eq!(r.chunk_index, k + 1);
            bytes.extend(decode_dense(&r.chunk_bytes).unwrap().data().to_le_bytes());
        }
        prop_assert_eq!(bytes, t.data().to_le_bytes());
    }

    #[test]
    fn compressed_pointer_laws(t in dense(4, 6)) {
        let c = dense_to_coo(&t);
        for o in [csr::Orientation::Row, csr::Orientation::Col] {
            let m = csr::encode(&c, o);
            let major = match o {
                csr::Orientation::Row => m.flattened_shape[0],
                csr::Orientation::Col => m.flattened_shape[1],
            };
            prop_assert_eq!(m.pointers.len(), major + 1);
            prop_assert_eq!(m.pointers[0], 0);
            prop_assert_eq!(*m.pointers.last().unwrap(), c.nnz());
            prop_assert!(m.pointers.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn fiber_tree_laws(t in dense(5, 5)) {
        prop_assume!(t.shape().rank() >= 2);
        let c = dense_to_coo(&t);
        let tree = csf::encode(&c).unwrap();
        prop_assert_eq!(tree.fids.last().unwrap().len(), c.nnz());
        for (k, p) in tree.fptrs.iter().enumerate() {
            prop_assert_eq!(p.len(), tree.fids[k].len() + 1);
            for w in p.windows(2) {
                let kids = &tree.fids[k + 1][w[0]..w[1]];
                prop_assert!(!kids.is_empty());
                prop_assert!(kids.windows(2).all(|x| x[0] < x[1]));
            }
        }
        prop_assert!(csf::decode(&tree).unwrap().bitwise_eq(&c));
    }

    #[test]
    fn any_block_shape_roundtrips(t in dense(4, 7), seed in any::<u64>()) {
        let rank = t.shape().rank();
        let m = 1 + (seed as usize) % rank;
        let block: Vec<usize> = (0..m).map(|j| 1 + ((seed >> (8 * j)) as usize) % 4).collect();
        let c = dense_to_coo(&t);
        let rows = bsgs::encode(&c, &block, &id()).unwrap();
        prop_assert!(rows.iter().all(|r| r.values.iter().any(|v| v.to_bits() != 0)));
        prop_assert!(bsgs::decode(&rows, Some(c.shape())).unwrap().bitwise_eq(&c));
    }

    #[test]
    fn segments_roundtrip_rows(t in dense(3, 6)) {
        let c = dense_to_coo(&t);
        prop_assume!(c.nnz() > 0);
        let rows = dtstore::layout::coo::to_rows(&dtstore::layout::coo::encode(&c, &id()));
        let schema = schema_by_name("coo.v1").unwrap();
        let bytes = write_segment(schema, &rows).unwrap();
        let back = read_segment(&bytes).unwrap().1;
        prop_assert_eq!(back.len(), rows.len());
        prop_assert!(back.iter().zip(&rows).all(|(a, b)| a.bitwise_eq(b)));
    }

    #[test]
    fn slice_text_roundtrips((_, s) in dense_and_slice()) {
        prop_assert_eq!(parse_slice_spec(&s.to_string()).unwrap(), s);
    }
}
