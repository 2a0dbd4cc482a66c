// Compressed sparse fiber: a prefix tree over coordinates, stored as a
// header row plus chunk rows, with slice reads that fetch one subtree.
//
// cargo run --example fiber_tree

use std::sync::Arc;

use dtstore::bench::{gen_sparse, GenSpec};
use dtstore::layout::csf;
use dtstore::store::{create_table, MemoryStore};
use dtstore::{CooTensor, ElementType, Shape, SliceSpec, TensorId};

fn main() -> dtstore::Result<()> {
    let small = CooTensor::from_entries(
        Shape::new(vec![3, 3, 3])?,
        vec![
            (vec![0, 0, 1], 1.0),
            (vec![0, 2, 0], 2.0),
            (vec![0, 2, 2], 3.0),
            (vec![2, 1, 1], 4.0),
        ],
    )?;
    let tree = csf::encode(&small)?;
    for (k, f) in tree.fids.iter().enumerate() {
        println!("fids[{k}]  = {f:?}");
    }
    for (k, p) in tree.fptrs.iter().enumerate() {
        println!("fptrs[{k}] = {p:?}");
    }

    let big = gen_sparse(&GenSpec::new(Shape::new(vec![60, 24, 40, 40])?, 0.002, 5))?;
    let mut table = create_table(Arc::new(MemoryStore::new()), "csf", "csf.v1")?;
    let id = TensorId::generate("csf", big.rank(), &mut rand::thread_rng());
    csf::write(&mut table, &big, ElementType::F64, &id, 256)?;

    let (_, full) = csf::read(&table, &id)?;
    let (part, sliced) = csf::read_slice(&table, &id, 10, 12)?;
    assert!(part.bitwise_eq(&big.restrict(&SliceSpec::leading(4, 10, 12))?));
    println!(
        "{id}: {} nonzeros; full read {} rows, slice [10, 12) {} rows for {} nonzeros",
        big.nnz(),
        full.rows_scanned,
        sliced.rows_scanned,
        part.nnz()
    );
    Ok(())
}
