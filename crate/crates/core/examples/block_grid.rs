// Block-sparse storage: only blocks holding a nonzero become rows, and a
// slice read filters rows on their grid coordinates.
//
// cargo run --example block_grid

use std::sync::Arc;

use dtstore::layout::bsgs;
use dtstore::store::{create_table, MemoryStore};
use dtstore::{CooTensor, ElementType, Shape, SliceSpec, TensorId};

fn main() -> dtstore::Result<()> {
    let c = CooTensor::from_entries(
        Shape::new(vec![3, 4, 2])?,
        vec![
            (vec![0, 0, 0], 1.0),
            (vec![0, 1, 0], 2.0),
            (vec![0, 0, 1], 3.0),
            (vec![1, 2, 0], 4.0),
            (vec![1, 3, 0], 5.0),
            (vec![2, 0, 1], 6.0),
            (vec![2, 1, 1], 7.0),
        ],
    )?;
    let block = [2, 1];
    println!("grid {:?}", bsgs::grid_shape(c.shape(), &block)?);
    let id = TensorId::new("1")?;
    for r in bsgs::encode(&c, &block, &id)? {
        println!("{:?} -> {:?}", r.indices, r.values);
    }

    let mut table = create_table(Arc::new(MemoryStore::new()), "bsgs", "bsgs.v1")?;
    bsgs::write(&mut table, &c, &block, ElementType::F64, &id)?;
    let first = SliceSpec::leading(3, 0, 1);
    let (slice, stats) = bsgs::read_slice(&table, &id, &first)?;
    assert!(slice.bitwise_eq(&c.slice(&first)?));
    println!(
        "X[0] fetched {} of {} block rows: {:?}",
        stats.rows_scanned,
        stats.rows_evaluated,
        slice.values()
    );
    Ok(())
}
