// A catalog on local disk: every layout gets its own table directory and
// tensors are found by id alone.
//
// cargo run --example local_catalog

use dtstore::bench::{gen_sparse, GenSpec};
use dtstore::catalog::Catalog;
use dtstore::layout::{AnyTensor, EncodeOptions, Layout};
use dtstore::{coo_to_dense, Shape, SliceSpec, TensorId};

fn main() -> dtstore::Result<()> {
    let dir = tempfile::tempdir()?;
    let sparse = gen_sparse(&GenSpec::new(Shape::new(vec![16, 12, 10])?, 0.03, 42))?;
    let dense = coo_to_dense(&sparse)?;

    let mut cat = Catalog::open_dir(dir.path())?;
    for layout in Layout::ALL {
        let t: AnyTensor = if layout.is_sparse() {
            sparse.clone().into()
        } else {
            dense.clone().into()
        };
        cat.write(&t, layout, &TensorId::new(format!("rides-{layout}"))?, &EncodeOptions::default())?;
    }

    // reopen from disk and read a slice through every layout
    let cat = Catalog::open_dir(dir.path())?;
    let s = SliceSpec::leading(3, 4, 6);
    for t in cat.inspect() {
        for (id, entry) in &t.tensors {
            let (_, stats) = cat.read_slice(&TensorId::new(id.as_str())?, &s)?;
            println!(
                "{:<5} {:>6} bytes  {:>4} rows  slice fetched {:>4}",
                t.layout, t.size_bytes, entry.rows, stats.rows_scanned
            );
        }
    }
    Ok(())
}
