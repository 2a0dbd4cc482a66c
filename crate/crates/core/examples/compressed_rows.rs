// CSR and CSC views of a rank-3 tensor flattened to a matrix.
//
// cargo run --example compressed_rows

use dtstore::layout::csr::{self, Orientation};
use dtstore::{CooTensor, Shape, TensorId};

fn main() -> dtstore::Result<()> {
    let c = CooTensor::from_entries(
        Shape::new(vec![3, 2, 2])?,
        vec![
            (vec![0, 0, 1], 1.0),
            (vec![0, 1, 0], 2.0),
            (vec![2, 0, 0], 3.0),
            (vec![2, 1, 1], 4.0),
        ],
    )?;
    let flat = csr::flatten_to_matrix(&c);
    println!("flattened to {}", flat.shape());

    for o in [Orientation::Row, Orientation::Col] {
        let m = csr::encode(&c, o);
        println!(
            "{}: pointers {:?} minor {:?} values {:?}",
            o.layout(),
            m.pointers,
            m.minor_indices,
            m.values
        );
        // small chunks to show the header + chunk row split
        let rows = csr::to_rows(&m, &TensorId::new("m")?, 3);
        println!("  {} rows (1 header, {} chunks)", rows.len(), rows.len() - 1);
        assert!(csr::decode(&csr::from_rows(&rows)?)?.bitwise_eq(&c));
    }
    Ok(())
}
