// Store a dense image batch as flattened chunks and read a slice of it.
// Only the chunks under the slice are fetched from storage.
//
// cargo run --example dense_chunks

use std::sync::Arc;

use dtstore::layout::ftsf;
use dtstore::store::{create_table, MemoryStore};
use dtstore::{slice_dense, DenseTensor, ElementType, Shape, SliceSpec, TensorData, TensorId};

fn main() -> dtstore::Result<()> {
    // 24 RGB images of 64x64 pixels
    let shape = Shape::new(vec![24, 3, 64, 64])?;
    let pixels = (0..shape.element_count()).map(|i| (i * 31 % 256) as u8).collect();
    let images = DenseTensor::new(shape.clone(), TensorData::U8(pixels))?;

    for chunk_dim in [3, 2] {
        let rows = ftsf::encode(&images, chunk_dim, &TensorId::new("probe")?)?;
        println!("chunk_dim {chunk_dim}: {} rows", rows.len());
    }

    let mut table = create_table(Arc::new(MemoryStore::new()), "images", "ftsf.v1")?;
    let id = TensorId::new("ffhq-sample")?;
    ftsf::write(&mut table, &images, 3, &id)?;

    let back = ftsf::read(&table, &id)?;
    assert!(back.bitwise_eq(&images));
    assert_eq!(back.dtype(), ElementType::U8);

    let first_two = SliceSpec::leading(4, 0, 2);
    let (slice, stats) = ftsf::read_slice(&table, &id, &first_two)?;
    assert!(slice.bitwise_eq(&slice_dense(&images, &first_two)?));
    println!(
        "slice {first_two} -> shape {}, fetched {} of 24 rows",
        slice.shape(),
        stats.rows_scanned
    );
    Ok(())
}
