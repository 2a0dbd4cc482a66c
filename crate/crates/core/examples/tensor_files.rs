// The .dten and .dcoo binary containers, and the sparse/general split.
//
// cargo run --example tensor_files

use dtstore::container::{read_coo_file, read_dense_file, write_coo_file, write_dense_file};
use dtstore::{classify, dense_to_coo, DenseTensor, Shape};

fn main() -> dtstore::Result<()> {
    let dir = tempfile::tempdir()?;
    let shape = Shape::new(vec![3, 3, 3])?;
    let t = DenseTensor::from_f64(shape, (0..27).map(|i| if i % 5 == 0 { i as f64 } else { 0.0 }).collect())?;

    let dense_path = dir.path().join("x.dten");
    write_dense_file(&dense_path, &t)?;
    let coo_path = dir.path().join("x.dcoo");
    let c = dense_to_coo(&t);
    write_coo_file(&coo_path, &c)?;

    println!("{}: {} bytes", dense_path.display(), std::fs::metadata(&dense_path)?.len());
    println!("{}: {} bytes, {:?}", coo_path.display(), std::fs::metadata(&coo_path)?.len(), classify(&c));
    assert!(read_dense_file(&dense_path)?.bitwise_eq(&t));
    assert!(read_coo_file(&coo_path)?.bitwise_eq(&c));
    Ok(())
}
