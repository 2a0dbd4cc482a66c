// Look inside a segment file: per-column encodings and sizes.
//
// cargo run --example segment_format

use dtstore::layout::ftsf;
use dtstore::store::{schema_by_name, write_segment, SegmentReader};
use dtstore::{DenseTensor, Shape, TensorId};

fn main() -> dtstore::Result<()> {
    let shape = Shape::new(vec![24, 3, 8, 8])?;
    let n = shape.element_count();
    let t = DenseTensor::from_f64(shape, (0..n).map(|i| (i % 17) as f64).collect())?;
    let rows = ftsf::to_rows(&ftsf::encode(&t, 3, &TensorId::new("img")?)?);

    let bytes = write_segment(schema_by_name("ftsf.v1")?, &rows)?;
    let seg = SegmentReader::open(bytes.clone())?;
    println!("{} rows of {}, {} bytes", seg.row_count(), seg.schema_name(), bytes.len());
    for (i, col) in seg.columns().iter().enumerate() {
        println!(
            "  {:<16} {:?} {:?} {} bytes",
            col.name,
            col.ty,
            col.encoding,
            seg.payload_len(i)
        );
    }
    Ok(())
}
