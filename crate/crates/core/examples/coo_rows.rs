// The coordinate layout: one table row per nonzero.
//
// cargo run --example coo_rows

use dtstore::layout::coo;
use dtstore::store::ColumnValue;
use dtstore::{dense_to_coo, make_dense, CooTensor, Shape, TensorData, TensorId};

fn main() -> dtstore::Result<()> {
    let shape = Shape::new(vec![3, 3, 3])?;
    let mut data = vec![0.0; 27];
    data[1] = 1.0; // [0,0,1]
    data[9] = 2.0; // [1,0,0]
    data[14] = 3.0; // [1,1,2]
    data[26] = 4.0; // [2,2,2]
    let dense = make_dense(shape, TensorData::F64(data))?;
    let sparse: CooTensor = dense_to_coo(&dense);

    let id = TensorId::new("1")?;
    let rows = coo::encode(&sparse, &id);
    println!("id  layout  dense_shape  indices    value");
    for r in coo::to_rows(&rows) {
        let cells: Vec<String> = r.0.iter().map(show).collect();
        println!("{}", cells.join("  "));
    }

    let mut shuffled = rows.clone();
    shuffled.rotate_left(2);
    assert!(coo::decode(&shuffled, None)?.bitwise_eq(&sparse));
    Ok(())
}

fn show(v: &ColumnValue) -> String {
    match v {
        ColumnValue::Text(s) => s.clone(),
        ColumnValue::I64List(l) => format!("{l:?}"),
        ColumnValue::F64(x) => format!("{x:.1}"),
        other => format!("{other:?}"),
    }
}
