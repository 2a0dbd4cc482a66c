//! Compressed sparse row and column layouts. A rank-N tensor is first
//! flattened to a matrix of `d_1` rows by `d_2 * ... * d_N` columns, which
//! makes a matrix cell `(r, c)` sit at linear offset `r * cols + c`.
//!
//! Storage is one header row carrying the pointer array followed by chunk
//! rows holding runs of at most `chunk_len` minor indices and values.

use crate::error::{Error, Result};
use crate::store::row::{ColumnValue, Row};
use crate::store::table::{ScanStats, TableHandle};
use crate::tensor::{CooTensor, ElementType, Shape, TensorId};

pub const DEFAULT_CHUNK_LEN: usize = 65_536;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Row,
    Col,
}

impl Orientation {
    pub fn layout(self) -> &'static str {
        match self {
            Orientation::Row => "CSR",
            Orientation::Col => "CSC",
        }
    }

    pub fn schema_name(self) -> &'static str {
        match self {
            Orientation::Row => "csr.v1",
            Orientation::Col => "csc.v1",
        }
    }

    fn from_layout(s: &str) -> Result<Self> {
        match s {
            "CSR" => Ok(Orientation::Row),
            "CSC" => Ok(Orientation::Col),
            other => Err(Error::InconsistentMeta(format!("layout {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressedMatrix {
    pub orientation: Orientation,
    pub dense_shape: Shape,
    /// `[rows, cols]` of the flattened matrix.
    pub flattened_shape: [usize; 2],
    /// Length `major + 1`; segment `i` is `pointers[i]..pointers[i + 1]`.
    pub pointers: Vec<usize>,
    pub minor_indices: Vec<usize>,
    pub values: Vec<f64>,
}

/// `[d_1, d_2 * ... * d_N]`; a vector becomes a single column.
pub fn flattened_shape(shape: &Shape) -> [usize; 2] {
    let d = shape.dims();
    [d[0], d[1..].iter().product()]
}

/// The matrix view of `c`, entries in row-major order.
pub fn flatten_to_matrix(c: &CooTensor) -> CooTensor {
    let [rows, cols] = flattened_shape(c.shape());
    let shape = Shape::new(vec![rows, cols]).expect("flattened dims are positive");
    let offsets: Vec<usize> = c.iter().map(|(idx, _)| c.shape().linear_offset(idx)).collect();
    CooTensor::from_sorted_offsets(shape, &offsets, c.values().to_vec())
}

pub fn encode(c: &CooTensor, orientation: Orientation) -> CompressedMatrix {
    let [rows, cols] = flattened_shape(c.shape());
    // (major, minor, value); row-major order is the tensor's own order
    let mut cells: Vec<(usize, usize, f64)> = c
        .iter()
        .map(|(idx, v)| {
            let off = c.shape().linear_offset(idx);
            (off / cols, off % cols, v)
        })
        .collect();
    let major = match orientation {
        Orientation::Row => rows,
        Orientation::Col => {
            for cell in &mut cells {
                *cell = (cell.1, cell.0, cell.2);
            }
            cells.sort_unstable_by_key(|cell| (cell.0, cell.1));
            cols
        }
    };
    let mut pointers = vec![0usize; major + 1];
    for cell in &cells {
        pointers[cell.0 + 1] += 1;
    }
    for i in 0..major {
        pointers[i + 1] += pointers[i];
    }
    CompressedMatrix {
        orientation,
        dense_shape: c.shape().clone(),
        flattened_shape: [rows, cols],
        pointers,
        minor_indices: cells.iter().map(|cell| cell.1).collect(),
        values: cells.iter().map(|cell| cell.2).collect(),
    }
}

pub fn decode(m: &CompressedMatrix) -> Result<CooTensor> {
    let [rows, cols] = m.flattened_shape;
    if flattened_shape(&m.dense_shape) != m.flattened_shape {
        return Err(Error::InconsistentShape(format!(
            "{:?} is not the flattening of {}",
            m.flattened_shape, m.dense_shape
        )));
    }
    let (major, minor) = match m.orientation {
        Orientation::Row => (rows, cols),
        Orientation::Col => (cols, rows),
    };
    let nnz = m.values.len();
    if m.minor_indices.len() != nnz {
        return Err(Error::LengthMismatch {
            expected: nnz,
            actual: m.minor_indices.len(),
        });
    }
    let p = &m.pointers;
    if p.len() != major + 1 || p[0] != 0 || p[major] != nnz || p.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::MalformedPointers(format!(
            "expected {} nondecreasing pointers from 0 to {nnz}",
            major + 1
        )));
    }
    let mut offsets = Vec::with_capacity(nnz);
    for i in 0..major {
        let seg = &m.minor_indices[p[i]..p[i + 1]];
        if seg.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::MalformedPointers(format!("segment {i} is not strictly increasing")));
        }
        for &j in seg {
            if j >= minor {
                return Err(Error::OutOfBounds {
                    index: vec![i, j],
                    shape: vec![major, minor],
                });
            }
            offsets.push(match m.orientation {
                Orientation::Row => i * cols + j,
                Orientation::Col => j * cols + i,
            });
        }
    }
    let mut values = m.values.clone();
    if m.orientation == Orientation::Col {
        let mut order: Vec<usize> = (0..nnz).collect();
        order.sort_unstable_by_key(|&k| offsets[k]);
        offsets = order.iter().map(|&k| offsets[k]).collect();
        values = order.iter().map(|&k| m.values[k]).collect();
    }
    Ok(CooTensor::from_sorted_offsets(m.dense_shape.clone(), &offsets, values))
}

fn i64s(v: &[usize]) -> Vec<i64> {
    v.iter().map(|&x| x as i64).collect()
}

fn usizes(v: &[i64]) -> Result<Vec<usize>> {
    v.iter()
        .map(|&x| usize::try_from(x).map_err(|_| Error::malformed(format!("negative value {x}"))))
        .collect()
}

/// Header row (`chunk_seq = -1`) then chunk rows numbered from 0.
pub fn to_rows(m: &CompressedMatrix, id: &TensorId, chunk_len: usize) -> Vec<Row> {
    let chunk_len = chunk_len.max(1);
    let text = |s: &str| ColumnValue::Text(s.to_string());
    let mut rows = vec![Row(vec![
        text(id.as_str()),
        text(m.orientation.layout()),
        ColumnValue::I64List(m.dense_shape.to_i64()),
        ColumnValue::I64List(i64s(&m.flattened_shape)),
        ColumnValue::I64List(i64s(&m.pointers)),
        ColumnValue::I64(-1),
        ColumnValue::I64List(Vec::new()),
        ColumnValue::F64List(Vec::new()),
    ])];
    for (seq, (idx, val)) in m
        .minor_indices
        .chunks(chunk_len)
        .zip(m.values.chunks(chunk_len))
        .enumerate()
    {
        rows.push(Row(vec![
            text(id.as_str()),
            text(m.orientation.layout()),
            ColumnValue::I64List(Vec::new()),
            ColumnValue::I64List(Vec::new()),
            ColumnValue::I64List(Vec::new()),
            ColumnValue::I64(seq as i64),
            ColumnValue::I64List(i64s(idx)),
            ColumnValue::F64List(val.to_vec()),
        ]));
    }
    rows
}

pub fn from_rows(rows: &[Row]) -> Result<CompressedMatrix> {
    let mut header = None;
    let mut chunks: Vec<(i64, &Row)> = Vec::new();
    for r in rows {
        match r.i64(5)? {
            -1 if header.is_some() => return Err(Error::InconsistentMeta("two header rows".into())),
            -1 => header = Some(r),
            seq => chunks.push((seq, r)),
        }
    }
    let h = header.ok_or_else(|| Error::InconsistentMeta("missing header row".into()))?;
    let orientation = Orientation::from_layout(h.text(1)?)?;
    chunks.sort_unstable_by_key(|c| c.0);
    let mut minor_indices = Vec::new();
    let mut values = Vec::new();
    for (expect, (seq, r)) in chunks.iter().enumerate() {
        if *seq != expect as i64 {
            return Err(Error::MissingChunk(expect));
        }
        if Orientation::from_layout(r.text(1)?)? != orientation {
            return Err(Error::InconsistentMeta(format!("chunk {seq} layout")));
        }
        minor_indices.extend(usizes(r.i64_list(6)?)?);
        values.extend_from_slice(r.f64_list(7)?);
    }
    let flat = usizes(h.i64_list(3)?)?;
    let flattened_shape: [usize; 2] = flat
        .try_into()
        .map_err(|_| Error::InconsistentShape("flattened shape must have two dims".into()))?;
    Ok(CompressedMatrix {
        orientation,
        dense_shape: Shape::from_i64(h.i64_list(2)?)?,
        flattened_shape,
        pointers: usizes(h.i64_list(4)?)?,
        minor_indices,
        values,
    })
}

pub fn write(
    table: &mut TableHandle,
    c: &CooTensor,
    orientation: Orientation,
    dtype: ElementType,
    id: &TensorId,
    chunk_len: usize,
) -> Result<()> {
    let rows = to_rows(&encode(c, orientation), id, chunk_len);
    table.append_tensor(id, orientation.layout(), c.shape(), dtype, &rows)?;
    Ok(())
}

pub fn read(table: &TableHandle, id: &TensorId) -> Result<(CooTensor, ScanStats)> {
    if !table.contains(id) {
        return Err(Error::UnknownId(id.to_string()));
    }
    let (rows, stats) = table.scan(id)?;
    Ok((decode(&from_rows(&rows)?)?, stats))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CooTensor {
        let shape = Shape::new(vec![3, 2, 2]).unwrap();
        CooTensor::from_entries(
            shape,
            vec![
                (vec![0, 0, 1], 1.0),
                (vec![0, 1, 0], 2.0),
                (vec![2, 0, 0], 3.0),
                (vec![2, 1, 1], 4.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn csr_arrays_by_hand() {
        let m = encode(&sample(), Orientation::Row);
        assert_eq!(m.flattened_shape, [3, 4]);
        assert_eq!(m.pointers, vec![0, 2, 2, 4]);
        assert_eq!(m.minor_indices, vec![1, 2, 0, 3]);
        assert_eq!(m.values, vec![1.0, 2.0, 3.0, 4.0]);
        assert!(decode(&m).unwrap().bitwise_eq(&sample()));
    }

    #[test]
    fn csc_arrays_by_hand() {
        let m = encode(&sample(), Orientation::Col);
        assert_eq!(m.pointers, vec![0, 1, 2, 3, 4]);
        assert_eq!(m.minor_indices, vec![2, 0, 0, 2]);
        assert_eq!(m.values, vec![3.0, 1.0, 2.0, 4.0]);
        assert!(decode(&m).unwrap().bitwise_eq(&sample()));
    }

    #[test]
    fn flatten_matches_linear_offsets() {
        let flat = flatten_to_matrix(&sample());
        assert_eq!(flat.shape().dims(), &[3, 4]);
        assert_eq!(flat.coord(3), &[2, 3]);
    }

    #[test]
    fn vector_becomes_one_column() {
        let c = CooTensor::from_entries(Shape::new(vec![5]).unwrap(), vec![(vec![3], 9.0)]).unwrap();
        for o in [Orientation::Row, Orientation::Col] {
            let m = encode(&c, o);
            assert_eq!(m.flattened_shape, [5, 1]);
            assert!(decode(&m).unwrap().bitwise_eq(&c));
        }
    }

    #[test]
    fn malformed_pointers_rejected() {
        let mut m = encode(&sample(), Orientation::Row);
        m.pointers[1] = 3;
        m.pointers[2] = 1;
        assert!(matches!(decode(&m), Err(Error::MalformedPointers(_))));
        let mut m = encode(&sample(), Orientation::Row);
        m.pointers.pop();
        assert!(matches!(decode(&m), Err(Error::MalformedPointers(_))));
        let mut m = encode(&sample(), Orientation::Row);
        m.minor_indices.swap(0, 1);
        assert!(matches!(decode(&m), Err(Error::MalformedPointers(_))));
    }

    #[test]
    fn rows_roundtrip_with_small_chunks() {
        let id = TensorId::new("m").unwrap();
        for o in [Orientation::Row, Orientation::Col] {
            let m = encode(&sample(), o);
            let rows = to_rows(&m, &id, 3);
            assert_eq!(rows.len(), 3);
            let mut shuffled = rows.clone();
            shuffled.reverse();
            assert_eq!(from_rows(&shuffled).unwrap(), m);
            // a lost trailing chunk surfaces as a pointer mismatch
            assert!(matches!(decode(&from_rows(&rows[..2]).unwrap()), Err(Error::MalformedPointers(_))));
            assert!(matches!(from_rows(&[rows[0].clone(), rows[2].clone()]), Err(Error::MissingChunk(0))));
        }
    }
}
