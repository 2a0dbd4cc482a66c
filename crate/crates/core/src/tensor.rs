//! Dense and coordinate tensors, slice specifications and the sparse/general
//! classification rule.
//!
//! All indices are zero-based. Dense buffers are row-major: the last
//! dimension has stride 1.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Density strictly below this value classifies a tensor as sparse.
pub const SPARSE_THRESHOLD: f64 = 0.10;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Shape(Vec<usize>);

impl Shape {
    pub fn new(dims: impl Into<Vec<usize>>) -> Result<Self> {
        let dims = dims.into();
        if dims.is_empty() {
            return Err(Error::InvalidShape("rank must be at least 1".into()));
        }
        if let Some(j) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidShape(format!("dimension {j} is zero")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::InvalidShape(format!("{dims:?} overflows usize")))?;
        Ok(Shape(dims))
    }

    /// Builds a shape from stored i64 dims, rejecting negatives.
    pub fn from_i64(dims: &[i64]) -> Result<Self> {
        let dims = dims
            .iter()
            .map(|&d| usize::try_from(d).map_err(|_| Error::InvalidShape(format!("{dims:?}"))))
            .collect::<Result<Vec<_>>>()?;
        Shape::new(dims)
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn rank(&self) -> usize {
        self.0.len()
    }

    pub fn element_count(&self) -> usize {
        self.0.iter().product()
    }

    pub fn to_i64(&self) -> Vec<i64> {
        self.0.iter().map(|&d| d as i64).collect()
    }

    /// Row-major strides.
    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.0.len()];
        for j in (0..self.0.len().saturating_sub(1)).rev() {
            strides[j] = strides[j + 1] * self.0[j + 1];
        }
        strides
    }

    pub fn linear_offset(&self, index: &[usize]) -> usize {
        index
            .iter()
            .zip(self.0.iter())
            .fold(0, |acc, (&i, &d)| acc * d + i)
    }

    /// Inverse of [`Shape::linear_offset`], writing into `out`.
    pub fn unravel_into(&self, mut offset: usize, out: &mut [usize]) {
        for j in (0..self.0.len()).rev() {
            out[j] = offset % self.0[j];
            offset /= self.0[j];
        }
    }

    pub fn contains(&self, index: &[usize]) -> bool {
        index.len() == self.0.len() && index.iter().zip(&self.0).all(|(&i, &d)| i < d)
    }
}

impl TryFrom<Vec<usize>> for Shape {
    type Error = Error;
    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Shape::new(dims)
    }
}

impl From<Shape> for Vec<usize> {
    fn from(s: Shape) -> Self {
        s.0
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (j, d) in self.0.iter().enumerate() {
            if j > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{d}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ElementType {
    U8,
    F32,
    F64,
}

impl ElementType {
    pub fn byte_width(self) -> usize {
        match self {
            ElementType::U8 => 1,
            ElementType::F32 => 4,
            ElementType::F64 => 8,
        }
    }

    pub fn tag(self) -> u8 {
        match self {
            ElementType::U8 => 0,
            ElementType::F32 => 1,
            ElementType::F64 => 2,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(ElementType::U8),
            1 => Ok(ElementType::F32),
            2 => Ok(ElementType::F64),
            other => Err(Error::malformed(format!("unknown dtype tag {other}"))),
        }
    }
}

/// Row-major element buffer of one of the supported element types.
#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    U8(Vec<u8>),
    F32(Vec<f32>),
    F64(Vec<f64>),
}

macro_rules! each_data {
    ($data:expr, $v:ident => $body:expr) => {
        match $data {
            TensorData::U8($v) => $body,
            TensorData::F32($v) => $body,
            TensorData::F64($v) => $body,
        }
    };
}

impl TensorData {
    pub fn zeros(dtype: ElementType, len: usize) -> Self {
        match dtype {
            ElementType::U8 => TensorData::U8(vec![0; len]),
            ElementType::F32 => TensorData::F32(vec![0.0; len]),
            ElementType::F64 => TensorData::F64(vec![0.0; len]),
        }
    }

    pub fn len(&self) -> usize {
        each_data!(self, v => v.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dtype(&self) -> ElementType {
        match self {
            TensorData::U8(_) => ElementType::U8,
            TensorData::F32(_) => ElementType::F32,
            TensorData::F64(_) => ElementType::F64,
        }
    }

    pub fn get_f64(&self, i: usize) -> f64 {
        match self {
            TensorData::U8(v) => v[i] as f64,
            TensorData::F32(v) => v[i] as f64,
            TensorData::F64(v) => v[i],
        }
    }

    /// Copies `len` elements starting at `start` onto the end of `out`.
    /// Panics if `out` has a different element type.
    fn extend_range(&self, out: &mut TensorData, start: usize, len: usize) {
        match (self, out) {
            (TensorData::U8(s), TensorData::U8(o)) => o.extend_from_slice(&s[start..start + len]),
            (TensorData::F32(s), TensorData::F32(o)) => o.extend_from_slice(&s[start..start + len]),
            (TensorData::F64(s), TensorData::F64(o)) => o.extend_from_slice(&s[start..start + len]),
            _ => unreachable!("element type mismatch"),
        }
    }

    fn empty_like(&self, capacity: usize) -> TensorData {
        match self {
            TensorData::U8(_) => TensorData::U8(Vec::with_capacity(capacity)),
            TensorData::F32(_) => TensorData::F32(Vec::with_capacity(capacity)),
            TensorData::F64(_) => TensorData::F64(Vec::with_capacity(capacity)),
        }
    }

    pub fn range(&self, start: usize, len: usize) -> TensorData {
        let mut out = self.empty_like(len);
        self.extend_range(&mut out, start, len);
        out
    }

    /// Little-endian bytes of the buffer.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        match self {
            TensorData::U8(v) => v.clone(),
            TensorData::F32(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
            TensorData::F64(v) => v.iter().flat_map(|x| x.to_le_bytes()).collect(),
        }
    }

    pub fn from_le_bytes(dtype: ElementType, bytes: &[u8]) -> Result<Self> {
        let width = dtype.byte_width();
        if !bytes.len().is_multiple_of(width) {
            return Err(Error::malformed("payload is not a whole number of elements"));
        }
        Ok(match dtype {
            ElementType::U8 => TensorData::U8(bytes.to_vec()),
            ElementType::F32 => TensorData::F32(
                bytes
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
            ElementType::F64 => TensorData::F64(
                bytes
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            ),
        })
    }

    /// Bitwise equality (distinguishes -0.0 from 0.0 and compares NaN payloads).
    pub fn bitwise_eq(&self, other: &TensorData) -> bool {
        match (self, other) {
            (TensorData::U8(a), TensorData::U8(b)) => a == b,
            (TensorData::F32(a), TensorData::F32(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            (TensorData::F64(a), TensorData::F64(b)) => {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
            }
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    shape: Shape,
    data: TensorData,
}

impl DenseTensor {
    pub fn new(shape: Shape, data: TensorData) -> Result<Self> {
        if data.len() != shape.element_count() {
            return Err(Error::LengthMismatch {
                expected: shape.element_count(),
                actual: data.len(),
            });
        }
        Ok(DenseTensor { shape, data })
    }

    pub fn zeros(shape: Shape, dtype: ElementType) -> Self {
        let data = TensorData::zeros(dtype, shape.element_count());
        DenseTensor { shape, data }
    }

    pub fn from_f64(shape: Shape, data: Vec<f64>) -> Result<Self> {
        DenseTensor::new(shape, TensorData::F64(data))
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn dtype(&self) -> ElementType {
        self.data.dtype()
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn into_data(self) -> TensorData {
        self.data
    }

    pub fn get(&self, index: &[usize]) -> Option<f64> {
        if !self.shape.contains(index) {
            return None;
        }
        Some(self.data.get_f64(self.shape.linear_offset(index)))
    }

    /// Converts the element type. Narrowing saturates (`as` semantics).
    pub fn cast(&self, dtype: ElementType) -> DenseTensor {
        if dtype == self.dtype() {
            return self.clone();
        }
        let n = self.data.len();
        let data = match dtype {
            ElementType::U8 => TensorData::U8((0..n).map(|i| self.data.get_f64(i) as u8).collect()),
            ElementType::F32 => {
                TensorData::F32((0..n).map(|i| self.data.get_f64(i) as f32).collect())
            }
            ElementType::F64 => TensorData::F64((0..n).map(|i| self.data.get_f64(i)).collect()),
        };
        DenseTensor {
            shape: self.shape.clone(),
            data,
        }
    }

    pub fn bitwise_eq(&self, other: &DenseTensor) -> bool {
        self.shape == other.shape && self.data.bitwise_eq(&other.data)
    }
}

/// Row-major creation with a length check.
pub fn make_dense(shape: Shape, data: TensorData) -> Result<DenseTensor> {
    DenseTensor::new(shape, data)
}

/// `+0.0` is the only value treated as structurally zero, so every
/// other bit pattern (including `-0.0`) survives a sparse roundtrip.
#[inline]
pub fn is_zero(v: f64) -> bool {
    v.to_bits() == 0
}

/// Sparse tensor in coordinate form: lexicographically sorted, unique
/// coordinates and no stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct CooTensor {
    shape: Shape,
    /// nnz x rank, row-major.
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CooTensor {
    pub fn empty(shape: Shape) -> Self {
        CooTensor {
            shape,
            indices: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Validates, drops explicit zeros and sorts. `indices` is a flat
    /// nnz x rank buffer.
    pub fn new(shape: Shape, indices: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        let rank = shape.rank();
        if indices.len() != values.len() * rank {
            return Err(Error::LengthMismatch {
                expected: values.len() * rank,
                actual: indices.len(),
            });
        }
        let mut entries: Vec<(usize, usize)> = Vec::with_capacity(values.len());
        for (k, &v) in values.iter().enumerate() {
            let idx = &indices[k * rank..(k + 1) * rank];
            if !shape.contains(idx) {
                return Err(Error::OutOfBounds {
                    index: idx.to_vec(),
                    shape: shape.dims().to_vec(),
                });
            }
            if !is_zero(v) {
                entries.push((shape.linear_offset(idx), k));
            }
        }
        entries.sort_unstable_by_key(|e| e.0);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            let k = w[1].1;
            return Err(Error::DuplicateCoordinate(
                indices[k * rank..(k + 1) * rank].to_vec(),
            ));
        }
        let mut sorted_idx = Vec::with_capacity(entries.len() * rank);
        let mut sorted_val = Vec::with_capacity(entries.len());
        for &(_, k) in &entries {
            sorted_idx.extend_from_slice(&indices[k * rank..(k + 1) * rank]);
            sorted_val.push(values[k]);
        }
        Ok(CooTensor {
            shape,
            indices: sorted_idx,
            values: sorted_val,
        })
    }

    /// Builds from (index, value) pairs.
    pub fn from_entries<I>(shape: Shape, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (Vec<usize>, f64)>,
    {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (idx, v) in entries {
            if idx.len() != shape.rank() {
                return Err(Error::OutOfBounds {
                    index: idx,
                    shape: shape.dims().to_vec(),
                });
            }
            indices.extend(idx);
            values.push(v);
        }
        CooTensor::new(shape, indices, values)
    }

    /// Caller guarantees sorted, unique, in-bounds, nonzero entries.
    pub(crate) fn from_sorted_parts(shape: Shape, indices: Vec<usize>, values: Vec<f64>) -> Self {
        debug_assert_eq!(indices.len(), values.len() * shape.rank());
        CooTensor {
            shape,
            indices,
            values,
        }
    }

    /// Builds from linear offsets already sorted ascending and unique.
    pub(crate) fn from_sorted_offsets(shape: Shape, offsets: &[usize], values: Vec<f64>) -> Self {
        let rank = shape.rank();
        let mut indices = vec![0usize; offsets.len() * rank];
        for (k, &off) in offsets.iter().enumerate() {
            shape.unravel_into(off, &mut indices[k * rank..(k + 1) * rank]);
        }
        CooTensor::from_sorted_parts(shape, indices, values)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.rank()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn coord(&self, k: usize) -> &[usize] {
        let r = self.rank();
        &self.indices[k * r..(k + 1) * r]
    }

    pub fn flat_indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[usize], f64)> + '_ {
        let r = self.rank();
        self.indices.chunks_exact(r.max(1)).zip(self.values.iter().copied())
    }

    /// Entries lying inside `s`, coordinates unchanged.
    pub fn restrict(&self, s: &SliceSpec) -> Result<CooTensor> {
        let bounds = s.bounds(&self.shape)?;
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (idx, v) in self.iter() {
            if idx.iter().zip(&bounds).all(|(&i, &(a, b))| i >= a && i < b) {
                indices.extend_from_slice(idx);
                values.push(v);
            }
        }
        Ok(CooTensor::from_sorted_parts(self.shape.clone(), indices, values))
    }

    /// Entries inside `s`, rebased onto the slice's own shape. Equals
    /// `dense_to_coo(slice_dense(coo_to_dense(self), s))`.
    pub fn slice(&self, s: &SliceSpec) -> Result<CooTensor> {
        let bounds = s.bounds(&self.shape)?;
        let shape = s.output_shape(&self.shape)?;
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (idx, v) in self.iter() {
            if idx.iter().zip(&bounds).all(|(&i, &(a, b))| i >= a && i < b) {
                indices.extend(idx.iter().zip(&bounds).map(|(&i, &(a, _))| i - a));
                values.push(v);
            }
        }
        Ok(CooTensor::from_sorted_parts(shape, indices, values))
    }

    pub fn bitwise_eq(&self, other: &CooTensor) -> bool {
        self.shape == other.shape
            && self.indices == other.indices
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

pub fn dense_to_coo(t: &DenseTensor) -> CooTensor {
    let shape = t.shape().clone();
    let mut offsets = Vec::new();
    let mut values = Vec::new();
    for i in 0..t.data().len() {
        let v = t.data().get_f64(i);
        if !is_zero(v) {
            offsets.push(i);
            values.push(v);
        }
    }
    CooTensor::from_sorted_offsets(shape, &offsets, values)
}

pub fn coo_to_dense(c: &CooTensor) -> Result<DenseTensor> {
    let mut data = vec![0.0; c.shape().element_count()];
    for (idx, v) in c.iter() {
        if !c.shape().contains(idx) {
            return Err(Error::OutOfBounds {
                index: idx.to_vec(),
                shape: c.shape().dims().to_vec(),
            });
        }
        data[c.shape().linear_offset(idx)] = v;
    }
    DenseTensor::from_f64(c.shape().clone(), data)
}

pub fn density(c: &CooTensor) -> f64 {
    c.nnz() as f64 / c.shape().element_count() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sparsity {
    Sparse,
    General,
}

pub fn classify_counts(nnz: usize, shape: &Shape) -> Sparsity {
    // nnz / count < 0.10  <=>  10 * nnz < count, exact in integers
    if (nnz as u128) * 10 < shape.element_count() as u128 {
        Sparsity::Sparse
    } else {
        Sparsity::General
    }
}

pub fn classify(c: &CooTensor) -> Sparsity {
    classify_counts(c.nnz(), c.shape())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DimRange {
    Full,
    /// Half-open `[start, end)`.
    Range { start: usize, end: usize },
}

impl DimRange {
    pub fn range(start: usize, end: usize) -> Self {
        DimRange::Range { start, end }
    }

    pub fn index(k: usize) -> Self {
        DimRange::Range { start: k, end: k + 1 }
    }

    pub fn bounds(&self, dim: usize) -> (usize, usize) {
        match *self {
            DimRange::Full => (0, dim),
            DimRange::Range { start, end } => (start, end),
        }
    }

    /// True when the range covers the whole dimension.
    pub fn is_full(&self, dim: usize) -> bool {
        self.bounds(dim) == (0, dim)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SliceSpec {
    ranges: Vec<DimRange>,
}

impl SliceSpec {
    pub fn new(ranges: Vec<DimRange>) -> Self {
        SliceSpec { ranges }
    }

    pub fn full(rank: usize) -> Self {
        SliceSpec {
            ranges: vec![DimRange::Full; rank],
        }
    }

    /// `[start, end)` on the first dimension, Full elsewhere.
    pub fn leading(rank: usize, start: usize, end: usize) -> Self {
        let mut ranges = vec![DimRange::Full; rank];
        ranges[0] = DimRange::range(start, end);
        SliceSpec { ranges }
    }

    pub fn ranges(&self) -> &[DimRange] {
        &self.ranges
    }

    pub fn rank(&self) -> usize {
        self.ranges.len()
    }

    /// Resolved `(start, end)` per dimension, validated against `shape`.
    pub fn bounds(&self, shape: &Shape) -> Result<Vec<(usize, usize)>> {
        if self.ranges.len() != shape.rank() {
            return Err(Error::RangeOutOfBounds(format!(
                "slice has {} ranges but tensor rank is {}",
                self.ranges.len(),
                shape.rank()
            )));
        }
        self.ranges
            .iter()
            .zip(shape.dims())
            .enumerate()
            .map(|(j, (r, &d))| {
                let (a, b) = r.bounds(d);
                if a >= b || b > d {
                    Err(Error::RangeOutOfBounds(format!(
                        "dimension {j}: [{a}, {b}) not within [0, {d})"
                    )))
                } else {
                    Ok((a, b))
                }
            })
            .collect()
    }

    pub fn output_shape(&self, shape: &Shape) -> Result<Shape> {
        let dims: Vec<usize> = self.bounds(shape)?.iter().map(|(a, b)| b - a).collect();
        Shape::new(dims)
    }
}

/// Numpy-style text: `:` for a full dimension, `a:b` for a range.
impl fmt::Display for SliceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (j, r) in self.ranges.iter().enumerate() {
            if j > 0 {
                write!(f, ",")?;
            }
            match r {
                DimRange::Full => write!(f, ":")?,
                DimRange::Range { start, end } => write!(f, "{start}:{end}")?,
            }
        }
        Ok(())
    }
}

pub fn slice_dense(t: &DenseTensor, s: &SliceSpec) -> Result<DenseTensor> {
    let bounds = s.bounds(t.shape())?;
    let out_shape = s.output_shape(t.shape())?;
    let rank = bounds.len();
    let strides = t.shape().strides();
    let run = bounds[rank - 1].1 - bounds[rank - 1].0;
    let mut out = t.data().empty_like(out_shape.element_count());
    // odometer over all but the last dimension
    let mut cursor: Vec<usize> = bounds.iter().map(|b| b.0).collect();
    loop {
        let base: usize = cursor.iter().zip(&strides).map(|(i, s)| i * s).sum();
        t.data().extend_range(&mut out, base, run);
        let mut j = rank - 1;
        loop {
            if j == 0 {
                return DenseTensor::new(out_shape, out);
            }
            j -= 1;
            cursor[j] += 1;
            if cursor[j] < bounds[j].1 {
                break;
            }
            cursor[j] = bounds[j].0;
        }
    }
}

/// Identifier of one stored tensor.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TensorId(String);

impl TensorId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() || id.chars().any(|c| c == '/' || c == '\\' || c.is_whitespace()) {
            return Err(Error::InvalidId(id));
        }
        Ok(TensorId(id))
    }

    /// `{prefix}-{rank}d-{12 hex chars}`.
    pub fn generate<R: rand::Rng + ?Sized>(prefix: &str, rank: usize, rng: &mut R) -> Self {
        let suffix: u64 = rng.gen::<u64>() & 0xffff_ffff_ffff;
        TensorId(format!("{prefix}-{rank}d-{suffix:012x}"))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for TensorId {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        TensorId::new(s)
    }
}

impl From<TensorId> for String {
    fn from(id: TensorId) -> Self {
        id.0
    }
}

impl fmt::Display for TensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
