//! Binary tensor containers.
//!
//! `.dten`: `"DTEN"`, u16 version, u8 dtype, u16 ndim, ndim x u64 dims,
//! row-major payload.
//!
//! `.dcoo`: `"DCOO"`, u16 version, u16 ndim, ndim x u64 dims, u64 nnz,
//! nnz x ndim x i64 indices, nnz x f64 values.
//!
//! All integers little-endian.

use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::{CooTensor, DenseTensor, ElementType, Shape, TensorData};

pub const DENSE_MAGIC: &[u8; 4] = b"DTEN";
pub const COO_MAGIC: &[u8; 4] = b"DCOO";
pub const CONTAINER_VERSION: u16 = 1;

pub fn dense_header_len(rank: usize) -> usize {
    4 + 2 + 1 + 2 + 8 * rank
}

pub fn coo_header_len(rank: usize) -> usize {
    4 + 2 + 2 + 8 * rank + 8
}

/// Size of the `.dten` encoding without building it.
pub fn dense_container_len(shape: &Shape, dtype: ElementType) -> usize {
    dense_header_len(shape.rank()) + shape.element_count() * dtype.byte_width()
}

pub fn coo_container_len(rank: usize, nnz: usize) -> usize {
    coo_header_len(rank) + nnz * (rank + 1) * 8
}

pub fn encode_dense(t: &DenseTensor) -> Vec<u8> {
    let shape = t.shape();
    let mut out = Vec::with_capacity(dense_container_len(shape, t.dtype()));
    out.extend_from_slice(DENSE_MAGIC);
    out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    out.push(t.dtype().tag());
    out.extend_from_slice(&(shape.rank() as u16).to_le_bytes());
    for &d in shape.dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.extend_from_slice(&t.data().to_le_bytes());
    out
}

pub fn decode_dense(bytes: &[u8]) -> Result<DenseTensor> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != DENSE_MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u16()?;
    if version != CONTAINER_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let dtype = ElementType::from_tag(r.u8()?)?;
    let shape = r.shape()?;
    let payload = r.take(shape.element_count() * dtype.byte_width())?;
    r.finish()?;
    DenseTensor::new(shape, TensorData::from_le_bytes(dtype, payload)?)
}

pub fn encode_coo(c: &CooTensor) -> Vec<u8> {
    let rank = c.rank();
    let mut out = Vec::with_capacity(coo_container_len(rank, c.nnz()));
    out.extend_from_slice(COO_MAGIC);
    out.extend_from_slice(&CONTAINER_VERSION.to_le_bytes());
    out.extend_from_slice(&(rank as u16).to_le_bytes());
    for &d in c.shape().dims() {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
    out.extend_from_slice(&(c.nnz() as u64).to_le_bytes());
    for &i in c.flat_indices() {
        out.extend_from_slice(&(i as i64).to_le_bytes());
    }
    for &v in c.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_coo(bytes: &[u8]) -> Result<CooTensor> {
    let mut r = Reader::new(bytes);
    if r.take(4)? != COO_MAGIC {
        return Err(Error::BadMagic);
    }
    let version = r.u16()?;
    if version != CONTAINER_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let shape = r.shape()?;
    let nnz = r.u64()? as usize;
    let rank = shape.rank();
    let mut indices = Vec::with_capacity(nnz * rank);
    for _ in 0..nnz * rank {
        let i = r.i64()?;
        indices.push(usize::try_from(i).map_err(|_| Error::malformed("negative index"))?);
    }
    let mut values = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        values.push(r.f64()?);
    }
    r.finish()?;
    CooTensor::new(shape, indices, values)
}

pub fn read_dense_file(path: impl AsRef<Path>) -> Result<DenseTensor> {
    decode_dense(&std::fs::read(path)?)
}

pub fn write_dense_file(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    std::fs::write(path, encode_dense(t))?;
    Ok(())
}

pub fn read_coo_file(path: impl AsRef<Path>) -> Result<CooTensor> {
    decode_coo(&std::fs::read(path)?)
}

pub fn write_coo_file(path: impl AsRef<Path>, c: &CooTensor) -> Result<()> {
    std::fs::write(path, encode_coo(c))?;
    Ok(())
}

/// Bounds-checked little-endian cursor shared by the binary formats.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub(crate) fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub(crate) fn position(&self) -> usize {
        self.pos
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::malformed(format!("need {n} bytes at offset {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn i64(&mut self) -> Result<i64> {
        Ok(i64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn shape(&mut self) -> Result<Shape> {
        let ndim = self.u16()? as usize;
        let mut dims = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            dims.push(self.u64()? as usize);
        }
        Shape::new(dims)
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.buf.len() {
            return Err(Error::malformed(format!(
                "{} trailing bytes",
                self.buf.len() - self.pos
            )));
        }
        Ok(())
    }
}
