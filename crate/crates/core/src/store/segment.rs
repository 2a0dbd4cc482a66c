//! Columnar segment files.
//!
//! ```text
//! "DTBL" | u16 version | u16 len + schema name | u16 columns | u64 rows
//! per column:
//!   u16 len + name | u8 type | u8 encoding | u64 payload len | u32 crc32 | payload
//! ```
//!
//! Plain payloads pack I64/F64 values; Text/Bytes are `u32 len + bytes`;
//! lists are `u32 count + packed elements`. Dictionary payloads are
//! `u32 dict size`, the dictionary entries in plain form, `u32 run count`,
//! then `(u32 dict index, u32 run length)` pairs.
//!
//! Encodings 2 and 3 are encodings 0 and 1 followed by a zstd frame over
//! the whole payload, used when the frame is strictly smaller. The CRC
//! covers the stored (possibly compressed) bytes.

use std::collections::HashMap;
use std::ops::Range;

use crate::container::Reader;
use crate::error::{Error, Result};
use crate::store::row::{ColumnType, ColumnValue, Row, Schema};

pub const SEGMENT_MAGIC: &[u8; 4] = b"DTBL";
pub const SEGMENT_VERSION: u16 = 1;
pub const MAX_DICT_ENTRIES: usize = 255;
const ZSTD_LEVEL: i32 = 3;
/// Payloads shorter than this are never compressed.
pub const ZSTD_MIN_PAYLOAD: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    Plain,
    DictRle,
    PlainZstd,
    DictRleZstd,
}

impl Encoding {
    pub fn tag(self) -> u8 {
        match self {
            Encoding::Plain => 0,
            Encoding::DictRle => 1,
            Encoding::PlainZstd => 2,
            Encoding::DictRleZstd => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            0 => Encoding::Plain,
            1 => Encoding::DictRle,
            2 => Encoding::PlainZstd,
            3 => Encoding::DictRleZstd,
            other => return Err(Error::malformed(format!("unknown encoding {other}"))),
        })
    }

    pub fn is_dictionary(self) -> bool {
        matches!(self, Encoding::DictRle | Encoding::DictRleZstd)
    }

    fn compressed(self) -> bool {
        matches!(self, Encoding::PlainZstd | Encoding::DictRleZstd)
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn encode_value(out: &mut Vec<u8>, v: &ColumnValue) {
    match v {
        ColumnValue::I64(x) => out.extend_from_slice(&x.to_le_bytes()),
        ColumnValue::F64(x) => out.extend_from_slice(&x.to_le_bytes()),
        ColumnValue::Text(s) => {
            put_u32(out, s.len());
            out.extend_from_slice(s.as_bytes());
        }
        ColumnValue::Bytes(b) => {
            put_u32(out, b.len());
            out.extend_from_slice(b);
        }
        ColumnValue::I64List(l) => {
            put_u32(out, l.len());
            for x in l {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        ColumnValue::F64List(l) => {
            put_u32(out, l.len());
            for x in l {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
    }
}

fn decode_value(r: &mut Reader<'_>, ty: ColumnType) -> Result<ColumnValue> {
    Ok(match ty {
        ColumnType::I64 => ColumnValue::I64(r.i64()?),
        ColumnType::F64 => ColumnValue::F64(r.f64()?),
        ColumnType::Text => {
            let n = r.u32()? as usize;
            let s = std::str::from_utf8(r.take(n)?)
                .map_err(|_| Error::malformed("text value is not UTF-8"))?;
            ColumnValue::Text(s.to_string())
        }
        ColumnType::Bytes => {
            let n = r.u32()? as usize;
            ColumnValue::Bytes(r.take(n)?.to_vec())
        }
        ColumnType::I64List => {
            let n = r.u32()? as usize;
            let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::malformed("list length"))?)?;
            ColumnValue::I64List(
                raw.chunks_exact(8)
                    .map(|c| i64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            )
        }
        ColumnType::F64List => {
            let n = r.u32()? as usize;
            let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::malformed("list length"))?)?;
            ColumnValue::F64List(
                raw.chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect(),
            )
        }
    })
}

fn plain_payload(values: &[&ColumnValue]) -> Vec<u8> {
    let mut out = Vec::new();
    for v in values {
        encode_value(&mut out, v);
    }
    out
}

/// Dictionary + run-length payload, or `None` if the column has more than
/// [`MAX_DICT_ENTRIES`] distinct values. Entries are keyed by their plain
/// bytes so floats are compared bitwise.
fn dict_payload(values: &[&ColumnValue]) -> Option<Vec<u8>> {
    let mut dict: Vec<Vec<u8>> = Vec::new();
    let mut lookup: HashMap<Vec<u8>, u32> = HashMap::new();
    let mut runs: Vec<(u32, u32)> = Vec::new();
    for v in values {
        let mut key = Vec::new();
        encode_value(&mut key, v);
        let idx = match lookup.get(&key) {
            Some(&i) => i,
            None => {
                if dict.len() == MAX_DICT_ENTRIES {
                    return None;
                }
                let i = dict.len() as u32;
                lookup.insert(key.clone(), i);
                dict.push(key);
                i
            }
        };
        match runs.last_mut() {
            Some((last, len)) if *last == idx => *len += 1,
            _ => runs.push((idx, 1)),
        }
    }
    let mut out = Vec::new();
    put_u32(&mut out, dict.len());
    for entry in &dict {
        out.extend_from_slice(entry);
    }
    put_u32(&mut out, runs.len());
    for (idx, len) in runs {
        out.extend_from_slice(&idx.to_le_bytes());
        out.extend_from_slice(&len.to_le_bytes());
    }
    Some(out)
}

/// Picks the column encoding: dictionary when it has at most 255 entries
/// and is strictly smaller than plain, then zstd when that is strictly
/// smaller again (only for payloads of at least [`ZSTD_MIN_PAYLOAD`] bytes).
pub fn encode_column(values: &[&ColumnValue]) -> (Encoding, Vec<u8>) {
    let plain = plain_payload(values);
    let (encoding, base) = match dict_payload(values) {
        Some(dict) if dict.len() < plain.len() => (Encoding::DictRle, dict),
        _ => (Encoding::Plain, plain),
    };
    if base.len() < ZSTD_MIN_PAYLOAD {
        return (encoding, base);
    }
    if let Ok(z) = zstd::bulk::compress(&base, ZSTD_LEVEL) {
        if z.len() < base.len() {
            let enc = match encoding {
                Encoding::DictRle => Encoding::DictRleZstd,
                _ => Encoding::PlainZstd,
            };
            return (enc, z);
        }
    }
    (encoding, base)
}

pub fn decode_column(
    ty: ColumnType,
    encoding: Encoding,
    payload: &[u8],
    rows: usize,
) -> Result<Vec<ColumnValue>> {
    let inflated;
    let payload = if encoding.compressed() {
        inflated = zstd::stream::decode_all(payload)
            .map_err(|e| Error::malformed(format!("zstd: {e}")))?;
        &inflated[..]
    } else {
        payload
    };
    let mut r = Reader::new(payload);
    let mut out = Vec::with_capacity(rows);
    if encoding.is_dictionary() {
        let n = r.u32()? as usize;
        let dict = (0..n)
            .map(|_| decode_value(&mut r, ty))
            .collect::<Result<Vec<_>>>()?;
        let runs = r.u32()? as usize;
        for _ in 0..runs {
            let idx = r.u32()? as usize;
            let len = r.u32()? as usize;
            let v = dict
                .get(idx)
                .ok_or_else(|| Error::malformed("dictionary index out of range"))?;
            if out.len() + len > rows {
                return Err(Error::malformed("runs exceed row count"));
            }
            out.extend(std::iter::repeat_n(v, len).cloned());
        }
    } else {
        for _ in 0..rows {
            out.push(decode_value(&mut r, ty)?);
        }
    }
    r.finish()?;
    if out.len() != rows {
        return Err(Error::malformed("column row count mismatch"));
    }
    Ok(out)
}

pub fn write_segment(schema: &Schema, rows: &[Row]) -> Result<Vec<u8>> {
    if rows.is_empty() {
        return Err(Error::SchemaViolation("a segment needs at least one row".into()));
    }
    for row in rows {
        schema.validate(row)?;
    }
    let mut out = Vec::new();
    out.extend_from_slice(SEGMENT_MAGIC);
    out.extend_from_slice(&SEGMENT_VERSION.to_le_bytes());
    out.extend_from_slice(&(schema.name.len() as u16).to_le_bytes());
    out.extend_from_slice(schema.name.as_bytes());
    out.extend_from_slice(&(schema.columns.len() as u16).to_le_bytes());
    out.extend_from_slice(&(rows.len() as u64).to_le_bytes());
    for (c, def) in schema.columns.iter().enumerate() {
        let values: Vec<&ColumnValue> = rows.iter().map(|r| r.get(c)).collect();
        let (encoding, payload) = encode_column(&values);
        out.extend_from_slice(&(def.name.len() as u16).to_le_bytes());
        out.extend_from_slice(def.name.as_bytes());
        out.push(def.ty.tag());
        out.push(encoding.tag());
        out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
        out.extend_from_slice(&crc32fast::hash(&payload).to_le_bytes());
        out.extend_from_slice(&payload);
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct ColumnChunk {
    pub name: String,
    pub ty: ColumnType,
    pub encoding: Encoding,
    pub crc: u32,
    pub payload: Range<usize>,
}

/// Parsed segment directory; columns are decoded on demand.
#[derive(Debug)]
pub struct SegmentReader {
    bytes: Vec<u8>,
    schema: String,
    rows: usize,
    header_len: usize,
    columns: Vec<ColumnChunk>,
}

impl SegmentReader {
    pub fn open(bytes: Vec<u8>) -> Result<Self> {
        let mut r = Reader::new(&bytes);
        if r.take(4)? != SEGMENT_MAGIC {
            return Err(Error::BadMagic);
        }
        let version = r.u16()?;
        if version != SEGMENT_VERSION {
            return Err(Error::UnsupportedVersion(version));
        }
        let n = r.u16()? as usize;
        let schema = std::str::from_utf8(r.take(n)?)
            .map_err(|_| Error::malformed("schema name is not UTF-8"))?
            .to_string();
        let ncols = r.u16()? as usize;
        let rows = r.u64()? as usize;
        let header_len = r.position();
        let mut columns = Vec::with_capacity(ncols);
        for _ in 0..ncols {
            let n = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(n)?)
                .map_err(|_| Error::malformed("column name is not UTF-8"))?
                .to_string();
            let ty = ColumnType::from_tag(r.u8()?)?;
            let encoding = Encoding::from_tag(r.u8()?)?;
            let len = r.u64()? as usize;
            let crc = r.u32()?;
            let start = r.position();
            r.take(len)?;
            columns.push(ColumnChunk {
                name,
                ty,
                encoding,
                crc,
                payload: start..start + len,
            });
        }
        r.finish()?;
        Ok(SegmentReader {
            bytes,
            schema,
            rows,
            header_len,
            columns,
        })
    }

    pub fn schema_name(&self) -> &str {
        &self.schema
    }

    pub fn row_count(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> &[ColumnChunk] {
        &self.columns
    }

    pub fn header_len(&self) -> usize {
        self.header_len
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// Stored payload size of column `i`.
    pub fn payload_len(&self, i: usize) -> usize {
        self.columns[i].payload.len()
    }

    pub fn decode(&self, i: usize) -> Result<Vec<ColumnValue>> {
        let c = &self.columns[i];
        let payload = &self.bytes[c.payload.clone()];
        if crc32fast::hash(payload) != c.crc {
            return Err(Error::CorruptColumn(c.name.clone()));
        }
        decode_column(c.ty, c.encoding, payload, self.rows)
    }

    pub fn read_all(&self) -> Result<Vec<Row>> {
        let mut cols = (0..self.columns.len())
            .map(|i| self.decode(i).map(Vec::into_iter))
            .collect::<Result<Vec<_>>>()?;
        Ok((0..self.rows)
            .map(|_| Row(cols.iter_mut().map(|c| c.next().unwrap()).collect()))
            .collect())
    }
}

/// Decodes a whole segment, returning the schema name and rows.
pub fn read_segment(bytes: &[u8]) -> Result<(String, Vec<Row>)> {
    let reader = SegmentReader::open(bytes.to_vec())?;
    let rows = reader.read_all()?;
    Ok((reader.schema, rows))
}
