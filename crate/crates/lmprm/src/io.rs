//! Binary artifact formats for roadmap graphs and landmark tables.
//!
//! Both formats are little-endian and end with a CRC-64 (XZ polynomial) of
//! every preceding byte. Graph files start with magic "PRMG", table files
//! with "LMRK"; both carry a format version right after the magic. Loads
//! verify magic, version, structural sizes, and the checksum, and report any
//! violation as `Error::Format`.

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};

pub const GRAPH_MAGIC: &[u8; 4] = b"PRMG";
pub const TABLE_MAGIC: &[u8; 4] = b"LMRK";
pub const FORMAT_VERSION: u32 = 1;

const CRC64: crc::Crc<u64> = crc::Crc::<u64>::new(&crc::CRC_64_XZ);

pub fn crc64(bytes: &[u8]) -> u64 {
    CRC64.checksum(bytes)
}

/// Appends the checksum of everything currently in `buf`.
pub(crate) fn seal(mut buf: Vec<u8>) -> Vec<u8> {
    let sum = crc64(&buf);
    buf.write_u64::<LittleEndian>(sum).expect("vec write");
    buf
}

/// Splits a sealed byte stream into payload and verified checksum.
pub(crate) fn unseal(bytes: &[u8]) -> Result<&[u8]> {
    if bytes.len() < 8 {
        return Err(Error::Format("file shorter than its checksum".into()));
    }
    let (payload, tail) = bytes.split_at(bytes.len() - 8);
    let stored = u64::from_le_bytes(tail.try_into().expect("8-byte tail"));
    let actual = crc64(payload);
    if stored != actual {
        return Err(Error::Format(format!(
            "checksum mismatch: stored {stored:#018x}, computed {actual:#018x}"
        )));
    }
    Ok(payload)
}

/// Cursor over a payload with truncation-checked reads.
pub(crate) struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Self { buf }
    }

    pub fn remaining(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    fn truncated<T>() -> Result<T> {
        Err(Error::Format("truncated payload".into()))
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Self::truncated();
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    pub fn u8(&mut self) -> Result<u8> {
        let mut b = self.bytes(1)?;
        b.read_u8().or_else(|_| Self::truncated())
    }

    pub fn u32(&mut self) -> Result<u32> {
        let mut b = self.bytes(4)?;
        b.read_u32::<LittleEndian>().or_else(|_| Self::truncated())
    }

    pub fn u64(&mut self) -> Result<u64> {
        let mut b = self.bytes(8)?;
        b.read_u64::<LittleEndian>().or_else(|_| Self::truncated())
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    /// Length-prefixed UTF-8 string (u32 length).
    pub fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let raw = self.bytes(len)?;
        String::from_utf8(raw.to_vec())
            .map_err(|_| Error::Format("string field is not valid UTF-8".into()))
    }

    /// Checks that `count` elements of `elem_size` bytes fit in the rest of
    /// the payload before any allocation happens.
    pub fn expect_array(&self, count: u64, elem_size: usize) -> Result<usize> {
        let count: usize = count
            .try_into()
            .map_err(|_| Error::Format(format!("array length {count} overflows")))?;
        let bytes = count
            .checked_mul(elem_size)
            .ok_or_else(|| Error::Format(format!("array length {count} overflows")))?;
        if self.remaining() < bytes {
            return Err(Error::Format(format!(
                "payload too short for {count} elements of {elem_size} bytes"
            )));
        }
        Ok(count)
    }

    pub fn u64_vec(&mut self, count: u64) -> Result<Vec<u64>> {
        let count = self.expect_array(count, 8)?;
        let mut raw = self.bytes(count * 8)?;
        let mut out = Vec::with_capacity(count);
        for _ in 0..count {
            out.push(raw.read_u64::<LittleEndian>().expect("length checked"));
        }
        Ok(out)
    }

    pub fn f64_vec(&mut self, count: u64) -> Result<Vec<f64>> {
        Ok(self.u64_vec(count)?.into_iter().map(f64::from_bits).collect())
    }
}

pub(crate) struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new(magic: &[u8; 4]) -> Self {
        let mut buf = Vec::new();
        buf.extend_from_slice(magic);
        buf.write_u32::<LittleEndian>(FORMAT_VERSION).expect("vec write");
        Self { buf }
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.write_u8(v).expect("vec write");
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.write_u32::<LittleEndian>(v).expect("vec write");
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.write_u64::<LittleEndian>(v).expect("vec write");
    }

    pub fn f64(&mut self, v: f64) {
        self.u64(v.to_bits());
    }

    pub fn string(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.buf.extend_from_slice(s.as_bytes());
    }

    pub fn f64_slice(&mut self, vs: &[f64]) {
        for &v in vs {
            self.f64(v);
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

/// Strips and checks magic and version, returning the rest of the payload.
pub(crate) fn open_payload<'a>(bytes: &'a [u8], magic: &[u8; 4]) -> Result<Reader<'a>> {
    let payload = unseal(bytes)?;
    let mut r = Reader::new(payload);
    let found = r.bytes(4)?;
    if found != magic {
        return Err(Error::Format(format!(
            "bad magic: expected {:?}, found {:?}",
            String::from_utf8_lossy(magic),
            String::from_utf8_lossy(found)
        )));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    Ok(r)
}
