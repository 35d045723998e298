//! Little-endian model blobs: 8 magic bytes, a u32 version, then whatever
//! shapes and row-major `f64` payloads the model writes.

use crate::error::DetectorError;

pub(crate) struct BlobWriter {
    buf: Vec<u8>,
}

impl BlobWriter {
    pub fn new(magic: &[u8; 8], version: u32) -> Self {
        let mut buf = magic.to_vec();
        buf.extend_from_slice(&version.to_le_bytes());
        Self { buf }
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn f64s(&mut self, values: impl IntoIterator<Item = f64>) {
        for v in values {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf
    }
}

pub(crate) struct BlobReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> BlobReader<'a> {
    pub fn open(buf: &'a [u8], magic: &[u8; 8], version: u32) -> Result<Self, DetectorError> {
        if buf.len() < 12 || &buf[..8] != magic {
            return Err(DetectorError::BadModel("wrong magic bytes".into()));
        }
        let found = u32::from_le_bytes(buf[8..12].try_into().unwrap());
        if found != version {
            return Err(DetectorError::BadModel(format!("unsupported version {found}")));
        }
        Ok(Self { buf, pos: 12 })
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], DetectorError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| DetectorError::BadModel("truncated".into()))?;
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    pub fn u64(&mut self) -> Result<u64, DetectorError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn usize(&mut self) -> Result<usize, DetectorError> {
        usize::try_from(self.u64()?).map_err(|_| DetectorError::BadModel("size overflow".into()))
    }

    pub fn f64s(&mut self, n: usize) -> Result<Vec<f64>, DetectorError> {
        let bytes = n
            .checked_mul(8)
            .ok_or_else(|| DetectorError::BadModel("size overflow".into()))?;
        Ok(self
            .take(bytes)?
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    pub fn finish(self) -> Result<(), DetectorError> {
        if self.pos == self.buf.len() {
            Ok(())
        } else {
            Err(DetectorError::BadModel(format!("{} trailing bytes", self.buf.len() - self.pos)))
        }
    }
}
