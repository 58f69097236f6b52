//! File headers, positioned reads and the I/O meter shared by the access paths.

use std::fs::{self, File};
use std::ops::AddAssign;
use std::os::unix::fs::FileExt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;
/// Every artifact file starts with a 4-byte magic and a little-endian u32 version.
pub const HEADER_LEN: u64 = 8;

pub fn header(magic: &[u8; 4]) -> Vec<u8> {
    let mut h = magic.to_vec();
    h.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    h
}

pub fn check_header(path: &Path, bytes: &[u8], magic: &[u8; 4]) -> Result<()> {
    if bytes.len() < HEADER_LEN as usize || &bytes[..4] != magic {
        return Err(Error::corrupt(path, 0, format!("missing {} header", String::from_utf8_lossy(magic))));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(Error::corrupt(path, 4, format!("format version {version}, expected {FORMAT_VERSION}")));
    }
    Ok(())
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

/// A read-only file accessed by byte range.
#[derive(Debug)]
pub struct DiskFile {
    path: PathBuf,
    file: File,
    len: u64,
}

impl DiskFile {
    pub fn open(path: &Path, magic: &[u8; 4]) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        let mut head = [0u8; HEADER_LEN as usize];
        if len >= HEADER_LEN {
            file.read_exact_at(&mut head, 0).map_err(|e| Error::io(path, e))?;
        }
        check_header(path, &head[..len.min(HEADER_LEN) as usize], magic)?;
        Ok(DiskFile { path: path.to_path_buf(), file, len })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len <= HEADER_LEN
    }

    /// Reads `[start, end)`; a range running past the end of the file is corruption.
    pub fn read_range(&self, start: u64, end: u64) -> Result<Vec<u8>> {
        if end < start || end > self.len {
            return Err(Error::corrupt(&self.path, start, format!("range [{start},{end}) exceeds file length {}", self.len)));
        }
        let mut buf = vec![0u8; (end - start) as usize];
        self.file.read_exact_at(&mut buf, start).map_err(|e| Error::io(&self.path, e))?;
        Ok(buf)
    }
}

/// Bytes read and seeks issued, by data category.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct IoMeter {
    pub postings_bytes: u64,
    pub postings_seeks: u64,
    pub footprint_bytes: u64,
    pub footprint_seeks: u64,
    pub toeprint_bytes: u64,
    pub toeprint_seeks: u64,
}

impl IoMeter {
    pub fn bytes(&self) -> u64 {
        self.postings_bytes + self.footprint_bytes + self.toeprint_bytes
    }

    pub fn seeks(&self) -> u64 {
        self.postings_seeks + self.footprint_seeks + self.toeprint_seeks
    }
}

impl AddAssign for IoMeter {
    fn add_assign(&mut self, o: Self) {
        self.postings_bytes += o.postings_bytes;
        self.postings_seeks += o.postings_seeks;
        self.footprint_bytes += o.footprint_bytes;
        self.footprint_seeks += o.footprint_seeks;
        self.toeprint_bytes += o.toeprint_bytes;
        self.toeprint_seeks += o.toeprint_seeks;
    }
}

/// Little-endian cursor over an in-memory buffer.
pub(crate) struct ByteReader<'a> {
    path: &'a Path,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    pub fn new(path: &'a Path, bytes: &'a [u8], pos: usize) -> Self {
        ByteReader { path, bytes, pos }
    }

    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn is_done(&self) -> bool {
        self.pos >= self.bytes.len()
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::corrupt(self.path, self.pos as u64, format!("truncated: need {n} more bytes")));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    pub fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn corrupt(&self, message: impl Into<String>) -> Error {
        Error::corrupt(self.path, self.pos as u64, message)
    }
}
