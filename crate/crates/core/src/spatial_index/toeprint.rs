//! Toeprints: footprint regions numbered along the Z-order curve and stored
//! in id order, so an id interval is a contiguous byte range.
//!
//! `toeprints.bin` (`GQTP` header) holds 48-byte records
//! `toeprint_id u32, doc_id u32, xmin ymin xmax ymax f64, certainty f64`.

use std::collections::BTreeMap;
use std::path::Path;

use super::morton::TileGrid;
use super::sweeps::Interval;
use crate::corpus::DocId;
use crate::error::{Error, Result};
use crate::geom::{Footprint, Rect, Region};
use crate::io::{self, ByteReader, DiskFile, IoMeter, HEADER_LEN};

pub const TOEPRINT_FILE: &str = "toeprints.bin";
const TOEPRINT_MAGIC: &[u8; 4] = b"GQTP";
pub const RECORD_LEN: u64 = 48;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Toeprint {
    pub id: u32,
    pub doc_id: DocId,
    pub region: Region,
}

/// One toeprint per footprint region, ordered by the Z-order code of the
/// region's center tile, then doc id, then rectangle.
pub fn assign_toeprints(footprints: &BTreeMap<DocId, Footprint>, grid: TileGrid) -> Vec<Toeprint> {
    let mut keyed: Vec<(u32, DocId, Region)> = footprints
        .iter()
        .flat_map(|(&doc, fp)| fp.regions().iter().map(move |r| (grid.center_code(&r.rect), doc, *r)))
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.rect.lex_cmp(&b.2.rect)));
    keyed
        .into_iter()
        .enumerate()
        .map(|(i, (_, doc_id, region))| Toeprint { id: i as u32, doc_id, region })
        .collect()
}

/// Toeprint id → doc id.
pub fn translation_table(toeprints: &[Toeprint]) -> Vec<DocId> {
    toeprints.iter().map(|t| t.doc_id).collect()
}

pub fn encode_toeprints(toeprints: &[Toeprint]) -> Vec<u8> {
    let mut out = io::header(TOEPRINT_MAGIC);
    out.reserve(toeprints.len() * RECORD_LEN as usize);
    for t in toeprints {
        out.extend_from_slice(&t.id.to_le_bytes());
        out.extend_from_slice(&t.doc_id.to_le_bytes());
        let r = &t.region;
        for v in [r.rect.xmin, r.rect.ymin, r.rect.xmax, r.rect.ymax, r.certainty] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn write_toeprints(toeprints: &[Toeprint], dir: &Path) -> Result<()> {
    io::write_file(&dir.join(TOEPRINT_FILE), &encode_toeprints(toeprints))
}

#[derive(Debug)]
pub struct ToeprintStore {
    file: DiskFile,
    count: u32,
}

impl ToeprintStore {
    pub fn open(dir: &Path) -> Result<Self> {
        let file = DiskFile::open(&dir.join(TOEPRINT_FILE), TOEPRINT_MAGIC)?;
        let body = file.len() - HEADER_LEN;
        if body % RECORD_LEN != 0 {
            return Err(Error::corrupt(file.path(), file.len(), "toeprint file is not a whole number of records"));
        }
        let count = (body / RECORD_LEN) as u32;
        Ok(ToeprintStore { file, count })
    }

    pub fn len(&self) -> u32 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Bytes of toeprint data excluding the header.
    pub fn data_bytes(&self) -> u64 {
        u64::from(self.count) * RECORD_LEN
    }

    pub fn byte_range(iv: Interval) -> (u64, u64) {
        (HEADER_LEN + u64::from(iv.lo) * RECORD_LEN, HEADER_LEN + (u64::from(iv.hi) + 1) * RECORD_LEN)
    }

    /// One contiguous scan: one seek plus every byte of the interval.
    pub fn scan(&self, iv: Interval, meter: &mut IoMeter) -> Result<Vec<Toeprint>> {
        if iv.hi >= self.count {
            return Err(Error::contract(format!("sweep [{}, {}] beyond {} toeprints", iv.lo, iv.hi, self.count)));
        }
        let (start, end) = Self::byte_range(iv);
        let bytes = self.file.read_range(start, end)?;
        meter.toeprint_bytes += end - start;
        meter.toeprint_seeks += 1;
        self.decode(&bytes, start, iv.lo)
    }

    fn decode(&self, bytes: &[u8], start: u64, first_id: u32) -> Result<Vec<Toeprint>> {
        let mut r = ByteReader::new(self.file.path(), bytes, 0);
        let mut out = Vec::with_capacity(bytes.len() / RECORD_LEN as usize);
        let mut expect = first_id;
        while !r.is_done() {
            let id = r.u32()?;
            if id != expect {
                return Err(Error::corrupt(self.file.path(), start + r.pos() as u64, format!("toeprint id {id}, expected {expect}")));
            }
            let doc_id = r.u32()?;
            let rect = Rect { xmin: r.f64()?, ymin: r.f64()?, xmax: r.f64()?, ymax: r.f64()? };
            out.push(Toeprint { id, doc_id, region: Region::new(rect, r.f64()?) });
            expect += 1;
        }
        Ok(out)
    }

    /// Unmetered full read.
    pub fn read_all(&self) -> Result<Vec<Toeprint>> {
        let bytes = self.file.read_range(HEADER_LEN, self.file.len())?;
        self.decode(&bytes, HEADER_LEN, 0)
    }
}
