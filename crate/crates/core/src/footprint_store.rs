//! Footprints on disk, sorted by doc id, fetched with a gap-aware policy:
//! requested records closer than `G` bytes are read in one access, larger gaps
//! cost a forward seek.
//!
//! `footprints.bin` (`GQFP` header) holds records of
//! `doc_id u32, region_count u16, region_count × (xmin ymin xmax ymax certainty: f64)`,
//! all little-endian. `footprints.idx` (`GQFI` header) holds `count u32`, then
//! `count × (doc_id u32, offset u64, length u32)` ascending by doc id.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::corpus::DocId;
use crate::error::{Error, Result};
use crate::geom::{Footprint, Rect, Region};
use crate::io::{self, ByteReader, DiskFile, IoMeter, HEADER_LEN};

pub const STORE_FILE: &str = "footprints.bin";
pub const INDEX_FILE: &str = "footprints.idx";
const STORE_MAGIC: &[u8; 4] = b"GQFP";
const INDEX_MAGIC: &[u8; 4] = b"GQFI";

/// Default gap threshold: 64 KiB.
pub const DEFAULT_GAP: u64 = 64 * 1024;

#[derive(Clone, Debug, PartialEq)]
pub struct FootprintRecord {
    pub doc_id: DocId,
    pub footprint: Footprint,
    pub offset: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OffsetEntry {
    pub doc_id: DocId,
    pub offset: u64,
    pub length: u32,
}

impl OffsetEntry {
    pub fn end(&self) -> u64 {
        self.offset + u64::from(self.length)
    }
}

/// Half-open byte ranges to read, and the records they cover.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FetchPlan {
    pub runs: Vec<(u64, u64)>,
    pub doc_ids: Vec<DocId>,
}

impl FetchPlan {
    pub fn bytes(&self) -> u64 {
        self.runs.iter().map(|(s, e)| e - s).sum()
    }
}

/// Merges ascending, disjoint ranges whose gap is at most `gap` bytes.
pub fn coalesce(ranges: &[(u64, u64)], gap: u64) -> Vec<(u64, u64)> {
    let mut out: Vec<(u64, u64)> = Vec::new();
    for &(s, e) in ranges {
        match out.last_mut() {
            Some(last) if s.saturating_sub(last.1) <= gap => last.1 = last.1.max(e),
            _ => out.push((s, e)),
        }
    }
    out
}

pub fn encode_record(doc_id: DocId, fp: &Footprint) -> Result<Vec<u8>> {
    let count = u16::try_from(fp.len()).map_err(|_| Error::invalid(format!("doc {doc_id}: too many regions")))?;
    let mut out = Vec::with_capacity(6 + 40 * fp.len());
    out.extend_from_slice(&doc_id.to_le_bytes());
    out.extend_from_slice(&count.to_le_bytes());
    for r in fp.regions() {
        for v in [r.rect.xmin, r.rect.ymin, r.rect.xmax, r.rect.ymax, r.certainty] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

fn decode_record(r: &mut ByteReader<'_>) -> Result<(DocId, Footprint)> {
    let doc_id = r.u32()?;
    let count = r.u16()?;
    let mut regions = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let rect = Rect { xmin: r.f64()?, ymin: r.f64()?, xmax: r.f64()?, ymax: r.f64()? };
        regions.push(Region::new(rect, r.f64()?));
    }
    let fp = Footprint::new(regions).map_err(|e| r.corrupt(format!("doc {doc_id}: {e}")))?;
    Ok((doc_id, fp))
}

/// Doc id → record location.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OffsetTable {
    entries: Vec<OffsetEntry>,
}

impl OffsetTable {
    pub fn new(entries: Vec<OffsetEntry>) -> Result<Self> {
        if entries.windows(2).any(|w| w[0].doc_id >= w[1].doc_id || w[0].end() > w[1].offset) {
            return Err(Error::invalid("offset table entries must ascend by doc id and offset"));
        }
        Ok(OffsetTable { entries })
    }

    pub fn entries(&self) -> &[OffsetEntry] {
        &self.entries
    }

    pub fn get(&self, doc: DocId) -> Option<OffsetEntry> {
        self.entries.binary_search_by_key(&doc, |e| e.doc_id).ok().map(|i| self.entries[i])
    }

    pub fn contains(&self, doc: DocId) -> bool {
        self.get(doc).is_some()
    }

    /// Groups the records of ascending `doc_ids` into runs: a gap of at most
    /// `gap` bytes between consecutive requested records keeps them in one run.
    pub fn plan_fetch(&self, doc_ids: &[DocId], gap: u64) -> Result<FetchPlan> {
        if doc_ids.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::contract("plan_fetch doc ids must be strictly ascending"));
        }
        let ranges = doc_ids
            .iter()
            .map(|&d| self.get(d).map(|e| (e.offset, e.end())).ok_or(Error::UnknownDoc(d)))
            .collect::<Result<Vec<_>>>()?;
        Ok(FetchPlan { runs: coalesce(&ranges, gap), doc_ids: doc_ids.to_vec() })
    }
}

/// Writes `footprints.bin` and `footprints.idx` into `dir`.
pub fn write_store(footprints: &BTreeMap<DocId, Footprint>, dir: &Path) -> Result<OffsetTable> {
    let mut data = io::header(STORE_MAGIC);
    let mut entries = Vec::with_capacity(footprints.len());
    for (&doc_id, fp) in footprints {
        let rec = encode_record(doc_id, fp)?;
        entries.push(OffsetEntry { doc_id, offset: data.len() as u64, length: rec.len() as u32 });
        data.extend_from_slice(&rec);
    }
    let mut idx = io::header(INDEX_MAGIC);
    idx.extend_from_slice(&(entries.len() as u32).to_le_bytes());
    for e in &entries {
        idx.extend_from_slice(&e.doc_id.to_le_bytes());
        idx.extend_from_slice(&e.offset.to_le_bytes());
        idx.extend_from_slice(&e.length.to_le_bytes());
    }
    io::write_file(&dir.join(STORE_FILE), &data)?;
    io::write_file(&dir.join(INDEX_FILE), &idx)?;
    OffsetTable::new(entries)
}

#[derive(Debug)]
pub struct FootprintStore {
    table: OffsetTable,
    file: DiskFile,
}

impl FootprintStore {
    pub fn open(dir: &Path) -> Result<Self> {
        let idx_path = dir.join(INDEX_FILE);
        let bytes = io::read_file(&idx_path)?;
        io::check_header(&idx_path, &bytes, INDEX_MAGIC)?;
        let mut r = ByteReader::new(&idx_path, &bytes, HEADER_LEN as usize);
        let count = r.u32()?;
        let entries = (0..count)
            .map(|_| Ok(OffsetEntry { doc_id: r.u32()?, offset: r.u64()?, length: r.u32()? }))
            .collect::<Result<Vec<_>>>()?;
        let table = OffsetTable::new(entries).map_err(|e| Error::corrupt(&idx_path, 0, e.to_string()))?;
        let file = DiskFile::open(&dir.join(STORE_FILE), STORE_MAGIC)?;
        Ok(FootprintStore { table, file })
    }

    pub fn table(&self) -> &OffsetTable {
        &self.table
    }

    pub fn path(&self) -> PathBuf {
        self.file.path().to_path_buf()
    }

    pub fn plan_fetch(&self, doc_ids: &[DocId], gap: u64) -> Result<FetchPlan> {
        self.table.plan_fetch(doc_ids, gap)
    }

    /// Executes a plan: one seek per run, every byte of every run charged.
    pub fn fetch(&self, plan: &FetchPlan, meter: &mut IoMeter) -> Result<Vec<FootprintRecord>> {
        let mut out = Vec::with_capacity(plan.doc_ids.len());
        let mut docs = plan.doc_ids.iter().peekable();
        for &(start, end) in &plan.runs {
            let bytes = self.file.read_range(start, end)?;
            meter.footprint_bytes += end - start;
            meter.footprint_seeks += 1;
            while let Some(&&doc) = docs.peek() {
                let e = self.table.get(doc).ok_or(Error::UnknownDoc(doc))?;
                if e.offset < start || e.end() > end {
                    break;
                }
                out.push(self.decode_at(&bytes, start, e)?);
                docs.next();
            }
        }
        if let Some(&doc) = docs.next() {
            return Err(Error::contract(format!("plan does not cover doc {doc}")));
        }
        Ok(out)
    }

    fn decode_at(&self, run: &[u8], run_start: u64, e: OffsetEntry) -> Result<FootprintRecord> {
        let from = (e.offset - run_start) as usize;
        let slice = &run[..from + e.length as usize];
        let mut r = ByteReader::new(self.file.path(), slice, from);
        let (doc_id, footprint) = decode_record(&mut r)?;
        if doc_id != e.doc_id || !r.is_done() {
            return Err(Error::corrupt(self.file.path(), e.offset, format!("record does not match index entry for doc {}", e.doc_id)));
        }
        Ok(FootprintRecord { doc_id, footprint, offset: e.offset })
    }

    /// Unmetered point lookup.
    pub fn get(&self, doc: DocId) -> Result<Option<Footprint>> {
        let Some(e) = self.table.get(doc) else { return Ok(None) };
        let bytes = self.file.read_range(e.offset, e.end())?;
        Ok(Some(self.decode_at(&bytes, e.offset, e)?.footprint))
    }

    /// Unmetered full scan.
    pub fn read_all(&self) -> Result<BTreeMap<DocId, Footprint>> {
        let bytes = self.file.read_range(0, self.file.len())?;
        self.table
            .entries()
            .iter()
            .map(|&e| {
                if e.end() > bytes.len() as u64 {
                    return Err(Error::corrupt(self.file.path(), e.offset, "record past end of file"));
                }
                let rec = self.decode_at(&bytes[..e.end() as usize], 0, e)?;
                Ok((rec.doc_id, rec.footprint))
            })
            .collect()
    }
}
