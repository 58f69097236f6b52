//! DocID-sorted, varint/delta compressed inverted index with
//! document-at-a-time conjunctive traversal.
//!
//! Layout (all integers little-endian, every file starts with an 8-byte
//! magic + version header):
//!
//! * `lexicon.bin` (`GQLX`): `n u32, vocab_size u32, total_tokens u64, entries u32`,
//!   then per term in byte order: `term_len u16, term, doc_freq u32,
//!   offset u64, length u32, flags u8 (bit 0 = positional), blocks u32`,
//!   then `blocks × (last_doc u32, end u32)` skip entries.
//! * `postings.bin` (`GQPO`): concatenated runs; `offset` is absolute in the file.
//! * `doclens.bin` (`GQDL`): `count u32`, then one `u32` token count per doc.

mod postings;
pub mod varint;

use std::collections::BTreeMap;
use std::path::Path;

pub use postings::{decode_postings, encode_postings, encode_run, EncodedRun, Posting, SkipEntry, BLOCK_SIZE};
use postings::RunDecoder;

use crate::corpus::{Collection, CollectionStats, DocId};
use crate::error::{Error, Result};
use crate::footprint_store::coalesce;
use crate::io::{self, ByteReader, DiskFile, IoMeter, HEADER_LEN};

pub const LEXICON_FILE: &str = "lexicon.bin";
pub const POSTINGS_FILE: &str = "postings.bin";
pub const DOCLENS_FILE: &str = "doclens.bin";

const LEXICON_MAGIC: &[u8; 4] = b"GQLX";
const POSTINGS_MAGIC: &[u8; 4] = b"GQPO";
const DOCLENS_MAGIC: &[u8; 4] = b"GQDL";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LexiconEntry {
    pub term: String,
    /// Number of documents containing the term (f_t).
    pub doc_freq: u32,
    pub offset: u64,
    pub length: u32,
    pub positional: bool,
    pub skips: Vec<SkipEntry>,
}

/// The query terms' frequencies in one document, in query-term order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DocMatch {
    pub doc_id: DocId,
    pub freqs: Vec<u32>,
}

/// Writes the three index files into `dir`.
pub fn build(collection: &Collection, dir: &Path) -> Result<CollectionStats> {
    if collection.is_empty() {
        return Err(Error::contract("cannot index an empty collection"));
    }
    let mut lists: BTreeMap<String, Vec<Posting>> = BTreeMap::new();
    for doc in &collection.docs {
        let mut per_doc: BTreeMap<String, Vec<u32>> = BTreeMap::new();
        for (pos, t) in doc.tokens().into_iter().enumerate() {
            per_doc.entry(t).or_default().push(pos as u32);
        }
        for (t, positions) in per_doc {
            lists.entry(t).or_default().push(Posting {
                doc_id: doc.doc_id,
                freq: positions.len() as u32,
                positions: Some(positions),
            });
        }
    }
    if lists.is_empty() {
        return Err(Error::contract("collection has an empty vocabulary"));
    }

    let mut postings = io::header(POSTINGS_MAGIC);
    let mut lexicon = io::header(LEXICON_MAGIC);
    let stats = collection.stats;
    lexicon.extend_from_slice(&stats.n.to_le_bytes());
    lexicon.extend_from_slice(&stats.vocab_size.to_le_bytes());
    lexicon.extend_from_slice(&stats.total_tokens.to_le_bytes());
    lexicon.extend_from_slice(&(lists.len() as u32).to_le_bytes());
    for (term, list) in &lists {
        let run = encode_run(list, BLOCK_SIZE)?;
        let term_bytes = term.as_bytes();
        let term_len = u16::try_from(term_bytes.len()).map_err(|_| Error::invalid(format!("term too long: {term}")))?;
        lexicon.extend_from_slice(&term_len.to_le_bytes());
        lexicon.extend_from_slice(term_bytes);
        lexicon.extend_from_slice(&(list.len() as u32).to_le_bytes());
        lexicon.extend_from_slice(&(postings.len() as u64).to_le_bytes());
        lexicon.extend_from_slice(&(run.bytes.len() as u32).to_le_bytes());
        lexicon.push(u8::from(run.positional));
        lexicon.extend_from_slice(&(run.skips.len() as u32).to_le_bytes());
        for s in &run.skips {
            lexicon.extend_from_slice(&s.last_doc.to_le_bytes());
            lexicon.extend_from_slice(&s.end.to_le_bytes());
        }
        postings.extend_from_slice(&run.bytes);
    }

    let mut doclens = io::header(DOCLENS_MAGIC);
    doclens.extend_from_slice(&(collection.len() as u32).to_le_bytes());
    for d in &collection.docs {
        doclens.extend_from_slice(&d.length.to_le_bytes());
    }

    io::write_file(&dir.join(LEXICON_FILE), &lexicon)?;
    io::write_file(&dir.join(POSTINGS_FILE), &postings)?;
    io::write_file(&dir.join(DOCLENS_FILE), &doclens)?;
    Ok(stats)
}

/// An opened, immutable index. The lexicon and document lengths are memory
/// resident; postings are read from disk on demand and charged to the meter.
#[derive(Debug)]
pub struct InvertedIndex {
    stats: CollectionStats,
    lexicon: Vec<LexiconEntry>,
    doc_lens: Vec<u32>,
    postings: DiskFile,
}

impl InvertedIndex {
    pub fn open(dir: &Path) -> Result<Self> {
        let lex_path = dir.join(LEXICON_FILE);
        let bytes = io::read_file(&lex_path)?;
        io::check_header(&lex_path, &bytes, LEXICON_MAGIC)?;
        let mut r = ByteReader::new(&lex_path, &bytes, HEADER_LEN as usize);
        let stats = CollectionStats { n: r.u32()?, vocab_size: r.u32()?, total_tokens: r.u64()? };
        let count = r.u32()? as usize;
        let mut lexicon = Vec::with_capacity(count);
        for _ in 0..count {
            let term_len = r.u16()? as usize;
            let term = std::str::from_utf8(r.take(term_len)?)
                .map_err(|_| r.corrupt("term is not UTF-8"))?
                .to_string();
            let doc_freq = r.u32()?;
            let offset = r.u64()?;
            let length = r.u32()?;
            let positional = r.u8()? & 1 == 1;
            let blocks = r.u32()? as usize;
            let mut skips = Vec::with_capacity(blocks);
            for _ in 0..blocks {
                skips.push(SkipEntry { last_doc: r.u32()?, end: r.u32()? });
            }
            lexicon.push(LexiconEntry { term, doc_freq, offset, length, positional, skips });
        }
        if !r.is_done() {
            return Err(r.corrupt("trailing bytes after lexicon"));
        }
        if lexicon.windows(2).any(|w| w[0].term >= w[1].term) {
            return Err(Error::corrupt(&lex_path, 0, "lexicon terms not sorted"));
        }

        let dl_path = dir.join(DOCLENS_FILE);
        let bytes = io::read_file(&dl_path)?;
        io::check_header(&dl_path, &bytes, DOCLENS_MAGIC)?;
        let mut r = ByteReader::new(&dl_path, &bytes, HEADER_LEN as usize);
        let n = r.u32()?;
        if n != stats.n {
            return Err(r.corrupt(format!("doclens count {n} != lexicon n {}", stats.n)));
        }
        let doc_lens = (0..n).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;

        let postings = DiskFile::open(&dir.join(POSTINGS_FILE), POSTINGS_MAGIC)?;
        Ok(InvertedIndex { stats, lexicon, doc_lens, postings })
    }

    pub fn stats(&self) -> CollectionStats {
        self.stats
    }

    pub fn lexicon(&self) -> &[LexiconEntry] {
        &self.lexicon
    }

    pub fn entry(&self, term: &str) -> Option<&LexiconEntry> {
        self.lexicon
            .binary_search_by(|e| e.term.as_str().cmp(term))
            .ok()
            .map(|i| &self.lexicon[i])
    }

    pub fn doc_len(&self, doc: DocId) -> u32 {
        self.doc_lens[doc as usize]
    }

    pub fn doc_lens(&self) -> &[u32] {
        &self.doc_lens
    }

    pub fn postings_path(&self) -> &Path {
        self.postings.path()
    }

    fn entries_for(&self, terms: &[String]) -> Option<Vec<&LexiconEntry>> {
        terms.iter().map(|t| self.entry(t)).collect()
    }

    fn read_run(&self, e: &LexiconEntry, meter: &mut IoMeter) -> Result<Vec<u8>> {
        let bytes = self.postings.read_range(e.offset, e.offset + u64::from(e.length))?;
        meter.postings_bytes += u64::from(e.length);
        meter.postings_seeks += 1;
        Ok(bytes)
    }

    /// Decodes a term's full postings list. Not metered.
    pub fn postings_of(&self, term: &str) -> Result<Vec<Posting>> {
        let Some(e) = self.entry(term) else { return Ok(Vec::new()) };
        let bytes = self.postings.read_range(e.offset, e.offset + u64::from(e.length))?;
        decode_postings(&bytes, e.positional).map_err(|err| self.corrupt_at(e.offset, err))
    }

    fn corrupt_at(&self, offset: u64, err: Error) -> Error {
        Error::corrupt(self.postings.path(), offset, err.to_string())
    }

    /// Conjunctive document-at-a-time stream over `terms`. Every term's run is
    /// read in full; an unknown term yields an empty stream without any reads.
    pub fn daat_stream(&self, terms: &[String], meter: &mut IoMeter) -> Result<DaatStream<'_>> {
        if terms.is_empty() {
            return Err(Error::contract("daat_stream needs at least one term"));
        }
        let Some(entries) = self.entries_for(terms) else {
            return Ok(DaatStream { cursors: Vec::new(), order: Vec::new(), done: true });
        };
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_by_key(|&i| (entries[i].doc_freq, i));
        let mut cursors = order
            .iter()
            .map(|&i| Ok(Cursor::new(entries[i], self.postings.path(), self.read_run(entries[i], meter)?)))
            .collect::<Result<Vec<_>>>()?;
        cursors[0].step()?;
        Ok(DaatStream { cursors, order, done: false })
    }

    /// Restricts ascending `candidates` to documents containing every term,
    /// returning their frequencies. Only the postings blocks that can hold a
    /// candidate are read; block ranges closer than `gap` bytes are read as one.
    pub fn filter_postings(&self, candidates: &[DocId], terms: &[String], gap: u64, meter: &mut IoMeter) -> Result<Vec<DocMatch>> {
        if terms.is_empty() {
            return Err(Error::contract("filter needs at least one term"));
        }
        if candidates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::contract("filter candidates must be strictly ascending"));
        }
        let Some(entries) = self.entries_for(terms) else { return Ok(Vec::new()) };
        let mut order: Vec<usize> = (0..entries.len()).collect();
        order.sort_by_key(|&i| (entries[i].doc_freq, i));

        let mut survivors: Vec<DocMatch> =
            candidates.iter().map(|&d| DocMatch { doc_id: d, freqs: vec![0; terms.len()] }).collect();
        for &ti in &order {
            if survivors.is_empty() {
                break;
            }
            let e = entries[ti];
            let found = self.probe_term(e, &survivors, gap, meter)?;
            survivors = survivors
                .into_iter()
                .zip(found)
                .filter_map(|(mut m, f)| {
                    f.map(|freq| {
                        m.freqs[ti] = freq;
                        m
                    })
                })
                .collect();
        }
        Ok(survivors)
    }

    pub fn filter_docids(&self, candidates: &[DocId], terms: &[String], gap: u64, meter: &mut IoMeter) -> Result<Vec<DocId>> {
        Ok(self.filter_postings(candidates, terms, gap, meter)?.into_iter().map(|m| m.doc_id).collect())
    }

    /// For each candidate, its frequency under `e` if present.
    fn probe_term(&self, e: &LexiconEntry, cands: &[DocMatch], gap: u64, meter: &mut IoMeter) -> Result<Vec<Option<u32>>> {
        // block holding each candidate, if any block can
        let block_of: Vec<Option<usize>> = cands
            .iter()
            .map(|m| {
                let b = e.skips.partition_point(|s| s.last_doc < m.doc_id);
                (b < e.skips.len()).then_some(b)
            })
            .collect();
        let mut blocks: Vec<usize> = block_of.iter().flatten().copied().collect();
        blocks.dedup();
        let block_range = |b: usize| {
            let start = if b == 0 { 0 } else { e.skips[b - 1].end };
            (e.offset + u64::from(start), e.offset + u64::from(e.skips[b].end))
        };
        let ranges: Vec<(u64, u64)> = blocks.iter().map(|&b| block_range(b)).collect();

        let mut decoded: BTreeMap<DocId, u32> = BTreeMap::new();
        for (start, end) in coalesce(&ranges, gap) {
            let bytes = self.postings.read_range(start, end)?;
            meter.postings_bytes += end - start;
            meter.postings_seeks += 1;
            for &b in &blocks {
                let (bs, be) = block_range(b);
                if bs < start || be > end {
                    continue;
                }
                let base = if b == 0 { 0 } else { e.skips[b - 1].last_doc };
                let slice = &bytes[(bs - start) as usize..(be - start) as usize];
                let mut dec = RunDecoder::new(slice, 0, base, e.positional);
                if b > 0 {
                    dec = dec.continuing();
                }
                while let Some(p) = dec.next_posting(false).map_err(|err| self.corrupt_at(bs, err))? {
                    decoded.insert(p.doc_id, p.freq);
                }
            }
        }
        Ok(cands.iter().zip(&block_of).map(|(m, b)| b.and_then(|_| decoded.get(&m.doc_id).copied())).collect())
    }
}

/// Cursor over one term's run with skip-assisted `advance_to`.
struct Cursor<'a> {
    entry: &'a LexiconEntry,
    path: &'a Path,
    bytes: Vec<u8>,
    pos: usize,
    base: DocId,
    current: Option<(DocId, u32)>,
}

impl<'a> Cursor<'a> {
    fn new(entry: &'a LexiconEntry, path: &'a Path, bytes: Vec<u8>) -> Self {
        Cursor { entry, path, bytes, pos: 0, base: 0, current: None }
    }

    fn step(&mut self) -> Result<Option<(DocId, u32)>> {
        let mut dec = RunDecoder::new(&self.bytes, self.pos, self.base, self.entry.positional);
        let p = dec
            .next_posting(false)
            .map_err(|e| Error::corrupt(self.path, self.entry.offset + self.pos as u64, e.to_string()))?;
        self.pos = dec.position();
        self.current = p.map(|p| {
            self.base = p.doc_id;
            (p.doc_id, p.freq)
        });
        Ok(self.current)
    }

    /// First posting with doc id >= `target`, never moving backwards.
    fn advance_to(&mut self, target: DocId) -> Result<Option<(DocId, u32)>> {
        if let Some((d, f)) = self.current {
            if d >= target {
                return Ok(Some((d, f)));
            }
        }
        let skips = &self.entry.skips;
        let b = skips.partition_point(|s| s.last_doc < target);
        if b >= skips.len() {
            self.pos = self.bytes.len();
            self.current = None;
            return Ok(None);
        }
        if b > 0 && skips[b - 1].end as usize > self.pos {
            self.pos = skips[b - 1].end as usize;
            self.base = skips[b - 1].last_doc;
        }
        loop {
            match self.step()? {
                Some((d, f)) if d >= target => return Ok(Some((d, f))),
                Some(_) => continue,
                None => return Ok(None),
            }
        }
    }
}

/// Ascending stream of documents containing all query terms.
pub struct DaatStream<'a> {
    /// Cursors sorted by ascending doc_freq; `order[i]` is cursor i's term slot.
    cursors: Vec<Cursor<'a>>,
    order: Vec<usize>,
    done: bool,
}

impl DaatStream<'_> {
    fn next_match(&mut self) -> Result<Option<DocMatch>> {
        let Some((mut target, _)) = self.cursors[0].current else { return Ok(None) };
        'align: loop {
            for i in 1..self.cursors.len() {
                match self.cursors[i].advance_to(target)? {
                    None => return Ok(None),
                    Some((d, _)) if d > target => {
                        match self.cursors[0].advance_to(d)? {
                            None => return Ok(None),
                            Some((d0, _)) => target = d0,
                        }
                        continue 'align;
                    }
                    Some(_) => {}
                }
            }
            break;
        }
        let mut freqs = vec![0; self.cursors.len()];
        for (c, &slot) in self.cursors.iter().zip(&self.order) {
            freqs[slot] = c.current.expect("aligned").1;
        }
        self.cursors[0].step()?;
        Ok(Some(DocMatch { doc_id: target, freqs }))
    }
}

impl Iterator for DaatStream<'_> {
    type Item = Result<DocMatch>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.next_match().transpose();
        if !matches!(item, Some(Ok(_))) {
            self.done = true;
        }
        item
    }
}

#[cfg(test)]
mod tests;
