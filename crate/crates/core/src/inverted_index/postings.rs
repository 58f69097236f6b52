//! Postings runs: per posting a doc-id gap (the first one absolute), the
//! frequency, then optionally `freq` position gaps; all as varints.
//!
//! Skip entries live in the lexicon, not the run, so the run bytes are exactly
//! the delta chain. Entry `b` records the last doc id of block `b` and the byte
//! offset where the block ends; block `b` decodes with the previous block's
//! last doc id as its base.

use super::varint::{decode_u32, encode_u32};
use crate::corpus::DocId;
use crate::error::{Error, Result};

pub const BLOCK_SIZE: usize = 128;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Posting {
    pub doc_id: DocId,
    pub freq: u32,
    pub positions: Option<Vec<u32>>,
}

impl Posting {
    pub fn new(doc_id: DocId, freq: u32) -> Self {
        Posting { doc_id, freq, positions: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SkipEntry {
    pub last_doc: DocId,
    pub end: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EncodedRun {
    pub bytes: Vec<u8>,
    pub skips: Vec<SkipEntry>,
    pub positional: bool,
}

/// Encodes postings with one skip entry per `block_size` postings.
pub fn encode_run(postings: &[Posting], block_size: usize) -> Result<EncodedRun> {
    let positional = postings.first().is_some_and(|p| p.positions.is_some());
    let mut bytes = Vec::new();
    let mut skips = Vec::new();
    let mut prev: Option<DocId> = None;
    for (i, p) in postings.iter().enumerate() {
        if let Some(prev) = prev {
            if p.doc_id <= prev {
                return Err(Error::contract(format!("doc ids not strictly increasing: {prev} then {}", p.doc_id)));
            }
        }
        if p.freq == 0 {
            return Err(Error::contract(format!("posting for doc {} has freq 0", p.doc_id)));
        }
        encode_u32(p.doc_id - prev.unwrap_or(0), &mut bytes);
        encode_u32(p.freq, &mut bytes);
        match (&p.positions, positional) {
            (Some(pos), true) => {
                if pos.len() != p.freq as usize || pos.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(Error::contract(format!("positions of doc {} inconsistent with freq", p.doc_id)));
                }
                let mut last = 0;
                for (j, &x) in pos.iter().enumerate() {
                    encode_u32(if j == 0 { x } else { x - last }, &mut bytes);
                    last = x;
                }
            }
            (None, false) => {}
            _ => return Err(Error::contract("postings mix positional and non-positional entries")),
        }
        prev = Some(p.doc_id);
        if (i + 1) % block_size == 0 || i + 1 == postings.len() {
            skips.push(SkipEntry { last_doc: p.doc_id, end: bytes.len() as u32 });
        }
    }
    Ok(EncodedRun { bytes, skips, positional })
}

pub fn encode_postings(postings: &[Posting]) -> Result<Vec<u8>> {
    Ok(encode_run(postings, BLOCK_SIZE)?.bytes)
}

pub fn decode_postings(bytes: &[u8], positional: bool) -> Result<Vec<Posting>> {
    let mut out = Vec::new();
    let mut dec = RunDecoder::new(bytes, 0, 0, positional);
    while let Some(p) = dec.next_posting(true)? {
        out.push(p);
    }
    Ok(out)
}

/// Sequential decoder over a slice of a run.
#[derive(Clone, Debug)]
pub(crate) struct RunDecoder<'a> {
    bytes: &'a [u8],
    pos: usize,
    base: DocId,
    first: bool,
    positional: bool,
}

impl<'a> RunDecoder<'a> {
    /// Starts at byte `pos` with `base` as the doc id preceding that posting.
    pub fn new(bytes: &'a [u8], pos: usize, base: DocId, positional: bool) -> Self {
        RunDecoder { bytes, pos, base, first: pos == 0, positional }
    }

    /// Treats the first posting as a gap from `base` rather than an absolute id.
    pub fn continuing(mut self) -> Self {
        self.first = false;
        self
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    fn varint(&mut self) -> Result<u32> {
        decode_u32(self.bytes, &mut self.pos)
            .ok_or_else(|| Error::invalid(format!("bad varint in postings run at byte {}", self.pos)))
    }

    /// Next posting; positions are decoded only when `with_positions`.
    pub fn next_posting(&mut self, with_positions: bool) -> Result<Option<Posting>> {
        if self.pos >= self.bytes.len() {
            return Ok(None);
        }
        let gap = self.varint()?;
        if !self.first && gap == 0 {
            return Err(Error::invalid(format!("zero doc gap in postings run at byte {}", self.pos)));
        }
        self.first = false;
        let doc_id = self
            .base
            .checked_add(gap)
            .ok_or_else(|| Error::invalid("doc id overflow in postings run"))?;
        self.base = doc_id;
        let freq = self.varint()?;
        let mut positions = None;
        if self.positional {
            let mut list = Vec::new();
            let mut last = 0u32;
            for j in 0..freq {
                let g = self.varint()?;
                last = if j == 0 { g } else { last.wrapping_add(g) };
                if with_positions {
                    list.push(last);
                }
            }
            positions = with_positions.then_some(list);
        }
        Ok(Some(Posting { doc_id, freq, positions }))
    }
}
