//! Corpus ingestion, tokenization and query traces.
//!
//! Corpus files are newline-delimited UTF-8 with `site_key<TAB>text` per line;
//! doc ids are assigned in file order. A line may also carry an explicit id as
//! `doc_id<TAB>site_key<TAB>text`, in which case it must equal the line's ordinal.

mod synthetic;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

pub use synthetic::{gen_synthetic, gen_trace, SyntheticConfig, SyntheticData, TraceConfig};

use crate::error::{Error, Result};
use crate::geom::Rect;

pub type DocId = u32;

/// Splits text into maximal runs of alphanumeric characters, lowercased.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_alphanumeric() {
            push_simple_lower(&mut cur, c);
        } else if !cur.is_empty() {
            out.push(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

// Simple (1:1) case mapping: characters whose lowercase form expands to
// several code points are kept as they are.
fn push_simple_lower(buf: &mut String, c: char) {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => buf.push(l),
        _ => buf.push(c),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DocumentRecord {
    pub doc_id: DocId,
    pub text: String,
    pub site_key: String,
    /// Token count |D|.
    pub length: u32,
}

impl DocumentRecord {
    pub fn tokens(&self) -> Vec<String> {
        tokenize(&self.text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct CollectionStats {
    pub n: u32,
    pub vocab_size: u32,
    pub total_tokens: u64,
}

/// An ingested, immutable document collection.
#[derive(Clone, Debug, Default)]
pub struct Collection {
    pub docs: Vec<DocumentRecord>,
    pub stats: CollectionStats,
}

impl Collection {
    /// Builds a collection from `(site_key, text)` pairs, assigning dense ids.
    pub fn from_pairs<I, A, B>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (A, B)>,
        A: Into<String>,
        B: Into<String>,
    {
        let docs = pairs
            .into_iter()
            .enumerate()
            .map(|(i, (site, text))| make_record(i as DocId, site.into(), text.into()))
            .collect();
        Self::from_records(docs)
    }

    fn from_records(docs: Vec<DocumentRecord>) -> Self {
        let mut vocab = HashSet::new();
        let mut total_tokens = 0u64;
        for d in &docs {
            for t in d.tokens() {
                vocab.insert(t);
            }
            total_tokens += u64::from(d.length);
        }
        let stats = CollectionStats { n: docs.len() as u32, vocab_size: vocab.len() as u32, total_tokens };
        Collection { docs, stats }
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }

    /// Parses corpus text; `name` is used in error messages.
    pub fn parse(name: &str, bytes: &[u8]) -> Result<Self> {
        let mut docs = Vec::new();
        let mut explicit_seen = HashSet::new();
        for (idx, raw) in split_lines(bytes) {
            let line_no = idx + 1;
            let line = std::str::from_utf8(raw).map_err(|e| Error::parse(name, line_no, format!("invalid UTF-8: {e}")))?;
            let fields: Vec<&str> = line.split('\t').collect();
            let ordinal = docs.len() as DocId;
            let (site, text) = match fields.as_slice() {
                [site, text] => (*site, *text),
                [id, site, text] => {
                    let id: DocId = id
                        .parse()
                        .map_err(|_| Error::parse(name, line_no, format!("bad doc_id field {id:?}")))?;
                    if !explicit_seen.insert(id) {
                        return Err(Error::parse(name, line_no, format!("duplicate doc_id {id}")));
                    }
                    if id != ordinal {
                        return Err(Error::parse(name, line_no, format!("doc_id {id} must equal line ordinal {ordinal}")));
                    }
                    (*site, *text)
                }
                _ => {
                    return Err(Error::parse(
                        name,
                        line_no,
                        format!("expected site_key<TAB>text, found {} field(s)", fields.len()),
                    ))
                }
            };
            docs.push(make_record(ordinal, site.to_string(), text.to_string()));
        }
        Ok(Self::from_records(docs))
    }
}

fn make_record(doc_id: DocId, site_key: String, text: String) -> DocumentRecord {
    let length = tokenize(&text).len() as u32;
    DocumentRecord { doc_id, text, site_key, length }
}

/// Yields `(line index, line bytes)` with a trailing `\r` stripped; a final
/// empty line after the last newline is ignored.
pub(crate) fn split_lines(bytes: &[u8]) -> impl Iterator<Item = (usize, &[u8])> {
    let body = bytes.strip_suffix(b"\n").unwrap_or(bytes);
    let empty = bytes.is_empty();
    body.split(|&b| b == b'\n')
        .map(|l| l.strip_suffix(b"\r").unwrap_or(l))
        .enumerate()
        .filter(move |_| !empty)
}

/// Reads and parses a corpus file.
pub fn ingest(path: &Path) -> Result<Collection> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Collection::parse(&path.display().to_string(), &bytes)
}

/// Writes `(site_key, text)` lines in corpus format.
pub fn write_corpus(path: &Path, docs: &[DocumentRecord]) -> Result<()> {
    let mut out = String::new();
    for d in docs {
        out.push_str(&d.site_key);
        out.push('\t');
        out.push_str(&d.text);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// One line of a query trace: terms plus a query rectangle.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceQuery {
    pub terms: Vec<String>,
    pub rect: Rect,
}

impl TraceQuery {
    pub fn to_line(&self) -> String {
        let r = &self.rect;
        format!("{}\t{} {} {} {}", self.terms.join(" "), r.xmin, r.ymin, r.xmax, r.ymax)
    }
}

/// Parses `xmin ymin xmax ymax` (spaces or commas) into a unit-domain rectangle.
pub fn parse_rect(s: &str) -> Result<Rect> {
    let vals: Vec<f64> = s
        .split(|c: char| c.is_whitespace() || c == ',')
        .filter(|p| !p.is_empty())
        .map(|p| p.parse::<f64>().map_err(|_| Error::invalid(format!("bad coordinate {p:?}"))))
        .collect::<Result<_>>()?;
    let [a, b, c, d] = vals[..] else {
        return Err(Error::invalid(format!("expected 4 coordinates, found {}", vals.len())));
    };
    Rect::new_in_unit(a, b, c, d)
}

pub fn parse_trace(name: &str, bytes: &[u8]) -> Result<Vec<TraceQuery>> {
    let mut out = Vec::new();
    for (idx, raw) in split_lines(bytes) {
        let line_no = idx + 1;
        let line = std::str::from_utf8(raw).map_err(|e| Error::parse(name, line_no, format!("invalid UTF-8: {e}")))?;
        let Some((terms, rect)) = line.split_once('\t') else {
            return Err(Error::parse(name, line_no, "expected terms<TAB>xmin ymin xmax ymax"));
        };
        let terms = tokenize(terms);
        if terms.is_empty() {
            return Err(Error::parse(name, line_no, "query has no terms"));
        }
        let rect = parse_rect(rect).map_err(|e| Error::parse(name, line_no, e.to_string()))?;
        if rect.area() <= 0.0 {
            return Err(Error::parse(name, line_no, "query rectangle has zero area"));
        }
        out.push(TraceQuery { terms, rect });
    }
    Ok(out)
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceQuery>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_trace(&path.display().to_string(), &bytes)
}

pub fn write_trace(path: &Path, trace: &[TraceQuery]) -> Result<()> {
    let mut out = String::new();
    for q in trace {
        out.push_str(&q.to_line());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tokenize_examples() {
        assert_eq!(tokenize("yoga \"Chennai\""), ["yoga", "chennai"]);
        assert!(tokenize("").is_empty());
        assert_eq!(tokenize("Tambaram, Chennai-73"), ["tambaram", "chennai", "73"]);
    }

    #[test]
    fn ingest_assigns_ids_in_order() {
        let c = Collection::parse("t", b"a.com\tfirst doc\nb.com\tsecond one here\n").unwrap();
        assert_eq!(c.stats.n, 2);
        assert_eq!(c.docs.iter().map(|d| d.doc_id).collect::<Vec<_>>(), [0, 1]);
        assert_eq!(c.docs[1].length, 3);
        assert_eq!(c.stats.total_tokens, 5);
        assert_eq!(c.stats.vocab_size, 5);
    }

    #[test]
    fn blank_text_is_a_zero_length_doc() {
        let c = Collection::parse("t", b"site\t\nsite\tword\n").unwrap();
        assert_eq!(c.docs[0].length, 0);
        assert_eq!(c.stats.n, 2);
    }

    #[test]
    fn malformed_line_names_line_number() {
        let err = Collection::parse("corpus.tsv", b"a\tok\nno tab here\n").unwrap_err();
        assert!(err.to_string().contains("corpus.tsv:2"), "{err}");
    }

    #[test]
    fn explicit_ids() {
        let c = Collection::parse("t", b"0\ts\tx\n1\ts\ty\n").unwrap();
        assert_eq!(c.len(), 2);
        let err = Collection::parse("t", b"0\ts\tx\n0\ts\ty\n").unwrap_err();
        assert!(err.to_string().contains("duplicate doc_id 0"), "{err}");
    }

    #[test]
    fn invalid_utf8_rejected() {
        let err = Collection::parse("t", b"s\tok\ns\t\xff\xfe\n").unwrap_err();
        assert!(err.to_string().contains("t:2"), "{err}");
    }

    #[test]
    fn empty_file_is_empty_collection() {
        assert!(Collection::parse("t", b"").unwrap().is_empty());
    }

    #[test]
    fn trace_roundtrip_and_errors() {
        let q = TraceQuery { terms: vec!["yoga".into(), "school".into()], rect: Rect::new(0.1, 0.2, 0.3, 0.4).unwrap() };
        let parsed = parse_trace("t", format!("{}\n", q.to_line()).as_bytes()).unwrap();
        assert_eq!(parsed, vec![q]);
        let err = parse_trace("trace", b"a\t0 0 1 1\nb\t0 0 x 1\n").unwrap_err();
        assert!(err.to_string().contains("trace:2"), "{err}");
        assert!(parse_rect("0 0 1.5 1").is_err());
    }

    proptest! {
        #[test]
        fn tokenize_idempotent(s in "\\PC{0,40}") {
            let once = tokenize(&s);
            let twice = tokenize(&once.join(" "));
            prop_assert_eq!(once, twice);
        }
    }
}
