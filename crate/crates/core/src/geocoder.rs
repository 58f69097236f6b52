//! Gazetteer-based geocoding: extraction, matching and site-level propagation.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::corpus::{split_lines, tokenize, Collection, DocId, DocumentRecord};
use crate::error::{Error, Result};
use crate::geom::{Footprint, Rect, Region};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PlaceKind {
    City,
    District,
    Landmark,
}

impl PlaceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PlaceKind::City => "city",
            PlaceKind::District => "district",
            PlaceKind::Landmark => "landmark",
        }
    }
}

impl fmt::Display for PlaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PlaceKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "city" => Ok(PlaceKind::City),
            "district" => Ok(PlaceKind::District),
            "landmark" => Ok(PlaceKind::Landmark),
            other => Err(Error::invalid(format!("unknown place kind {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GazetteerEntry {
    /// Lowercase token sequence.
    pub name: Vec<String>,
    pub rect: Rect,
    pub kind: PlaceKind,
}

pub fn parse_gazetteer(file: &str, bytes: &[u8]) -> Result<Vec<GazetteerEntry>> {
    let mut out = Vec::new();
    for (idx, raw) in split_lines(bytes) {
        let line_no = idx + 1;
        let err = |m: String| Error::parse(file, line_no, m);
        let line = std::str::from_utf8(raw).map_err(|e| err(format!("invalid UTF-8: {e}")))?;
        let fields: Vec<&str> = line.split('\t').collect();
        let [name, rect, kind] = fields[..] else {
            return Err(err(format!("expected name<TAB>rect<TAB>kind, found {} field(s)", fields.len())));
        };
        let name = tokenize(name);
        if name.is_empty() {
            return Err(err("empty place name".into()));
        }
        let rect = crate::corpus::parse_rect(rect).map_err(|e| err(e.to_string()))?;
        if rect.area() <= 0.0 {
            return Err(err("place rectangle has zero area".into()));
        }
        let kind = kind.parse().map_err(|e: Error| err(e.to_string()))?;
        out.push(GazetteerEntry { name, rect, kind });
    }
    Ok(out)
}

pub fn read_gazetteer(path: &Path) -> Result<Vec<GazetteerEntry>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_gazetteer(&path.display().to_string(), &bytes)
}

pub fn write_gazetteer(path: &Path, entries: &[GazetteerEntry]) -> Result<()> {
    let mut out = String::new();
    for e in entries {
        let r = &e.rect;
        out.push_str(&format!("{}\t{} {} {} {}\t{}\n", e.name.join(" "), r.xmin, r.ymin, r.xmax, r.ymax, e.kind));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Gazetteer with a name lookup table. Entries sharing a name are candidates
/// for the same match.
#[derive(Clone, Debug)]
pub struct Gazetteer {
    entries: Vec<GazetteerEntry>,
    by_name: HashMap<Vec<String>, usize>,
    candidates: Vec<Vec<usize>>,
    max_name_len: usize,
}

impl Gazetteer {
    pub fn new(entries: Vec<GazetteerEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::contract("gazetteer is empty"));
        }
        let mut by_name = HashMap::new();
        let mut candidates: Vec<Vec<usize>> = Vec::new();
        let mut max_name_len = 0;
        for (i, e) in entries.iter().enumerate() {
            if e.name.is_empty() {
                return Err(Error::invalid(format!("gazetteer entry {i} has an empty name")));
            }
            max_name_len = max_name_len.max(e.name.len());
            let id = *by_name.entry(e.name.clone()).or_insert_with(|| {
                candidates.push(Vec::new());
                candidates.len() - 1
            });
            candidates[id].push(i);
        }
        Ok(Gazetteer { entries, by_name, candidates, max_name_len })
    }

    pub fn entries(&self) -> &[GazetteerEntry] {
        &self.entries
    }

    pub fn entry(&self, idx: usize) -> &GazetteerEntry {
        &self.entries[idx]
    }

    /// Entry indices sharing the name with id `name_id`.
    pub fn candidates(&self, name_id: usize) -> &[usize] {
        &self.candidates[name_id]
    }

    pub fn lookup(&self, name: &[String]) -> Option<usize> {
        self.by_name.get(name).copied()
    }
}

/// One place-name occurrence in a document.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PlaceMatch {
    pub name_id: usize,
    /// Token offset of the first matched token.
    pub position: usize,
    pub len: usize,
}

/// Longest-match scan of the token stream against gazetteer names.
pub fn extract_tokens(tokens: &[String], gaz: &Gazetteer) -> Vec<PlaceMatch> {
    let mut out = Vec::new();
    let mut pos = 0;
    while pos < tokens.len() {
        let longest = (1..=gaz.max_name_len.min(tokens.len() - pos))
            .rev()
            .find_map(|len| gaz.lookup(&tokens[pos..pos + len]).map(|id| (id, len)));
        match longest {
            Some((name_id, len)) => {
                out.push(PlaceMatch { name_id, position: pos, len });
                pos += len;
            }
            None => pos += 1,
        }
    }
    out
}

pub fn extract(doc: &DocumentRecord, gaz: &Gazetteer) -> Vec<PlaceMatch> {
    extract_tokens(&doc.tokens(), gaz)
}

/// Certainty constants for the geocoding steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeocodeConfig {
    pub base_certainty: f64,
    /// Used for a match in the document's leading tokens or a repeated name.
    pub boosted_certainty: f64,
    pub lead_fraction: f64,
    pub repeat_threshold: usize,
    /// Minimum geocoded documents on a site before bare documents inherit.
    pub site_threshold: usize,
    pub propagation_factor: f64,
}

impl Default for GeocodeConfig {
    fn default() -> Self {
        GeocodeConfig {
            base_certainty: 0.6,
            boosted_certainty: 0.9,
            lead_fraction: 0.1,
            repeat_threshold: 2,
            site_threshold: 3,
            propagation_factor: 0.5,
        }
    }
}

/// Turns matches into a footprint, disambiguating shared names by distance to
/// the centroid of the document's unambiguous places.
pub fn resolve(matches: &[PlaceMatch], doc_length: u32, gaz: &Gazetteer, cfg: &GeocodeConfig) -> Option<Footprint> {
    if matches.is_empty() {
        return None;
    }
    let mut occurrences: HashMap<usize, usize> = HashMap::new();
    for m in matches {
        *occurrences.entry(m.name_id).or_default() += 1;
    }
    let anchors: Vec<(f64, f64)> = matches
        .iter()
        .filter_map(|m| match gaz.candidates(m.name_id) {
            [only] => Some(gaz.entry(*only).rect.center()),
            _ => None,
        })
        .collect();
    let centroid = (!anchors.is_empty()).then(|| {
        let n = anchors.len() as f64;
        let (sx, sy) = anchors.iter().fold((0.0, 0.0), |(ax, ay), (x, y)| (ax + x, ay + y));
        (sx / n, sy / n)
    });

    let mut regions = Vec::new();
    for m in matches {
        let leading = (m.position as f64) < cfg.lead_fraction * f64::from(doc_length);
        let repeated = occurrences[&m.name_id] >= cfg.repeat_threshold;
        let certainty = if leading || repeated { cfg.boosted_certainty } else { cfg.base_certainty };
        let cands = gaz.candidates(m.name_id);
        match (cands, centroid) {
            ([only], _) => regions.push(Region::new(gaz.entry(*only).rect, certainty)),
            (_, Some(c)) => {
                let best = nearest_to(cands, gaz, c);
                regions.push(Region::new(gaz.entry(best).rect, certainty));
            }
            (_, None) => {
                let split = certainty / cands.len() as f64;
                regions.extend(cands.iter().map(|&i| Region::new(gaz.entry(i).rect, split)));
            }
        }
    }
    Some(Footprint::canonical(regions))
}

fn nearest_to(cands: &[usize], gaz: &Gazetteer, (cx, cy): (f64, f64)) -> usize {
    let dist = |i: usize| {
        let (x, y) = gaz.entry(i).rect.center();
        (x - cx).powi(2) + (y - cy).powi(2)
    };
    // first candidate wins ties
    cands.iter().copied().fold(cands[0], |best, i| if dist(i) < dist(best) { i } else { best })
}

/// Documents without a footprint inherit the union of their site's regions at
/// reduced certainty, when enough documents on the site are geocoded.
pub fn propagate(
    footprints: &BTreeMap<DocId, Footprint>,
    docs: &[DocumentRecord],
    cfg: &GeocodeConfig,
) -> BTreeMap<DocId, Footprint> {
    let mut by_site: BTreeMap<&str, Vec<DocId>> = BTreeMap::new();
    for d in docs.iter().filter(|d| !d.site_key.is_empty()) {
        by_site.entry(&d.site_key).or_default().push(d.doc_id);
    }
    let mut out = footprints.clone();
    for members in by_site.values() {
        let (coded, bare): (Vec<DocId>, Vec<DocId>) = members.iter().partition(|id| footprints.contains_key(id));
        if coded.len() < cfg.site_threshold || bare.is_empty() {
            continue;
        }
        let inherited: Vec<Region> = coded
            .iter()
            .flat_map(|id| footprints[id].regions())
            .map(|r| Region::new(r.rect, r.certainty * cfg.propagation_factor))
            .collect();
        let inherited = Footprint::canonical(inherited);
        for id in bare {
            out.insert(id, inherited.clone());
        }
    }
    out
}

/// Footprints for every document that can be geocoded.
pub fn geocode(collection: &Collection, gaz: &Gazetteer, cfg: &GeocodeConfig) -> BTreeMap<DocId, Footprint> {
    let initial: BTreeMap<DocId, Footprint> = collection
        .docs
        .iter()
        .filter_map(|d| resolve(&extract(d, gaz), d.length, gaz, cfg).map(|fp| (d.doc_id, fp)))
        .collect();
    propagate(&initial, &collection.docs, cfg)
}
