//! Query execution: Text-First, Geo-First and K-Sweep, plus a brute-force
//! oracle. All strategies return the same ranked list and differ only in
//! the disk traffic recorded in their [`IoMeter`].

mod oracle;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use oracle::Oracle;

use crate::corpus::{tokenize, DocId};
use crate::error::{Error, Result};
use crate::footprint_store::{FootprintStore, DEFAULT_GAP};
use crate::geom::{Footprint, Rect, Region};
use crate::inverted_index::{DocMatch, InvertedIndex};
use crate::io::IoMeter;
use crate::ranking::{combined_score, geo_overlap, query_mass, text_score, top_k, GeoMode, GlobalScoreTable, ScoreWeights, ScoredHit};
use crate::spatial_index::{compute_sweeps, GridIntervals, Interval, MbrTree, ToeprintStore};

pub const DEFAULT_K_RESULTS: usize = 10;
pub const DEFAULT_K_SWEEPS: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algo {
    TextFirst,
    GeoFirst,
    KSweep,
}

impl Algo {
    pub const ALL: [Algo; 3] = [Algo::TextFirst, Algo::GeoFirst, Algo::KSweep];

    pub fn as_str(self) -> &'static str {
        match self {
            Algo::TextFirst => "text-first",
            Algo::GeoFirst => "geo-first",
            Algo::KSweep => "k-sweep",
        }
    }
}

impl fmt::Display for Algo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('_', "-").as_str() {
            "text-first" => Ok(Algo::TextFirst),
            "geo-first" => Ok(Algo::GeoFirst),
            "k-sweep" => Ok(Algo::KSweep),
            other => Err(Error::invalid(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    /// Distinct terms in first-occurrence order.
    pub terms: Vec<String>,
    pub footprint: Footprint,
    pub k_results: usize,
    pub algo: Algo,
    pub k_sweeps: usize,
}

impl Query {
    /// Tokenizes every term string and drops repeats.
    pub fn new<T: AsRef<str>>(terms: &[T], footprint: Footprint, k_results: usize) -> Result<Self> {
        let mut seen = Vec::new();
        for t in terms.iter().flat_map(|t| tokenize(t.as_ref())) {
            if !seen.contains(&t) {
                seen.push(t);
            }
        }
        if seen.is_empty() {
            return Err(Error::contract("query has no terms"));
        }
        if k_results < 1 {
            return Err(Error::contract("k_results must be >= 1"));
        }
        Ok(Query { terms: seen, footprint, k_results, algo: Algo::TextFirst, k_sweeps: DEFAULT_K_SWEEPS })
    }

    pub fn from_rect<T: AsRef<str>>(terms: &[T], rect: Rect, k_results: usize) -> Result<Self> {
        Self::new(terms, Footprint::from_rect(rect)?, k_results)
    }

    pub fn with_algo(mut self, algo: Algo) -> Self {
        self.algo = algo;
        self
    }

    pub fn with_sweeps(mut self, k_sweeps: usize) -> Self {
        self.k_sweeps = k_sweeps;
        self
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct QueryReport {
    pub hits: Vec<ScoredHit>,
    pub meter: IoMeter,
    /// Candidate counts after each stage, in pipeline order.
    pub stages: Vec<(&'static str, u64)>,
}

impl QueryReport {
    pub fn stage(&self, name: &str) -> Option<u64> {
        self.stages.iter().find(|(n, _)| *n == name).map(|&(_, c)| c)
    }

    fn push(&mut self, name: &'static str, count: usize) {
        self.stages.push((name, count as u64));
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EngineConfig {
    /// Coalescing gap for footprint and postings reads, in bytes.
    pub gap: u64,
    pub weights: ScoreWeights,
    pub geo_mode: GeoMode,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig { gap: DEFAULT_GAP, weights: ScoreWeights::default(), geo_mode: GeoMode::default() }
    }
}

/// Open index artifacts plus the in-memory structures built from them.
/// Immutable once assembled; queries may run concurrently.
#[derive(Debug)]
pub struct Engine {
    index: InvertedIndex,
    store: FootprintStore,
    tree: MbrTree,
    grid: GridIntervals,
    toeprints: ToeprintStore,
    translation: Vec<DocId>,
    global: GlobalScoreTable,
    config: EngineConfig,
}

/// Per-query scoring context shared by the three strategies.
struct Scorer<'a> {
    engine: &'a Engine,
    query: &'a Query,
    doc_freqs: Vec<u32>,
    mass: f64,
}

impl Scorer<'_> {
    fn score(&self, m: &DocMatch, regions: &[Region]) -> Result<Option<ScoredHit>> {
        let e = self.engine;
        let geo = geo_overlap(&self.query.footprint, regions, e.config.geo_mode) / self.mass;
        if !(geo > 0.0) {
            return Ok(None);
        }
        let text = text_score(&m.freqs, &self.doc_freqs, e.index.stats().n, e.index.doc_len(m.doc_id))?;
        Ok(Some(combined_score(m.doc_id, text, geo, e.global.get(m.doc_id), &e.config.weights)))
    }
}

impl Engine {
    pub fn assemble(
        index: InvertedIndex,
        store: FootprintStore,
        grid: GridIntervals,
        toeprints: ToeprintStore,
        global: GlobalScoreTable,
        config: EngineConfig,
    ) -> Result<Self> {
        if grid.toeprint_count() != toeprints.len() {
            return Err(Error::invalid(format!(
                "grid built for {} toeprints, store holds {}",
                grid.toeprint_count(),
                toeprints.len()
            )));
        }
        let footprints = store.read_all()?;
        let tree = MbrTree::bulk(footprints.iter().map(|(&d, fp)| (fp.mbr(), d)));
        let translation = toeprints.read_all()?.iter().map(|t| t.doc_id).collect();
        Ok(Engine { index, store, tree, grid, toeprints, translation, global, config })
    }

    pub fn index(&self) -> &InvertedIndex {
        &self.index
    }

    pub fn store(&self) -> &FootprintStore {
        &self.store
    }

    pub fn tree(&self) -> &MbrTree {
        &self.tree
    }

    pub fn grid(&self) -> &GridIntervals {
        &self.grid
    }

    pub fn toeprints(&self) -> &ToeprintStore {
        &self.toeprints
    }

    pub fn global(&self) -> &GlobalScoreTable {
        &self.global
    }

    pub fn config(&self) -> &EngineConfig {
        &self.config
    }

    pub fn set_config(&mut self, config: EngineConfig) {
        self.config = config;
    }

    pub fn run(&self, query: &Query) -> Result<QueryReport> {
        match query.algo {
            Algo::TextFirst => self.text_first(query),
            Algo::GeoFirst => self.geo_first(query),
            Algo::KSweep => self.k_sweep(query),
        }
    }

    fn scorer<'a>(&'a self, query: &'a Query) -> Result<Scorer<'a>> {
        let doc_freqs = query.terms.iter().map(|t| self.index.entry(t).map_or(0, |e| e.doc_freq)).collect();
        Ok(Scorer { engine: self, query, doc_freqs, mass: query_mass(&query.footprint, self.config.geo_mode)? })
    }

    /// Fetches the footprints of `matches` and keeps the geo-relevant ones.
    fn score_with_footprints(&self, scorer: &Scorer<'_>, matches: &[DocMatch], meter: &mut IoMeter) -> Result<Vec<ScoredHit>> {
        let ids: Vec<DocId> = matches.iter().map(|m| m.doc_id).collect();
        let plan = self.store.plan_fetch(&ids, self.config.gap)?;
        let records = self.store.fetch(&plan, meter)?;
        let mut hits = Vec::new();
        for (m, rec) in matches.iter().zip(&records) {
            debug_assert_eq!(m.doc_id, rec.doc_id);
            hits.extend(scorer.score(m, rec.footprint.regions())?);
        }
        Ok(hits)
    }

    /// Conjunctive text traversal first, then footprints of every match.
    pub fn text_first(&self, query: &Query) -> Result<QueryReport> {
        let scorer = self.scorer(query)?;
        let mut report = QueryReport::default();
        let matches = self.index.daat_stream(&query.terms, &mut report.meter)?.collect::<Result<Vec<_>>>()?;
        report.push("daat", matches.len());
        let geocoded: Vec<DocMatch> = matches.into_iter().filter(|m| self.store.table().contains(m.doc_id)).collect();
        report.push("geocoded", geocoded.len());
        let hits = self.score_with_footprints(&scorer, &geocoded, &mut report.meter)?;
        report.push("geo_filter", hits.len());
        report.hits = top_k(hits, query.k_results)?;
        Ok(report)
    }

    /// MBR tree first, then the inverted index on the spatial candidates, then
    /// the surviving footprints for exact scores.
    pub fn geo_first(&self, query: &Query) -> Result<QueryReport> {
        let scorer = self.scorer(query)?;
        let mut report = QueryReport::default();
        let candidates = self.tree.query(&query.footprint.mbr());
        report.push("mbr", candidates.len());
        let matches = self.index.filter_postings(&candidates, &query.terms, self.config.gap, &mut report.meter)?;
        report.push("index_filter", matches.len());
        let hits = self.score_with_footprints(&scorer, &matches, &mut report.meter)?;
        report.push("geo_filter", hits.len());
        report.hits = top_k(hits, query.k_results)?;
        Ok(report)
    }

    /// The sweeps K-Sweep would perform for `query` over `grid`.
    pub fn sweep_plan(&self, query: &Query, grid: &GridIntervals) -> Result<Vec<Interval>> {
        if query.k_sweeps < grid.m() {
            return Err(Error::contract(format!("k_sweeps {} below intervals per tile m = {}", query.k_sweeps, grid.m())));
        }
        let mut intervals = Vec::new();
        for r in query.footprint.regions() {
            intervals.extend(grid.intervals_in(&grid.grid().tile_cover(&r.rect)?));
        }
        compute_sweeps(intervals, query.k_sweeps)
    }

    pub fn k_sweep(&self, query: &Query) -> Result<QueryReport> {
        self.k_sweep_with(query, &self.grid)
    }

    /// K-Sweep against an alternative grid over the same toeprints.
    pub fn k_sweep_with(&self, query: &Query, grid: &GridIntervals) -> Result<QueryReport> {
        if grid.toeprint_count() != self.toeprints.len() {
            return Err(Error::contract("grid does not match the toeprint store"));
        }
        let scorer = self.scorer(query)?;
        let mut report = QueryReport::default();
        let sweeps = self.sweep_plan(query, grid)?;
        let mut by_doc: BTreeMap<DocId, Vec<Region>> = BTreeMap::new();
        let (mut scanned, mut kept) = (0, 0);
        for iv in sweeps {
            for t in self.toeprints.scan(iv, &mut report.meter)? {
                scanned += 1;
                // nearby toeprints picked up by the sweep but outside the query
                if query.footprint.intersects_rect(&t.region.rect) {
                    kept += 1;
                    by_doc.entry(self.translation[t.id as usize]).or_default().push(t.region);
                }
            }
        }
        report.push("toeprints_scanned", scanned);
        report.push("toeprints_kept", kept);
        report.push("docs", by_doc.len());
        let ids: Vec<DocId> = by_doc.keys().copied().collect();
        let matches = self.index.filter_postings(&ids, &query.terms, self.config.gap, &mut report.meter)?;
        report.push("index_filter", matches.len());
        let mut hits = Vec::new();
        for m in &matches {
            let regions = by_doc.get_mut(&m.doc_id).expect("candidate came from by_doc");
            // same region order as the stored footprint
            regions.sort_by(|a, b| a.rect.lex_cmp(&b.rect));
            hits.extend(scorer.score(m, regions)?);
        }
        report.push("geo_filter", hits.len());
        report.hits = top_k(hits, query.k_results)?;
        Ok(report)
    }
}
