use std::collections::{BTreeMap, HashMap};

use super::Query;
use crate::corpus::{Collection, DocId};
use crate::error::Result;
use crate::footprint_store::FootprintStore;
use crate::geom::Footprint;
use crate::inverted_index::InvertedIndex;
use crate::ranking::{combined_score, geo_score, text_score, top_k, GeoMode, GlobalScoreTable, ScoreWeights, ScoredHit};

#[derive(Clone, Debug)]
struct Bag {
    len: u32,
    tf: HashMap<String, u32>,
}

/// Scans every document for every query. Shares only the scoring functions
/// with the engine, none of its access paths.
#[derive(Clone, Debug)]
pub struct Oracle {
    bags: Vec<Bag>,
    footprints: BTreeMap<DocId, Footprint>,
    global: GlobalScoreTable,
    weights: ScoreWeights,
    geo_mode: GeoMode,
}

impl Oracle {
    pub fn new(collection: &Collection, footprints: BTreeMap<DocId, Footprint>, global: GlobalScoreTable) -> Self {
        let bags = collection
            .docs
            .iter()
            .map(|d| {
                let mut tf = HashMap::new();
                for t in d.tokens() {
                    *tf.entry(t).or_insert(0) += 1;
                }
                Bag { len: d.length, tf }
            })
            .collect();
        Oracle { bags, footprints, global, weights: ScoreWeights::default(), geo_mode: GeoMode::default() }
    }

    /// Rebuilds per-document term bags by inverting every postings list and
    /// reads every footprint record.
    pub fn from_index(index: &InvertedIndex, store: &FootprintStore, global: GlobalScoreTable) -> Result<Self> {
        let mut bags: Vec<Bag> = index.doc_lens().iter().map(|&len| Bag { len, tf: HashMap::new() }).collect();
        for e in index.lexicon() {
            for p in index.postings_of(&e.term)? {
                bags[p.doc_id as usize].tf.insert(e.term.clone(), p.freq);
            }
        }
        Ok(Oracle { bags, footprints: store.read_all()?, global, weights: ScoreWeights::default(), geo_mode: GeoMode::default() })
    }

    pub fn with_scoring(mut self, weights: ScoreWeights, geo_mode: GeoMode) -> Self {
        self.weights = weights;
        self.geo_mode = geo_mode;
        self
    }

    pub fn len(&self) -> usize {
        self.bags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bags.is_empty()
    }

    pub fn brute_force(&self, query: &Query) -> Result<Vec<ScoredHit>> {
        let n = self.bags.len() as u32;
        let doc_freqs: Vec<u32> =
            query.terms.iter().map(|t| self.bags.iter().filter(|b| b.tf.contains_key(t)).count() as u32).collect();
        let mut hits = Vec::new();
        for (doc, bag) in self.bags.iter().enumerate() {
            let doc = doc as DocId;
            let Some(freqs) = query.terms.iter().map(|t| bag.tf.get(t).copied()).collect::<Option<Vec<u32>>>() else {
                continue;
            };
            let Some(fp) = self.footprints.get(&doc) else { continue };
            let geo = geo_score(&query.footprint, fp, self.geo_mode)?;
            if !(geo > 0.0) {
                continue;
            }
            let text = text_score(&freqs, &doc_freqs, n, bag.len)?;
            hits.push(combined_score(doc, text, geo, self.global.get(doc), &self.weights));
        }
        top_k(hits, query.k_results)
    }
}
