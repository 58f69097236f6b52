//! End-to-end artifact build and the manifest that ties the files together.
//!
//! The manifest (`manifest.txt`) is plain `key=value` lines. It is written
//! last, so a directory with a manifest always holds a complete build.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::corpus::{ingest, Collection, DocId};
use crate::error::{Error, Result};
use crate::footprint_store::{self, FootprintStore, DEFAULT_GAP};
use crate::geocoder::{geocode, read_gazetteer, GeocodeConfig, Gazetteer};
use crate::geom::Footprint;
use crate::inverted_index::{self, InvertedIndex};
use crate::io::{self, FORMAT_VERSION};
use crate::query_engine::{Engine, EngineConfig};
use crate::ranking::GlobalScoreTable;
use crate::spatial_index::{assign_toeprints, build_grid, write_toeprints, MbrTree, TileGrid, ToeprintStore, DEFAULT_GRID_BITS, GRID_FILE, TOEPRINT_FILE};

pub const MANIFEST_FILE: &str = "manifest.txt";
pub const GLOBAL_FILE: &str = "global.tsv";
pub const DEFAULT_M: usize = 2;

#[derive(Clone, Debug, PartialEq)]
pub struct BuildConfig {
    pub corpus: PathBuf,
    pub gazetteer: PathBuf,
    pub global_scores: Option<PathBuf>,
    pub grid_bits: u32,
    pub m: usize,
    pub gap: u64,
    pub out: PathBuf,
    pub geocode: GeocodeConfig,
}

impl BuildConfig {
    pub fn new(corpus: impl Into<PathBuf>, gazetteer: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        BuildConfig {
            corpus: corpus.into(),
            gazetteer: gazetteer.into(),
            global_scores: None,
            grid_bits: DEFAULT_GRID_BITS,
            m: DEFAULT_M,
            gap: DEFAULT_GAP,
            out: out.into(),
            geocode: GeocodeConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IndexManifest {
    pub format_version: u32,
    pub grid_bits: u32,
    pub m: usize,
    pub gap: u64,
    /// Artifact role → file name relative to the index directory.
    pub files: BTreeMap<String, String>,
    /// Build statistics, informational only.
    pub stats: BTreeMap<String, u64>,
}

const FILE_KEYS: [(&str, &str); 7] = [
    ("lexicon", inverted_index::LEXICON_FILE),
    ("postings", inverted_index::POSTINGS_FILE),
    ("doclens", inverted_index::DOCLENS_FILE),
    ("footprints", footprint_store::STORE_FILE),
    ("footprint_index", footprint_store::INDEX_FILE),
    ("toeprints", TOEPRINT_FILE),
    ("grid", GRID_FILE),
];

impl IndexManifest {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "format_version={}\ngrid_bits={}\nm={}\ngap={}\n",
            self.format_version, self.grid_bits, self.m, self.gap
        );
        for (k, v) in &self.files {
            out.push_str(&format!("file.{k}={v}\n"));
        }
        for (k, v) in &self.stats {
            out.push_str(&format!("stat.{k}={v}\n"));
        }
        out
    }

    pub fn parse(name: &str, text: &str) -> Result<Self> {
        let mut kv = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| Error::parse(name, i + 1, "expected key=value"))?;
            kv.insert(k.trim().to_string(), (i + 1, v.trim().to_string()));
        }
        fn num<T: std::str::FromStr>(name: &str, kv: &BTreeMap<String, (usize, String)>, key: &str) -> Result<T> {
            let (line, v) = kv.get(key).ok_or_else(|| Error::parse(name, 0, format!("missing key {key}")))?;
            v.parse().map_err(|_| Error::parse(name, *line, format!("bad value for {key}: {v:?}")))
        }
        let format_version: u32 = num(name, &kv, "format_version")?;
        if format_version != FORMAT_VERSION {
            return Err(Error::invalid(format!("{name}: format version {format_version}, expected {FORMAT_VERSION}")));
        }
        let mut files = BTreeMap::new();
        let mut stats = BTreeMap::new();
        for (k, (line, v)) in &kv {
            if let Some(role) = k.strip_prefix("file.") {
                files.insert(role.to_string(), v.clone());
            } else if let Some(stat) = k.strip_prefix("stat.") {
                stats.insert(stat.to_string(), num(name, &kv, k).map_err(|_| Error::parse(name, *line, format!("bad stat {v:?}")))?);
            }
        }
        for (role, _) in FILE_KEYS {
            if !files.contains_key(role) {
                return Err(Error::parse(name, 0, format!("manifest lists no {role} file")));
            }
        }
        Ok(IndexManifest { format_version, grid_bits: num(name, &kv, "grid_bits")?, m: num(name, &kv, "m")?, gap: num(name, &kv, "gap")?, files, stats })
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest = Self::parse(&path.display().to_string(), &text)?;
        for file in manifest.files.values() {
            let p = dir.join(file);
            if !p.is_file() {
                return Err(Error::invalid(format!("manifest references missing file {}", p.display())));
            }
        }
        Ok(manifest)
    }

    pub fn file(&self, role: &str) -> Option<&str> {
        self.files.get(role).map(String::as_str)
    }
}

/// In-memory results of every build stage, before anything is written.
#[derive(Clone, Debug)]
pub struct BuiltCollection {
    pub collection: Collection,
    pub footprints: BTreeMap<DocId, Footprint>,
}

/// Runs ingest → geocode → index → footprint store → toeprints → grid.
/// Files are staged in a hidden directory under `out` and moved into place
/// only after every stage succeeded; the manifest goes last.
pub fn build_artifacts(cfg: &BuildConfig) -> Result<IndexManifest> {
    let grid = TileGrid::new(cfg.grid_bits)?;
    if cfg.m < 1 {
        return Err(Error::contract("m must be >= 1"));
    }
    let collection = ingest(&cfg.corpus).map_err(|e| e.in_stage("ingest"))?;
    let gaz = read_gazetteer(&cfg.gazetteer).and_then(Gazetteer::new).map_err(|e| e.in_stage("geocode"))?;
    let global = match &cfg.global_scores {
        Some(p) => Some(GlobalScoreTable::parse(&p.display().to_string(), &io::read_file(p)?).map_err(|e| e.in_stage("global scores"))?),
        None => None,
    };

    fs::create_dir_all(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let _ = fs::remove_file(cfg.out.join(MANIFEST_FILE));
    let staging = tempfile::Builder::new().prefix(".staging").tempdir_in(&cfg.out).map_err(|e| Error::io(&cfg.out, e))?;
    let dir = staging.path();

    let footprints = geocode(&collection, &gaz, &cfg.geocode);
    let stats = inverted_index::build(&collection, dir).map_err(|e| e.in_stage("index"))?;
    footprint_store::write_store(&footprints, dir).map_err(|e| e.in_stage("footprint store"))?;
    let toeprints = assign_toeprints(&footprints, grid);
    write_toeprints(&toeprints, dir).map_err(|e| e.in_stage("toeprints"))?;
    let grid_bytes = build_grid(&toeprints, grid, cfg.m).and_then(|g| g.write(dir)).map_err(|e| e.in_stage("grid"))?;
    let tree = MbrTree::bulk(footprints.iter().map(|(&d, fp)| (fp.mbr(), d)));

    let mut files: BTreeMap<String, String> = FILE_KEYS.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    if let Some(g) = &global {
        io::write_file(&dir.join(GLOBAL_FILE), g.to_tsv().as_bytes())?;
        files.insert("global_scores".into(), GLOBAL_FILE.into());
    }
    let manifest = IndexManifest {
        format_version: FORMAT_VERSION,
        grid_bits: cfg.grid_bits,
        m: cfg.m,
        gap: cfg.gap,
        files,
        stats: BTreeMap::from([
            ("docs".into(), u64::from(stats.n)),
            ("vocab".into(), u64::from(stats.vocab_size)),
            ("total_tokens".into(), stats.total_tokens),
            ("geocoded_docs".into(), footprints.len() as u64),
            ("toeprints".into(), toeprints.len() as u64),
            ("grid_bytes".into(), grid_bytes),
            ("mbr_tree_height".into(), tree.height() as u64),
        ]),
    };

    let _ = fs::remove_file(cfg.out.join(GLOBAL_FILE));
    for file in manifest.files.values() {
        let (from, to) = (dir.join(file), cfg.out.join(file));
        fs::rename(&from, &to).map_err(|e| Error::io(&to, e))?;
    }
    let tmp = dir.join(MANIFEST_FILE);
    io::write_file(&tmp, manifest.to_text().as_bytes())?;
    let target = cfg.out.join(MANIFEST_FILE);
    fs::rename(&tmp, &target).map_err(|e| Error::io(&target, e))?;
    Ok(manifest)
}

impl Engine {
    /// Opens a built index directory with the manifest's gap and default scoring.
    pub fn open(dir: &Path) -> Result<Self> {
        let manifest = IndexManifest::read(dir)?;
        let grid = crate::spatial_index::GridIntervals::read(dir)?;
        if grid.grid().bits() != manifest.grid_bits || grid.m() != manifest.m {
            return Err(Error::invalid("grid file does not match the manifest"));
        }
        let global = match manifest.file("global_scores") {
            Some(f) => GlobalScoreTable::read_or_default(&dir.join(f))?,
            None => GlobalScoreTable::default(),
        };
        let config = EngineConfig { gap: manifest.gap, ..EngineConfig::default() };
        Engine::assemble(InvertedIndex::open(dir)?, FootprintStore::open(dir)?, grid, ToeprintStore::open(dir)?, global, config)
    }
}
