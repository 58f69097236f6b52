//! Geographic keyword search over a document collection: gazetteer geocoding,
//! a compressed inverted index, a footprint store and two spatial access
//! paths (an MBR tree and a Z-order tile grid), with three interchangeable
//! query strategies measured under a byte + seek cost model.
//!
//! Geometry, ranking and the MBR tree are generic over [`geom::Scalar`];
//! on-disk formats and the query engine use `f64`.

pub mod artifacts;
pub mod bench;
pub mod corpus;
pub mod error;
pub mod footprint_store;
pub mod geocoder;
pub mod geom;
pub mod inverted_index;
pub mod io;
pub mod query_engine;
pub mod ranking;
pub mod spatial_index;

pub use artifacts::{build_artifacts, BuildConfig, IndexManifest};
pub use error::{Error, Result};
pub use geom::{Footprint, Rect, Region, Scalar};
pub use query_engine::{Algo, Engine, EngineConfig, Oracle, Query, QueryReport};

pub type Rect64 = geom::Rect<f64>;
pub type Rect32 = geom::Rect<f32>;
pub type Region64 = geom::Region<f64>;
pub type Region32 = geom::Region<f32>;
pub type Footprint64 = geom::Footprint<f64>;
pub type Footprint32 = geom::Footprint<f32>;
pub type MbrTree64 = spatial_index::MbrTree<f64>;
pub type MbrTree32 = spatial_index::MbrTree<f32>;
pub type ScoredHit64 = ranking::ScoredHit<f64>;
pub type ScoredHit32 = ranking::ScoredHit<f32>;
pub type ScoreWeights64 = ranking::ScoreWeights<f64>;
pub type ScoreWeights32 = ranking::ScoreWeights<f32>;
