//! Exact top-k association search over entity digital traces.

pub mod adm;
pub mod bench;
pub mod analysis;
pub mod engine;
pub mod error;
pub mod hierarchy;
pub mod minhash;
pub mod mobility;
pub mod persist;
pub mod query;
pub mod seed;
pub mod traces;
pub mod tree;

pub use error::{Error, Result};
pub use hierarchy::{GridHierarchyConfig, RootMode, SpIndex, UnitId};
pub use traces::{CellSequence, RawRecord, StCell, Time};
pub use adm::{LevelOverlap, Measure, Variant};
pub use minhash::{HashFamily, SignatureList};
pub use tree::{EntityId, MinSigTree};
pub use query::{Hit, PruneScope, QueryResult, QueryStats, Searcher};
