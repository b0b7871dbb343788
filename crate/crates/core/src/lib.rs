//! Fringe analysis of B-trees as Pólya gap urns: replacement rules, tree and
//! urn simulation, spectral data of the replacement matrix, projections on the
//! oscillating eigenspace and the limit variable `W`.

pub mod analysis;
pub mod btree;
pub mod cli;
pub mod composition;
pub mod error;
pub mod gamma;
pub mod rules;
pub mod spectral;
pub mod stats;
pub mod transport;
pub mod urnsim;
pub mod wlimit;

pub use composition::{CompositionVector, Coordinates};
pub use error::{Error, Result};
pub use rules::{check_tenable, make_rule, Algorithm, ReplacementRule};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
