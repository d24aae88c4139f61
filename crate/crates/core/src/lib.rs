//! Planar-algebra probability: Temperley-Lieb arithmetic, planar-map
//! expansions of free Gibbs laws and random matrix Monte Carlo.

pub mod error;
pub mod gluing;
pub mod graph;
pub mod maps;
pub mod poly;
pub mod rmt;
pub mod scalar;
pub mod tangle;
pub mod text;
pub mod tl;

pub use error::{Error, Result};
pub use scalar::{delta_eval, DeltaScalar, Laurent, Rational};
pub use tl::{enumerate_tl, is_noncrossing, TLDiagram, TLElement};

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
