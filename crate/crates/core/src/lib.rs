//! Exact Newton–Hodge machinery over truncated power-series rings and Mahler-basis
//! models of compact operators.

pub mod decomp;
pub mod error;
pub mod group;
pub mod halo;
pub mod io;
pub mod mahler;
pub mod matrix;
pub mod padic;
pub mod polygon;
pub mod ring;
pub mod word;

pub use error::{HaloError, Result};
pub use group::FiniteGroup;
pub use ring::{FpCtx, FpSeries, RingDescriptor, RingElement, TruncatedRingElement, Valuation};
pub use word::Word;

/// Ring element with machine-word residues.
pub type Element = TruncatedRingElement<u64>;
/// Ring element with big-integer residues.
pub type WideElement = TruncatedRingElement<num_bigint::BigUint>;
