//! Verification toolkit for polyharmonic critical elliptic equations
//! `Delta^k u = |u|^{2*-2-eps} u` in the flat model: exact radial algebra,
//! bubbles, Pohozaev identities, Green kernels on the torus, Hardy constants
//! and blow-up rate formulas.

pub mod bubble;
pub mod config;
pub mod constants;
pub mod describe;
pub mod error;
pub mod green;
pub mod hardy;
pub mod linalg;
pub mod pohozaev;
pub mod radial;
pub mod rates;
pub mod report;
pub mod suite;
pub mod tensor;

pub use constants::DimPair;
pub use error::{Error, Result};
pub use radial::{RadialProfile, Term};
pub use report::{CheckReport, Provenance};
