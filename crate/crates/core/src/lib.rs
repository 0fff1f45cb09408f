//! Exact computation of congruence modules and congruence ideals for finite
//! flat algebras over `Z_(p)` and their lattice modules, with a modular
//! symbols factory for weight-2 Hecke modules on `Γ0(N)`.

pub mod algebra;
pub mod congmod;
pub mod detect;
pub mod doc;
pub mod duality;
pub mod dvr;
pub mod error;
pub mod hecke;
pub mod poly;
pub mod suite;
pub mod synth;

pub use error::{Error, Result};
