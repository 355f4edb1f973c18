//! Subproduct systems over ℕ, their Fock spaces and shifts, row-contractive
//! representations, commuting CP maps, and classification helpers.

pub mod error;
pub mod linalg;
pub mod ncpoly;
pub mod subproduct;
pub mod fock;
pub mod cpmaps;
pub mod reps;
pub mod classify;

pub use error::{Error, Result};
pub use linalg::{c, CMatrix, CVector, Subspace, C64};
pub use ncpoly::{IdealGens, NCPoly, Word};
pub use subproduct::{SubproductSystem, SubshiftSpec, SystemSpec};
pub use fock::{ShiftSet, TruncatedFock};
pub use cpmaps::{KrausChannel, StochasticMatrix};
pub use reps::{RepTuple, Verdict};
pub use classify::{character_set_descriptor, q_equivalent, quad_equivalent};
