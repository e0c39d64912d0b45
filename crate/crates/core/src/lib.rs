//! SU(2)-invariant spread of spin states.
//!
//! For a state in the spin-`j` irreducible representation of SU(2) the
//! quantity `Δ = ΔJx² + ΔJy² + ΔJz²` is invariant under the group action and
//! satisfies `ħ²j ≤ Δ ≤ ħ²j(j+1)`. This crate builds the representation,
//! the state families around it (coherent, intelligent, orbit samples,
//! Fubini-Study uniform states), the Fubini-Study geometry of `CP^N` used for
//! Hilbert-space averages, and an analysis layer that checks each claim
//! numerically.
//!
//! Basis vectors are always stored in descending `m` order: index 0 is
//! `|j⟩`, the last index is `|−j⟩`.

pub mod analysis;
pub mod cpn;
pub mod error;
pub mod quadrature;
pub mod rng;
pub mod sample_csv;
pub mod spin;
pub mod states;
pub mod stats;
pub mod uncertainty;

pub use error::{Error, Result};
pub use spin::{GroupElement, SpinMatrices, SpinOperator, SpinQuantum};
pub use states::{CoherentLabel, PureState};
pub use uncertainty::UncertaintyReport;

pub use nalgebra;
pub use num_complex::Complex64;

/// Version tag written at the top of every JSON document.
pub const SCHEMA: &str = "spinvar/1";
