//! Measurement-symbol algebra.
//!
//! Observables are declared in a [`registry::Registry`]; expressions over
//! measurement symbols reduce to normal forms in [`algebra`]; [`functional`]
//! adds trace, probability and gauge maps; [`realization`] evaluates
//! everything with explicit unitary bases. The [`dsl`] module parses scripts
//! and [`cli`] runs them.

pub mod algebra;
pub mod cli;
pub mod dsl;
pub mod functional;
pub mod raw;
pub mod realization;
pub mod registry;
pub mod scalar;

pub use algebra::{AlgebraExpr, SymbolWord};
pub use functional::GaugeAssignment;
pub use raw::RawExpr;
pub use realization::Realization;
pub use registry::{ObservableId, Registry, RegistryBuilder, StateRef};
pub use scalar::{Coeff, Ket, ScalarExpr};
