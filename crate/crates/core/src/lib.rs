//! Entanglement-assisted circuit knitting: quasi-probability decompositions
//! of bipartite unitaries and wires, their sampling overheads, and a Monte
//! Carlo estimator that executes them.

pub mod bench;
pub mod bounds;
pub mod error;
pub mod estimator;
pub mod exec;
pub mod gates;
pub mod liouville;
pub mod random;
pub mod qpd;
pub mod schmidt;

pub use error::{KnitError, Result};
pub use liouville::{ComplexMatrix, Superoperator, VectorizedOperator, C64};
pub use schmidt::{Lud, ResourceState};
