//! Exact-arithmetic EFX and tEFX allocation of indivisible chores among
//! three agents.
//!
//! Costs are exact rationals. Solvers break ties symbolically (see
//! [`perturb`]) so no floating-point tolerance appears anywhere.

pub mod efx;
pub mod error;
pub mod fairness;
pub mod gen;
pub mod init;
pub mod instance;
pub mod io;
pub mod oracle;
pub mod perturb;
pub mod rat;
pub mod solve;
mod tally;
pub mod tefx;
pub mod validate;

pub use error::{Error, Result};
pub use fairness::{verify, FairnessCertificate, Mode, Witness};
pub use instance::{Allocation, Bundle, ChoreId, CostFunction, Instance, AGENTS};
pub use perturb::PerturbedCost;
pub use rat::Rat;
pub use solve::{Solution, SolveOptions};
pub use tally::Scale;
pub use validate::{validate_instance, ValidationReport};
