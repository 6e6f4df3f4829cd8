//! Multi-type symmetric simple exclusion process on a finite lattice with
//! open boundaries.
//!
//! - [`model`]: states, events and rates.
//! - [`exact`]: the full generator, a numerical stationary solve, and the
//!   closed-form product-form law with its site marginals.
//! - [`simulate`]: seeded kinetic Monte Carlo replicas with tagged particles.
//! - [`analytics`]: flux and sojourn-time closed forms and estimators.
//! - [`reversibility`]: detailed balance, reversed chain, cycle criterion.
//!
//! ```
//! use ssep::{exact, model::ModelParams};
//!
//! let params = ModelParams::single(2, 1.0, 2.0, 1.0, true).unwrap();
//! let solved = exact::solve_stationary(&exact::build_generator(&params).unwrap()).unwrap();
//! let closed = exact::product_form(&params).unwrap();
//! assert!(solved.max_abs_diff(&closed).unwrap() < 1e-12);
//! ```

pub mod analytics;
pub mod error;
pub mod exact;
pub mod model;
pub mod reversibility;
pub mod simulate;

pub use error::{Result, SsepError};
pub use exact::{Distribution, Generator, SiteMarginal};
pub use model::{Event, EventKind, LatticeState, ModelParams, StateIndex, TransitionClass};
pub use simulate::{SimConfig, SimStats};
