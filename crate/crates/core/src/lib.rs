//! Best-channel identification for discrete memoryless channels (DMCs).
//!
//! Given `k` candidate channels that can only be observed through channel
//! senses (submit an input symbol, observe an output symbol), find the one
//! with the largest Shannon capacity with a prescribed confidence.
//!
//! The crate is organised bottom-up:
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`dist`], [`channel`], [`capacity`] | distributions, divergences, Blahut–Arimoto, pseudo-capacity |
//! | [`estimation`] | plug-in capacity estimator, confidence radii, sample-count formulas |
//! | [`sensing`] | seeded simulated environment with batched multinomial sensing |
//! | [`identify`] | gap elimination, naive and median-elimination PAC subroutines, budgets |
//! | [`bounds`] | change-of-measure lower bound with permutation search |
//! | [`harness`] | experiment drivers, CSV/JSON output, config |
//!
//! All logarithms are natural; every information quantity is in nats.
//!
//! ```
//! use dmc_ident::channel::Channel;
//! use dmc_ident::capacity::capacity;
//!
//! let bsc = Channel::bsc(0.11).unwrap();
//! let c = capacity(&bsc, 1e-12, 100_000).unwrap();
//! assert!((c.capacity - 0.346_63).abs() < 1e-4);
//! ```

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod capacity;
pub mod channel;
pub mod dist;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod identify;
pub mod output;
pub mod par;
pub mod sensing;

pub use error::{Error, Result};
