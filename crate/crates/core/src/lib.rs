//! Loss-limited performance model of a single-hop polarization-entanglement link.
//!
//! A dual-OPA source emits signal/idler beams down two lossy fiber arms into a
//! pair of single-atom memory cavities. The crate maps the link parameters to
//! the loaded two-mode Gaussian state, and from it to the per-trial erasure,
//! success and error probabilities, the loss-limited fidelity and throughput.
//!
//! ```
//! use entlink::config::RunConfig;
//! use entlink::metrics::evaluate;
//!
//! let point = RunConfig::default().operating_point(50.0).unwrap();
//! let m = evaluate(&point).unwrap();
//! assert!((m.throughput_per_s - 184.4).abs() < 0.5);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod checks;
pub mod cli;
pub mod config;
pub mod error;
pub mod gaussian_pair;
pub mod loading;
pub mod metrics;
pub mod protocol_mc;
pub mod quadrature;
pub mod source;

pub use error::{Error, Result};
