//! Non-Markovianity of time-dependent Lindblad dynamics.
//!
//! The crate turns a GKSL generator `L_t` into the incremental Choi objects of
//! its evolution and measures how far each increment is from being
//! CP-divisible:
//!
//! * [`measures::rhp_g`] gives the RHP rate `g(t)`,
//! * [`measures::dt_measure`] gives the trace-distance measure `D_T(t)`,
//!   which is never smaller than `g(t)`,
//! * [`measures::robustness_incremental`] and
//!   [`measures::robustness_cumulative`] give the robustness.
//!
//! ```
//! use nmlab::choi::choi_derivative;
//! use nmlab::measures::{dt_measure, rhp_g, OptimizerConfig};
//! use nmlab::models::by_name;
//!
//! let model = by_name("dephasing-sin").unwrap();
//! let k = choi_derivative(&model.generator, 1.5 * std::f64::consts::PI).unwrap();
//! let g = rhp_g(&k).unwrap();
//! let (d_t, _) = dt_measure(&k, &OptimizerConfig::default()).unwrap();
//! assert!((g - 2.0).abs() < 1e-9);
//! assert!(d_t >= g - 1e-6);
//! ```

pub mod choi;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod generators;
pub mod linops;
pub mod measures;
pub mod models;
pub mod oracle;
pub mod verify;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/generators.md")]
    mod generators {}
    #[doc = include_str!("../../../book/src/choi.md")]
    mod choi {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/trace-distance.md")]
    mod trace_distance {}
    #[doc = include_str!("../../../book/src/models.md")]
    mod models {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
}
