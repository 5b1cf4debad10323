//! Semiclassical tunnelling in a four-well potential with two coupled
//! degrees of freedom.
//!
//! The pipeline runs from action constants through classical instanton
//! profiles, one-loop prefactors and the dilute instanton gas to the four
//! lowest energy levels, with a finite-difference eigensolver alongside as
//! ground truth.
//!
//! ```
//! use coupled_instantons::{derive_rates, ActionParams};
//!
//! let params = ActionParams::new(1.0, 0.5, 1.0, 0.08, 0.16)?;
//! let rates = derive_rates(&params)?;
//! assert!((rates.kappa - 1.0).abs() < 1e-15);
//! assert!((rates.epsilon - 0.4).abs() < 1e-15);
//! # Ok::<(), coupled_instantons::Error>(())
//! ```

pub mod classical;
pub mod error;
pub mod fluct;
pub mod gas;
pub mod greens;
pub mod model;
pub mod molecule;
pub mod oracle;
pub mod quad;

pub use error::{Error, Result};
pub use model::{
    derive_rates, harmonic_baseline, hierarchy_check, potential, ActionParams, BaselineMode, Flavor, Grade,
    HierarchyReport, Rates,
};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/classical.md")]
    mod classical {}
    #[doc = include_str!("../../../book/src/propagator.md")]
    mod propagator {}
    #[doc = include_str!("../../../book/src/fluctuations.md")]
    mod fluctuations {}
    #[doc = include_str!("../../../book/src/gas.md")]
    mod gas {}
    #[doc = include_str!("../../../book/src/molecule.md")]
    mod molecule {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
