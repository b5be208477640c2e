//! Simulation of heralded multi-photon entanglement from double-passed
//! parametric down-conversion.
//!
//! The pipeline builds the multi-pair emission state of `n` crystals
//! ([`source`]), routes it through polarizing beam splitters and detectors
//! ([`optics`]), and scores the heralded GHZ states and NOON-interferometer
//! fringes that come out ([`scheme`]). All states live in a sparse Fock
//! representation ([`fock`]). The [`oracle`] module re-derives small cases
//! in exact arithmetic.
//!
//! At two crystals and four pairs, half of what the six-fold herald lets
//! through is the Bell state; the other half has both output photons in one
//! mode.
//!
//! ```
//! use herald_core::optics::DetectorModel;
//! use herald_core::scheme::{run_herald, SignPattern};
//! use herald_core::source::SourceConfig;
//!
//! let source = SourceConfig::weak(2, 0.0);
//! let result = run_herald(&source, DetectorModel::bucket(1.0), &SignPattern::all_plus(6)).unwrap();
//! assert!((result.fidelity.unwrap() - 0.5).abs() < 1e-10);
//! assert!((result.single_occupancy_fidelity.unwrap() - 1.0).abs() < 1e-10);
//! ```

pub mod error;
pub mod fock;
pub mod mode;
pub mod optics;
pub mod oracle;
pub mod scheme;
pub mod source;

pub use error::{Error, Result};
pub use fock::{Amplitude, FockState, StateVector};
pub use mode::{ModeId, ModeRegistry, Polarization, Side, SpatialMode};

// The guide's code listings run as doctests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/fock-states.md")]
    pub struct FockStates;
    #[doc = include_str!("../../../book/src/emission.md")]
    pub struct Emission;
    #[doc = include_str!("../../../book/src/optics.md")]
    pub struct Optics;
    #[doc = include_str!("../../../book/src/heralding.md")]
    pub struct Heralding;
    #[doc = include_str!("../../../book/src/interferometry.md")]
    pub struct Interferometry;
    #[doc = include_str!("../../../book/src/oracle.md")]
    pub struct Oracle;
    #[doc = include_str!("../../../README.md")]
    pub struct Readme;
}
