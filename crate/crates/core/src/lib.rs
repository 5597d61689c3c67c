//! Steady-state optics of a coherently driven four-level quasi-Λ atomic vapor.
//!
//! The pipeline is: stationary density matrix ([`dynamics`]) → electric and
//! magnetic polarizabilities with local-field (Clausius-Mossotti) correction
//! ([`response`]) → spectra over probe detuning and negative-index bands
//! ([`sweep`]) → files ([`io`], [`cli`]).

pub mod cli;
pub mod config;
pub mod density;
pub mod dynamics;
pub mod io;
pub mod params;
pub mod response;
pub mod sweep;

pub use density::DensityMatrix;
pub use dynamics::EquationVariant;
pub use params::{AtomParameters, DriveParameters, PhysicalConstants};

pub use response::{BranchMode, ResponseSample};
pub use sweep::{ResponseSpectrum, SweepConfig};
