//! Numerical laboratory for the classical and quantum Gibbs states of the one-dimensional
//! quintic Hartree equation on the torus `[-1/2, 1/2)`.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the aliases below fix `f64`.

pub mod divdiff;
pub mod error;
pub mod free_field;
pub mod gibbs;
pub mod hartree;
pub mod interaction;
pub mod observable;
pub mod quadrature;
pub mod quantum;
pub mod scalar;
pub mod spectral;
pub mod stats;
pub mod wick;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ModeGrid = spectral::ModeGrid<f64>;
pub type FourierField = spectral::FourierField<f64>;
pub type Spectral = spectral::Spectral<f64>;
pub type InteractionSpec = interaction::InteractionSpec<f64>;
pub type Observable = observable::Observable<f64>;
pub type McEstimate = stats::McEstimate<f64>;
pub type FieldSampler = free_field::FieldSampler<f64>;
pub type CutoffSpec = gibbs::CutoffSpec<f64>;
pub type ClassicalModel = gibbs::ClassicalModel<f64>;
pub type FlowConfig = hartree::FlowConfig<f64>;
pub type HartreeFlow = hartree::HartreeFlow<f64>;
pub type QuantumConfig = quantum::QuantumConfig<f64>;
pub type QuantumSystem = quantum::QuantumSystem<f64>;
pub type GibbsState = quantum::GibbsState<f64>;
pub type WickEngine = wick::WickEngine<f64>;
