//! Derived quantities: spectral summaries, rate formulas, oCGO parameter
//! bounds, variational-inequality probes and exact step maps.

mod coherence;
mod linear_map;
mod rates;
mod spectral;

pub use crate::solvers::robbins_monro_schedule;
pub use coherence::{mvi_probe, svi_residual, Classification, CoherenceReport, ProbeOptions, SviReport};
pub use linear_map::{linear_step_matrix, spectral_radius, LinearStepMap};
pub use rates::{ocgo_param_bounds, rate_continuous, rate_discrete, DiscreteRate, EtaBound, OcgoBounds};
pub use spectral::{spectral_summary, SpectralSummary};
