//! Distributions that arise as posteriors in Poisson–gamma–Poisson chains.

mod bessel;
pub mod functions;
mod pgp;
mod rg1;
mod sch;
mod table;

pub use bessel::{bessel_log_pmf, bessel_sample, BesselParams};
pub use pgp::{pgp_posterior_h, MarginalH, PgpChain};
pub use rg1::{rg1_log_pdf, rg1_sample, Rg1Params};
pub use sch::{sch_log_pmf, sch_sample, SchParams};
pub use table::DiscreteTable;
