//! Sampler-correctness tools: goodness of fit, quadrature and Geweke tests.

mod geweke;
mod gof;
mod ks;
mod oracle;
pub mod quad;

pub use geweke::{
    geweke_test, gibbs_transition, write_geweke_csv, GewekeConfig, GewekeReport, GewekeRow, Monitor, Transition,
    DEFAULT_MONITORS,
};
pub use gof::{discrete_gof, GofReport};
pub use ks::{kolmogorov_sf, ks_one_sample, ks_statistic_sorted, ks_two_sample, qq_max_deviation, KsReport};
pub use oracle::pgp_h_posterior_oracle;
