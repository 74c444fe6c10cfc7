//! Latent state, generative process and Gibbs updates of the dynamical system.

pub mod conditionals;
mod hyper;
mod prior;
mod state;
mod sweep;

pub use conditionals::YAggregates;
pub use hyper::ModelHyper;
pub use prior::{sample_cp_counts, sample_prior, sample_weights, simulate_data, step_forward, DENSE_CELL_LIMIT};
pub use state::ModelState;
pub use sweep::sweep;
