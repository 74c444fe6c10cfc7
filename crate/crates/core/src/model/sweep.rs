use rand::Rng;

use super::conditionals::{
    update_beta, update_gamma, update_h_sources, update_h_theta, update_lambda_g, update_phi, update_pi, update_rho,
    update_tau, update_y_sources,
};
use super::{ModelHyper, ModelState};
use crate::error::Result;
use crate::tensor::SparseCountSequence;

/// One full Gibbs sweep.
///
/// Order: data sources, transition sources, `(h, θ)` backward in time,
/// `(λ, g)`, `Π`, `Φ`, then `τ`, `β`, `γ` and `ρ`.
pub fn sweep<R: Rng + ?Sized>(
    state: &mut ModelState,
    hyper: &ModelHyper,
    data: &SparseCountSequence,
    lenient: bool,
    rng: &mut R,
) -> Result<()> {
    let agg = update_y_sources(state, data, lenient, rng)?;
    update_h_sources(state, lenient, rng)?;
    update_h_theta(state, hyper, &agg, lenient, rng)?;
    update_lambda_g(state, hyper, &agg, lenient, rng)?;
    update_pi(state, hyper, rng);
    update_phi(state, hyper, &agg, rng);
    update_tau(state, hyper, rng);
    update_beta(state, hyper, rng);
    update_gamma(state, hyper, rng);
    update_rho(state, hyper, &agg, rng);
    Ok(())
}
