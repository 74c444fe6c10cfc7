use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::{ModelHyper, ModelState};
use crate::error::{Error, Result};
use crate::random::{dirichlet, gamma, poisson};
use crate::tensor::{dense_step_rates, FactorMatrix, Schema, SparseCountSequence, StepEntries};

/// Steps with at most this many cells are drawn cell by cell.
pub const DENSE_CELL_LIMIT: u128 = 1 << 20;

/// `g_k ~ Pois(γ/K)` then `λ_k ~ Gam(ε0λ/K + g_k, β)`.
pub fn sample_weights<R: Rng + ?Sized>(eps_lambda: f64, k: usize, gamma_: f64, beta: f64, rng: &mut R) -> (Vec<u64>, Vec<f64>) {
    let kf = k as f64;
    let g: Vec<u64> = (0..k).map(|_| poisson(gamma_ / kf, rng)).collect();
    let lambda = g
        .iter()
        .map(|&gk| gamma(eps_lambda / kf + gk as f64, beta, rng))
        .collect();
    (g, lambda)
}

/// One transition of the latent chain.
///
/// Draws `h_{k,k2} ~ Pois(τ π_{k,k2} θ^prev_{k2})` into `split` (row-major
/// `K × K`), writes row totals into `h` and `θ_k ~ Gam(ε + h_k, τ)` into `theta`.
#[allow(clippy::too_many_arguments)]
pub fn step_forward<R: Rng + ?Sized>(
    theta_prev: &[f64],
    pi: &[f64],
    tau: f64,
    eps_theta: f64,
    split: &mut [u64],
    h: &mut [u64],
    theta: &mut [f64],
    rng: &mut R,
) {
    let k = theta_prev.len();
    for k1 in 0..k {
        let mut total = 0;
        for k2 in 0..k {
            let c = poisson(tau * pi[k1 * k + k2] * theta_prev[k2], rng);
            split[k1 * k + k2] = c;
            total += c;
        }
        h[k1] = total;
        theta[k1] = gamma(eps_theta + total as f64, tau, rng);
    }
}

/// Draws every latent variable top-down from the prior.
pub fn sample_prior<R: Rng + ?Sized>(hyper: &ModelHyper, schema: &Schema, rng: &mut R) -> ModelState {
    let k = hyper.k;
    let t_len = schema.n_steps;
    let gamma_ = gamma(hyper.a0, hyper.b0, rng);
    let beta = gamma(hyper.alpha0, hyper.alpha0, rng);
    let (g, lambda) = sample_weights(hyper.eps_lambda, k, gamma_, beta, rng);
    let tau = gamma(hyper.alpha0, hyper.alpha0, rng);

    let mut pi = vec![0.0; k * k];
    let alpha = vec![hyper.a0; k];
    let mut col = vec![0.0; k];
    for k2 in 0..k {
        dirichlet(&alpha, &mut col, rng);
        for k1 in 0..k {
            pi[k1 * k + k2] = col[k1];
        }
    }

    let factors = schema
        .dims
        .iter()
        .map(|&d| {
            let mut f = FactorMatrix::zeros(k, d);
            let alpha = vec![hyper.a0; d];
            let mut row = vec![0.0; d];
            for kk in 0..k {
                dirichlet(&alpha, &mut row, rng);
                f.set_row(kk, &row);
            }
            f
        })
        .collect();

    let rho = if hyper.stationary {
        vec![gamma(hyper.a0, hyper.b0, rng); t_len]
    } else {
        (0..t_len).map(|_| gamma(hyper.a0, hyper.b0, rng)).collect()
    };

    let mut theta = vec![0.0; t_len * k];
    let mut h = vec![0; t_len * k];
    let mut h_split = vec![0; t_len * k * k];
    for t in 0..t_len {
        let (done, rest) = theta.split_at_mut(t * k);
        let prev: &[f64] = if t == 0 { &lambda } else { &done[(t - 1) * k..] };
        step_forward(
            prev,
            &pi,
            tau,
            hyper.eps_theta,
            &mut h_split[t * k * k..(t + 1) * k * k],
            &mut h[t * k..(t + 1) * k],
            &mut rest[..k],
            rng,
        );
    }

    ModelState {
        n_components: k,
        n_steps: t_len,
        dims: schema.dims.clone(),
        theta,
        h,
        h_split,
        pi,
        factors,
        lambda,
        g,
        rho,
        tau,
        beta,
        gamma: gamma_,
        y_sources: vec![Vec::new(); t_len],
    }
}

/// Poisson counts for one step of a CP-rate tensor, stored sparsely.
///
/// Small steps are drawn cell by cell. Larger ones draw a total per
/// component from `Pois(ρ λ_k θ_k Π_m Σ_i φ^(m)_{k,i})` and scatter it over
/// cells, which never touches zero cells.
pub fn sample_cp_counts<R: Rng + ?Sized>(
    rho: f64,
    lambda: &[f64],
    theta_t: &[f64],
    factors: &[FactorMatrix],
    rng: &mut R,
) -> Result<StepEntries> {
    let dims: Vec<usize> = factors.iter().map(FactorMatrix::dim).collect();
    let n_modes = dims.len();
    let cells = dims.iter().try_fold(1u128, |a, &d| a.checked_mul(d as u128)).unwrap_or(u128::MAX);
    let overflow = |mu: f64| Error::Numeric(format!("Poisson rate {mu} cannot be sampled"));
    const MAX_RATE: f64 = 1e15;

    if cells <= DENSE_CELL_LIMIT {
        let rates = dense_step_rates(rho, lambda, theta_t, factors);
        let mut entries = Vec::new();
        let mut idx = vec![0u32; n_modes];
        for mu in rates {
            if !(mu <= MAX_RATE) {
                return Err(overflow(mu));
            }
            let y = poisson(mu, rng);
            if y > 0 {
                entries.push((idx.clone(), y));
            }
            for m in (0..n_modes).rev() {
                idx[m] += 1;
                if (idx[m] as usize) < dims[m] {
                    break;
                }
                idx[m] = 0;
            }
        }
        return Ok(StepEntries::from_unsorted(n_modes, entries));
    }

    let mut entries = Vec::new();
    for k in 0..lambda.len() {
        let base = rho * lambda[k] * theta_t[k];
        if base == 0.0 {
            continue;
        }
        let sums: Vec<f64> = factors.iter().map(|f| f.row_sums()[k]).collect();
        let mu = base * sums.iter().product::<f64>();
        if !(mu <= MAX_RATE) {
            return Err(overflow(mu));
        }
        let n = poisson(mu, rng);
        if n == 0 {
            continue;
        }
        let pickers = factors
            .iter()
            .map(|f| WeightedIndex::new(f.row(k)).map_err(|e| Error::Numeric(format!("factor row {k}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        for _ in 0..n {
            let idx = pickers.iter().map(|p| p.sample(rng) as u32).collect();
            entries.push((idx, 1));
        }
    }
    Ok(StepEntries::from_unsorted(n_modes, entries))
}

/// Draws `y^(t)_i ~ Pois(μ^(t)_i)` for every step.
pub fn simulate_data<R: Rng + ?Sized>(state: &ModelState, rng: &mut R) -> Result<SparseCountSequence> {
    let mut seq = SparseCountSequence::empty(state.schema());
    for t in 0..state.n_steps {
        let step = sample_cp_counts(state.rho[t], &state.lambda, state.theta_at(t), &state.factors, rng)?;
        seq.set_step(t, step)?;
    }
    Ok(seq)
}
