//! Complete conditionals of the dynamical system.
//!
//! `lenient` relaxes the two allocation checks that an arbitrary starting
//! state can violate: a positive count whose candidate components all have
//! zero weight is spread uniformly instead of raising an error, and a
//! marginal `h` draw with a positive count but zero rate returns one.

use rand::Rng;

use super::{ModelHyper, ModelState};
use crate::error::{Error, Result};
use crate::random::{dirichlet, gamma, multinomial};
use crate::special::{MarginalH, PgpChain};
use crate::tensor::{component_weights, SparseCountSequence};

/// Totals of the data sources that feed the remaining conditionals.
#[derive(Debug, Clone, PartialEq)]
pub struct YAggregates {
    /// `y^(t)_{·k}` at `t * K + k`.
    pub y_tk: Vec<u64>,
    /// Per mode, `Σ_t Σ_{i: i_m = i} y^(t)_{i,k}` at `i * K + k`.
    pub mode_counts: Vec<Vec<u64>>,
    /// `y^(t)_{··}`.
    pub y_t: Vec<u64>,
}

impl YAggregates {
    pub fn y_total_k(&self, k_count: usize) -> Vec<u64> {
        let mut out = vec![0; k_count];
        for row in self.y_tk.chunks_exact(k_count) {
            for (o, v) in out.iter_mut().zip(row) {
                *o += v;
            }
        }
        out
    }
}

fn allocate<R: Rng + ?Sized>(n: u64, weights: &mut [f64], out: &mut [u64], lenient: bool, rng: &mut R) -> Result<()> {
    match multinomial(n, weights, out, rng) {
        Err(Error::Inconsistent(_)) if lenient => {
            weights.fill(1.0);
            multinomial(n, weights, out, rng)
        }
        other => other,
    }
}

/// Splits every non-zero count across components with weights
/// `λ_k θ_k^(t) Π_m φ^(m)_{k,i_m}`. Zero cells are never visited.
pub fn update_y_sources<R: Rng + ?Sized>(
    state: &mut ModelState,
    data: &SparseCountSequence,
    lenient: bool,
    rng: &mut R,
) -> Result<YAggregates> {
    let k = state.k();
    if data.n_steps() != state.n_steps || data.dims() != state.dims.as_slice() {
        return Err(Error::Dimension("data shape does not match the model state".into()));
    }
    let mut agg = YAggregates {
        y_tk: vec![0; state.n_steps * k],
        mode_counts: state.dims.iter().map(|&d| vec![0; d * k]).collect(),
        y_t: vec![0; state.n_steps],
    };
    let mut weights = vec![0.0; k];
    for t in 0..state.n_steps {
        let step = data.step(t);
        let mut sources = std::mem::take(&mut state.y_sources[t]);
        sources.clear();
        sources.resize(step.nnz() * k, 0);
        let theta_t = state.theta_at(t);
        for (j, (idx, y)) in step.iter().enumerate() {
            component_weights(&state.lambda, theta_t, &state.factors, idx, &mut weights);
            let out = &mut sources[j * k..(j + 1) * k];
            allocate(y, &mut weights, out, lenient, rng).map_err(|e| match e {
                Error::Inconsistent(_) => Error::Inconsistent(format!(
                    "count {y} at step {t}, index {idx:?} has zero rate under every component"
                )),
                e => e,
            })?;
            let yt = &mut agg.y_tk[t * k..(t + 1) * k];
            for (a, s) in yt.iter_mut().zip(out.iter()) {
                *a += s;
            }
            for (counts, &i) in agg.mode_counts.iter_mut().zip(idx) {
                let row = &mut counts[i as usize * k..(i as usize + 1) * k];
                for (a, s) in row.iter_mut().zip(out.iter()) {
                    *a += s;
                }
            }
            agg.y_t[t] += y;
        }
        state.y_sources[t] = sources;
    }
    Ok(agg)
}

fn resplit_row<R: Rng + ?Sized>(
    state: &mut ModelState,
    t: usize,
    k1: usize,
    weights: &mut [f64],
    lenient: bool,
    rng: &mut R,
) -> Result<()> {
    let k = state.k();
    let n = state.h[t * k + k1];
    {
        let prev = state.theta_prev(t);
        for (k2, w) in weights.iter_mut().enumerate() {
            *w = state.pi[k1 * k + k2] * prev[k2];
        }
    }
    let start = (t * k + k1) * k;
    allocate(n, weights, &mut state.h_split[start..start + k], lenient, rng).map_err(|e| match e {
        Error::Inconsistent(_) => Error::Inconsistent(format!(
            "h = {n} at step {t}, component {k1} has no source with positive rate"
        )),
        e => e,
    })
}

/// Re-splits every `h_k^(t)` across `k2` with weights `π_{k,k2} θ_{k2}^(t-1)`.
pub fn update_h_sources<R: Rng + ?Sized>(state: &mut ModelState, lenient: bool, rng: &mut R) -> Result<()> {
    let mut weights = vec![0.0; state.k()];
    for t in 0..state.n_steps {
        for k1 in 0..state.k() {
            resplit_row(state, t, k1, &mut weights, lenient, rng)?;
        }
    }
    Ok(())
}

/// Constants of the Poisson–gamma–Poisson chain through `θ_k^(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThetaLink {
    /// `m_k^(t) = h^(t+1)_{·k} + y^(t)_{·k}`.
    pub m: u64,
    /// `τ Σ_{k2} π_{k,k2} θ_{k2}^(t-1)`.
    pub c1: f64,
    /// `τ`.
    pub c2: f64,
    /// `τ π_{·k}` (absent at the final step) plus `ρ^(t) λ_k Π_m Σ_i φ^(m)_{k,i}`.
    pub c3: f64,
}

struct StepContext {
    pi_cols: Vec<f64>,
    mass: Vec<f64>,
}

impl StepContext {
    fn new(state: &ModelState) -> Self {
        StepContext {
            pi_cols: state.pi_column_sums(),
            mass: state.factor_mass(),
        }
    }

    fn link(&self, state: &ModelState, agg: &YAggregates, h_next: &[u64], t: usize, k: usize) -> ThetaLink {
        let kk = state.k();
        let prev = state.theta_prev(t);
        let drive: f64 = (0..kk).map(|k2| state.pi[k * kk + k2] * prev[k2]).sum();
        let onward = if t + 1 < state.n_steps {
            state.tau * self.pi_cols[k]
        } else {
            0.0
        };
        ThetaLink {
            m: h_next[k] + agg.y_tk[t * kk + k],
            c1: state.tau * drive,
            c2: state.tau,
            c3: onward + state.rho[t] * state.lambda[k] * self.mass[k],
        }
    }
}

/// Chain constants for `θ_k^(t)` under the current state.
pub fn theta_link(state: &ModelState, agg: &YAggregates, t: usize, k: usize) -> ThetaLink {
    StepContext::new(state).link(state, agg, &state.h_into(t), t, k)
}

fn draw_theta<R: Rng + ?Sized>(state: &mut ModelState, eps: f64, link: &ThetaLink, t: usize, k: usize, rng: &mut R) {
    let kk = state.k();
    let shape = eps + state.h[t * kk + k] as f64 + link.m as f64;
    state.theta[t * kk + k] = gamma(shape, link.c2 + link.c3, rng);
}

/// Resamples every `θ_k^(t)` from `Gam(ε + h + m, τ + τ π_{·k} + ρ λ_k Πφ)`.
pub fn update_theta<R: Rng + ?Sized>(state: &mut ModelState, hyper: &ModelHyper, agg: &YAggregates, rng: &mut R) {
    let ctx = StepContext::new(state);
    for t in (0..state.n_steps).rev() {
        let h_next = state.h_into(t);
        for k in 0..state.k() {
            let link = ctx.link(state, agg, &h_next, t, k);
            draw_theta(state, hyper.eps_theta, &link, t, k, rng);
        }
    }
}

/// Resamples every `h_k^(t)` given `θ` (Bessel) and re-splits it.
///
/// Only valid for `ε0θ > 0`; the sparse variant must use [`update_h_theta`].
pub fn update_h<R: Rng + ?Sized>(state: &mut ModelState, hyper: &ModelHyper, agg: &YAggregates, lenient: bool, rng: &mut R) -> Result<()> {
    if hyper.eps_theta == 0.0 {
        return Err(Error::Contract(
            "h given theta is absorbing at zero when eps_theta = 0; update h and theta jointly".into(),
        ));
    }
    let ctx = StepContext::new(state);
    let mut weights = vec![0.0; state.k()];
    for t in (0..state.n_steps).rev() {
        let h_next = state.h_into(t);
        for k in 0..state.k() {
            let link = ctx.link(state, agg, &h_next, t, k);
            draw_h(state, hyper.eps_theta, &link, t, k, true, lenient, rng)?;
            resplit_row(state, t, k, &mut weights, lenient, rng)?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn draw_h<R: Rng + ?Sized>(
    state: &mut ModelState,
    eps: f64,
    link: &ThetaLink,
    t: usize,
    k: usize,
    given_theta: bool,
    lenient: bool,
    rng: &mut R,
) -> Result<()> {
    let kk = state.k();
    let chain = PgpChain::new(eps, link.c1, link.c2, link.c3)?;
    let h = if given_theta {
        chain.sample_h(link.m, Some(state.theta[t * kk + k]), rng)?
    } else {
        match chain.h_marginal(link.m)? {
            MarginalH::Sch(p) if p.zeta() == 0.0 => {
                if !lenient {
                    return Err(Error::Inconsistent(format!(
                        "step {t}, component {k} carries {} counts but has zero incoming rate",
                        link.m
                    )));
                }
                1
            }
            law => law.sample(rng),
        }
    };
    state.h[t * kk + k] = h;
    Ok(())
}

/// Backward pass over steps updating `(h_k^(t), θ_k^(t))` component by component.
///
/// With `ε0θ > 0`, `h` is drawn given `θ` and then `θ` given `h`. With
/// `ε0θ = 0`, `h` is drawn with `θ` integrated out and `θ` immediately after.
/// Each new `h_k^(t)` is re-split across its sources before moving on.
pub fn update_h_theta<R: Rng + ?Sized>(
    state: &mut ModelState,
    hyper: &ModelHyper,
    agg: &YAggregates,
    lenient: bool,
    rng: &mut R,
) -> Result<()> {
    let ctx = StepContext::new(state);
    let given_theta = hyper.eps_theta > 0.0;
    let mut weights = vec![0.0; state.k()];
    for t in (0..state.n_steps).rev() {
        let h_next = state.h_into(t);
        for k in 0..state.k() {
            let link = ctx.link(state, agg, &h_next, t, k);
            draw_h(state, hyper.eps_theta, &link, t, k, given_theta, lenient, rng)?;
            draw_theta(state, hyper.eps_theta, &link, t, k, rng);
            resplit_row(state, t, k, &mut weights, lenient, rng)?;
        }
    }
    Ok(())
}

/// Updates `(g_k, λ_k)` for every component.
///
/// `λ_k ~ Gam(ε0λ/K + g_k + Σ_t y^(t)_{·k} + h^(1)_{·k}, β + Σ_t ρ^(t) θ_k^(t) Πφ + τ π_{·k})`;
/// `g_k` given `λ_k` is Bessel when `ε0λ > 0` and otherwise drawn with `λ_k`
/// integrated out.
pub fn update_lambda_g<R: Rng + ?Sized>(
    state: &mut ModelState,
    hyper: &ModelHyper,
    agg: &YAggregates,
    lenient: bool,
    rng: &mut R,
) -> Result<()> {
    let k = state.k();
    let kf = k as f64;
    let eps = hyper.eps_lambda / kf;
    let pi_cols = state.pi_column_sums();
    let mass = state.factor_mass();
    let y_k = agg.y_total_k(k);
    let h_first = state.h_into_first();
    for kk in 0..k {
        let exposure: f64 = (0..state.n_steps)
            .map(|t| state.rho[t] * state.theta[t * k + kk])
            .sum::<f64>()
            * mass[kk];
        let c3 = exposure + state.tau * pi_cols[kk];
        let m = y_k[kk] + h_first[kk];
        let chain = PgpChain::new(eps, state.gamma / kf, state.beta, c3)?;
        let g = if eps > 0.0 {
            chain.sample_h(m, Some(state.lambda[kk]), rng)?
        } else {
            match chain.h_marginal(m)? {
                MarginalH::Sch(p) if p.zeta() == 0.0 => {
                    if !lenient {
                        return Err(Error::Inconsistent(format!(
                            "component {kk} carries {m} counts but its weight prior has zero rate"
                        )));
                    }
                    1
                }
                law => law.sample(rng),
            }
        };
        state.g[kk] = g;
        state.lambda[kk] = gamma(eps + g as f64 + m as f64, state.beta + c3, rng);
    }
    Ok(())
}

/// Each column `π_{·k2} ~ Dir(a0 + Σ_t h^(t)_{k1,k2})`.
pub fn update_pi<R: Rng + ?Sized>(state: &mut ModelState, hyper: &ModelHyper, rng: &mut R) {
    let k = state.k();
    let mut alpha = vec![0.0; k];
    let mut col = vec![0.0; k];
    for k2 in 0..k {
        for (k1, a) in alpha.iter_mut().enumerate() {
            let flow: u64 = (0..state.n_steps).map(|t| state.split_row(t, k1)[k2]).sum();
            *a = hyper.a0 + flow as f64;
        }
        dirichlet(&alpha, &mut col, rng);
        for k1 in 0..k {
            state.pi[k1 * k + k2] = col[k1];
        }
    }
}

/// Each factor row `φ^(m)_k ~ Dir(a0 + allocated counts at each index)`.
pub fn update_phi<R: Rng + ?Sized>(state: &mut ModelState, hyper: &ModelHyper, agg: &YAggregates, rng: &mut R) {
    let k = state.k();
    for (f, counts) in state.factors.iter_mut().zip(&agg.mode_counts) {
        let d = f.dim();
        let mut alpha = vec![0.0; d];
        let mut row = vec![0.0; d];
        for kk in 0..k {
            for (i, a) in alpha.iter_mut().enumerate() {
                *a = hyper.a0 + counts[i * k + kk] as f64;
            }
            dirichlet(&alpha, &mut row, rng);
            f.set_row(kk, &row);
        }
    }
}

/// Shape and rate of the conditional of `τ`.
pub fn tau_posterior(state: &ModelState, hyper: &ModelHyper) -> (f64, f64) {
    let k = state.k();
    let h_sum: u64 = state.h.iter().sum();
    let shape = hyper.alpha0 + (state.n_steps * k) as f64 * hyper.eps_theta + 2.0 * h_sum as f64;
    let pi_cols = state.pi_column_sums();
    let theta_sum: f64 = state.theta.iter().sum();
    let mut drive = 0.0;
    for t in 0..state.n_steps {
        drive += state
            .theta_prev(t)
            .iter()
            .zip(&pi_cols)
            .map(|(th, p)| th * p)
            .sum::<f64>();
    }
    (shape, hyper.alpha0 + theta_sum + drive)
}

pub fn update_tau<R: Rng + ?Sized>(state: &mut ModelState, hyper: &ModelHyper, rng: &mut R) {
    let (shape, rate) = tau_posterior(state, hyper);
    state.tau = gamma(shape, rate, rng);
}

/// `β ~ Gam(α0 + Σ_k (ε0λ/K + g_k), α0 + Σ_k λ_k)`.
pub fn update_beta<R: Rng + ?Sized>(state: &mut ModelState, hyper: &ModelHyper, rng: &mut R) {
    let g_sum: u64 = state.g.iter().sum();
    let shape = hyper.alpha0 + hyper.eps_lambda + g_sum as f64;
    let rate = hyper.alpha0 + state.lambda.iter().sum::<f64>();
    state.beta = gamma(shape, rate, rng);
}

/// `γ ~ Gam(a0 + Σ_k g_k, b0 + 1)`.
pub fn update_gamma<R: Rng + ?Sized>(state: &mut ModelState, hyper: &ModelHyper, rng: &mut R) {
    let g_sum: u64 = state.g.iter().sum();
    state.gamma = gamma(hyper.a0 + g_sum as f64, hyper.b0 + 1.0, rng);
}

/// `ρ^(t) ~ Gam(a0 + y^(t)_{··}, b0 + Σ_k λ_k θ_k^(t) Πφ)`, pooled when stationary.
pub fn update_rho<R: Rng + ?Sized>(state: &mut ModelState, hyper: &ModelHyper, agg: &YAggregates, rng: &mut R) {
    let k = state.k();
    let mass = state.factor_mass();
    let exposure: Vec<f64> = (0..state.n_steps)
        .map(|t| {
            (0..k)
                .map(|kk| state.lambda[kk] * state.theta[t * k + kk] * mass[kk])
                .sum()
        })
        .collect();
    if hyper.stationary {
        let y: u64 = agg.y_t.iter().sum();
        let rho = gamma(hyper.a0 + y as f64, hyper.b0 + exposure.iter().sum::<f64>(), rng);
        state.rho.fill(rho);
    } else {
        for t in 0..state.n_steps {
            state.rho[t] = gamma(hyper.a0 + agg.y_t[t] as f64, hyper.b0 + exposure[t], rng);
        }
    }
}
