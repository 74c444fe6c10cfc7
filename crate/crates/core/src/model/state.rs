use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::{FactorMatrix, Schema};

/// Every latent variable of one chain.
///
/// Matrices are flattened row-major: `theta[t * K + k]`, `h[t * K + k]`,
/// `h_split[(t * K + k) * K + k2]` and `pi[k1 * K + k2]` (columns of `Π`
/// sum to one). Time is 0-based and `θ^(-1)` means `λ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelState {
    pub n_components: usize,
    pub n_steps: usize,
    pub dims: Vec<usize>,
    pub theta: Vec<f64>,
    pub h: Vec<u64>,
    pub h_split: Vec<u64>,
    pub pi: Vec<f64>,
    pub factors: Vec<FactorMatrix>,
    pub lambda: Vec<f64>,
    pub g: Vec<u64>,
    /// One entry per step; all equal under a stationary configuration.
    pub rho: Vec<f64>,
    pub tau: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Per step, `K` source counts for each stored non-zero.
    pub y_sources: Vec<Vec<u64>>,
}

impl ModelState {
    pub fn k(&self) -> usize {
        self.n_components
    }

    pub fn schema(&self) -> Schema {
        Schema {
            n_steps: self.n_steps,
            dims: self.dims.clone(),
        }
    }

    pub fn theta_at(&self, t: usize) -> &[f64] {
        let k = self.n_components;
        &self.theta[t * k..(t + 1) * k]
    }

    pub fn h_at(&self, t: usize) -> &[u64] {
        let k = self.n_components;
        &self.h[t * k..(t + 1) * k]
    }

    /// `θ^(t-1)`, which is `λ` at the first step.
    pub fn theta_prev(&self, t: usize) -> &[f64] {
        if t == 0 {
            &self.lambda
        } else {
            self.theta_at(t - 1)
        }
    }

    pub fn pi_at(&self, k1: usize, k2: usize) -> f64 {
        self.pi[k1 * self.n_components + k2]
    }

    /// `h^(t)_{k,·}` split across source components.
    pub fn split_row(&self, t: usize, k: usize) -> &[u64] {
        let kk = self.n_components;
        let start = (t * kk + k) * kk;
        &self.h_split[start..start + kk]
    }

    /// `π_{·k}` for every `k`.
    pub fn pi_column_sums(&self) -> Vec<f64> {
        let k = self.n_components;
        let mut sums = vec![0.0; k];
        for row in self.pi.chunks_exact(k) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }

    /// `Π_m Σ_i φ^(m)_{k,i}` for every `k`.
    pub fn factor_mass(&self) -> Vec<f64> {
        let mut mass = vec![1.0; self.n_components];
        for f in &self.factors {
            for (m, s) in mass.iter_mut().zip(f.row_sums()) {
                *m *= s;
            }
        }
        mass
    }

    /// `h^(t+1)_{·k}`: column sums of the split at step `t + 1` (zero past the end).
    pub fn h_into(&self, t: usize) -> Vec<u64> {
        let k = self.n_components;
        let mut out = vec![0; k];
        if t + 1 < self.n_steps {
            for k1 in 0..k {
                for (o, v) in out.iter_mut().zip(self.split_row(t + 1, k1)) {
                    *o += v;
                }
            }
        }
        out
    }

    /// Column sums of the split at the first step, `h^(1)_{·k}` in 1-based terms.
    pub fn h_into_first(&self) -> Vec<u64> {
        let k = self.n_components;
        let mut out = vec![0; k];
        for k1 in 0..k {
            for (o, v) in out.iter_mut().zip(self.split_row(0, k1)) {
                *o += v;
            }
        }
        out
    }

    /// Name of the first non-finite or negative continuous variable, if any.
    pub fn first_invalid(&self) -> Option<String> {
        let bad = |x: &f64| !x.is_finite() || *x < 0.0;
        if let Some(i) = self.theta.iter().position(bad) {
            return Some(format!("theta[{i}]"));
        }
        if let Some(i) = self.lambda.iter().position(bad) {
            return Some(format!("lambda[{i}]"));
        }
        if let Some(i) = self.pi.iter().position(bad) {
            return Some(format!("pi[{i}]"));
        }
        for (m, f) in self.factors.iter().enumerate() {
            if f.values().iter().any(bad) {
                return Some(format!("phi[{m}]"));
            }
        }
        if let Some(i) = self.rho.iter().position(bad) {
            return Some(format!("rho[{i}]"));
        }
        for (name, v) in [("tau", self.tau), ("beta", self.beta), ("gamma", self.gamma)] {
            if bad(&v) {
                return Some(name.into());
            }
        }
        None
    }

    /// Checks the structural invariants that every sweep must preserve.
    pub fn check_invariants(&self, eps_theta: f64) -> Result<()> {
        let k = self.n_components;
        let fail = |msg: String| Err(Error::Inconsistent(msg));
        for k2 in 0..k {
            let s: f64 = (0..k).map(|k1| self.pi_at(k1, k2)).sum();
            if (s - 1.0).abs() > 1e-12 {
                return fail(format!("column {k2} of pi sums to {s}"));
            }
        }
        for (m, f) in self.factors.iter().enumerate() {
            for (kk, s) in f.row_sums().into_iter().enumerate() {
                if (s - 1.0).abs() > 1e-12 {
                    return fail(format!("row {kk} of factor matrix {m} sums to {s}"));
                }
            }
        }
        for t in 0..self.n_steps {
            for kk in 0..k {
                let total: u64 = self.split_row(t, kk).iter().sum();
                if total != self.h[t * k + kk] {
                    return fail(format!("split of h at t={t}, k={kk} sums to {total}"));
                }
            }
        }
        if eps_theta == 0.0 {
            for (i, (&shape, &theta)) in self.h.iter().zip(&self.theta).enumerate() {
                if (shape == 0) != (theta == 0.0) {
                    return fail(format!(
                        "theta at t={}, k={} is {theta} with shape count {shape}",
                        i / k,
                        i % k
                    ));
                }
            }
        }
        Ok(())
    }
}
