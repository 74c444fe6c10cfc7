use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `K × D` factor matrix `φ_{k,i}`, stored index-major so that the `K`
/// entries for one index are contiguous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorMatrix {
    n_components: usize,
    dim: usize,
    data: Vec<f64>,
}

impl FactorMatrix {
    pub fn zeros(n_components: usize, dim: usize) -> Self {
        FactorMatrix {
            n_components,
            dim,
            data: vec![0.0; n_components * dim],
        }
    }

    /// Builds from component rows `rows[k][i]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let k = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::Dimension("factor rows have unequal lengths".into()));
        }
        let mut f = FactorMatrix::zeros(k, d);
        for (kk, row) in rows.iter().enumerate() {
            for (i, &v) in row.iter().enumerate() {
                f.set(kk, i, v);
            }
        }
        Ok(f)
    }

    pub fn n_components(&self) -> usize {
        self.n_components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.data[i * self.n_components + k]
    }

    pub fn set(&mut self, k: usize, i: usize, v: f64) {
        self.data[i * self.n_components + k] = v;
    }

    /// `φ_{·,i}`: all components at index `i`.
    pub fn at_index(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_components..(i + 1) * self.n_components]
    }

    pub fn row(&self, k: usize) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(k, i)).collect()
    }

    pub fn set_row(&mut self, k: usize, row: &[f64]) {
        for (i, &v) in row.iter().enumerate() {
            self.set(k, i, v);
        }
    }

    /// `Σ_i φ_{k,i}` for every `k`.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.n_components];
        for chunk in self.data.chunks_exact(self.n_components.max(1)) {
            for (s, v) in sums.iter_mut().zip(chunk) {
                *s += v;
            }
        }
        sums
    }

    pub fn values(&self) -> &[f64] {
        &self.data
    }
}

fn check_dims(lambda: &[f64], theta_t: &[f64], factors: &[FactorMatrix], idx: &[u32]) -> Result<()> {
    let k = lambda.len();
    if theta_t.len() != k {
        return Err(Error::Dimension(format!("theta has {} components, lambda has {k}", theta_t.len())));
    }
    if factors.len() != idx.len() {
        return Err(Error::Dimension(format!(
            "{} factor matrices for a {}-mode index",
            factors.len(),
            idx.len()
        )));
    }
    for (m, (f, &i)) in factors.iter().zip(idx).enumerate() {
        if f.n_components() != k {
            return Err(Error::Dimension(format!("mode {m} factors have {} components", f.n_components())));
        }
        if i as usize >= f.dim() {
            return Err(Error::Dimension(format!("index {i} out of range for mode {m} of size {}", f.dim())));
        }
    }
    Ok(())
}

/// Unnormalized allocation weights `λ_k θ_k Π_m φ^(m)_{k,i_m}`; returns their sum.
///
/// Components with `λ_k θ_k = 0` are skipped and get weight zero.
pub fn component_weights(lambda: &[f64], theta_t: &[f64], factors: &[FactorMatrix], idx: &[u32], out: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for k in 0..lambda.len() {
        let base = lambda[k] * theta_t[k];
        let w = if base == 0.0 {
            0.0
        } else {
            factors
                .iter()
                .zip(idx)
                .fold(base, |acc, (f, &i)| acc * f.at_index(i as usize)[k])
        };
        out[k] = w;
        total += w;
    }
    total
}

/// `μ = ρ Σ_k λ_k θ_k Π_m φ^(m)_{k,i_m}` at one cell.
pub fn cp_rate(rho: f64, lambda: &[f64], theta_t: &[f64], factors: &[FactorMatrix], idx: &[u32]) -> Result<f64> {
    check_dims(lambda, theta_t, factors, idx)?;
    let mut w = vec![0.0; lambda.len()];
    Ok(rho * component_weights(lambda, theta_t, factors, idx, &mut w))
}

/// Rates for every cell of one step in row-major (last mode fastest) order.
pub fn dense_step_rates(rho: f64, lambda: &[f64], theta_t: &[f64], factors: &[FactorMatrix]) -> Vec<f64> {
    let k = lambda.len().max(1);
    let mut acc: Vec<f64> = lambda.iter().zip(theta_t).map(|(l, t)| rho * l * t).collect();
    for f in factors {
        let mut next = Vec::with_capacity(acc.len() * f.dim());
        for prefix in acc.chunks_exact(k) {
            for i in 0..f.dim() {
                next.extend(prefix.iter().zip(f.at_index(i)).map(|(p, c)| p * c));
            }
        }
        acc = next;
    }
    acc.chunks_exact(k).map(|c| c.iter().sum()).collect()
}
