//! Sparse storage for sequences of M-mode count tensors.
//!
//! Time steps are 0-based throughout the API; only the coordinate file
//! format uses 1-based steps.

mod io;
mod mask;
mod rate;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{read_coordinate_file, write_coordinate_file};
pub use mask::{make_holdout_mask, HoldoutMask, Subset};
pub use rate::{component_weights, cp_rate, dense_step_rates, FactorMatrix};

/// Number of time steps and the size of each mode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub n_steps: usize,
    pub dims: Vec<usize>,
}

impl Schema {
    pub fn new(n_steps: usize, dims: Vec<usize>) -> Result<Self> {
        if n_steps == 0 {
            return Err(Error::Dimension("at least one time step is required".into()));
        }
        if dims.is_empty() || dims.contains(&0) {
            return Err(Error::Dimension(format!("mode sizes must be positive, got {dims:?}")));
        }
        if dims.iter().any(|&d| d > u32::MAX as usize) {
            return Err(Error::Dimension("mode size exceeds u32 range".into()));
        }
        Ok(Schema { n_steps, dims })
    }

    pub fn n_modes(&self) -> usize {
        self.dims.len()
    }

    /// Cells per time step, saturating at `u128::MAX`.
    pub fn cells_per_step(&self) -> u128 {
        self.dims
            .iter()
            .try_fold(1u128, |acc, &d| acc.checked_mul(d as u128))
            .unwrap_or(u128::MAX)
    }
}

/// Non-zero entries of one time step, sorted by multi-index with no repeats.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepEntries {
    n_modes: usize,
    indices: Vec<u32>,
    counts: Vec<u64>,
}

impl StepEntries {
    pub fn empty(n_modes: usize) -> Self {
        StepEntries {
            n_modes,
            indices: Vec::new(),
            counts: Vec::new(),
        }
    }

    /// Sorts, sums duplicates and drops zero counts.
    pub fn from_unsorted(n_modes: usize, mut entries: Vec<(Vec<u32>, u64)>) -> Self {
        entries.sort_unstable_by(|a, b| a.0.cmp(&b.0));
        let mut out = StepEntries::empty(n_modes);
        let mut iter = entries.into_iter().peekable();
        while let Some((idx, mut count)) = iter.next() {
            while let Some((next, c)) = iter.peek() {
                if *next != idx {
                    break;
                }
                count += c;
                iter.next();
            }
            if count > 0 {
                out.indices.extend_from_slice(&idx);
                out.counts.push(count);
            }
        }
        out
    }

    pub fn nnz(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn index(&self, j: usize) -> &[u32] {
        &self.indices[j * self.n_modes..(j + 1) * self.n_modes]
    }

    pub fn count(&self, j: usize) -> u64 {
        self.counts[j]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], u64)> + '_ {
        self.indices
            .chunks_exact(self.n_modes.max(1))
            .zip(self.counts.iter().copied())
    }

    /// Count at `idx`, zero when absent.
    pub fn get(&self, idx: &[u32]) -> u64 {
        let n = self.nnz();
        let (mut lo, mut hi) = (0, n);
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.index(mid).cmp(idx) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return self.counts[mid],
            }
        }
        0
    }
}

/// Time-major coordinate lists of non-zero counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SparseCountSequence {
    schema: Schema,
    steps: Vec<StepEntries>,
}

impl SparseCountSequence {
    pub fn empty(schema: Schema) -> Self {
        let steps = vec![StepEntries::empty(schema.n_modes()); schema.n_steps];
        SparseCountSequence { schema, steps }
    }

    /// Builds from `(t, index, count)` triples; duplicates are summed.
    pub fn from_entries<I>(schema: Schema, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Vec<u32>, u64)>,
    {
        let mut per_step: Vec<Vec<(Vec<u32>, u64)>> = vec![Vec::new(); schema.n_steps];
        for (t, idx, count) in entries {
            if t >= schema.n_steps {
                return Err(Error::Dimension(format!(
                    "time step {t} outside 0..{}",
                    schema.n_steps
                )));
            }
            check_index(&schema, &idx)?;
            per_step[t].push((idx, count));
        }
        let m = schema.n_modes();
        let steps = per_step
            .into_iter()
            .map(|e| StepEntries::from_unsorted(m, e))
            .collect();
        Ok(SparseCountSequence { schema, steps })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn n_steps(&self) -> usize {
        self.schema.n_steps
    }

    pub fn dims(&self) -> &[usize] {
        &self.schema.dims
    }

    pub fn step(&self, t: usize) -> &StepEntries {
        &self.steps[t]
    }

    pub fn steps(&self) -> &[StepEntries] {
        &self.steps
    }

    /// Replaces one step, validating indices and canonical order.
    pub fn set_step(&mut self, t: usize, entries: StepEntries) -> Result<()> {
        if entries.n_modes != self.schema.n_modes() {
            return Err(Error::Dimension("step has the wrong number of modes".into()));
        }
        for (j, (idx, c)) in entries.iter().enumerate() {
            check_index(&self.schema, idx)?;
            if c == 0 || (j > 0 && entries.index(j - 1) >= idx) {
                return Err(Error::Dimension("step entries are not canonical".into()));
            }
        }
        self.steps[t] = entries;
        Ok(())
    }

    /// Total number of stored non-zeros.
    pub fn nnz(&self) -> usize {
        self.steps.iter().map(StepEntries::nnz).sum()
    }

    pub fn total(&self) -> u64 {
        self.steps.iter().map(StepEntries::total).sum()
    }
}

fn check_index(schema: &Schema, idx: &[u32]) -> Result<()> {
    if idx.len() != schema.n_modes() {
        return Err(Error::Dimension(format!(
            "index has {} modes, expected {}",
            idx.len(),
            schema.n_modes()
        )));
    }
    for (m, (&i, &d)) in idx.iter().zip(&schema.dims).enumerate() {
        if i as usize >= d {
            return Err(Error::Dimension(format!("index {i} out of range for mode {m} of size {d}")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_merge_and_zeros_drop() {
        let schema = Schema::new(2, vec![3, 3, 4]).unwrap();
        let seq = SparseCountSequence::from_entries(
            schema,
            vec![
                (0, vec![1, 2, 3], 5),
                (0, vec![1, 2, 3], 2),
                (0, vec![0, 0, 0], 0),
                (1, vec![2, 2, 2], 1),
            ],
        )
        .unwrap();
        assert_eq!(seq.nnz(), 2);
        assert_eq!(seq.step(0).get(&[1, 2, 3]), 7);
        assert_eq!(seq.step(0).get(&[0, 0, 0]), 0);
        assert_eq!(seq.total(), 8);
    }

    #[test]
    fn out_of_range_index_is_rejected() {
        let schema = Schema::new(1, vec![2, 2]).unwrap();
        assert!(SparseCountSequence::from_entries(schema, vec![(0, vec![2, 0], 1)]).is_err());
    }

    #[test]
    fn set_step_requires_canonical_order() {
        let schema = Schema::new(1, vec![4]).unwrap();
        let mut seq = SparseCountSequence::empty(schema);
        let good = StepEntries::from_unsorted(1, vec![(vec![3], 1), (vec![1], 2)]);
        seq.set_step(0, good).unwrap();
        let bad = StepEntries {
            n_modes: 1,
            indices: vec![3, 1],
            counts: vec![1, 2],
        };
        assert!(seq.set_step(0, bad).is_err());
    }
}
