use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Smoothing,
    Forecasting,
    All,
}

impl Subset {
    pub const EACH: [Subset; 3] = [Subset::Smoothing, Subset::Forecasting, Subset::All];

    pub fn name(self) -> &'static str {
        match self {
            Subset::Smoothing => "smoothing",
            Subset::Forecasting => "forecasting",
            Subset::All => "all",
        }
    }
}

impl std::fmt::Display for Subset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Subset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "smoothing" => Ok(Subset::Smoothing),
            "forecasting" => Ok(Subset::Forecasting),
            "all" => Ok(Subset::All),
            _ => Err(Error::Config(format!("unknown subset {s:?}"))),
        }
    }
}

/// Whole time steps withheld from fitting (0-based).
///
/// The final two steps are always forecasting steps; smoothing steps lie in
/// `1..=n_steps - 3`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoldoutMask {
    n_steps: usize,
    smoothing: Vec<usize>,
    forecasting: Vec<usize>,
}

impl HoldoutMask {
    pub fn new(n_steps: usize, mut smoothing: Vec<usize>) -> Result<Self> {
        if n_steps < 5 {
            return Err(Error::Config(format!("holdout needs at least 5 time steps, got {n_steps}")));
        }
        smoothing.sort_unstable();
        smoothing.dedup();
        if let Some(&bad) = smoothing.iter().find(|&&t| t < 1 || t > n_steps - 3) {
            return Err(Error::Config(format!(
                "smoothing step {bad} outside interior range 1..={}",
                n_steps - 3
            )));
        }
        Ok(HoldoutMask {
            n_steps,
            smoothing,
            forecasting: vec![n_steps - 2, n_steps - 1],
        })
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn smoothing(&self) -> &[usize] {
        &self.smoothing
    }

    pub fn forecasting(&self) -> &[usize] {
        &self.forecasting
    }

    pub fn steps(&self, subset: Subset) -> Vec<usize> {
        match subset {
            Subset::Smoothing => self.smoothing.clone(),
            Subset::Forecasting => self.forecasting.clone(),
            Subset::All => {
                let mut all = self.smoothing.clone();
                all.extend_from_slice(&self.forecasting);
                all
            }
        }
    }

    pub fn is_heldout(&self, t: usize) -> bool {
        self.forecasting.contains(&t) || self.smoothing.binary_search(&t).is_ok()
    }
}

/// Random mask with `n_smoothing` interior steps plus the final two steps.
pub fn make_holdout_mask<R: Rng + ?Sized>(n_steps: usize, n_smoothing: usize, rng: &mut R) -> Result<HoldoutMask> {
    if n_steps < 5 {
        return Err(Error::Config(format!("holdout needs at least 5 time steps, got {n_steps}")));
    }
    if n_smoothing > n_steps - 4 {
        return Err(Error::Config(format!(
            "{n_smoothing} smoothing steps requested but at most {} fit in {n_steps} steps",
            n_steps - 4
        )));
    }
    let interior = n_steps - 3;
    let picks = index::sample(rng, interior, n_smoothing)
        .into_iter()
        .map(|i| i + 1)
        .collect();
    HoldoutMask::new(n_steps, picks)
}
