//! Saved posterior draws and their rate evaluation.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use flate2::read::MultiGzDecoder;
use flate2::write::GzEncoder;
use flate2::Compression;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelHyper, ModelState};
use crate::tensor::{dense_step_rates, FactorMatrix, HoldoutMask, Schema};

pub const ARCHIVE_VERSION: u32 = 1;

/// Parameters retained from one dynamical-system draw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrgdsSnapshot {
    pub lambda: Vec<f64>,
    /// `theta[t * K + k]`.
    pub theta: Vec<f64>,
    pub h: Vec<u64>,
    pub rho: Vec<f64>,
    pub pi: Vec<f64>,
    pub factors: Vec<FactorMatrix>,
    pub tau: f64,
    pub beta: f64,
    pub gamma: f64,
}

/// Time-invariant CP rates `Σ_k λ_k Π_m φ^(m)_{k,i_m}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticSnapshot {
    pub lambda: Vec<f64>,
    pub factors: Vec<FactorMatrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SnapshotParams {
    Prgds(PrgdsSnapshot),
    Static(StaticSnapshot),
    /// One time-invariant rate per cell of a single-mode tensor.
    PerCell { rates: Vec<f64> },
}

impl SnapshotParams {
    /// Rates of every cell of step `t` in row-major order.
    pub fn step_rates(&self, t: usize) -> Vec<f64> {
        match self {
            SnapshotParams::Prgds(s) => {
                let k = s.lambda.len();
                dense_step_rates(s.rho[t], &s.lambda, &s.theta[t * k..(t + 1) * k], &s.factors)
            }
            SnapshotParams::Static(s) => dense_step_rates(1.0, &s.lambda, &vec![1.0; s.lambda.len()], &s.factors),
            SnapshotParams::PerCell { rates } => rates.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub chain: usize,
    pub iteration: usize,
    pub params: SnapshotParams,
}

/// Header recorded with every archive.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ArchiveMeta {
    pub version: u32,
    pub model: String,
    pub seed: u64,
    /// Flags of the producing run, rendered as strings.
    pub flags: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSampleSet {
    pub meta: ArchiveMeta,
    pub schema: Schema,
    pub mask: Option<HoldoutMask>,
    pub samples: Vec<Sample>,
}

impl PosteriorSampleSet {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples of one chain only.
    pub fn chain(&self, chain: usize) -> PosteriorSampleSet {
        PosteriorSampleSet {
            meta: self.meta.clone(),
            schema: self.schema.clone(),
            mask: self.mask.clone(),
            samples: self.samples.iter().filter(|s| s.chain == chain).cloned().collect(),
        }
    }

    pub fn chains(&self) -> Vec<usize> {
        let mut c: Vec<usize> = self.samples.iter().map(|s| s.chain).collect();
        c.sort_unstable();
        c.dedup();
        c
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let set: PosteriorSampleSet = read_json(path)?;
        if set.meta.version != ARCHIVE_VERSION {
            return Err(Error::Config(format!(
                "{}: archive version {} is not supported (expected {ARCHIVE_VERSION})",
                path.display(),
                set.meta.version
            )));
        }
        Ok(set)
    }
}

/// Held-out mask together with how it was drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskRecord {
    pub version: u32,
    pub seed: u64,
    pub mask: HoldoutMask,
}

/// State that generated a simulated data set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateRecord {
    pub meta: ArchiveMeta,
    pub hyper: ModelHyper,
    pub state: ModelState,
}

fn is_gz(path: &Path) -> bool {
    path.extension().is_some_and(|e| e == "gz")
}

/// Writes `value` as JSON through a temporary file and a rename; a `.gz`
/// extension selects gzip compression.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let tmp = path.with_extension("tmp");
    let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
    let json_err = |e| Error::Json {
        path: tmp.clone(),
        source: e,
    };
    if is_gz(path) {
        let mut enc = GzEncoder::new(BufWriter::new(file), Compression::default());
        serde_json::to_writer(&mut enc, value).map_err(json_err)?;
        enc.finish()
            .and_then(|mut w| w.flush())
            .map_err(|e| Error::io(&tmp, e))?;
    } else {
        let mut w = BufWriter::new(file);
        serde_json::to_writer(&mut w, value).map_err(json_err)?;
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader: Box<dyn Read> = if is_gz(path) {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    serde_json::from_reader(BufReader::new(reader)).map_err(|e| Error::Json {
        path: path.to_path_buf(),
        source: e,
    })
}
