//! Seeded experiment sweeps, aggregation and artifact output.

pub mod config;
pub mod output;
pub mod plots;
pub mod stats;

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{
    run_trial, Algorithm, ConfigError, FailureModel, PlumeVariant, TrialConfig, TrialResult,
};

pub use stats::{describe, Stats};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code: 2 for configuration problems, 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Io { .. } => 3,
        }
    }
}

/// Axes of a sweep; every combination is a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: String,
    pub algorithms: Vec<Algorithm>,
    pub sizes: Vec<usize>,
    pub plumes: Vec<PlumeVariant>,
    pub p_generic: Vec<f64>,
    pub p_inplume: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub tick_budget: u64,
}

const DECADES: [f64; 6] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

impl ExperimentSpec {
    /// The four preset experiments.
    pub fn preset(id: u32) -> Option<Self> {
        let base = ExperimentSpec {
            name: format!("exp{id}"),
            algorithms: vec![Algorithm::Locus, Algorithm::Mobs],
            sizes: vec![5, 10, 20],
            plumes: vec![PlumeVariant::Smooth],
            p_generic: vec![0.0],
            p_inplume: vec![0.0],
            trials: 100,
            base_seed: 42,
            tick_budget: crate::sim::DEFAULT_TICK_BUDGET,
        };
        let failures = vec![Algorithm::Locus, Algorithm::LocusNoHeal, Algorithm::Mobs];
        match id {
            1 => Some(base),
            2 => Some(ExperimentSpec {
                plumes: vec![PlumeVariant::Perturbed],
                ..base
            }),
            3 => Some(ExperimentSpec {
                algorithms: failures,
                sizes: vec![20],
                p_generic: DECADES.to_vec(),
                ..base
            }),
            4 => Some(ExperimentSpec {
                algorithms: failures,
                sizes: vec![20],
                p_inplume: DECADES.to_vec(),
                ..base
            }),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.trials == 0 {
            return bad("trials must be at least 1".into());
        }
        if self.algorithms.is_empty()
            || self.sizes.is_empty()
            || self.plumes.is_empty()
            || self.p_generic.is_empty()
            || self.p_inplume.is_empty()
        {
            return bad(format!("experiment '{}' has an empty axis", self.name));
        }
        if let Some(n) = self.sizes.iter().find(|&&n| n == 0) {
            return bad(format!("swarm size {n} is not allowed"));
        }
        for &p in self.p_generic.iter().chain(&self.p_inplume) {
            if !(p == 0.0 || (1e-6..=1e-1).contains(&p)) {
                return bad(format!("failure probability {p} outside {{0}} or [1e-6, 1e-1]"));
            }
        }
        if self.tick_budget == 0 {
            return bad("tick budget must be positive".into());
        }
        Ok(())
    }

    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for &algorithm in &self.algorithms {
            for &n in &self.sizes {
                for &plume in &self.plumes {
                    for &p_generic in &self.p_generic {
                        for &p_inplume in &self.p_inplume {
                            out.push(CellKey {
                                algorithm,
                                n,
                                plume,
                                p_generic,
                                p_inplume,
                            });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellKey {
    pub algorithm: Algorithm,
    pub n: usize,
    pub plume: PlumeVariant,
    pub p_generic: f64,
    pub p_inplume: f64,
}

impl CellKey {
    pub fn trial_config(&self, tick_budget: u64) -> TrialConfig {
        let mut cfg = TrialConfig {
            algorithm: self.algorithm,
            n: self.n,
            failure: FailureModel {
                p_generic: self.p_generic,
                p_inplume: self.p_inplume,
            },
            tick_budget,
            ..TrialConfig::default()
        };
        cfg.plume.perturbed = self.plume.is_perturbed();
        cfg
    }

    fn sort_key(&self) -> (Algorithm, usize, PlumeVariant, u64, u64) {
        (
            self.algorithm,
            self.n,
            self.plume,
            self.p_generic.to_bits(),
            self.p_inplume.to_bits(),
        )
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial` in `cell`. The algorithm is deliberately left out
/// so every algorithm faces the same plume placements and failure draws.
pub fn trial_seed(base: u64, cell: &CellKey, trial: usize) -> u64 {
    let parts = [
        cell.n as u64,
        cell.plume as u64,
        cell.p_generic.to_bits(),
        cell.p_inplume.to_bits(),
        trial as u64,
    ];
    parts.iter().fold(splitmix(base), |h, &p| splitmix(h ^ p))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialRow {
    pub cell: CellKey,
    pub trial: usize,
    pub seed: u64,
    pub result: TrialResult,
}

/// Runs every trial of every cell on `workers` threads. Rows come back in
/// cell order, then trial order, regardless of scheduling.
pub fn run_experiment(spec: &ExperimentSpec, workers: usize) -> Result<Vec<TrialRow>, HarnessError> {
    spec.validate()?;
    let jobs: Vec<(CellKey, usize)> = spec
        .cells()
        .into_iter()
        .flat_map(|c| (0..spec.trials).map(move |t| (c, t)))
        .collect();
    for (cell, _) in jobs.iter().take(1) {
        cell.trial_config(spec.tick_budget).validate()?;
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| ConfigError::Invalid(format!("cannot start worker pool: {e}")))?;
    let mut rows = pool.install(|| {
        jobs.par_iter()
            .map(|&(cell, trial)| {
                let seed = trial_seed(spec.base_seed, &cell, trial);
                let result = run_trial(&cell.trial_config(spec.tick_budget), seed)?;
                Ok(TrialRow {
                    cell,
                    trial,
                    seed,
                    result,
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()
    })?;
    rows.sort_by(|a, b| {
        a.cell
            .sort_key()
            .cmp(&b.cell.sort_key())
            .then(a.trial.cmp(&b.trial))
    });
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub cell: CellKey,
    pub trials: usize,
    pub successes: usize,
    /// Minutes of simulated time, over successful trials.
    pub contact: Option<Stats>,
    pub maxflux: Option<Stats>,
}

impl SummaryRow {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

pub fn ticks_to_minutes(ticks: u64) -> f64 {
    ticks as f64 * crate::sim::TICK_SECONDS / 60.0
}

/// Per-cell success counts and time statistics. Only successful trials
/// contribute to the statistics.
pub fn summarize(rows: &[TrialRow]) -> Vec<SummaryRow> {
    let mut out: Vec<SummaryRow> = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let cell = rows[start].cell;
        let end = rows[start..]
            .iter()
            .position(|r| r.cell.sort_key() != cell.sort_key())
            .map_or(rows.len(), |p| start + p);
        let group = &rows[start..end];
        let ok: Vec<&TrialRow> = group.iter().filter(|r| r.result.success).collect();
        let contact: Vec<f64> = ok
            .iter()
            .filter_map(|r| r.result.contact_tick.map(ticks_to_minutes))
            .collect();
        let maxflux: Vec<f64> = ok
            .iter()
            .filter_map(|r| r.result.maxflux_tick.map(ticks_to_minutes))
            .collect();
        out.push(SummaryRow {
            cell,
            trials: group.len(),
            successes: ok.len(),
            contact: describe(&contact),
            maxflux: describe(&maxflux),
        });
        start = end;
    }
    out
}
