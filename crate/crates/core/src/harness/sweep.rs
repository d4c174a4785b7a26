//! Full-factorial sweeps over one scenario parameter.
//!
//! All schemes at a given `(value, seed)` share one drop, so their results
//! can be compared pairwise. Cells run in parallel.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::drop::drop_scenario;
use super::output::{read_results, results_csv, trace_csv, write_atomic, ResultRow, RESULTS_FILE};
use super::scenario::Scenario;
use super::scheme::{run_scheme, ExperimentResult, SchemeKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Receive region side, wavelengths.
    RegionSize,
    UserCount,
    /// Rate requirement, bps/Hz.
    RateTarget,
    /// Distance of every user (and scatterer) from the array, meters.
    Distance,
    /// Rician factor, dB.
    RicianFactor,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 5] = [
        SweepAxis::RegionSize,
        SweepAxis::UserCount,
        SweepAxis::RateTarget,
        SweepAxis::Distance,
        SweepAxis::RicianFactor,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::RegionSize => "region_size",
            SweepAxis::UserCount => "user_count",
            SweepAxis::RateTarget => "rate_target",
            SweepAxis::Distance => "distance",
            SweepAxis::RicianFactor => "rician_factor",
        }
    }

    /// `base` with this axis set to `value`.
    pub fn apply(self, base: &Scenario, value: f64) -> Result<Scenario> {
        let mut s = base.clone();
        match self {
            SweepAxis::RegionSize => s.receive_region_wavelengths = value,
            SweepAxis::UserCount => {
                if value.fract() != 0.0 || value < 1.0 {
                    return Err(Error::InvalidValue {
                        key: "user_count".into(),
                        message: format!("{value} is not a positive integer"),
                    });
                }
                s.users = value as usize;
            }
            SweepAxis::RateTarget => s.rate_target_bps_hz = value,
            SweepAxis::Distance => {
                s.distance_min_m = value;
                s.distance_max_m = value;
            }
            SweepAxis::RicianFactor => s.rician_factor_db = value,
        }
        s.validate()?;
        Ok(s)
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown sweep axis {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRecord {
    pub axis: SweepAxis,
    pub value: f64,
    pub result: ExperimentResult,
}

/// Seeds `base, base + 1, …` for `count` drops.
pub fn seed_range(base: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| base.wrapping_add(i)).collect()
}

/// Runs every scheme at one `(value, seed)` on a shared drop.
pub fn run_cell(
    base: &Scenario,
    axis: SweepAxis,
    value: f64,
    seed: u64,
    schemes: &[SchemeKind],
) -> Result<Vec<SweepRecord>> {
    let scenario = axis.apply(base, value)?;
    let drop = drop_scenario(&scenario, seed)?;
    schemes
        .iter()
        .map(|&k| {
            Ok(SweepRecord {
                axis,
                value,
                result: run_scheme(k, &scenario, &drop, seed)?,
            })
        })
        .collect()
}

/// In-memory sweep; records are ordered by value, then seed, then scheme.
pub fn sweep(
    base: &Scenario,
    axis: SweepAxis,
    values: &[f64],
    schemes: &[SchemeKind],
    seeds: &[u64],
) -> Result<Vec<SweepRecord>> {
    let cells: Vec<(f64, u64)> = values
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    let nested: Vec<Vec<SweepRecord>> = cells
        .par_iter()
        .map(|&(v, s)| run_cell(base, axis, v, s, schemes))
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

fn cell_stem(scheme: SchemeKind, axis: SweepAxis, value: f64, seed: u64) -> String {
    format!("{}_{}_{}_{}", scheme.name(), axis.name(), value, seed)
}

/// Sweep persisted under `out_dir`: `cells/` holds one single-row CSV per
/// `(scheme, value, seed)`, `traces/` the convergence traces and
/// `results.csv` the combined table. Cells whose files already exist are
/// read back instead of recomputed, so an interrupted sweep can be resumed.
pub fn sweep_to_dir(
    base: &Scenario,
    axis: SweepAxis,
    values: &[f64],
    schemes: &[SchemeKind],
    seeds: &[u64],
    out_dir: &Path,
) -> Result<Vec<ResultRow>> {
    let cells_dir = out_dir.join("cells");
    let traces_dir = out_dir.join("traces");
    let cells: Vec<(f64, u64)> = values
        .iter()
        .flat_map(|&v| seeds.iter().map(move |&s| (v, s)))
        .collect();
    let total = cells.len();
    let done = std::sync::atomic::AtomicUsize::new(0);

    let nested: Vec<Vec<ResultRow>> = cells
        .par_iter()
        .map(|&(value, seed)| {
            let paths: Vec<_> = schemes
                .iter()
                .map(|&k| cells_dir.join(format!("{}.csv", cell_stem(k, axis, value, seed))))
                .collect();
            let rows = if paths.iter().all(|p| p.exists()) {
                let mut rows = Vec::with_capacity(paths.len());
                for p in &paths {
                    rows.extend(read_results(p)?);
                }
                rows
            } else {
                let records = run_cell(base, axis, value, seed, schemes)?;
                let mut rows = Vec::with_capacity(records.len());
                for (rec, path) in records.iter().zip(&paths) {
                    let stem = cell_stem(rec.result.scheme, axis, value, seed);
                    let trace_name = format!("traces/{stem}.csv");
                    write_atomic(
                        &traces_dir.join(format!("{stem}.csv")),
                        &trace_csv(&rec.result.trace)?,
                    )?;
                    let row = ResultRow::new(&rec.result, axis.name(), value, &trace_name);
                    write_atomic(path, &results_csv(std::slice::from_ref(&row))?)?;
                    rows.push(row);
                }
                rows
            };
            let n = done.fetch_add(1, std::sync::atomic::Ordering::Relaxed) + 1;
            log::info!("{axis} = {value}, seed {seed}: cell {n}/{total} done");
            Ok(rows)
        })
        .collect::<Result<_>>()?;
    let rows: Vec<ResultRow> = nested.into_iter().flatten().collect();
    write_atomic(&out_dir.join(RESULTS_FILE), &results_csv(&rows)?)?;
    Ok(rows)
}

/// Mean power of one scheme at one sweep value over paired drops.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSummary {
    pub scheme: SchemeKind,
    pub value: f64,
    /// Mean of the per-drop powers in dBm.
    pub mean_dbm: f64,
    /// Standard error of that mean, dB.
    pub std_err_db: f64,
    pub drops: usize,
}

/// One scheme's outcome at one `(value, seed)`, as far as averaging cares.
#[derive(Debug, Clone, Copy)]
struct Sample {
    value: f64,
    seed: u64,
    scheme: SchemeKind,
    feasible: bool,
    power_dbm: f64,
}

/// Per-(value, scheme) means over the seeds at which every listed scheme
/// returned a feasible result.
pub fn paired_means(records: &[SweepRecord], schemes: &[SchemeKind]) -> Vec<PointSummary> {
    let samples: Vec<Sample> = records
        .iter()
        .map(|r| Sample {
            value: r.value,
            seed: r.result.seed,
            scheme: r.result.scheme,
            feasible: r.result.feasible,
            power_dbm: r.result.power_dbm(),
        })
        .collect();
    summarize(&samples, schemes)
}

/// [`paired_means`] over rows read back from a results table. Rows naming
/// an unknown scheme are an error.
pub fn paired_row_means(rows: &[ResultRow], schemes: &[SchemeKind]) -> Result<Vec<PointSummary>> {
    let samples = rows
        .iter()
        .map(|r| {
            Ok(Sample {
                value: r.value,
                seed: r.seed,
                scheme: r.scheme.parse()?,
                feasible: r.feasible,
                power_dbm: r.power_dbm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(summarize(&samples, schemes))
}

fn summarize(samples: &[Sample], schemes: &[SchemeKind]) -> Vec<PointSummary> {
    let mut values: Vec<f64> = samples.iter().map(|r| r.value).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();
    let mut out = Vec::new();
    for v in values {
        let at_v: Vec<&Sample> = samples.iter().filter(|r| r.value == v).collect();
        let mut seeds: Vec<u64> = at_v.iter().map(|r| r.seed).collect();
        seeds.sort_unstable();
        seeds.dedup();
        let complete: Vec<u64> = seeds
            .into_iter()
            .filter(|&s| {
                schemes.iter().all(|&k| {
                    at_v.iter()
                        .any(|r| r.seed == s && r.scheme == k && r.feasible)
                })
            })
            .collect();
        for &k in schemes {
            let powers: Vec<f64> = at_v
                .iter()
                .filter(|r| r.scheme == k && complete.contains(&r.seed))
                .map(|r| r.power_dbm)
                .collect();
            let n = powers.len();
            let mean = powers.iter().sum::<f64>() / n as f64;
            let var = if n > 1 {
                powers.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            out.push(PointSummary {
                scheme: k,
                value: v,
                mean_dbm: mean,
                std_err_db: (var / n as f64).sqrt(),
                drops: n,
            });
        }
    }
    out
}

/// Means of one scheme ordered by sweep value.
pub fn series(summary: &[PointSummary], scheme: SchemeKind) -> Vec<(f64, f64)> {
    summary
        .iter()
        .filter(|p| p.scheme == scheme)
        .map(|p| (p.value, p.mean_dbm))
        .collect()
}
