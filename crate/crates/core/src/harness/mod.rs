//! Scenarios, random drops, benchmark schemes, sweeps and their artifacts.

pub mod drop;
pub mod output;
pub mod scenario;
pub mod scheme;
pub mod sweep;

use std::path::Path;

pub use drop::{drop_scenario, ScenarioDrop};
pub use output::{ResultRow, RunManifest};
pub use scenario::{RotationMode, Scenario};
pub use scheme::{run_scheme, ExperimentResult, SchemeKind};
pub use sweep::{
    paired_means, paired_row_means, seed_range, series, sweep, sweep_to_dir, PointSummary,
    SweepAxis, SweepRecord,
};

use crate::error::Result;
use output::{
    results_csv, trace_csv, write_atomic, write_json, DROP_FILE, MANIFEST_FILE, RESULTS_FILE,
    TRACE_FILE,
};

/// Runs one scheme and writes `results.csv`, `trace.csv`, `drop.json` and
/// `manifest.json` into `out_dir`. Re-running the manifest reproduces every
/// file byte for byte.
pub fn run_to_dir(manifest: &RunManifest, out_dir: &Path) -> Result<ExperimentResult> {
    let drop = drop_scenario(&manifest.scenario, manifest.seed)?;
    let result = run_scheme(manifest.scheme, &manifest.scenario, &drop, manifest.seed)?;
    let row = ResultRow::new(&result, "none", 0.0, TRACE_FILE);
    write_atomic(&out_dir.join(TRACE_FILE), &trace_csv(&result.trace)?)?;
    write_json(&out_dir.join(DROP_FILE), &drop)?;
    write_json(&out_dir.join(MANIFEST_FILE), manifest)?;
    write_atomic(&out_dir.join(RESULTS_FILE), &results_csv(&[row])?)?;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replay_is_byte_identical() {
        let mut scenario = Scenario::default();
        scenario.swarm.particles = 5;
        scenario.swarm.iterations = 4;
        let m = RunManifest {
            scenario,
            scheme: SchemeKind::Proposed,
            seed: 12,
        };
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        run_to_dir(&m, a.path()).unwrap();
        let replayed = output::read_manifest(&a.path().join(MANIFEST_FILE)).unwrap();
        assert_eq!(replayed, m);
        run_to_dir(&replayed, b.path()).unwrap();
        for f in [RESULTS_FILE, TRACE_FILE, DROP_FILE, MANIFEST_FILE] {
            assert_eq!(
                std::fs::read(a.path().join(f)).unwrap(),
                std::fs::read(b.path().join(f)).unwrap(),
                "{f}"
            );
        }
    }
}
