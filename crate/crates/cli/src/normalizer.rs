//! `fit-normalizer`: corpus distance statistics.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use stereo_seld::labels::DistanceNormalizer;
use stereo_seld::wave_io::{read_metadata_csv, DistanceUnit};

use crate::config::PipelineConfig;
use crate::dataset::{files_by_stem, METADATA_DIR};
use crate::extract::NORMALIZER_FILE;
use crate::{Failure, Outcome};

/// All event distances of the given metadata files, in file order. Files
/// that fail to parse are reported and skipped.
pub fn collect_distances(csvs: &[(String, &Path)], unit: DistanceUnit) -> (Vec<f64>, Vec<Failure>) {
    let mut distances = Vec::new();
    let mut failures = Vec::new();
    for (stem, path) in csvs {
        match read_metadata_csv(path, unit) {
            Ok(events) => distances.extend(events.iter().map(|e| e.distance_m)),
            Err(e) => failures.push(Failure::new(stem, e.to_string())),
        }
    }
    (distances, failures)
}

pub fn cmd_fit_normalizer(cfg: &PipelineConfig) -> anyhow::Result<Outcome> {
    cfg.validate()?;
    if !cfg.dataset_root.is_dir() {
        anyhow::bail!("dataset root {} is not a directory", cfg.dataset_root.display());
    }
    let files = files_by_stem(&cfg.dataset_root.join(METADATA_DIR), "csv")?;
    let csvs: Vec<(String, &Path)> = files.iter().map(|(s, p)| (s.clone(), p.as_path())).collect();
    let (distances, failures) = collect_distances(&csvs, cfg.distance_unit);
    let dn = DistanceNormalizer::fit(&distances, cfg.divide_by)
        .with_context(|| format!("fitting on {} distances", distances.len()))?;

    let path = match &cfg.normalizer {
        Some(p) => p.clone(),
        None => cfg.output_root.join(NORMALIZER_FILE),
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    dn.write_sidecar(&path)?;

    let min = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let max = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut report = String::new();
    let _ = writeln!(report, "files={}", files.len());
    let _ = writeln!(report, "events={}", distances.len());
    let _ = writeln!(report, "mean={}", dn.mean_m);
    let _ = writeln!(report, "std={}", dn.std_m);
    let _ = writeln!(report, "max_z={}", dn.max_z);
    let _ = writeln!(report, "min_distance_m={min}");
    let _ = writeln!(report, "max_distance_m={max}");
    let _ = writeln!(report, "sidecar={}", path.display());
    Ok(Outcome { report, failures })
}
