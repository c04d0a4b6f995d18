//! `extract`: feature stacks and targets for every clip of a dataset.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{bail, Context};
use rayon::prelude::*;
use sha2::{Digest, Sha256};
use stereo_seld::augment::{acs, compose_pipeline, AugmentConfig, Pipeline};
use stereo_seld::features::FeatureExtractor;
use stereo_seld::labels::{encode_targets, label_frames_for, DistanceNormalizer};
use stereo_seld::wave_io::{
    encode_npy, read_metadata_csv, read_wav, resample_if_needed, EventList, StereoClip,
};
use stereo_seld::Tensor;

use crate::config::{AugmentChoice, PipelineConfig};
use crate::dataset::{scan, ClipPair, ACS_SUFFIX};
use crate::normalizer::collect_distances;
use crate::{thread_pool, Failure, Outcome};

pub const FEATURES_DIR: &str = "features";
pub const TARGETS_DIR: &str = "targets";
pub const AUGMENTED_DIR: &str = "features_aug";
pub const MANIFEST_FILE: &str = "manifest.tsv";
pub const NORMALIZER_FILE: &str = "normalizer.txt";

/// One written tensor.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct ManifestRow {
    pub stem: String,
    pub kind: String,
    /// Relative to the output root, `/`-separated.
    pub path: String,
    pub shape: Vec<usize>,
    pub sha256: String,
}

impl ManifestRow {
    fn render(&self) -> String {
        let shape: Vec<String> = self.shape.iter().map(|d| d.to_string()).collect();
        format!(
            "{}\t{}\t{}\t{}\t{}",
            self.stem,
            self.kind,
            self.path,
            shape.join("x"),
            self.sha256
        )
    }
}

pub fn render_manifest(rows: &[ManifestRow]) -> String {
    let mut out = String::from("stem\tkind\tpath\tshape\tsha256\n");
    for row in rows {
        out.push_str(&row.render());
        out.push('\n');
    }
    out
}

/// Augmentation stream key for one realization of one clip. Depends only on
/// the stem, never on scheduling.
pub fn clip_key(stem: &str, realization: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(stem.as_bytes());
    h.update([0u8]);
    h.update((realization as u64).to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
}

fn write_npy(root: &Path, rel: &str, stem: &str, kind: &str, t: &Tensor) -> anyhow::Result<ManifestRow> {
    if let Some(v) = t.data().iter().find(|v| !v.is_finite()) {
        bail!("non-finite value {v} in {kind} tensor");
    }
    let bytes = encode_npy(t);
    let path = root.join(rel);
    std::fs::write(&path, &bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(ManifestRow {
        stem: stem.to_string(),
        kind: kind.to_string(),
        path: rel.to_string(),
        shape: t.shape().to_vec(),
        sha256: hex::encode(Sha256::digest(&bytes)),
    })
}

struct Job<'a> {
    cfg: &'a PipelineConfig,
    extractor: FeatureExtractor,
    normalizer: DistanceNormalizer,
    pipeline: Option<Pipeline>,
    stems: HashSet<&'a str>,
}

impl Job<'_> {
    fn base(
        &self,
        stem: &str,
        clip: &StereoClip,
        events: &EventList,
    ) -> anyhow::Result<(Vec<ManifestRow>, stereo_seld::features::FeatureTensor)> {
        let root = &self.cfg.output_root;
        let stack = self.extractor.extract(clip, self.cfg.feature_set)?;
        let params = self.cfg.label_params(label_frames_for(clip.duration_secs()));
        let (targets, report) = encode_targets(events, &self.normalizer, params)?;
        if report.dropped_overflow > 0 || report.dropped_out_of_range > 0 {
            log::warn!(
                "{stem}: dropped {} overlapping and {} out-of-range events",
                report.dropped_overflow,
                report.dropped_out_of_range
            );
        }
        let rows = vec![
            write_npy(root, &format!("{FEATURES_DIR}/{stem}.npy"), stem, "features", &stack.to_tensor())?,
            write_npy(root, &format!("{TARGETS_DIR}/{stem}.npy"), stem, "targets", &targets.to_tensor())?,
        ];
        Ok((rows, stack))
    }

    fn run(&self, pair: &ClipPair) -> anyhow::Result<Vec<ManifestRow>> {
        let clip = read_wav(&pair.wav)?;
        let clip = resample_if_needed(clip, self.cfg.sample_rate)?;
        let events = read_metadata_csv(&pair.csv, self.cfg.distance_unit)?;
        let stem = pair.stem.as_str();
        let (mut rows, stack) = self.base(stem, &clip, &events)?;

        if let Some(pipeline) = &self.pipeline {
            for r in 0..self.cfg.realizations {
                let aug = pipeline
                    .apply(&stack, clip_key(stem, r))
                    .with_context(|| format!("augmentation realization {r}"))?;
                let rel = format!("{AUGMENTED_DIR}/{stem}_r{r}.npy");
                rows.push(write_npy(&self.cfg.output_root, &rel, stem, &format!("features_r{r}"), &aug.to_tensor())?);
            }
        }
        drop(stack);

        if self.cfg.augment_mode == AugmentChoice::AcsOffline {
            let mirrored = format!("{stem}{ACS_SUFFIX}");
            // Stems already mirrored on disk are extracted on their own.
            if !stem.ends_with(ACS_SUFFIX) && !self.stems.contains(mirrored.as_str()) {
                let (clip, events) = acs(clip, &events);
                rows.extend(self.base(&mirrored, &clip, &events)?.0);
            }
        }
        Ok(rows)
    }
}

fn load_or_fit_normalizer(
    cfg: &PipelineConfig,
    pairs: &[ClipPair],
) -> anyhow::Result<(DistanceNormalizer, Vec<Failure>)> {
    if let Some(path) = &cfg.normalizer {
        let dn = DistanceNormalizer::read_sidecar(path)
            .with_context(|| format!("loading normalizer {}", path.display()))?;
        return Ok((dn, Vec::new()));
    }
    let csvs: Vec<(String, &Path)> = pairs
        .iter()
        .map(|p| (p.stem.clone(), p.csv.as_path()))
        .collect();
    let (distances, failures) = collect_distances(&csvs, cfg.distance_unit);
    let dn = DistanceNormalizer::fit(&distances, cfg.divide_by)
        .context("fitting the distance normalizer on the dataset")?;
    let path = cfg.output_root.join(NORMALIZER_FILE);
    dn.write_sidecar(&path)?;
    log::info!("fitted normalizer written to {}", path.display());
    Ok((dn, failures))
}

pub fn cmd_extract(cfg: &PipelineConfig) -> anyhow::Result<Outcome> {
    cfg.validate()?;
    let scan = scan(&cfg.dataset_root)?;
    let mut failures: Vec<Failure> = scan
        .unpaired
        .iter()
        .map(|(stem, why)| Failure::new(stem, why))
        .collect();

    let mut rows = Vec::new();
    if !scan.pairs.is_empty() {
        for dir in [FEATURES_DIR, TARGETS_DIR] {
            std::fs::create_dir_all(cfg.output_root.join(dir))?;
        }
        let pipeline = match cfg.augment_mode {
            AugmentChoice::Spectral(mode) => {
                std::fs::create_dir_all(cfg.output_root.join(AUGMENTED_DIR))?;
                Some(compose_pipeline(mode, AugmentConfig { seed: cfg.seed, ..cfg.augment }))
            }
            _ => None,
        };
        let (normalizer, fit_failures) = load_or_fit_normalizer(cfg, &scan.pairs)?;
        let bad: HashSet<String> = fit_failures.iter().map(|f| f.stem.clone()).collect();
        failures.extend(fit_failures);

        let job = Job {
            cfg,
            extractor: FeatureExtractor::new(cfg.features)?,
            normalizer,
            pipeline,
            stems: scan.pairs.iter().map(|p| p.stem.as_str()).collect(),
        };
        let results: Vec<(String, anyhow::Result<Vec<ManifestRow>>)> = thread_pool(cfg.workers)?
            .install(|| {
                scan.pairs
                    .par_iter()
                    .filter(|p| !bad.contains(&p.stem))
                    .map(|p| (p.stem.clone(), job.run(p)))
                    .collect()
            });
        for (stem, result) in results {
            match result {
                Ok(r) => rows.extend(r),
                Err(e) => failures.push(Failure::new(&stem, format!("{e:#}"))),
            }
        }
    }
    rows.sort();
    failures.sort();

    if !scan.pairs.is_empty() {
        std::fs::create_dir_all(&cfg.output_root)?;
        let manifest = cfg.output_root.join(MANIFEST_FILE);
        std::fs::write(&manifest, render_manifest(&rows))
            .with_context(|| format!("writing {}", manifest.display()))?;
    }

    let clips = scan.pairs.len() + scan.unpaired.len();
    let mut report = String::new();
    let _ = writeln!(
        report,
        "{clips} clips, {} extracted, {} failed, {} tensors written",
        clips - failures.len(),
        failures.len(),
        rows.len()
    );
    Ok(Outcome { report, failures })
}
