//! `acs-expand`: writes a channel-swapped sibling of every clip.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::Context;
use rayon::prelude::*;
use stereo_seld::augment::negate_azimuth;
use stereo_seld::wave_io::{
    parse_metadata, read_wav_raw, wrap_azimuth, write_wav_raw, DistanceUnit,
};

use crate::config::PipelineConfig;
use crate::dataset::{scan, ClipPair, ACS_SUFFIX, AUDIO_DIR, METADATA_DIR};
use crate::{thread_pool, Failure, Outcome};

/// Negates the azimuth column of metadata text and leaves every other byte
/// untouched. The text is validated first.
pub fn mirror_metadata_text(text: &str, path: &Path) -> anyhow::Result<String> {
    parse_metadata(text, DistanceUnit::Meters, path)?;
    let mut out = String::with_capacity(text.len() + 16);
    for chunk in text.split_inclusive('\n') {
        let body = chunk.trim_end_matches(['\n', '\r']);
        let ending = &chunk[body.len()..];
        if body.trim().is_empty() {
            out.push_str(chunk);
            continue;
        }
        let mut cols: Vec<String> = body.split(',').map(str::to_string).collect();
        let az: f64 = cols[3].trim().parse().expect("validated above");
        cols[3] = format!("{}", negate_azimuth(wrap_azimuth(az) + 0.0));
        out.push_str(&cols.join(","));
        out.push_str(ending);
    }
    Ok(out)
}

enum Action {
    Written,
    Skipped,
}

fn expand_one(root: &Path, pair: &ClipPair) -> anyhow::Result<Action> {
    let mirrored = format!("{}{ACS_SUFFIX}", pair.stem);
    let wav_out = root.join(AUDIO_DIR).join(format!("{mirrored}.wav"));
    let csv_out = root.join(METADATA_DIR).join(format!("{mirrored}.csv"));
    if wav_out.is_file() && csv_out.is_file() {
        return Ok(Action::Skipped);
    }
    let text = std::fs::read_to_string(&pair.csv)
        .with_context(|| format!("reading {}", pair.csv.display()))?;
    let csv = mirror_metadata_text(&text, &pair.csv)?;
    let mut wav = read_wav_raw(&pair.wav)?;
    wav.swap_channels();
    write_wav_raw(&wav_out, &wav)?;
    std::fs::write(&csv_out, csv).with_context(|| format!("writing {}", csv_out.display()))?;
    Ok(Action::Written)
}

pub fn cmd_acs_expand(cfg: &PipelineConfig) -> anyhow::Result<Outcome> {
    cfg.validate()?;
    let found = scan(&cfg.dataset_root)?;
    let mut failures: Vec<Failure> = found
        .unpaired
        .iter()
        .map(|(stem, why)| Failure::new(stem, why))
        .collect();
    let sources: Vec<&ClipPair> = found
        .pairs
        .iter()
        .filter(|p| !p.stem.ends_with(ACS_SUFFIX))
        .collect();
    let root = cfg.dataset_root.as_path();
    let results: Vec<(String, anyhow::Result<Action>)> = thread_pool(cfg.workers)?.install(|| {
        sources
            .par_iter()
            .map(|p| (p.stem.clone(), expand_one(root, p)))
            .collect()
    });
    let (mut written, mut skipped) = (0, 0);
    for (stem, r) in results {
        match r {
            Ok(Action::Written) => written += 1,
            Ok(Action::Skipped) => skipped += 1,
            Err(e) => failures.push(Failure::new(&stem, format!("{e:#}"))),
        }
    }
    failures.sort();
    let after = scan(root)?.pairs.len();
    let mut report = String::new();
    let _ = writeln!(
        report,
        "{} source clips, {written} mirrored, {skipped} already present, {} failed; {after} clips in corpus",
        sources.len(),
        failures.len()
    );
    Ok(Outcome { report, failures })
}
