//! `score`: metric report for a directory of predictions.

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use stereo_seld::metrics::{scored_frames, Scorer};
use stereo_seld::wave_io::{read_metadata_csv, EventList};

use crate::config::PipelineConfig;
use crate::dataset::files_by_stem;
use crate::{thread_pool, Failure, Outcome};

pub fn cmd_score(pred_dir: &Path, ref_dir: &Path, cfg: &PipelineConfig) -> anyhow::Result<Outcome> {
    cfg.validate()?;
    for dir in [pred_dir, ref_dir] {
        if !dir.is_dir() {
            anyhow::bail!("{} is not a directory", dir.display());
        }
    }
    let preds = files_by_stem(pred_dir, "csv")?;
    let refs = files_by_stem(ref_dir, "csv")?;
    let stems: Vec<&String> = preds.keys().chain(refs.keys()).collect::<BTreeSet<_>>().into_iter().collect();

    let load = |path: Option<&std::path::PathBuf>, stem: &str, side: &str| -> Result<EventList, String> {
        match path {
            Some(p) => read_metadata_csv(p, cfg.distance_unit).map_err(|e| e.to_string()),
            None => {
                log::warn!("{stem}: no {side} file, scored as empty");
                Ok(EventList::new(Vec::new(), false))
            }
        }
    };
    let per_clip: Vec<(String, Result<Scorer, String>)> = thread_pool(cfg.workers)?.install(|| {
        stems
            .par_iter()
            .map(|stem| {
                let result = (|| {
                    let p = load(preds.get(*stem), stem, "prediction")?;
                    let r = load(refs.get(*stem), stem, "reference")?;
                    let mut scorer = Scorer::new(cfg.score);
                    for frame in scored_frames(&p, &r) {
                        scorer.add(&frame).map_err(|e| e.to_string())?;
                    }
                    Ok(scorer)
                })();
                (stem.to_string(), result)
            })
            .collect()
    });

    let mut total = Scorer::new(cfg.score);
    let mut failures = Vec::new();
    for (stem, r) in per_clip {
        match r {
            Ok(s) => total.merge(s),
            Err(e) => failures.push(Failure::new(&stem, e)),
        }
    }
    let report = total.finish()?;
    let text = format!(
        "{} clips scored, {} failed\n{}\n[metrics]\nclips={}\n{}",
        stems.len() - failures.len(),
        failures.len(),
        report.to_text(),
        stems.len() - failures.len(),
        report.to_key_values()
    );
    Ok(Outcome {
        report: text,
        failures,
    })
}
