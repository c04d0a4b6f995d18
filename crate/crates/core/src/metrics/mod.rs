//! Location-dependent detection and localization metrics.
//!
//! Per (frame, class) the predictions and references are paired by a
//! minimum-total-angular-error assignment. A pair is a true positive when it
//! is within the angular threshold *and* the relative distance threshold;
//! otherwise it adds one false positive and one false negative. LE and RDE
//! are averaged over every matched pair, thresholds notwithstanding.

mod assignment;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

pub use assignment::{
    brute_force_assignment, hungarian, min_cost_assignment, total_cost, BRUTE_FORCE_LIMIT,
};

use crate::wave_io::EventList;
use crate::{Error, Result};

/// A predicted or reference source position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Doa {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
    pub distance_m: f64,
}

/// Great-circle angle in degrees between two (azimuth, elevation) directions.
pub fn angular_error(a: (f64, f64), b: (f64, f64)) -> f64 {
    let (u, v) = (unit(a), unit(b));
    let dot: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    let sin = cross.iter().map(|c| c * c).sum::<f64>().sqrt();
    // atan2 stays accurate near 0 and 180 degrees where acos does not.
    sin.atan2(dot).to_degrees()
}

fn unit((az, el): (f64, f64)) -> [f64; 3] {
    let (az, el) = (az.to_radians(), el.to_radians());
    [az.cos() * el.cos(), az.sin() * el.cos(), el.sin()]
}

fn doa_angle(a: &Doa, b: &Doa) -> f64 {
    angular_error((a.azimuth_deg, a.elevation_deg), (b.azimuth_deg, b.elevation_deg))
}

/// One-to-one pairing of predictions with references.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Matching {
    /// `(prediction index, reference index)`, sorted by prediction.
    pub pairs: Vec<(usize, usize)>,
    pub unmatched_preds: Vec<usize>,
    pub unmatched_refs: Vec<usize>,
}

pub fn match_frame(preds: &[Doa], refs: &[Doa]) -> Matching {
    let cost: Vec<Vec<f64>> = preds
        .iter()
        .map(|p| refs.iter().map(|r| doa_angle(p, r)).collect())
        .collect();
    let mut pairs = if preds.is_empty() || refs.is_empty() {
        Vec::new()
    } else {
        min_cost_assignment(&cost)
    };
    pairs.sort_unstable();
    let unmatched_preds = (0..preds.len())
        .filter(|i| !pairs.iter().any(|p| p.0 == *i))
        .collect();
    let unmatched_refs = (0..refs.len())
        .filter(|j| !pairs.iter().any(|p| p.1 == *j))
        .collect();
    Matching {
        pairs,
        unmatched_preds,
        unmatched_refs,
    }
}

/// Predictions and references of one class in one label frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredFrame {
    pub frame: u64,
    pub class_id: usize,
    pub preds: Vec<Doa>,
    pub refs: Vec<Doa>,
}

/// Groups two event lists into per-(frame, class) scoring units.
pub fn scored_frames(preds: &EventList, refs: &EventList) -> Vec<ScoredFrame> {
    let mut cells: BTreeMap<(u32, usize), (Vec<Doa>, Vec<Doa>)> = BTreeMap::new();
    let doa = |e: &crate::wave_io::Event| Doa {
        azimuth_deg: e.azimuth_deg,
        elevation_deg: e.elevation_deg,
        distance_m: e.distance_m,
    };
    for e in preds.iter() {
        cells.entry((e.frame, e.class_id)).or_default().0.push(doa(e));
    }
    for e in refs.iter() {
        cells.entry((e.frame, e.class_id)).or_default().1.push(doa(e));
    }
    cells
        .into_iter()
        .map(|((frame, class_id), (preds, refs))| ScoredFrame {
            frame: frame as u64,
            class_id,
            preds,
            refs,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Average {
    /// Mean of per-class scores over classes with reference activity.
    #[default]
    Macro,
    /// Scores from counts pooled over all classes.
    Micro,
}

impl FromStr for Average {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "macro" => Ok(Average::Macro),
            "micro" => Ok(Average::Micro),
            other => Err(Error::param("average", format!("expected macro or micro, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreConfig {
    pub angle_threshold_deg: f64,
    pub rde_threshold: f64,
    pub average: Average,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            angle_threshold_deg: 20.0,
            rde_threshold: 1.0,
            average: Average::Macro,
        }
    }
}

/// Per-class outcome.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassScore {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub n_refs: u64,
    pub matched: u64,
    pub f_score: f64,
    pub le_deg: f64,
    pub rde: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub f_score: f64,
    pub le_cd_deg: f64,
    pub rde_cd: f64,
    pub e_seld: f64,
    pub average: Average,
    pub classes: BTreeMap<usize, ClassScore>,
}

/// Aggregated SELD error; lower is better.
pub fn e_seld(f_score: f64, le_deg: f64, rde: f64) -> f64 {
    ((1.0 - f_score) + le_deg / 180.0 + rde) / 3.0
}

#[derive(Debug, Clone, Default)]
struct ClassAccumulator {
    tp: u64,
    fp: u64,
    fn_: u64,
    n_refs: u64,
    angles: Vec<f64>,
    rdes: Vec<f64>,
}

/// Sums after sorting so the result does not depend on accumulation order.
fn stable_sum(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    values.iter().sum()
}

/// Incremental scorer; frames may be added in any order and shards merged.
#[derive(Debug, Clone, Default)]
pub struct Scorer {
    cfg: ScoreConfig,
    classes: BTreeMap<usize, ClassAccumulator>,
}

impl Scorer {
    pub fn new(cfg: ScoreConfig) -> Self {
        Scorer {
            cfg,
            classes: BTreeMap::new(),
        }
    }

    pub fn add(&mut self, frame: &ScoredFrame) -> Result<()> {
        if let Some(r) = frame.refs.iter().find(|r| !(r.distance_m > 0.0)) {
            return Err(Error::param(
                "reference distance",
                format!("must be positive, got {}", r.distance_m),
            ));
        }
        let acc = self.classes.entry(frame.class_id).or_default();
        let m = match_frame(&frame.preds, &frame.refs);
        acc.n_refs += frame.refs.len() as u64;
        acc.fp += m.unmatched_preds.len() as u64;
        acc.fn_ += m.unmatched_refs.len() as u64;
        for &(i, j) in &m.pairs {
            let (p, r) = (&frame.preds[i], &frame.refs[j]);
            let angle = doa_angle(p, r);
            let rde = (p.distance_m - r.distance_m).abs() / r.distance_m;
            acc.angles.push(angle);
            acc.rdes.push(rde);
            if angle <= self.cfg.angle_threshold_deg && rde <= self.cfg.rde_threshold {
                acc.tp += 1;
            } else {
                acc.fp += 1;
                acc.fn_ += 1;
            }
        }
        Ok(())
    }

    pub fn merge(&mut self, other: Scorer) {
        for (class, acc) in other.classes {
            let mine = self.classes.entry(class).or_default();
            mine.tp += acc.tp;
            mine.fp += acc.fp;
            mine.fn_ += acc.fn_;
            mine.n_refs += acc.n_refs;
            mine.angles.extend(acc.angles);
            mine.rdes.extend(acc.rdes);
        }
    }

    pub fn finish(mut self) -> Result<MetricsReport> {
        if self.classes.values().all(|a| a.n_refs == 0) {
            return Err(Error::Empty("reference stream"));
        }
        let f_of = |tp: u64, fp: u64, fn_: u64| {
            let den = 2 * tp + fp + fn_;
            if den == 0 {
                0.0
            } else {
                2.0 * tp as f64 / den as f64
            }
        };
        let mut classes = BTreeMap::new();
        let (mut sum_angle, mut sum_rde, mut matched_total) = (Vec::new(), Vec::new(), 0u64);
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (&class, acc) in self.classes.iter_mut() {
            let matched = acc.angles.len() as u64;
            let (le, rde) = if matched > 0 {
                (
                    stable_sum(&mut acc.angles) / matched as f64,
                    stable_sum(&mut acc.rdes) / matched as f64,
                )
            } else {
                (180.0, 1.0)
            };
            sum_angle.extend_from_slice(&acc.angles);
            sum_rde.extend_from_slice(&acc.rdes);
            matched_total += matched;
            tp += acc.tp;
            fp += acc.fp;
            fn_ += acc.fn_;
            classes.insert(
                class,
                ClassScore {
                    tp: acc.tp,
                    fp: acc.fp,
                    fn_: acc.fn_,
                    n_refs: acc.n_refs,
                    matched,
                    f_score: f_of(acc.tp, acc.fp, acc.fn_),
                    le_deg: le,
                    rde,
                },
            );
        }

        let (f_score, le_cd_deg, rde_cd) = match self.cfg.average {
            Average::Macro => {
                let active: Vec<&ClassScore> = classes.values().filter(|c| c.n_refs > 0).collect();
                let n = active.len() as f64;
                (
                    active.iter().map(|c| c.f_score).sum::<f64>() / n,
                    active.iter().map(|c| c.le_deg).sum::<f64>() / n,
                    active.iter().map(|c| c.rde).sum::<f64>() / n,
                )
            }
            Average::Micro => {
                if matched_total > 0 {
                    (
                        f_of(tp, fp, fn_),
                        stable_sum(&mut sum_angle) / matched_total as f64,
                        stable_sum(&mut sum_rde) / matched_total as f64,
                    )
                } else {
                    (f_of(tp, fp, fn_), 180.0, 1.0)
                }
            }
        };
        Ok(MetricsReport {
            f_score,
            le_cd_deg,
            rde_cd,
            e_seld: e_seld(f_score, le_cd_deg, rde_cd),
            average: self.cfg.average,
            classes,
        })
    }
}

pub fn score<'a>(
    frames: impl IntoIterator<Item = &'a ScoredFrame>,
    cfg: ScoreConfig,
) -> Result<MetricsReport> {
    let mut scorer = Scorer::new(cfg);
    for f in frames {
        scorer.add(f)?;
    }
    scorer.finish()
}

impl MetricsReport {
    pub fn totals(&self) -> (u64, u64, u64) {
        self.classes
            .values()
            .fold((0, 0, 0), |(a, b, c), s| (a + s.tp, b + s.fp, c + s.fn_))
    }

    /// Human-readable table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>5} {:>6} {:>6} {:>6} {:>6} {:>8} {:>9} {:>7}",
            "class", "refs", "TP", "FP", "FN", "F", "LE(deg)", "RDE"
        );
        for (class, c) in &self.classes {
            let _ = writeln!(
                s,
                "{:>5} {:>6} {:>6} {:>6} {:>6} {:>8.4} {:>9.2} {:>7.4}",
                class, c.n_refs, c.tp, c.fp, c.fn_, c.f_score, c.le_deg, c.rde
            );
        }
        let avg = match self.average {
            Average::Macro => "macro",
            Average::Micro => "micro",
        };
        let _ = writeln!(s, "F20/1   ({avg}) {:.4}", self.f_score);
        let _ = writeln!(s, "LE_CD   ({avg}) {:.2} deg", self.le_cd_deg);
        let _ = writeln!(s, "RDE_CD  ({avg}) {:.4}", self.rde_cd);
        let _ = writeln!(s, "E_SELD          {:.4}", self.e_seld);
        s
    }

    /// Machine-readable `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let (tp, fp, fn_) = self.totals();
        let mut s = String::new();
        let _ = writeln!(s, "f_score={}", self.f_score);
        let _ = writeln!(s, "le_cd_deg={}", self.le_cd_deg);
        let _ = writeln!(s, "rde_cd={}", self.rde_cd);
        let _ = writeln!(s, "e_seld={}", self.e_seld);
        let _ = writeln!(s, "tp={tp}");
        let _ = writeln!(s, "fp={fp}");
        let _ = writeln!(s, "fn={fn_}");
        for (class, c) in &self.classes {
            let _ = writeln!(s, "class.{class}.tp={}", c.tp);
            let _ = writeln!(s, "class.{class}.fp={}", c.fp);
            let _ = writeln!(s, "class.{class}.fn={}", c.fn_);
        }
        s
    }
}
