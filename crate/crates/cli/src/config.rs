//! Run configuration: built-in defaults, then a `key=value` file, then
//! `STEREO_SELD_<KEY>` environment variables, then command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context};
use stereo_seld::augment::{AugmentConfig, AugmentMode, MaskShape};
use stereo_seld::dsp::{MelNorm, MelScale};
use stereo_seld::features::{FeatureExtractor, FeatureKind, FeatureParams};
use stereo_seld::labels::DivideBy;
use stereo_seld::metrics::{Average, ScoreConfig};
use stereo_seld::wave_io::DistanceUnit;

pub const ENV_PREFIX: &str = "STEREO_SELD_";

/// Spectrogram augmentation applied during extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentChoice {
    None,
    Spectral(AugmentMode),
    /// Channel-swapped copies of every clip, computed in memory.
    AcsOffline,
}

impl FromStr for AugmentChoice {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" | "" => Ok(AugmentChoice::None),
            "acs-offline" | "acs_offline" | "acs" => Ok(AugmentChoice::AcsOffline),
            other => Ok(AugmentChoice::Spectral(other.parse()?)),
        }
    }
}

impl fmt::Display for AugmentChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AugmentChoice::None => f.write_str("none"),
            AugmentChoice::Spectral(m) => write!(f, "{m}"),
            AugmentChoice::AcsOffline => f.write_str("ACS-offline"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub dataset_root: PathBuf,
    pub output_root: PathBuf,
    pub feature_set: FeatureKind,
    pub augment_mode: AugmentChoice,
    pub realizations: usize,
    pub seed: u64,
    pub workers: usize,
    pub sample_rate: u32,
    pub features: FeatureParams,
    pub augment: AugmentConfig,
    pub distance_unit: DistanceUnit,
    pub divide_by: DivideBy,
    /// Sidecar to load; when unset `extract` fits one on the dataset.
    pub normalizer: Option<PathBuf>,
    pub n_tracks: usize,
    pub n_classes: usize,
    pub score: ScoreConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            dataset_root: PathBuf::from("."),
            output_root: PathBuf::from("out"),
            feature_set: FeatureKind::Msic,
            augment_mode: AugmentChoice::None,
            realizations: 1,
            seed: 0,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            sample_rate: 24_000,
            features: FeatureParams::default(),
            augment: AugmentConfig::default(),
            distance_unit: DistanceUnit::Auto,
            divide_by: DivideBy::Max,
            normalizer: None,
            n_tracks: 3,
            n_classes: 13,
            score: ScoreConfig::default(),
        }
    }
}

/// Every configurable key, in `--print-config` order.
pub const KEYS: &[&str] = &[
    "dataset_root",
    "output_root",
    "feature_set",
    "augment_mode",
    "realizations",
    "seed",
    "workers",
    "sample_rate",
    "n_fft",
    "hop",
    "n_mels",
    "f_min",
    "f_max",
    "mel_scale",
    "mel_norm",
    "log_floor",
    "iv_eps",
    "msc_eps",
    "msc_lambda",
    "filteraug_bands_min",
    "filteraug_bands_max",
    "filteraug_gain_db_min",
    "filteraug_gain_db_max",
    "freqshift_max_bins",
    "itfm_max_time_masks",
    "itfm_max_time_width",
    "itfm_max_freq_masks",
    "itfm_max_freq_width",
    "itfm_mask_shape",
    "distance_unit",
    "divide_by",
    "normalizer",
    "n_tracks",
    "n_classes",
    "average",
    "angle_threshold_deg",
    "rde_threshold",
];

fn parse<T: FromStr>(key: &str, value: &str) -> anyhow::Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| anyhow!("invalid value `{value}` for `{key}`: {e}"))
}

impl PipelineConfig {
    pub fn set(&mut self, key: &str, value: &str) -> anyhow::Result<()> {
        let v = value.trim();
        let key = key.trim();
        match key {
            "dataset_root" => self.dataset_root = PathBuf::from(v),
            "output_root" => self.output_root = PathBuf::from(v),
            "feature_set" => self.feature_set = parse(key, v)?,
            "augment_mode" => self.augment_mode = v.parse()?,
            "realizations" => self.realizations = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "workers" => self.workers = parse(key, v)?,
            "sample_rate" => {
                self.sample_rate = parse(key, v)?;
                self.features.mel.sample_rate = self.sample_rate;
            }
            "n_fft" => {
                self.features.stft.fft_size = parse(key, v)?;
                self.features.mel.fft_size = self.features.stft.fft_size;
            }
            "hop" => self.features.stft.hop = parse(key, v)?,
            "n_mels" => self.features.mel.n_mels = parse(key, v)?,
            "f_min" => self.features.mel.f_min = parse(key, v)?,
            "f_max" => {
                self.features.mel.f_max = match v.to_ascii_lowercase().as_str() {
                    "nyquist" | "" => None,
                    _ => Some(parse(key, v)?),
                }
            }
            "mel_scale" => self.features.mel.scale = parse(key, v)?,
            "mel_norm" => self.features.mel.norm = parse(key, v)?,
            "log_floor" => self.features.log_floor = parse(key, v)?,
            "iv_eps" => self.features.iv_eps = parse(key, v)?,
            "msc_eps" => self.features.msc_eps = parse(key, v)?,
            "msc_lambda" => self.features.msc_lambda = parse(key, v)?,
            "filteraug_bands_min" => self.augment.filteraug_bands.0 = parse(key, v)?,
            "filteraug_bands_max" => self.augment.filteraug_bands.1 = parse(key, v)?,
            "filteraug_gain_db_min" => self.augment.filteraug_gain_db.0 = parse(key, v)?,
            "filteraug_gain_db_max" => self.augment.filteraug_gain_db.1 = parse(key, v)?,
            "freqshift_max_bins" => self.augment.freqshift_max_bins = parse(key, v)?,
            "itfm_max_time_masks" => self.augment.itfm_max_time_masks = parse(key, v)?,
            "itfm_max_time_width" => self.augment.itfm_max_time_width = parse(key, v)?,
            "itfm_max_freq_masks" => self.augment.itfm_max_freq_masks = parse(key, v)?,
            "itfm_max_freq_width" => self.augment.itfm_max_freq_width = parse(key, v)?,
            "itfm_mask_shape" => self.augment.itfm_mask_shape = parse(key, v)?,
            "distance_unit" => self.distance_unit = parse(key, v)?,
            "divide_by" => self.divide_by = parse(key, v)?,
            "normalizer" => {
                self.normalizer = if v.is_empty() || v.eq_ignore_ascii_case("none") {
                    None
                } else {
                    Some(PathBuf::from(v))
                }
            }
            "n_tracks" => self.n_tracks = parse(key, v)?,
            "n_classes" => self.n_classes = parse(key, v)?,
            "average" => self.score.average = parse(key, v)?,
            "angle_threshold_deg" => self.score.angle_threshold_deg = parse(key, v)?,
            "rde_threshold" => self.score.rde_threshold = parse(key, v)?,
            _ => bail!("unknown configuration key `{key}`"),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let f = &self.features;
        let a = &self.augment;
        Some(match key {
            "dataset_root" => self.dataset_root.display().to_string(),
            "output_root" => self.output_root.display().to_string(),
            "feature_set" => self.feature_set.to_string(),
            "augment_mode" => self.augment_mode.to_string(),
            "realizations" => self.realizations.to_string(),
            "seed" => self.seed.to_string(),
            "workers" => self.workers.to_string(),
            "sample_rate" => self.sample_rate.to_string(),
            "n_fft" => f.stft.fft_size.to_string(),
            "hop" => f.stft.hop.to_string(),
            "n_mels" => f.mel.n_mels.to_string(),
            "f_min" => f.mel.f_min.to_string(),
            "f_max" => f.mel.f_max.map_or("nyquist".to_string(), |x| x.to_string()),
            "mel_scale" => match f.mel.scale {
                MelScale::Slaney => "slaney",
                MelScale::Htk => "htk",
            }
            .to_string(),
            "mel_norm" => match f.mel.norm {
                MelNorm::Area => "area",
                MelNorm::None => "none",
            }
            .to_string(),
            "log_floor" => f.log_floor.to_string(),
            "iv_eps" => f.iv_eps.to_string(),
            "msc_eps" => f.msc_eps.to_string(),
            "msc_lambda" => f.msc_lambda.to_string(),
            "filteraug_bands_min" => a.filteraug_bands.0.to_string(),
            "filteraug_bands_max" => a.filteraug_bands.1.to_string(),
            "filteraug_gain_db_min" => a.filteraug_gain_db.0.to_string(),
            "filteraug_gain_db_max" => a.filteraug_gain_db.1.to_string(),
            "freqshift_max_bins" => a.freqshift_max_bins.to_string(),
            "itfm_max_time_masks" => a.itfm_max_time_masks.to_string(),
            "itfm_max_time_width" => a.itfm_max_time_width.to_string(),
            "itfm_max_freq_masks" => a.itfm_max_freq_masks.to_string(),
            "itfm_max_freq_width" => a.itfm_max_freq_width.to_string(),
            "itfm_mask_shape" => match a.itfm_mask_shape {
                MaskShape::Stripes => "stripes",
                MaskShape::Rectangles => "rectangles",
            }
            .to_string(),
            "distance_unit" => self.distance_unit.to_string(),
            "divide_by" => match self.divide_by {
                DivideBy::Max => "max",
                DivideBy::AbsMax => "absmax",
            }
            .to_string(),
            "normalizer" => self
                .normalizer
                .as_ref()
                .map_or(String::new(), |p| p.display().to_string()),
            "n_tracks" => self.n_tracks.to_string(),
            "n_classes" => self.n_classes.to_string(),
            "average" => match self.score.average {
                Average::Macro => "macro",
                Average::Micro => "micro",
            }
            .to_string(),
            "angle_threshold_deg" => self.score.angle_threshold_deg.to_string(),
            "rde_threshold" => self.score.rde_threshold.to_string(),
            _ => return None,
        })
    }

    /// Applies `key=value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> anyhow::Result<()> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("{origin}:{}: expected key=value", idx + 1))?;
            self.set(k, v)
                .with_context(|| format!("{origin}:{}", idx + 1))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> anyhow::Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config file {}", path.display()))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Applies `STEREO_SELD_<KEY>` overrides found through `lookup`.
    pub fn apply_env(&mut self, lookup: impl Fn(&str) -> Option<String>) -> anyhow::Result<()> {
        for key in KEYS {
            let var = format!("{ENV_PREFIX}{}", key.to_ascii_uppercase());
            if let Some(v) = lookup(&var) {
                self.set(key, &v).with_context(|| format!("environment variable {var}"))?;
            }
        }
        Ok(())
    }

    /// Applies a `key=value` override from the command line.
    pub fn apply_assignment(&mut self, assignment: &str) -> anyhow::Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| anyhow!("expected key=value, got `{assignment}`"))?;
        self.set(k, v)
    }

    /// Effective configuration as `key=value` lines, reloadable with
    /// [`PipelineConfig::apply_text`].
    pub fn render(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k}={}\n", self.get(k).unwrap_or_default()))
            .collect()
    }

    pub fn label_params(&self, n_frames: usize) -> stereo_seld::labels::LabelParams {
        stereo_seld::labels::LabelParams {
            n_frames,
            n_tracks: self.n_tracks,
            n_classes: self.n_classes,
        }
    }

    /// Checks everything that can be checked without touching the dataset.
    pub fn validate(&self) -> anyhow::Result<()> {
        if self.workers == 0 {
            bail!("workers must be a positive integer");
        }
        if self.realizations == 0 {
            bail!("realizations must be a positive integer");
        }
        if self.n_tracks == 0 || self.n_classes == 0 {
            bail!("n_tracks and n_classes must be positive");
        }
        if self.features.mel.sample_rate != self.sample_rate {
            bail!("mel sample rate does not match sample_rate");
        }
        FeatureExtractor::new(self.features).context("invalid feature parameters")?;
        if let AugmentChoice::Spectral(mode) = self.augment_mode {
            let bands = self.features.mel.n_mels;
            let mut check = self.augment;
            if mode == AugmentMode::Fafs {
                // Mask widths are irrelevant to this chain.
                check.itfm_max_time_width = 0;
                check.itfm_max_freq_width = 0;
            } else {
                check.filteraug_bands = (1, 1);
                check.freqshift_max_bins = 0;
            }
            check
                .validate(usize::MAX, bands)
                .context("invalid augmentation parameters")?;
        }
        let s = &self.score;
        if !(s.angle_threshold_deg > 0.0 && s.angle_threshold_deg <= 180.0) {
            bail!("angle_threshold_deg must lie in (0, 180]");
        }
        if !(s.rde_threshold > 0.0) {
            bail!("rde_threshold must be positive");
        }
        Ok(())
    }
}
