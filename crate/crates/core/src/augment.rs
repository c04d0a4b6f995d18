//! Stereo-aware augmentations.
//!
//! [`acs`] works on waveforms and labels and is meant for offline corpus
//! expansion. The spectrogram-level augmentations ([`filter_augment`],
//! [`freq_shift`], [`itfm`]) operate on a [`FeatureTensor`] and draw all
//! randomness from an explicit RNG, so a per-clip generator from
//! [`clip_rng`] makes results independent of scheduling.

use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::features::{FeatureTensor, IV, LOGMEL_L, LOGMEL_M, LOGMEL_R, LOGMEL_S, MSC, N_LOGMEL};
use crate::wave_io::{EventList, StereoClip};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MaskShape {
    /// Full-height time stripes and full-length frequency stripes.
    #[default]
    Stripes,
    /// Rectangles bounded on both axes.
    Rectangles,
}

impl FromStr for MaskShape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "stripes" => Ok(MaskShape::Stripes),
            "rectangles" => Ok(MaskShape::Rectangles),
            other => Err(Error::param("itfm_mask_shape", format!("unknown shape `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AugmentConfig {
    pub seed: u64,
    /// Inclusive range of FilterAugment band counts.
    pub filteraug_bands: (usize, usize),
    /// Inclusive range of per-band gains in dB.
    pub filteraug_gain_db: (f64, f64),
    pub freqshift_max_bins: usize,
    pub itfm_max_time_masks: usize,
    pub itfm_max_time_width: usize,
    pub itfm_max_freq_masks: usize,
    pub itfm_max_freq_width: usize,
    pub itfm_mask_shape: MaskShape,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            seed: 0,
            filteraug_bands: (3, 6),
            filteraug_gain_db: (-6.0, 6.0),
            freqshift_max_bins: 10,
            itfm_max_time_masks: 2,
            itfm_max_time_width: 40,
            itfm_max_freq_masks: 2,
            itfm_max_freq_width: 16,
            itfm_mask_shape: MaskShape::Stripes,
        }
    }
}

impl AugmentConfig {
    /// Checks every range against a stack with `frames × bands` planes.
    pub fn validate(&self, frames: usize, bands: usize) -> Result<()> {
        self.validate_filteraug(bands)?;
        self.validate_freqshift(bands)?;
        self.validate_itfm(frames, bands)
    }

    fn validate_filteraug(&self, bands: usize) -> Result<()> {
        let (lo, hi) = self.filteraug_bands;
        if lo == 0 || lo > hi {
            return Err(Error::param("filteraug_bands", format!("empty range {lo}..={hi}")));
        }
        if hi > bands {
            return Err(Error::param(
                "filteraug_bands",
                format!("{hi} bands requested on a {bands}-band axis"),
            ));
        }
        let (glo, ghi) = self.filteraug_gain_db;
        if !(glo.is_finite() && ghi.is_finite() && glo <= ghi) {
            return Err(Error::param("filteraug_gain_db", format!("empty range {glo}..={ghi}")));
        }
        Ok(())
    }

    fn validate_freqshift(&self, bands: usize) -> Result<()> {
        if self.freqshift_max_bins >= bands {
            return Err(Error::param("freqshift_max_bins", "must be smaller than the band count"));
        }
        Ok(())
    }

    fn validate_itfm(&self, frames: usize, bands: usize) -> Result<()> {
        if self.itfm_max_time_width >= frames {
            return Err(Error::param("itfm_max_time_width", "must be smaller than the frame count"));
        }
        if self.itfm_max_freq_width >= bands {
            return Err(Error::param("itfm_max_freq_width", "must be smaller than the band count"));
        }
        Ok(())
    }
}

/// Generator for one clip, derived from the global seed and a per-clip key.
pub fn clip_rng(seed: u64, clip_key: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(clip_key);
    rng
}

/// Reflects an azimuth about the frontal axis, keeping it in [-180, 180).
pub fn negate_azimuth(az: f64) -> f64 {
    let n = 0.0 - az;
    if n >= 180.0 {
        n - 360.0
    } else {
        n
    }
}

/// Audio channel swapping: exchanges left and right and mirrors azimuths.
pub fn acs(clip: StereoClip, events: &EventList) -> (StereoClip, EventList) {
    let mut mirrored = events.clone();
    for e in &mut mirrored.events {
        e.azimuth_deg = negate_azimuth(e.azimuth_deg);
    }
    (clip.swapped(), mirrored)
}

/// One FilterAugment realization: band `i` spans
/// `boundaries[i]..boundaries[i + 1]` and receives `gains_db[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterAugmentDraw {
    pub boundaries: Vec<usize>,
    pub gains_db: Vec<f64>,
}

impl FilterAugmentDraw {
    /// Draw order: band count, interior cut points, then one gain per band.
    pub fn sample<R: Rng>(cfg: &AugmentConfig, bands: usize, rng: &mut R) -> Self {
        let n = rng.gen_range(cfg.filteraug_bands.0..=cfg.filteraug_bands.1);
        let mut cuts: Vec<usize> = index::sample(rng, bands - 1, n - 1)
            .into_iter()
            .map(|c| c + 1)
            .collect();
        cuts.sort_unstable();
        let mut boundaries = Vec::with_capacity(n + 1);
        boundaries.push(0);
        boundaries.extend(cuts);
        boundaries.push(bands);
        let (lo, hi) = cfg.filteraug_gain_db;
        let gains_db = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
        FilterAugmentDraw {
            boundaries,
            gains_db,
        }
    }

    /// Adds the step gain profile to the log-mel channels.
    pub fn apply(&self, stack: &mut FeatureTensor) {
        let bands = stack.bands();
        let mut profile = vec![0.0; bands];
        for (i, &g) in self.gains_db.iter().enumerate() {
            for p in &mut profile[self.boundaries[i]..self.boundaries[i + 1]] {
                *p = g;
            }
        }
        for c in 0..N_LOGMEL {
            for row in stack.channel_mut(c).chunks_exact_mut(bands) {
                for (v, g) in row.iter_mut().zip(&profile) {
                    *v += g;
                }
            }
        }
    }
}

pub fn filter_augment<R: Rng>(
    stack: &FeatureTensor,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<FeatureTensor> {
    cfg.validate_filteraug(stack.bands())?;
    let draw = FilterAugmentDraw::sample(cfg, stack.bands(), rng);
    let mut out = stack.clone();
    draw.apply(&mut out);
    Ok(out)
}

/// Moves every channel `k` bands up the mel axis (down for negative `k`).
/// Vacated bands take the channel minimum for log-mel channels and zero for
/// the spatial channels.
pub fn shift_bands(stack: &FeatureTensor, k: isize) -> FeatureTensor {
    let mut out = stack.clone();
    if k == 0 {
        return out;
    }
    let bands = stack.bands() as isize;
    for c in 0..stack.channels() {
        let src = stack.channel(c);
        let fill = if FeatureTensor::is_logmel(c) {
            src.iter().copied().fold(f64::INFINITY, f64::min)
        } else {
            0.0
        };
        let dst = out.channel_mut(c);
        for (d_row, s_row) in dst
            .chunks_exact_mut(bands as usize)
            .zip(src.chunks_exact(bands as usize))
        {
            for b in 0..bands {
                let from = b - k;
                d_row[b as usize] = if (0..bands).contains(&from) {
                    s_row[from as usize]
                } else {
                    fill
                };
            }
        }
    }
    out
}

pub fn freq_shift<R: Rng>(
    stack: &FeatureTensor,
    cfg: &AugmentConfig,
    rng: &mut R,
) -> Result<FeatureTensor> {
    cfg.validate_freqshift(stack.bands())?;
    let max = cfg.freqshift_max_bins as isize;
    let k = rng.gen_range(-max..=max);
    Ok(shift_bands(stack, k))
}

/// Half-open time-frequency rectangle `[t0, t1) × [k0, k1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MaskRect {
    pub t0: usize,
    pub t1: usize,
    pub k0: usize,
    pub k1: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct MaskSet {
    pub rects: Vec<MaskRect>,
}

impl MaskSet {
    pub fn is_empty(&self) -> bool {
        self.rects.iter().all(|r| r.t0 == r.t1 || r.k0 == r.k1)
    }

    pub fn contains(&self, t: usize, k: usize) -> bool {
        self.rects
            .iter()
            .any(|r| (r.t0..r.t1).contains(&t) && (r.k0..r.k1).contains(&k))
    }

    pub fn within(&self, frames: usize, bands: usize) -> bool {
        self.rects
            .iter()
            .all(|r| r.t0 <= r.t1 && r.t1 <= frames && r.k0 <= r.k1 && r.k1 <= bands)
    }

    /// Draw order: time-mask count, then `(width, start)` per time mask, then
    /// the same for frequency masks.
    pub fn sample<R: Rng>(cfg: &AugmentConfig, frames: usize, bands: usize, rng: &mut R) -> Self {
        fn span<R: Rng>(rng: &mut R, max_width: usize, axis: usize) -> (usize, usize) {
            let w = rng.gen_range(0..=max_width);
            let start = rng.gen_range(0..=axis - w);
            (start, start + w)
        }
        let mut rects = Vec::new();
        match cfg.itfm_mask_shape {
            MaskShape::Stripes => {
                for _ in 0..rng.gen_range(0..=cfg.itfm_max_time_masks) {
                    let (t0, t1) = span(rng, cfg.itfm_max_time_width, frames);
                    rects.push(MaskRect { t0, t1, k0: 0, k1: bands });
                }
                for _ in 0..rng.gen_range(0..=cfg.itfm_max_freq_masks) {
                    let (k0, k1) = span(rng, cfg.itfm_max_freq_width, bands);
                    rects.push(MaskRect { t0: 0, t1: frames, k0, k1 });
                }
            }
            MaskShape::Rectangles => {
                let n = rng.gen_range(0..=cfg.itfm_max_time_masks.max(cfg.itfm_max_freq_masks));
                for _ in 0..n {
                    let (t0, t1) = span(rng, cfg.itfm_max_time_width, frames);
                    let (k0, k1) = span(rng, cfg.itfm_max_freq_width, bands);
                    rects.push(MaskRect { t0, t1, k0, k1 });
                }
            }
        }
        MaskSet { rects }
    }
}

fn channel_mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Masks a stack while keeping the L−R and M−S log-mel differences.
///
/// Inside the mask the reference channel of each pair (L, M) is set to its
/// clip mean `v` and the partner to `v − D`, where `D` is the pre-mask
/// difference. Spatial channels are zeroed inside the mask.
pub fn apply_masks(stack: &FeatureTensor, masks: &MaskSet) -> FeatureTensor {
    let mut out = stack.clone();
    if masks.is_empty() {
        return out;
    }
    let (frames, bands) = (stack.frames(), stack.bands());
    let mut hit = vec![false; frames * bands];
    for r in &masks.rects {
        for t in r.t0..r.t1.min(frames) {
            for k in r.k0..r.k1.min(bands) {
                hit[t * bands + k] = true;
            }
        }
    }
    for (reference, partner) in [(LOGMEL_L, LOGMEL_R), (LOGMEL_M, LOGMEL_S)] {
        let fill = channel_mean(stack.channel(reference));
        let a = stack.channel(reference);
        let b = stack.channel(partner);
        let partner_values: Vec<f64> = a.iter().zip(b).map(|(x, y)| fill - (x - y)).collect();
        for (i, _) in hit.iter().enumerate().filter(|(_, &h)| h) {
            out.channel_mut(reference)[i] = fill;
            out.channel_mut(partner)[i] = partner_values[i];
        }
    }
    let mut spatial = vec![IV];
    if stack.channels() > MSC {
        spatial.push(MSC);
    }
    for c in spatial {
        let ch = out.channel_mut(c);
        for (v, _) in ch.iter_mut().zip(&hit).filter(|(_, &h)| h) {
            *v = 0.0;
        }
    }
    out
}

/// Inter-channel-aware time-frequency masking.
pub fn itfm<R: Rng>(stack: &FeatureTensor, cfg: &AugmentConfig, rng: &mut R) -> Result<FeatureTensor> {
    cfg.validate_itfm(stack.frames(), stack.bands())?;
    let masks = MaskSet::sample(cfg, stack.frames(), stack.bands(), rng);
    Ok(apply_masks(stack, &masks))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AugmentMode {
    /// Inter-channel-aware masking alone.
    Itfm,
    /// FilterAugment followed by frequency shifting.
    Fafs,
}

impl FromStr for AugmentMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "ITFM" => Ok(AugmentMode::Itfm),
            "FAFS" => Ok(AugmentMode::Fafs),
            other => Err(Error::param("augment_mode", format!("unknown mode `{other}`"))),
        }
    }
}

impl std::fmt::Display for AugmentMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            AugmentMode::Itfm => "ITFM",
            AugmentMode::Fafs => "FAFS",
        })
    }
}

/// A configured spectrogram augmentation chain.
#[derive(Debug, Clone)]
pub struct Pipeline {
    mode: AugmentMode,
    cfg: AugmentConfig,
}

pub fn compose_pipeline(mode: AugmentMode, cfg: AugmentConfig) -> Pipeline {
    Pipeline { mode, cfg }
}

impl Pipeline {
    pub fn mode(&self) -> AugmentMode {
        self.mode
    }

    pub fn config(&self) -> &AugmentConfig {
        &self.cfg
    }

    pub fn apply_with_rng<R: Rng>(&self, stack: &FeatureTensor, rng: &mut R) -> Result<FeatureTensor> {
        match self.mode {
            AugmentMode::Itfm => itfm(stack, &self.cfg, rng),
            AugmentMode::Fafs => {
                let filtered = filter_augment(stack, &self.cfg, rng)?;
                freq_shift(&filtered, &self.cfg, rng)
            }
        }
    }

    /// Applies the chain with the generator for `clip_key`.
    pub fn apply(&self, stack: &FeatureTensor, clip_key: u64) -> Result<FeatureTensor> {
        self.apply_with_rng(stack, &mut clip_rng(self.cfg.seed, clip_key))
    }
}
