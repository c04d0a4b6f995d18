//! Stereo spatial features and the MSI / MSIC stacks.
//!
//! Channel layout of a stack, in order:
//!
//! | index | content                        |
//! |-------|--------------------------------|
//! | 0     | log-mel of the left channel    |
//! | 1     | log-mel of the right channel   |
//! | 2     | log-mel of the mid signal      |
//! | 3     | log-mel of the side signal     |
//! | 4     | mid-side intensity vector      |
//! | 5     | magnitude-squared coherence (MSIC only) |
//!
//! The intensity vector and coherence are projected to mel as raw linear
//! values.

use std::str::FromStr;

use num_complex::Complex64;

use crate::dsp::{self, Matrix, MelFilterbank, MelParams, Spectrogram, StftParams};
use crate::wave_io::StereoClip;
use crate::{Error, Result, Tensor};

pub const LOGMEL_L: usize = 0;
pub const LOGMEL_R: usize = 1;
pub const LOGMEL_M: usize = 2;
pub const LOGMEL_S: usize = 3;
pub const IV: usize = 4;
pub const MSC: usize = 5;
/// Number of leading log-mel channels in every stack.
pub const N_LOGMEL: usize = 4;

/// Regularizer for the intensity-vector and coherence denominators.
pub const DEFAULT_EPS: f64 = 1e-8;
pub const DEFAULT_LAMBDA: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct MidSideClip {
    pub mid: Vec<f64>,
    pub side: Vec<f64>,
}

impl MidSideClip {
    /// Inverse transform: `(mid + side, mid − side)`.
    pub fn to_left_right(&self) -> (Vec<f64>, Vec<f64>) {
        self.mid
            .iter()
            .zip(&self.side)
            .map(|(m, s)| (m + s, m - s))
            .unzip()
    }
}

pub fn mid_side(clip: &StereoClip) -> MidSideClip {
    let (mid, side) = clip
        .left()
        .iter()
        .zip(clip.right())
        .map(|(l, r)| ((l + r) / 2.0, (l - r) / 2.0))
        .unzip();
    MidSideClip { mid, side }
}

/// Power-normalized real mid-side cross-spectrum, frames × bins.
/// Every value lies in [-0.5, 0.5].
pub fn ms_intensity(mid: &Spectrogram, side: &Spectrogram, eps: f64) -> Result<Matrix> {
    mid.check_same_shape(side)?;
    if eps <= 0.0 {
        return Err(Error::param("eps", "must be positive"));
    }
    let data = mid
        .data()
        .iter()
        .zip(side.data())
        .map(|(m, s)| (m * s.conj()).re / (m.norm_sqr() + s.norm_sqr() + eps))
        .collect();
    Matrix::new(mid.frames(), mid.bins(), data)
}

pub fn project_iv_to_mel(iv: &Matrix, fb: &MelFilterbank) -> Result<Matrix> {
    fb.project(iv)
}

pub fn project_msc_to_mel(gamma: &Matrix, fb: &MelFilterbank) -> Result<Matrix> {
    fb.project(gamma)
}

/// Recursively smoothed auto- and cross-spectra of a channel pair.
#[derive(Debug, Clone)]
pub struct CoherenceEstimator {
    lambda: f64,
    eps: f64,
    phi_ll: Vec<f64>,
    phi_rr: Vec<f64>,
    phi_lr: Vec<Complex64>,
    started: bool,
}

impl CoherenceEstimator {
    pub fn new(lambda: f64, eps: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::param("lambda", format!("{lambda} not in [0, 1]")));
        }
        if eps <= 0.0 {
            return Err(Error::param("eps", "must be positive"));
        }
        Ok(CoherenceEstimator {
            lambda,
            eps,
            phi_ll: Vec::new(),
            phi_rr: Vec::new(),
            phi_lr: Vec::new(),
            started: false,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn reset(&mut self) {
        self.started = false;
    }

    pub fn auto_left(&self) -> &[f64] {
        &self.phi_ll
    }

    pub fn auto_right(&self) -> &[f64] {
        &self.phi_rr
    }

    /// Feeds one frame of both channels and writes the coherence per bin into
    /// `out`. The first frame after a reset seeds the estimates with its
    /// instantaneous products.
    pub fn update(&mut self, left: &[Complex64], right: &[Complex64], out: &mut [f64]) {
        debug_assert_eq!(left.len(), right.len());
        debug_assert_eq!(left.len(), out.len());
        if !self.started || self.phi_ll.len() != left.len() {
            self.phi_ll = left.iter().map(|x| x.norm_sqr()).collect();
            self.phi_rr = right.iter().map(|x| x.norm_sqr()).collect();
            self.phi_lr = left.iter().zip(right).map(|(l, r)| l * r.conj()).collect();
            self.started = true;
        } else {
            let (a, b) = (self.lambda, 1.0 - self.lambda);
            for f in 0..left.len() {
                let (l, r) = (left[f], right[f]);
                self.phi_ll[f] = a * self.phi_ll[f] + b * l.norm_sqr();
                self.phi_rr[f] = a * self.phi_rr[f] + b * r.norm_sqr();
                self.phi_lr[f] = self.phi_lr[f] * a + l * r.conj() * b;
            }
        }
        for f in 0..out.len() {
            let g = self.phi_lr[f].norm_sqr() / (self.phi_ll[f] * self.phi_rr[f] + self.eps);
            // Cauchy–Schwarz bounds this by 1; clamp the last-ulp excess.
            out[f] = g.min(1.0);
        }
    }
}

/// Magnitude-squared coherence between two spectrograms, frames × bins.
pub fn msc(left: &Spectrogram, right: &Spectrogram, est: &mut CoherenceEstimator) -> Result<Matrix> {
    left.check_same_shape(right)?;
    est.reset();
    let bins = left.bins();
    let mut data = vec![0.0; left.frames() * bins];
    for (t, out) in data.chunks_exact_mut(bins).enumerate() {
        est.update(left.frame(t), right.frame(t), out);
    }
    Matrix::new(left.frames(), bins, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    /// Log-mels of L, R, M, S plus the intensity vector.
    Msi,
    /// MSI plus magnitude-squared coherence.
    Msic,
}

impl FeatureKind {
    pub fn channels(self) -> usize {
        match self {
            FeatureKind::Msi => 5,
            FeatureKind::Msic => 6,
        }
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "MSI" => Ok(FeatureKind::Msi),
            "MSIC" => Ok(FeatureKind::Msic),
            other => Err(Error::param("feature_set", format!("expected MSI or MSIC, got `{other}`"))),
        }
    }
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FeatureKind::Msi => "MSI",
            FeatureKind::Msic => "MSIC",
        })
    }
}

/// Channels × frames × mel bands, channel-major. Values are held as `f64` in
/// memory and narrowed to `f32` by [`FeatureTensor::to_tensor`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    kind: FeatureKind,
    frames: usize,
    bands: usize,
    data: Vec<f64>,
}

impl FeatureTensor {
    pub fn new(kind: FeatureKind, frames: usize, bands: usize, data: Vec<f64>) -> Result<Self> {
        if kind.channels() * frames * bands != data.len() {
            return Err(Error::Shape(format!(
                "{kind} stack {}x{frames}x{bands} needs {} values, got {}",
                kind.channels(),
                kind.channels() * frames * bands,
                data.len()
            )));
        }
        Ok(FeatureTensor {
            kind,
            frames,
            bands,
            data,
        })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn channels(&self) -> usize {
        self.kind.channels()
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.channels(), self.frames, self.bands]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.frames * self.bands;
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.frames * self.bands;
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn get(&self, c: usize, t: usize, k: usize) -> f64 {
        self.data[(c * self.frames + t) * self.bands + k]
    }

    pub fn set(&mut self, c: usize, t: usize, k: usize, v: f64) {
        self.data[(c * self.frames + t) * self.bands + k] = v;
    }

    pub fn is_logmel(c: usize) -> bool {
        c < N_LOGMEL
    }

    pub fn to_tensor(&self) -> Tensor {
        let data = self.data.iter().map(|&v| v as f32).collect();
        Tensor::new(self.shape().to_vec(), data).expect("shape is consistent")
    }

    pub fn from_tensor(t: Tensor) -> Result<Self> {
        let kind = match t.shape() {
            [5, _, _] => FeatureKind::Msi,
            [6, _, _] => FeatureKind::Msic,
            other => {
                return Err(Error::Shape(format!(
                    "expected a 5- or 6-channel stack, got shape {other:?}"
                )))
            }
        };
        let (frames, bands) = (t.shape()[1], t.shape()[2]);
        FeatureTensor::new(
            kind,
            frames,
            bands,
            t.into_data().into_iter().map(f64::from).collect(),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureParams {
    pub stft: StftParams,
    pub mel: MelParams,
    pub log_floor: f64,
    pub iv_eps: f64,
    pub msc_eps: f64,
    pub msc_lambda: f64,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams {
            stft: StftParams::default(),
            mel: MelParams::default(),
            log_floor: dsp::LOG_FLOOR,
            iv_eps: DEFAULT_EPS,
            msc_eps: DEFAULT_EPS,
            msc_lambda: DEFAULT_LAMBDA,
        }
    }
}

/// Reusable stack builder holding a prebuilt filterbank.
#[derive(Debug, Clone)]
pub struct FeatureExtractor {
    params: FeatureParams,
    filterbank: MelFilterbank,
}

impl FeatureExtractor {
    pub fn new(params: FeatureParams) -> Result<Self> {
        params.stft.validate()?;
        if params.mel.fft_size != params.stft.fft_size {
            return Err(Error::param("fft_size", "mel and STFT sizes differ"));
        }
        if params.log_floor <= 0.0 {
            return Err(Error::param("log_floor", "must be positive"));
        }
        CoherenceEstimator::new(params.msc_lambda, params.msc_eps)?;
        if params.iv_eps <= 0.0 {
            return Err(Error::param("iv_eps", "must be positive"));
        }
        Ok(FeatureExtractor {
            filterbank: MelFilterbank::new(&params.mel)?,
            params,
        })
    }

    pub fn params(&self) -> &FeatureParams {
        &self.params
    }

    pub fn filterbank(&self) -> &MelFilterbank {
        &self.filterbank
    }

    pub fn extract(&self, clip: &StereoClip, kind: FeatureKind) -> Result<FeatureTensor> {
        if clip.sample_rate() != self.params.mel.sample_rate {
            return Err(Error::param(
                "sample_rate",
                format!(
                    "clip is at {} Hz, features expect {} Hz",
                    clip.sample_rate(),
                    self.params.mel.sample_rate
                ),
            ));
        }
        let p = &self.params;
        let fb = &self.filterbank;
        let ms = mid_side(clip);
        let spec_l = dsp::stft(clip.left(), &p.stft)?;
        let spec_r = dsp::stft(clip.right(), &p.stft)?;
        let spec_m = dsp::stft(&ms.mid, &p.stft)?;
        let spec_s = dsp::stft(&ms.side, &p.stft)?;

        let mut planes = vec![
            dsp::log_mel(&spec_l, fb, p.log_floor)?,
            dsp::log_mel(&spec_r, fb, p.log_floor)?,
            dsp::log_mel(&spec_m, fb, p.log_floor)?,
            dsp::log_mel(&spec_s, fb, p.log_floor)?,
            project_iv_to_mel(&ms_intensity(&spec_m, &spec_s, p.iv_eps)?, fb)?,
        ];
        if kind == FeatureKind::Msic {
            let mut est = CoherenceEstimator::new(p.msc_lambda, p.msc_eps)?;
            planes.push(project_msc_to_mel(&msc(&spec_l, &spec_r, &mut est)?, fb)?);
        }

        let frames = spec_l.frames();
        let bands = fb.n_mels();
        let data: Vec<f64> = planes.iter().flat_map(|m| m.data().iter().copied()).collect();
        FeatureTensor::new(kind, frames, bands, data)
    }
}

/// One-shot stack assembly; prefer [`FeatureExtractor`] when processing many
/// clips.
pub fn assemble_stack(
    clip: &StereoClip,
    kind: FeatureKind,
    params: &FeatureParams,
) -> Result<FeatureTensor> {
    FeatureExtractor::new(*params)?.extract(clip, kind)
}
