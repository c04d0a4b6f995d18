//! Short-time Fourier transform and mel-scale projection.

use std::f64::consts::PI;
use std::str::FromStr;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::{Error, Result};

/// Dense row-major real matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows * cols != data.len() {
            return Err(Error::Shape(format!(
                "{rows}x{cols} matrix needs {} values, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StftParams {
    pub fft_size: usize,
    pub hop: usize,
}

impl Default for StftParams {
    fn default() -> Self {
        StftParams {
            fft_size: 1024,
            hop: 300,
        }
    }
}

impl StftParams {
    pub fn validate(&self) -> Result<()> {
        if !self.fft_size.is_power_of_two() || self.fft_size < 2 {
            return Err(Error::param("fft_size", "must be a power of two ≥ 2"));
        }
        if self.hop == 0 || self.hop > self.fft_size {
            return Err(Error::param("hop", "must be in 1..=fft_size"));
        }
        Ok(())
    }

    pub fn n_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }

    /// Frames produced for `len` input samples: `len / hop + 1`, minus one
    /// when `len` is an exact multiple of the hop.
    pub fn n_frames(&self, len: usize) -> usize {
        if len % self.hop == 0 {
            len / self.hop
        } else {
            len / self.hop + 1
        }
    }

    /// Periodic Hann window of length `fft_size`.
    pub fn window(&self) -> Vec<f64> {
        let n = self.fft_size as f64;
        (0..self.fft_size)
            .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n).cos())
            .collect()
    }
}

/// Complex STFT, frames × bins.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    frames: usize,
    bins: usize,
    data: Vec<Complex64>,
}

impl Spectrogram {
    pub fn new(frames: usize, bins: usize, data: Vec<Complex64>) -> Result<Self> {
        if frames * bins != data.len() {
            return Err(Error::Shape(format!(
                "{frames}x{bins} spectrogram needs {} values, got {}",
                frames * bins,
                data.len()
            )));
        }
        Ok(Spectrogram { frames, bins, data })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn get(&self, t: usize, f: usize) -> Complex64 {
        self.data[t * self.bins + f]
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        &self.data[t * self.bins..(t + 1) * self.bins]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn power(&self) -> Matrix {
        Matrix {
            rows: self.frames,
            cols: self.bins,
            data: self.data.iter().map(|z| z.norm_sqr()).collect(),
        }
    }

    pub(crate) fn check_same_shape(&self, other: &Spectrogram) -> Result<()> {
        if self.frames != other.frames || self.bins != other.bins {
            return Err(Error::Shape(format!(
                "spectrograms differ: {}x{} vs {}x{}",
                self.frames, self.bins, other.frames, other.bins
            )));
        }
        Ok(())
    }
}

/// Index into `0..len` of position `j` of an infinitely reflected signal
/// (edge samples not repeated).
fn reflect_index(j: isize, len: usize) -> usize {
    if len == 1 {
        return 0;
    }
    let period = 2 * (len as isize - 1);
    let m = j.rem_euclid(period);
    if m >= len as isize {
        (period - m) as usize
    } else {
        m as usize
    }
}

/// Centered STFT with reflect padding of `fft_size / 2` on both ends.
/// Frame `t` is centered on input sample `t * hop`.
pub fn stft(signal: &[f64], params: &StftParams) -> Result<Spectrogram> {
    params.validate()?;
    if signal.is_empty() {
        return Err(Error::Empty("stft input"));
    }
    let n_fft = params.fft_size;
    let n_bins = params.n_bins();
    let n_frames = params.n_frames(signal.len());
    let half = (n_fft / 2) as isize;
    let window = params.window();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n_fft);

    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut data = Vec::with_capacity(n_frames * n_bins);
    for t in 0..n_frames {
        let start = (t * params.hop) as isize - half;
        for (i, slot) in buf.iter_mut().enumerate() {
            let x = signal[reflect_index(start + i as isize, signal.len())];
            *slot = Complex64::new(x * window[i], 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        data.extend_from_slice(&buf[..n_bins]);
    }
    Ok(Spectrogram {
        frames: n_frames,
        bins: n_bins,
        data,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MelScale {
    /// Linear below 1 kHz, logarithmic above.
    #[default]
    Slaney,
    Htk,
}

impl MelScale {
    pub fn hz_to_mel(self, hz: f64) -> f64 {
        match self {
            MelScale::Htk => 2595.0 * (1.0 + hz / 700.0).log10(),
            MelScale::Slaney => {
                let f_sp = 200.0 / 3.0;
                let min_log_hz = 1000.0;
                let min_log_mel = min_log_hz / f_sp;
                let logstep = 6.4f64.ln() / 27.0;
                if hz >= min_log_hz {
                    min_log_mel + (hz / min_log_hz).ln() / logstep
                } else {
                    hz / f_sp
                }
            }
        }
    }

    pub fn mel_to_hz(self, mel: f64) -> f64 {
        match self {
            MelScale::Htk => 700.0 * (10f64.powf(mel / 2595.0) - 1.0),
            MelScale::Slaney => {
                let f_sp = 200.0 / 3.0;
                let min_log_hz = 1000.0;
                let min_log_mel = min_log_hz / f_sp;
                let logstep = 6.4f64.ln() / 27.0;
                if mel >= min_log_mel {
                    min_log_hz * (logstep * (mel - min_log_mel)).exp()
                } else {
                    f_sp * mel
                }
            }
        }
    }
}

impl FromStr for MelScale {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "slaney" => Ok(MelScale::Slaney),
            "htk" => Ok(MelScale::Htk),
            other => Err(Error::param("mel_scale", format!("unknown scale `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MelNorm {
    /// Each triangle divided by its bandwidth in Hz (times two).
    #[default]
    Area,
    /// Unit-peak triangles.
    None,
}

impl FromStr for MelNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "area" | "slaney" => Ok(MelNorm::Area),
            "none" => Ok(MelNorm::None),
            other => Err(Error::param("mel_norm", format!("unknown norm `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MelParams {
    pub sample_rate: u32,
    pub fft_size: usize,
    pub n_mels: usize,
    pub f_min: f64,
    /// `None` means Nyquist.
    pub f_max: Option<f64>,
    pub scale: MelScale,
    pub norm: MelNorm,
}

impl Default for MelParams {
    fn default() -> Self {
        MelParams {
            sample_rate: 24_000,
            fft_size: 1024,
            n_mels: 96,
            f_min: 0.0,
            f_max: None,
            scale: MelScale::Slaney,
            norm: MelNorm::Area,
        }
    }
}

/// Triangular mel filterbank, `n_mels × n_bins`, immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MelFilterbank {
    n_mels: usize,
    n_bins: usize,
    weights: Vec<f64>,
    /// Nonzero column span of each row.
    support: Vec<(usize, usize)>,
    centers_hz: Vec<f64>,
}

impl MelFilterbank {
    pub fn new(params: &MelParams) -> Result<Self> {
        let sr = params.sample_rate as f64;
        let nyquist = sr / 2.0;
        let f_max = params.f_max.unwrap_or(nyquist);
        if params.n_mels == 0 {
            return Err(Error::param("n_mels", "must be positive"));
        }
        if params.fft_size < 2 {
            return Err(Error::param("fft_size", "must be at least 2"));
        }
        if !(params.f_min >= 0.0 && params.f_min < f_max && f_max <= nyquist) {
            return Err(Error::param(
                "f_max",
                format!("need 0 ≤ f_min < f_max ≤ {nyquist}, got {} and {f_max}", params.f_min),
            ));
        }

        let n_bins = params.fft_size / 2 + 1;
        let scale = params.scale;
        let mel_lo = scale.hz_to_mel(params.f_min);
        let mel_hi = scale.hz_to_mel(f_max);
        let n_points = params.n_mels + 2;
        let hz_points: Vec<f64> = (0..n_points)
            .map(|i| {
                let mel = mel_lo + (mel_hi - mel_lo) * i as f64 / (n_points - 1) as f64;
                scale.mel_to_hz(mel)
            })
            .collect();
        let bin_hz: Vec<f64> = (0..n_bins)
            .map(|k| k as f64 * sr / params.fft_size as f64)
            .collect();

        let mut weights = vec![0.0; params.n_mels * n_bins];
        let mut support = Vec::with_capacity(params.n_mels);
        for m in 0..params.n_mels {
            let (lo, center, hi) = (hz_points[m], hz_points[m + 1], hz_points[m + 2]);
            let enorm = match params.norm {
                MelNorm::Area => 2.0 / (hi - lo),
                MelNorm::None => 1.0,
            };
            let row = &mut weights[m * n_bins..(m + 1) * n_bins];
            for (w, &f) in row.iter_mut().zip(&bin_hz) {
                let rising = (f - lo) / (center - lo);
                let falling = (hi - f) / (hi - center);
                *w = rising.min(falling).max(0.0) * enorm;
            }
            let first = row.iter().position(|&w| w > 0.0);
            let last = row.iter().rposition(|&w| w > 0.0);
            match (first, last) {
                (Some(a), Some(b)) => support.push((a, b + 1)),
                _ => {
                    return Err(Error::param(
                        "n_mels",
                        format!(
                            "mel band {m} ({lo:.1}–{hi:.1} Hz) falls between FFT bins; \
                             use fewer bands or a larger FFT"
                        ),
                    ))
                }
            }
        }
        Ok(MelFilterbank {
            n_mels: params.n_mels,
            n_bins,
            weights,
            support,
            centers_hz: hz_points[1..=params.n_mels].to_vec(),
        })
    }

    pub fn n_mels(&self) -> usize {
        self.n_mels
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn weight(&self, band: usize, bin: usize) -> f64 {
        self.weights[band * self.n_bins + bin]
    }

    pub fn row(&self, band: usize) -> &[f64] {
        &self.weights[band * self.n_bins..(band + 1) * self.n_bins]
    }

    pub fn row_sum(&self, band: usize) -> f64 {
        self.row(band).iter().sum()
    }

    pub fn center_frequencies(&self) -> &[f64] {
        &self.centers_hz
    }

    /// `input (T × n_bins) · weightsᵀ → T × n_mels`.
    pub fn project(&self, input: &Matrix) -> Result<Matrix> {
        if input.cols() != self.n_bins {
            return Err(Error::Shape(format!(
                "input has {} bins, filterbank expects {}",
                input.cols(),
                self.n_bins
            )));
        }
        let mut out = Vec::with_capacity(input.rows() * self.n_mels);
        for t in 0..input.rows() {
            let row = input.row(t);
            for (m, &(a, b)) in self.support.iter().enumerate() {
                let w = &self.row(m)[a..b];
                out.push(w.iter().zip(&row[a..b]).map(|(w, x)| w * x).sum());
            }
        }
        Matrix::new(input.rows(), self.n_mels, out)
    }
}

pub fn build_mel_filterbank(params: &MelParams) -> Result<MelFilterbank> {
    MelFilterbank::new(params)
}

/// Power floor added before the logarithm.
pub const LOG_FLOOR: f64 = 1e-10;

/// `10·log10(|X|² · Wᵀ + floor)`, frames × mel bands.
pub fn log_mel(spec: &Spectrogram, fb: &MelFilterbank, floor: f64) -> Result<Matrix> {
    let mel = fb.project(&spec.power())?;
    Ok(mel.map(|p| 10.0 * (p + floor).log10()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn five_second_clip_has_400_frames() {
        let p = StftParams::default();
        let spec = stft(&vec![0.0; 120_000], &p).unwrap();
        assert_eq!((spec.frames(), spec.bins()), (400, 513));
        assert!(spec.data().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn frame_count_rule() {
        let p = StftParams::default();
        assert_eq!(p.n_frames(1), 1);
        assert_eq!(p.n_frames(299), 1);
        assert_eq!(p.n_frames(300), 1);
        assert_eq!(p.n_frames(301), 2);
        assert_eq!(p.n_frames(120_001), 401);
    }

    #[test]
    fn short_and_empty_inputs() {
        let p = StftParams::default();
        assert!(matches!(stft(&[], &p), Err(Error::Empty(_))));
        let s = stft(&[1.0], &p).unwrap();
        assert_eq!(s.frames(), 1);
        // A single sample reflected everywhere is a constant frame: all energy at DC.
        let dc = s.get(0, 0).norm();
        assert!((dc - 512.0).abs() < 1e-9, "{dc}");
        assert!(s.frame(0)[2..].iter().all(|z| z.norm() < 1e-9));
        let s = stft(&[0.1; 10], &p).unwrap();
        assert_eq!(s.frames(), 1);
    }

    #[test]
    fn reflect_indexing() {
        let idx: Vec<usize> = (-4..8).map(|j| reflect_index(j, 4)).collect();
        assert_eq!(idx, vec![2, 3, 2, 1, 0, 1, 2, 3, 2, 1, 0, 1]);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(StftParams { fft_size: 1000, hop: 300 }.validate().is_err());
        assert!(StftParams { fft_size: 1024, hop: 2000 }.validate().is_err());
        assert!(StftParams { fft_size: 1024, hop: 0 }.validate().is_err());
    }

    #[test]
    fn stft_is_linear() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..3000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..3000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (a, b) = (0.7, -2.5);
        let z: Vec<f64> = x.iter().zip(&y).map(|(x, y)| a * x + b * y).collect();
        let p = StftParams::default();
        let (sx, sy, sz) = (stft(&x, &p).unwrap(), stft(&y, &p).unwrap(), stft(&z, &p).unwrap());
        let scale = sz.data().iter().fold(0.0f64, |m, v| m.max(v.norm()));
        for i in 0..sz.data().len() {
            let expect = sx.data()[i] * a + sy.data()[i] * b;
            assert!((sz.data()[i] - expect).norm() <= 1e-6 * scale);
        }
    }

    #[test]
    fn filterbank_shape_and_rows() {
        let fb = MelFilterbank::new(&MelParams::default()).unwrap();
        assert_eq!((fb.n_mels(), fb.n_bins()), (96, 513));
        for m in 0..96 {
            assert!(fb.row_sum(m) > 0.0);
            assert!(fb.row(m).iter().all(|&w| w >= 0.0 && w.is_finite()));
        }
        for k in 0..513 {
            let col: f64 = (0..96).map(|m| fb.weight(m, k)).sum();
            assert!(col.is_finite());
        }
    }

    #[test]
    fn filterbank_centers_follow_slaney_formula() {
        let fb = MelFilterbank::new(&MelParams::default()).unwrap();
        // Slaney mel of 12 kHz: 15 + 27·ln(12)/ln(6.4).
        let top = 15.0 + 27.0 * 12.0f64.ln() / 6.4f64.ln();
        for (i, &c) in fb.center_frequencies().iter().enumerate() {
            let mel = top * (i + 1) as f64 / 97.0;
            let hz = if mel < 15.0 {
                mel * 200.0 / 3.0
            } else {
                1000.0 * 6.4f64.powf((mel - 15.0) / 27.0)
            };
            assert!((c - hz).abs() < 1e-6 * hz.max(1.0), "band {i}: {c} vs {hz}");
        }
        assert!(fb.center_frequencies().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn mel_scales_invert() {
        for scale in [MelScale::Slaney, MelScale::Htk] {
            for hz in [0.0, 100.0, 999.0, 1000.0, 4321.0, 12_000.0] {
                let back = scale.mel_to_hz(scale.hz_to_mel(hz));
                assert!((back - hz).abs() < 1e-8, "{scale:?} {hz} {back}");
            }
        }
        assert!((MelScale::Slaney.hz_to_mel(60.0) - 0.9).abs() < 1e-12);
    }

    #[test]
    fn filterbank_rejects_bad_ranges() {
        let bad = |f: fn(&mut MelParams)| {
            let mut p = MelParams::default();
            f(&mut p);
            MelFilterbank::new(&p).is_err()
        };
        assert!(bad(|p| p.n_mels = 0));
        assert!(bad(|p| p.f_max = Some(13_000.0)));
        assert!(bad(|p| p.f_min = 12_000.0));
        assert!(bad(|p| p.n_mels = 400));
    }

    #[test]
    fn log_mel_floor_and_gain() {
        let p = StftParams::default();
        let fb = MelFilterbank::new(&MelParams::default()).unwrap();
        let silent = log_mel(&stft(&vec![0.0; 6000], &p).unwrap(), &fb, LOG_FLOOR).unwrap();
        assert!(silent.data().iter().all(|&v| (v + 100.0).abs() < 1e-9));

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x: Vec<f64> = (0..6000).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let x10: Vec<f64> = x.iter().map(|v| v * 10.0).collect();
        let a = log_mel(&stft(&x, &p).unwrap(), &fb, LOG_FLOOR).unwrap();
        let b = log_mel(&stft(&x10, &p).unwrap(), &fb, LOG_FLOOR).unwrap();
        for (u, v) in a.data().iter().zip(b.data()) {
            assert!((v - u - 20.0).abs() < 1e-6, "{u} {v}");
        }
    }

    #[test]
    fn white_noise_is_flat_after_projection() {
        let p = StftParams::default();
        let fb = MelFilterbank::new(&MelParams::default()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let x: Vec<f64> = (0..120_000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let spec = stft(&x, &p).unwrap();
        let mel = fb.project(&spec.power()).unwrap();
        let means: Vec<f64> = (0..96)
            .map(|k| (0..mel.rows()).map(|t| mel.get(t, k)).sum::<f64>() / mel.rows() as f64)
            .collect();
        let overall = means.iter().sum::<f64>() / 96.0;
        for (k, m) in means.iter().enumerate() {
            let db = 10.0 * (m / overall).log10();
            assert!(db.abs() < 3.0, "band {k} off by {db} dB");
        }
    }
}
