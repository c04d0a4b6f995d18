use std::f64::consts::PI;

use super::wav::StereoClip;
use crate::{Error, Result};

/// Zero crossings of the prototype sinc on each side of the center.
const ZERO_CROSSINGS: usize = 16;
/// Fraction of the lower Nyquist frequency kept in the passband.
const ROLLOFF: f64 = 0.94;
const KAISER_BETA: f64 = 8.6;
/// Above this many phases the taps are evaluated per output sample instead of
/// being tabulated.
const MAX_TABLE_PHASES: u64 = 4096;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Zeroth-order modified Bessel function of the first kind.
fn bessel_i0(x: f64) -> f64 {
    let q = x * x / 4.0;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..64 {
        term *= q / (k * k) as f64;
        sum += term;
        if term < sum * 1e-17 {
            break;
        }
    }
    sum
}

fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

struct Kernel {
    cutoff: f64,
    half_width: f64,
    norm: f64,
}

impl Kernel {
    fn new(up: u64, down: u64) -> Self {
        let cutoff = ROLLOFF * (up as f64 / down as f64).min(1.0);
        Kernel {
            cutoff,
            half_width: ZERO_CROSSINGS as f64 / cutoff,
            norm: bessel_i0(KAISER_BETA),
        }
    }

    /// Impulse response at `tau` input samples from the output instant.
    fn eval(&self, tau: f64) -> f64 {
        let r = tau / self.half_width;
        if r.abs() >= 1.0 {
            return 0.0;
        }
        let window = bessel_i0(KAISER_BETA * (1.0 - r * r).sqrt()) / self.norm;
        self.cutoff * sinc(self.cutoff * tau) * window
    }

    fn reach(&self) -> i64 {
        self.half_width.ceil() as i64
    }
}

/// Band-limited rational-ratio resampling of one channel (Kaiser-windowed
/// sinc, polyphase). Samples outside the input are treated as zero.
pub fn resample(samples: &[f64], from_hz: u32, to_hz: u32) -> Result<Vec<f64>> {
    if from_hz == 0 || to_hz == 0 {
        return Err(Error::param("sample_rate", "rates must be positive"));
    }
    if from_hz == to_hz {
        return Ok(samples.to_vec());
    }
    let g = gcd(from_hz as u64, to_hz as u64);
    let up = to_hz as u64 / g;
    let down = from_hz as u64 / g;
    let n_out = ((samples.len() as u128 * up as u128).div_ceil(down as u128)) as usize;

    let kernel = Kernel::new(up, down);
    let reach = kernel.reach();
    let taps = (2 * reach) as usize;
    // Output n sits at input position i0 + phase/up; tap j covers input i0 + j - reach + 1.
    let table: Option<Vec<f64>> = (up <= MAX_TABLE_PHASES).then(|| {
        let mut t = Vec::with_capacity(up as usize * taps);
        for phase in 0..up {
            let frac = phase as f64 / up as f64;
            for j in 0..taps as i64 {
                t.push(kernel.eval(frac - (j - reach + 1) as f64));
            }
        }
        t
    });

    let len = samples.len() as i64;
    let mut out = Vec::with_capacity(n_out);
    for n in 0..n_out as u64 {
        let pos = n as u128 * down as u128;
        let i0 = (pos / up as u128) as i64;
        let phase = (pos % up as u128) as u64;
        let first = i0 - reach + 1;
        let mut acc = 0.0;
        match &table {
            Some(t) => {
                let row = &t[phase as usize * taps..(phase as usize + 1) * taps];
                for (j, &h) in row.iter().enumerate() {
                    let k = first + j as i64;
                    if (0..len).contains(&k) {
                        acc += samples[k as usize] * h;
                    }
                }
            }
            None => {
                let frac = phase as f64 / up as f64;
                for j in 0..taps as i64 {
                    let k = first + j;
                    if (0..len).contains(&k) {
                        acc += samples[k as usize] * kernel.eval(frac - (j - reach + 1) as f64);
                    }
                }
            }
        }
        out.push(acc);
    }
    Ok(out)
}

/// Resamples both channels to `target_hz`; a clip already at that rate is
/// returned untouched.
pub fn resample_if_needed(clip: StereoClip, target_hz: u32) -> Result<StereoClip> {
    if target_hz == 0 {
        return Err(Error::param("target_hz", "must be positive"));
    }
    if clip.sample_rate() == target_hz {
        return Ok(clip);
    }
    let from = clip.sample_rate();
    let (l, r) = clip.into_channels();
    StereoClip::new(
        resample(&l, from, target_hz)?,
        resample(&r, from, target_hz)?,
        target_hz,
    )
}
