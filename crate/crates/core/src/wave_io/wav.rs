use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::{Error, Result};

/// Pipeline sample rate in Hz.
pub const DEFAULT_SAMPLE_RATE: u32 = 24_000;

/// Two equally long channels of real-valued samples.
#[derive(Debug, Clone, PartialEq)]
pub struct StereoClip {
    left: Vec<f64>,
    right: Vec<f64>,
    sample_rate: u32,
}

impl StereoClip {
    pub fn new(left: Vec<f64>, right: Vec<f64>, sample_rate: u32) -> Result<Self> {
        if left.len() != right.len() {
            return Err(Error::Shape(format!(
                "left has {} samples, right has {}",
                left.len(),
                right.len()
            )));
        }
        if sample_rate == 0 {
            return Err(Error::param("sample_rate", "must be positive"));
        }
        Ok(StereoClip {
            left,
            right,
            sample_rate,
        })
    }

    pub fn left(&self) -> &[f64] {
        &self.left
    }

    pub fn right(&self) -> &[f64] {
        &self.right
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.left.len()
    }

    pub fn is_empty(&self) -> bool {
        self.left.is_empty()
    }

    pub fn duration_secs(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    /// Returns the same audio with left and right exchanged.
    pub fn swapped(self) -> Self {
        StereoClip {
            left: self.right,
            right: self.left,
            sample_rate: self.sample_rate,
        }
    }

    pub fn into_channels(self) -> (Vec<f64>, Vec<f64>) {
        (self.left, self.right)
    }
}

/// Undecoded interleaved samples, kept in the file's own encoding so that a
/// rewrite is bit-exact.
#[derive(Debug, Clone, PartialEq)]
pub struct RawWav {
    pub spec: WavSpec,
    pub samples: RawSamples,
}

#[derive(Debug, Clone, PartialEq)]
pub enum RawSamples {
    Int(Vec<i32>),
    Float(Vec<f32>),
}

impl RawWav {
    /// Exchanges channel 0 and channel 1 of every frame.
    pub fn swap_channels(&mut self) {
        fn swap<T>(v: &mut [T]) {
            for frame in v.chunks_exact_mut(2) {
                frame.swap(0, 1);
            }
        }
        match &mut self.samples {
            RawSamples::Int(v) => swap(v),
            RawSamples::Float(v) => swap(v),
        }
    }

    pub fn to_clip(&self) -> StereoClip {
        let (left, right): (Vec<f64>, Vec<f64>) = match &self.samples {
            RawSamples::Int(v) => {
                let scale = (1u64 << (self.spec.bits_per_sample - 1)) as f64;
                v.chunks_exact(2)
                    .map(|f| (f[0] as f64 / scale, f[1] as f64 / scale))
                    .unzip()
            }
            RawSamples::Float(v) => v
                .chunks_exact(2)
                .map(|f| (f[0] as f64, f[1] as f64))
                .unzip(),
        };
        StereoClip {
            left,
            right,
            sample_rate: self.spec.sample_rate,
        }
    }
}

fn map_hound(path: &Path, err: hound::Error) -> Error {
    match err {
        hound::Error::IoError(e) => Error::io(path, e),
        hound::Error::FormatError(msg) => Error::WavHeader {
            path: path.to_path_buf(),
            message: msg.to_string(),
        },
        hound::Error::Unsupported => Error::UnsupportedEncoding {
            path: path.to_path_buf(),
            format: "unrecognized format tag",
            bits: 0,
        },
        other => Error::WavHeader {
            path: path.to_path_buf(),
            message: other.to_string(),
        },
    }
}

/// Reads a two-channel WAV file without converting its samples.
///
/// Accepted encodings are 16- and 24-bit integer PCM and 32-bit IEEE float.
pub fn read_wav_raw(path: impl AsRef<Path>) -> Result<RawWav> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path).map_err(|e| map_hound(path, e))?;
    let spec = reader.spec();
    if spec.channels != 2 {
        return Err(Error::ChannelCount {
            path: path.to_path_buf(),
            channels: spec.channels,
        });
    }
    let samples = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16 | 24) => RawSamples::Int(
            reader
                .samples::<i32>()
                .collect::<Result<_, _>>()
                .map_err(|e| map_hound(path, e))?,
        ),
        (SampleFormat::Float, 32) => RawSamples::Float(
            reader
                .samples::<f32>()
                .collect::<Result<_, _>>()
                .map_err(|e| map_hound(path, e))?,
        ),
        (format, bits) => {
            return Err(Error::UnsupportedEncoding {
                path: path.to_path_buf(),
                format: match format {
                    SampleFormat::Int => "integer PCM",
                    SampleFormat::Float => "IEEE float",
                },
                bits,
            })
        }
    };
    Ok(RawWav { spec, samples })
}

/// Reads a stereo WAV file into amplitudes; integer codes are divided by
/// `2^(bits-1)`, channel 0 becomes the left channel.
pub fn read_wav(path: impl AsRef<Path>) -> Result<StereoClip> {
    Ok(read_wav_raw(path)?.to_clip())
}

pub fn write_wav_raw(path: impl AsRef<Path>, wav: &RawWav) -> Result<()> {
    let path = path.as_ref();
    let mut writer = WavWriter::create(path, wav.spec).map_err(|e| map_hound(path, e))?;
    match &wav.samples {
        RawSamples::Int(v) => {
            for &s in v {
                writer.write_sample(s).map_err(|e| map_hound(path, e))?;
            }
        }
        RawSamples::Float(v) => {
            for &s in v {
                writer.write_sample(s).map_err(|e| map_hound(path, e))?;
            }
        }
    }
    writer.finalize().map_err(|e| map_hound(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_int(path: &Path, channels: u16, bits: u16, frames: &[i32]) {
        let spec = WavSpec {
            channels,
            sample_rate: 24_000,
            bits_per_sample: bits,
            sample_format: SampleFormat::Int,
        };
        let mut w = WavWriter::create(path, spec).unwrap();
        for &s in frames {
            w.write_sample(s).unwrap();
        }
        w.finalize().unwrap();
    }

    #[test]
    fn decodes_16_bit_scaling() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        write_int(&p, 2, 16, &[16384, -16384, 32767, -32768]);
        let clip = read_wav(&p).unwrap();
        assert_eq!(clip.left()[0], 0.5);
        assert_eq!(clip.right()[0], -0.5);
        assert_eq!(clip.right()[1], -1.0);
        assert!(clip.left()[1] < 1.0);
    }

    #[test]
    fn decodes_24_bit_with_sign() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.wav");
        write_int(&p, 2, 24, &[-(1 << 22), 1 << 22, -(1 << 23), 0]);
        let clip = read_wav(&p).unwrap();
        assert_eq!(clip.left(), &[-0.5, -1.0]);
        assert_eq!(clip.right(), &[0.5, 0.0]);
    }

    #[test]
    fn rejects_mono() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("mono.wav");
        write_int(&p, 1, 16, &[1, 2, 3]);
        let err = read_wav(&p).unwrap_err();
        assert!(matches!(err, Error::ChannelCount { channels: 1, .. }));
        assert!(err.to_string().contains("channel count ≠ 2"));
    }

    #[test]
    fn rejects_8_bit() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u8.wav");
        write_int(&p, 2, 8, &[1, 2]);
        let err = read_wav(&p).unwrap_err();
        assert!(matches!(err, Error::UnsupportedEncoding { bits: 8, .. }));
    }

    #[test]
    fn rejects_garbage_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("junk.wav");
        std::fs::write(&p, b"RIFX\0\0\0\0not a wave file").unwrap();
        assert!(matches!(read_wav(&p).unwrap_err(), Error::WavHeader { .. }));
    }

    #[test]
    fn float_roundtrip_and_swap() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.wav");
        let spec = WavSpec {
            channels: 2,
            sample_rate: 48_000,
            bits_per_sample: 32,
            sample_format: SampleFormat::Float,
        };
        let raw = RawWav {
            spec,
            samples: RawSamples::Float(vec![0.25, -0.75, 0.1, 0.2]),
        };
        write_wav_raw(&p, &raw).unwrap();
        let mut back = read_wav_raw(&p).unwrap();
        assert_eq!(back, raw);
        back.swap_channels();
        let clip = back.to_clip();
        assert_eq!(clip.left(), &[-0.75, 0.2f32 as f64]);
        assert_eq!(clip.sample_rate(), 48_000);
    }
}
