//! Audio, metadata and tensor file formats.

mod metadata;
mod npy;
mod resample;
mod wav;

pub use metadata::{
    parse_metadata, read_metadata_csv, wrap_azimuth, write_metadata_csv, DistanceUnit, Event,
    EventList, LABEL_FRAME_SECONDS,
};
pub use npy::{decode_npy, encode_npy, read_tensor, write_tensor};
pub use resample::{resample, resample_if_needed};
pub use wav::{read_wav, read_wav_raw, write_wav_raw, RawSamples, RawWav, StereoClip, DEFAULT_SAMPLE_RATE};
