//! Distance normalization and multi-ACCDDOA target encoding.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use crate::wave_io::{EventList, LABEL_FRAME_SECONDS};
use crate::{Error, Result, Tensor};

/// Divisor used in the second normalization step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DivideBy {
    /// Largest signed z-score; the corpus maximum maps to exactly 1.
    #[default]
    Max,
    /// Largest absolute z-score; every corpus member maps into [-1, 1].
    AbsMax,
}

impl FromStr for DivideBy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "max" => Ok(DivideBy::Max),
            "absmax" => Ok(DivideBy::AbsMax),
            other => Err(Error::param("divide_by", format!("expected max or absmax, got `{other}`"))),
        }
    }
}

/// Two-step distance normalization: z-score, then division by the largest
/// z-score of the fitting corpus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceNormalizer {
    pub mean_m: f64,
    pub std_m: f64,
    pub max_z: f64,
}

impl DistanceNormalizer {
    /// Fits mean, population standard deviation and the z-score divisor.
    pub fn fit(distances: &[f64], divide_by: DivideBy) -> Result<Self> {
        if distances.len() < 2 {
            return Err(Error::Normalizer(format!(
                "need at least 2 distances, got {}",
                distances.len()
            )));
        }
        if let Some(bad) = distances.iter().find(|d| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::Normalizer(format!("distance {bad} is not a positive number")));
        }
        let n = distances.len() as f64;
        let mean = distances.iter().sum::<f64>() / n;
        let var = distances.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if !(std > 0.0) {
            return Err(Error::Normalizer("zero variance in distance corpus".into()));
        }
        let z = distances.iter().map(|d| (d - mean) / std);
        let max_z = match divide_by {
            DivideBy::Max => z.fold(f64::NEG_INFINITY, f64::max),
            DivideBy::AbsMax => z.map(f64::abs).fold(0.0, f64::max),
        };
        if !(max_z > 0.0) {
            return Err(Error::Normalizer("zero variance in distance corpus".into()));
        }
        Ok(DistanceNormalizer {
            mean_m: mean,
            std_m: std,
            max_z,
        })
    }

    pub fn normalize(&self, d: f64) -> f64 {
        ((d - self.mean_m) / self.std_m) / self.max_z
    }

    pub fn denormalize(&self, y: f64) -> f64 {
        y * self.max_z * self.std_m + self.mean_m
    }

    pub fn to_sidecar(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mean={}", self.mean_m);
        let _ = writeln!(s, "std={}", self.std_m);
        let _ = writeln!(s, "max_z={}", self.max_z);
        s
    }

    pub fn from_sidecar(text: &str) -> Result<Self> {
        let (mut mean, mut std, mut max_z) = (None, None, None);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Normalizer(format!("malformed sidecar line `{line}`")))?;
            let v: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::Normalizer(format!("non-numeric value in `{line}`")))?;
            match key.trim() {
                "mean" => mean = Some(v),
                "std" => std = Some(v),
                "max_z" => max_z = Some(v),
                other => return Err(Error::Normalizer(format!("unknown sidecar key `{other}`"))),
            }
        }
        let missing = |k: &str| Error::Normalizer(format!("sidecar lacks `{k}`"));
        let dn = DistanceNormalizer {
            mean_m: mean.ok_or_else(|| missing("mean"))?,
            std_m: std.ok_or_else(|| missing("std"))?,
            max_z: max_z.ok_or_else(|| missing("max_z"))?,
        };
        if !(dn.std_m > 0.0 && dn.max_z > 0.0) {
            return Err(Error::Normalizer("std and max_z must be positive".into()));
        }
        Ok(dn)
    }

    pub fn write_sidecar(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_sidecar()).map_err(|e| Error::io(path, e))
    }

    pub fn read_sidecar(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_sidecar(&text)
    }
}

pub fn fit_normalizer(distances: &[f64], divide_by: DivideBy) -> Result<DistanceNormalizer> {
    DistanceNormalizer::fit(distances, divide_by)
}

pub fn normalize(dn: &DistanceNormalizer, d: f64) -> f64 {
    dn.normalize(d)
}

pub fn denormalize(dn: &DistanceNormalizer, y: f64) -> f64 {
    dn.denormalize(y)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LabelParams {
    pub n_frames: usize,
    pub n_tracks: usize,
    pub n_classes: usize,
}

impl Default for LabelParams {
    fn default() -> Self {
        LabelParams {
            n_frames: 50,
            n_tracks: 3,
            n_classes: 13,
        }
    }
}

/// Label frames covering `duration_secs` of audio.
pub fn label_frames_for(duration_secs: f64) -> usize {
    (duration_secs / LABEL_FRAME_SECONDS - 1e-9).ceil().max(0.0) as usize
}

/// Unit direction `(x, y, z)` with x to the front, y to the left, z up.
pub fn direction(azimuth_deg: f64, elevation_deg: f64) -> [f64; 3] {
    let (az, el) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
    [az.cos() * el.cos(), az.sin() * el.cos(), el.sin()]
}

/// Frames × tracks × classes × (x, y, z, distance).
#[derive(Debug, Clone, PartialEq)]
pub struct TargetTensor {
    params: LabelParams,
    data: Vec<f64>,
}

impl TargetTensor {
    pub fn zeros(params: LabelParams) -> Self {
        TargetTensor {
            params,
            data: vec![0.0; params.n_frames * params.n_tracks * params.n_classes * 4],
        }
    }

    pub fn shape(&self) -> [usize; 4] {
        [
            self.params.n_frames,
            self.params.n_tracks,
            self.params.n_classes,
            4,
        ]
    }

    fn offset(&self, frame: usize, track: usize, class: usize) -> usize {
        ((frame * self.params.n_tracks + track) * self.params.n_classes + class) * 4
    }

    pub fn slot(&self, frame: usize, track: usize, class: usize) -> [f64; 4] {
        let o = self.offset(frame, track, class);
        [self.data[o], self.data[o + 1], self.data[o + 2], self.data[o + 3]]
    }

    fn set_slot(&mut self, frame: usize, track: usize, class: usize, v: [f64; 4]) {
        let o = self.offset(frame, track, class);
        self.data[o..o + 4].copy_from_slice(&v);
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn to_tensor(&self) -> Tensor {
        let data = self.data.iter().map(|&v| v as f32).collect();
        Tensor::new(self.shape().to_vec(), data).expect("shape is consistent")
    }
}

/// Events the encoder could not place.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EncodeReport {
    /// Events beyond `n_tracks` in one (frame, class) cell.
    pub dropped_overflow: usize,
    /// Events whose frame index is past the end of the clip.
    pub dropped_out_of_range: usize,
}

/// Encodes events into multi-ACCDDOA targets. Simultaneous events of one
/// class take track slots in ascending `source_id` order.
pub fn encode_targets(
    events: &EventList,
    dn: &DistanceNormalizer,
    params: LabelParams,
) -> Result<(TargetTensor, EncodeReport)> {
    if let Some(e) = events.iter().find(|e| e.class_id >= params.n_classes) {
        return Err(Error::ClassOutOfRange {
            class_id: e.class_id,
            n_classes: params.n_classes,
        });
    }
    let mut report = EncodeReport::default();
    let mut sorted: Vec<_> = events
        .iter()
        .filter(|e| {
            let keep = (e.frame as usize) < params.n_frames;
            if !keep {
                report.dropped_out_of_range += 1;
            }
            keep
        })
        .collect();
    sorted.sort_by_key(|e| (e.frame, e.class_id, e.source_id));

    let mut target = TargetTensor::zeros(params);
    let mut i = 0;
    while i < sorted.len() {
        let (frame, class) = (sorted[i].frame, sorted[i].class_id);
        let mut track = 0;
        while i < sorted.len() && sorted[i].frame == frame && sorted[i].class_id == class {
            let e = sorted[i];
            if track < params.n_tracks {
                let [x, y, z] = direction(e.azimuth_deg, e.elevation_deg);
                target.set_slot(frame as usize, track, class, [x, y, z, dn.normalize(e.distance_m)]);
                track += 1;
            } else {
                report.dropped_overflow += 1;
            }
            i += 1;
        }
    }
    if report.dropped_overflow > 0 {
        log::warn!("{} events exceeded {} tracks", report.dropped_overflow, params.n_tracks);
    }
    Ok((target, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wave_io::Event;
    use proptest::prelude::*;

    fn ev(frame: u32, class_id: usize, source_id: i64, az: f64, el: f64, d: f64) -> Event {
        Event {
            frame,
            class_id,
            source_id,
            azimuth_deg: az,
            elevation_deg: el,
            distance_m: d,
        }
    }

    fn unit_normalizer() -> DistanceNormalizer {
        DistanceNormalizer::fit(&[1.0, 2.0, 3.0], DivideBy::Max).unwrap()
    }

    #[test]
    fn closed_form_fixture() {
        let dn = unit_normalizer();
        assert_eq!(dn.mean_m, 2.0);
        assert!((dn.std_m - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((dn.max_z - 1.224_744_871_391_589).abs() < 1e-12);
        assert_eq!(
            [1.0, 2.0, 3.0].map(|d| dn.normalize(d)),
            [-1.0, 0.0, 1.0]
        );
        assert_eq!(dn.denormalize(0.0), 2.0);
        assert_eq!(dn.denormalize(1.0), 3.0);
    }

    #[test]
    fn fit_errors() {
        assert!(DistanceNormalizer::fit(&[], DivideBy::Max).is_err());
        assert!(DistanceNormalizer::fit(&[2.0], DivideBy::Max).is_err());
        let e = DistanceNormalizer::fit(&[2.0, 2.0, 2.0], DivideBy::Max).unwrap_err();
        assert!(e.to_string().contains("zero variance"));
        assert!(DistanceNormalizer::fit(&[1.0, -2.0], DivideBy::Max).is_err());
    }

    #[test]
    fn wide_range_corpus() {
        let corpus: Vec<f64> = (0..=760).map(|i| 0.04 + i as f64 * 0.01).collect();
        let dn = DistanceNormalizer::fit(&corpus, DivideBy::Max).unwrap();
        assert_eq!(dn.normalize(*corpus.last().unwrap()), 1.0);
        // A symmetric corpus reaches -1 at the other extreme.
        assert!((dn.normalize(0.04) + 1.0).abs() < 1e-12);
    }

    #[test]
    fn skewed_corpus_undershoots_unless_absmax() {
        let corpus = [0.5, 0.6, 0.7, 0.8, 6.0];
        let max = DistanceNormalizer::fit(&corpus, DivideBy::Max).unwrap();
        let abs = DistanceNormalizer::fit(&corpus, DivideBy::AbsMax).unwrap();
        assert_eq!(max.normalize(6.0), 1.0);
        assert!(max.normalize(0.5) > -1.0);
        let skew = [0.5, 5.4, 5.6, 5.8, 6.0];
        let max = DistanceNormalizer::fit(&skew, DivideBy::Max).unwrap();
        let abs2 = DistanceNormalizer::fit(&skew, DivideBy::AbsMax).unwrap();
        assert!(max.normalize(0.5) < -1.0);
        assert!(skew.iter().all(|&d| abs2.normalize(d).abs() <= 1.0));
        assert!(corpus.iter().all(|&d| abs.normalize(d).abs() <= 1.0));
    }

    #[test]
    fn sidecar_roundtrip() {
        let dn = DistanceNormalizer::fit(&[0.3, 1.7, 2.2, 7.64], DivideBy::Max).unwrap();
        let text = dn.to_sidecar();
        assert!(text.starts_with("mean="));
        assert_eq!(text.lines().count(), 3);
        assert_eq!(DistanceNormalizer::from_sidecar(&text).unwrap(), dn);
        assert!(DistanceNormalizer::from_sidecar("mean=1\nstd=2\n").is_err());
        assert!(DistanceNormalizer::from_sidecar("mean=1\nstd=0\nmax_z=1").is_err());
    }

    #[test]
    fn label_frame_count() {
        assert_eq!(label_frames_for(5.0), 50);
        assert_eq!(label_frames_for(120_000.0 / 24_000.0), 50);
        assert_eq!(label_frames_for(4.95), 50);
        assert_eq!(label_frames_for(0.0), 0);
    }

    #[test]
    fn axis_aligned_targets() {
        let dn = unit_normalizer();
        let list = EventList::new(
            vec![ev(0, 0, 0, 0.0, 0.0, 2.0), ev(1, 2, 0, 90.0, 0.0, 3.0)],
            false,
        );
        let (t, report) = encode_targets(&list, &dn, LabelParams::default()).unwrap();
        assert_eq!(t.shape(), [50, 3, 13, 4]);
        assert_eq!(report, EncodeReport::default());
        assert_eq!(t.slot(0, 0, 0), [1.0, 0.0, 0.0, 0.0]);
        let s = t.slot(1, 0, 2);
        assert!(s[0].abs() < 1e-15 && (s[1] - 1.0).abs() < 1e-15 && s[2] == 0.0 && s[3] == 1.0);
        let active = t.data().iter().filter(|v| **v != 0.0).count();
        assert_eq!(active, 1 + 3);
    }

    #[test]
    fn track_assignment_by_source_id() {
        let dn = unit_normalizer();
        let list = EventList::new(
            vec![
                ev(4, 5, 7, 10.0, 0.0, 2.0),
                ev(4, 5, 2, -20.0, 0.0, 2.0),
                ev(4, 6, 9, 0.0, 30.0, 2.0),
            ],
            true,
        );
        let (t, _) = encode_targets(&list, &dn, LabelParams::default()).unwrap();
        let expect0 = direction(-20.0, 0.0);
        let expect1 = direction(10.0, 0.0);
        assert_eq!(&t.slot(4, 0, 5)[..3], &expect0);
        assert_eq!(&t.slot(4, 1, 5)[..3], &expect1);
        assert_eq!(t.slot(4, 2, 5), [0.0; 4]);
        assert_eq!(&t.slot(4, 0, 6)[..3], &direction(0.0, 30.0));
    }

    #[test]
    fn overflow_and_range_are_reported() {
        let dn = unit_normalizer();
        let events = (0..5).map(|s| ev(0, 1, s, 0.0, 0.0, 2.0)).chain([ev(50, 0, 0, 0.0, 0.0, 2.0)]);
        let list = EventList::new(events.collect(), false);
        let (_, report) = encode_targets(&list, &dn, LabelParams::default()).unwrap();
        assert_eq!(report.dropped_overflow, 2);
        assert_eq!(report.dropped_out_of_range, 1);
        let bad = EventList::new(vec![ev(0, 13, 0, 0.0, 0.0, 1.0)], false);
        assert!(matches!(
            encode_targets(&bad, &dn, LabelParams::default()),
            Err(Error::ClassOutOfRange { class_id: 13, .. })
        ));
    }

    proptest! {
        #[test]
        fn normalize_roundtrip_and_monotone(
            corpus in prop::collection::vec(0.04f64..7.64, 2..50),
            probes in prop::collection::vec(0.01f64..20.0, 1..50),
        ) {
            prop_assume!(corpus.iter().any(|&d| d != corpus[0]));
            let dn = DistanceNormalizer::fit(&corpus, DivideBy::Max).unwrap();
            let max = corpus.iter().copied().fold(f64::MIN, f64::max);
            prop_assert_eq!(dn.normalize(max), 1.0);
            for &d in &probes {
                prop_assert!((dn.denormalize(dn.normalize(d)) - d).abs() < 1e-9);
                prop_assert!(dn.normalize(d + 1e-3) > dn.normalize(d));
            }
        }

        #[test]
        fn active_directions_are_unit(az in -180.0f64..180.0, el in -90.0f64..=90.0) {
            let v = direction(az, el);
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            prop_assert!((n - 1.0).abs() < 1e-6);
        }
    }
}
