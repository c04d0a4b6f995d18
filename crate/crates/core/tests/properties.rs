//! Cross-module properties checked against independent oracles.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stereo_seld::augment::acs;
use stereo_seld::dsp::{stft, StftParams};
use stereo_seld::features::{
    FeatureExtractor, FeatureKind, FeatureParams, IV, LOGMEL_L, LOGMEL_M, LOGMEL_R, LOGMEL_S, MSC,
};
use stereo_seld::labels::{encode_targets, fit_normalizer, DivideBy, LabelParams};
use stereo_seld::wave_io::{Event, EventList, StereoClip};

fn random_clip(rng: &mut ChaCha8Rng, n: usize) -> StereoClip {
    let f: f64 = rng.gen_range(100.0..4000.0);
    let g: f64 = rng.gen_range(-1.0..1.0);
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for i in 0..n {
        let s = (2.0 * std::f64::consts::PI * f * i as f64 / 24_000.0).sin();
        left.push(0.4 * s + 0.1 * rng.gen_range(-1.0..1.0));
        right.push(0.4 * g * s + 0.1 * rng.gen_range(-1.0..1.0));
    }
    StereoClip::new(left, right, 24_000).unwrap()
}

/// Plain DFT of a reflect-padded, Hann-windowed frame.
fn dft_oracle(x: &[f64], n_fft: usize, hop: usize) -> Vec<Vec<Complex64>> {
    let pad = n_fft / 2;
    let len = x.len() as isize;
    let at = |i: isize| -> f64 {
        let mut j = i;
        loop {
            if j < 0 {
                j = -j;
            } else if j >= len {
                j = 2 * (len - 1) - j;
            } else {
                return x[j as usize];
            }
        }
    };
    let window: Vec<f64> = (0..n_fft)
        .map(|n| 0.5 - 0.5 * (2.0 * std::f64::consts::PI * n as f64 / n_fft as f64).cos())
        .collect();
    let mut frames = x.len() / hop + 1;
    if x.len() % hop == 0 {
        frames -= 1;
    }
    (0..frames)
        .map(|t| {
            let seg: Vec<f64> = (0..n_fft)
                .map(|n| at((t * hop + n) as isize - pad as isize) * window[n])
                .collect();
            (0..=n_fft / 2)
                .map(|k| {
                    seg.iter().enumerate().fold(Complex64::new(0.0, 0.0), |acc, (n, &v)| {
                        let phase = -2.0 * std::f64::consts::PI * ((k * n) % n_fft) as f64 / n_fft as f64;
                        acc + Complex64::from_polar(v, phase)
                    })
                })
                .collect()
        })
        .collect()
}

#[test]
fn stft_matches_direct_dft() {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let params = StftParams::default();
    for _ in 0..3 {
        let x: Vec<f64> = (0..3000).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let spec = stft(&x, &params).unwrap();
        let oracle = dft_oracle(&x, params.fft_size, params.hop);
        assert_eq!(spec.frames(), oracle.len());
        let scale = oracle.iter().flatten().map(|c| c.norm()).fold(0.0, f64::max);
        for (t, row) in oracle.iter().enumerate() {
            for (k, c) in row.iter().enumerate() {
                assert!((spec.get(t, k) - c).norm() / scale < 1e-9, "t={t} k={k}");
            }
        }
    }
}

#[test]
fn acs_commutes_with_feature_extraction() {
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let fx = FeatureExtractor::new(FeatureParams::default()).unwrap();
    for _ in 0..5 {
        let clip = random_clip(&mut rng, 24_000);
        let events = EventList::new(Vec::new(), true);
        let a = fx.extract(&clip, FeatureKind::Msic).unwrap();
        let (swapped, _) = acs(clip, &events);
        let b = fx.extract(&swapped, FeatureKind::Msic).unwrap();
        let check = |ca: usize, cb: usize, sign: f64| {
            let worst = a
                .channel(ca)
                .iter()
                .zip(b.channel(cb))
                .map(|(x, y)| (x - sign * y).abs())
                .fold(0.0, f64::max);
            assert!(worst <= 1e-5, "channels {ca}/{cb}: {worst}");
        };
        check(LOGMEL_L, LOGMEL_R, 1.0);
        check(LOGMEL_R, LOGMEL_L, 1.0);
        check(LOGMEL_M, LOGMEL_M, 1.0);
        check(LOGMEL_S, LOGMEL_S, 1.0);
        check(IV, IV, -1.0);
        check(MSC, MSC, 1.0);
    }
}

#[test]
fn acs_labels_flip_only_the_y_component() {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..50 {
        let events: Vec<Event> = (0..30)
            .map(|i| Event {
                frame: rng.gen_range(0..50),
                class_id: rng.gen_range(0..13),
                source_id: i,
                azimuth_deg: rng.gen_range(-180.0..180.0),
                elevation_deg: rng.gen_range(-90.0..=90.0),
                distance_m: rng.gen_range(0.1..8.0),
            })
            .collect();
        let list = EventList::new(events, true);
        let dn = fit_normalizer(&list.iter().map(|e| e.distance_m).collect::<Vec<_>>(), DivideBy::Max).unwrap();
        let clip = StereoClip::new(vec![0.0; 4], vec![0.0; 4], 24_000).unwrap();
        let (_, mirrored) = acs(clip, &list);
        let (a, _) = encode_targets(&list, &dn, LabelParams::default()).unwrap();
        let (b, _) = encode_targets(&mirrored, &dn, LabelParams::default()).unwrap();
        for (i, (x, y)) in a.data().iter().zip(b.data()).enumerate() {
            let expect = if i % 4 == 1 { -x } else { *x };
            assert!((expect - y).abs() < 1e-12, "component {i}");
        }
    }
}
