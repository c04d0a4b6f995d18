#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const RATE: u32 = 24_000;

/// Runs the tool in-process with an empty environment.
pub fn run(args: &[&str]) -> (i32, String, String) {
    run_with_env(args, &[])
}

pub fn run_with_env(args: &[&str], env: &[(&str, &str)]) -> (i32, String, String) {
    let env: Vec<(String, String)> = env.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect();
    let lookup = move |key: &str| env.iter().find(|(k, _)| k == key).map(|(_, v)| v.clone());
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["stereo-seld"];
    full.extend_from_slice(args);
    let code = stereo_seld_cli::run(full, &lookup, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

pub fn write_wav(path: &Path, left: &[i16], right: &[i16]) {
    let spec = hound::WavSpec {
        channels: 2,
        sample_rate: RATE,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    for (l, r) in left.iter().zip(right) {
        w.write_sample(*l).unwrap();
        w.write_sample(*r).unwrap();
    }
    w.finalize().unwrap();
}

/// A panned noisy tone, `seconds` long.
pub fn synth_clip(rng: &mut ChaCha8Rng, seconds: f64) -> (Vec<i16>, Vec<i16>) {
    let n = (seconds * RATE as f64).round() as usize;
    let f = rng.gen_range(200.0..3000.0);
    let pan: f64 = rng.gen_range(0.2..0.8);
    let mut left = Vec::with_capacity(n);
    let mut right = Vec::with_capacity(n);
    for i in 0..n {
        let t = i as f64 / RATE as f64;
        let s = 0.3 * (2.0 * std::f64::consts::PI * f * t).sin();
        let l = pan * s + 0.05 * rng.gen_range(-1.0..1.0);
        let r = (1.0 - pan) * s + 0.05 * rng.gen_range(-1.0..1.0);
        left.push((l * 32767.0) as i16);
        right.push((r * 32767.0) as i16);
    }
    (left, right)
}

/// Random six-column metadata over 50 label frames.
pub fn synth_metadata(rng: &mut ChaCha8Rng) -> String {
    let mut out = String::new();
    for frame in 0..50 {
        if rng.gen_bool(0.4) {
            continue;
        }
        let class = rng.gen_range(0..13);
        for source in 0..rng.gen_range(1..=2) {
            let az: i32 = rng.gen_range(-180..180);
            let el: i32 = rng.gen_range(-45..=45);
            let d: f64 = rng.gen_range(0.04..7.64);
            out.push_str(&format!("{frame},{class},{source},{az},{el},{d:.3}\n"));
        }
    }
    // Pin the corpus range.
    out.push_str("49,12,7,0,0,0.04\n49,12,8,90,0,7.64\n");
    out
}

pub fn make_dataset(root: &Path, n: usize, seed: u64) -> Vec<String> {
    std::fs::create_dir_all(root.join("audio")).unwrap();
    std::fs::create_dir_all(root.join("metadata")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let stem = format!("fold1_room1_mix{i:03}");
            let (l, r) = synth_clip(&mut rng, 5.0);
            write_wav(&root.join("audio").join(format!("{stem}.wav")), &l, &r);
            std::fs::write(root.join("metadata").join(format!("{stem}.csv")), synth_metadata(&mut rng)).unwrap();
            stem
        })
        .collect()
}

pub fn tempdir() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

pub fn join(a: &Path, b: &str) -> PathBuf {
    a.join(b)
}
