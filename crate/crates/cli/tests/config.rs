mod common;

use std::process::Command;

use common::*;

fn config_value(stdout: &str, key: &str) -> String {
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing"))
        .to_string()
}

#[test]
fn print_config_shows_defaults() {
    let (code, stdout, _) = run(&["extract", "--print-config", "--workers", "2"]);
    assert_eq!(code, 0);
    for (k, v) in [
        ("feature_set", "MSIC"),
        ("augment_mode", "none"),
        ("n_fft", "1024"),
        ("hop", "300"),
        ("n_mels", "96"),
        ("msc_lambda", "0.8"),
        ("divide_by", "max"),
        ("average", "macro"),
        ("workers", "2"),
    ] {
        assert_eq!(config_value(&stdout, k), v, "{k}");
    }
}

#[test]
fn precedence_is_file_env_flag_set() {
    let dir = tempdir();
    let file = dir.path().join("run.cfg");
    std::fs::write(&file, "# run\nseed=1\nhop=240\nfeature_set=MSI\nworkers=3\n").unwrap();
    let cfg = path_str(&file);
    let (_, stdout, _) = run(&["extract", "--config", cfg, "--print-config"]);
    assert_eq!(config_value(&stdout, "seed"), "1");
    assert_eq!(config_value(&stdout, "hop"), "240");

    let env = [("STEREO_SELD_SEED", "2"), ("STEREO_SELD_FEATURE_SET", "MSIC")];
    let (_, stdout, _) = run_with_env(&["extract", "--config", cfg, "--print-config"], &env);
    assert_eq!(config_value(&stdout, "seed"), "2");
    assert_eq!(config_value(&stdout, "feature_set"), "MSIC");
    assert_eq!(config_value(&stdout, "workers"), "3");

    let (_, stdout, _) = run_with_env(&["extract", "--config", cfg, "--seed", "3", "--print-config"], &env);
    assert_eq!(config_value(&stdout, "seed"), "3");

    let (_, stdout, _) = run_with_env(
        &["extract", "--config", cfg, "--seed", "3", "--set", "seed=4", "--print-config"],
        &env,
    );
    assert_eq!(config_value(&stdout, "seed"), "4");
}

#[test]
fn invalid_configuration_exits_with_usage_code() {
    let dir = tempdir();
    make_dataset(dir.path(), 1, 51);
    let out = dir.path().join("out");
    let base = ["extract", "--dataset-root", path_str(dir.path()), "--output-root", path_str(&out)];
    for extra in [
        &["--feature-set", "FOA"][..],
        &["--augment-mode", "mixup"],
        &["--set", "bogus=1"],
        &["--set", "seed"],
        &["--workers", "0"],
        &["--set", "n_mels=0"],
    ] {
        let mut args = base.to_vec();
        args.extend_from_slice(extra);
        let (code, _, stderr) = run(&args);
        assert_eq!(code, 2, "{extra:?}: {stderr}");
        assert!(!out.exists(), "{extra:?} started work");
    }
    let (code, _, _) = run_with_env(&base, &[("STEREO_SELD_FEATURE_SET", "stereo")]);
    assert_eq!(code, 2);
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_stereo-seld");
    let status = |args: &[&str]| {
        Command::new(exe)
            .args(args)
            .env_remove("STEREO_SELD_FEATURE_SET")
            .output()
            .unwrap()
    };
    assert_eq!(status(&["--help"]).status.code(), Some(0));
    assert_eq!(status(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(status(&["extract", "--feature-set", "FOA"]).status.code(), Some(2));
    let dir = tempdir();
    let out = status(&["extract", "--dataset-root", path_str(dir.path()), "--output-root", path_str(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("0 clips"));
    let out = Command::new(exe)
        .args(["extract", "--print-config"])
        .env("STEREO_SELD_HOP", "150")
        .output()
        .unwrap();
    assert!(String::from_utf8_lossy(&out.stdout).contains("\nhop=150\n"));
}
