//! Dataset layout: `audio/<stem>.wav` paired with `metadata/<stem>.csv`.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;

pub const AUDIO_DIR: &str = "audio";
pub const METADATA_DIR: &str = "metadata";
pub const ACS_SUFFIX: &str = "_acs";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClipPair {
    pub stem: String,
    pub wav: PathBuf,
    pub csv: PathBuf,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Scan {
    /// Complete pairs, sorted by stem.
    pub pairs: Vec<ClipPair>,
    /// `(stem, reason)` for stems present on one side only.
    pub unpaired: Vec<(String, String)>,
}

/// Files in `dir` with extension `ext` keyed by stem. A missing directory
/// counts as empty.
pub fn files_by_stem(dir: &Path, ext: &str) -> anyhow::Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    if !dir.is_dir() {
        return Ok(out);
    }
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        let matches = path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| e.eq_ignore_ascii_case(ext));
        if !matches || !path.is_file() {
            continue;
        }
        if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
            out.insert(stem.to_string(), path.clone());
        }
    }
    Ok(out)
}

pub fn scan(root: &Path) -> anyhow::Result<Scan> {
    if !root.is_dir() {
        anyhow::bail!("dataset root {} is not a directory", root.display());
    }
    let mut wavs = files_by_stem(&root.join(AUDIO_DIR), "wav")?;
    let mut csvs = files_by_stem(&root.join(METADATA_DIR), "csv")?;
    let mut scan = Scan::default();
    let stems: Vec<String> = wavs.keys().chain(csvs.keys()).cloned().collect();
    for stem in stems {
        match (wavs.remove(&stem), csvs.remove(&stem)) {
            (Some(wav), Some(csv)) => scan.pairs.push(ClipPair { stem, wav, csv }),
            (Some(_), None) => scan
                .unpaired
                .push((stem, "missing metadata/<stem>.csv".to_string())),
            (None, Some(_)) => scan
                .unpaired
                .push((stem, "missing audio/<stem>.wav".to_string())),
            (None, None) => {}
        }
    }
    scan.pairs.sort_by(|a, b| a.stem.cmp(&b.stem));
    scan.unpaired.sort();
    Ok(scan)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairs_and_orphans() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir_all(dir.path().join(AUDIO_DIR)).unwrap();
        std::fs::create_dir_all(dir.path().join(METADATA_DIR)).unwrap();
        for name in ["audio/b.wav", "audio/a.wav", "audio/c.wav", "metadata/a.csv"] {
            std::fs::write(dir.path().join(name), b"").unwrap();
        }
        std::fs::write(dir.path().join("metadata/b.csv"), b"").unwrap();
        std::fs::write(dir.path().join("metadata/d.csv"), b"").unwrap();
        std::fs::write(dir.path().join("audio/notes.txt"), b"").unwrap();
        let s = scan(dir.path()).unwrap();
        let stems: Vec<_> = s.pairs.iter().map(|p| p.stem.as_str()).collect();
        assert_eq!(stems, ["a", "b"]);
        let orphans: Vec<_> = s.unpaired.iter().map(|p| p.0.as_str()).collect();
        assert_eq!(orphans, ["c", "d"]);
    }

    #[test]
    fn missing_subdirectories_are_empty() {
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(scan(dir.path()).unwrap(), Scan::default());
        assert!(scan(&dir.path().join("nope")).is_err());
    }
}
