use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{load_sequence, FeatureSequence};
use crate::error::{Error, Result};

/// One JSON-lines record: `{"path": "...", "label": "...", "split": 1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub label: String,
    pub split: u32,
}

/// A labelled corpus. Relative entry paths resolve against `root`, the
/// directory holding the manifest file.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn new(entries: Vec<ManifestEntry>, root: impl Into<PathBuf>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Manifest("manifest has no entries".into()));
        }
        Ok(Self { entries, root: root.into() })
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let reader = BufReader::new(File::open(path)?);
        let mut entries = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let entry: ManifestEntry =
                serde_json::from_str(&line).map_err(|e| Error::Manifest(format!("line {}: {e}", lineno + 1)))?;
            entries.push(entry);
        }
        let root = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::new(entries, root)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        for e in &self.entries {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn resolve(&self, entry: &ManifestEntry) -> PathBuf {
        let p = Path::new(&entry.path);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn load(&self, entry: &ManifestEntry) -> Result<FeatureSequence<f64>> {
        load_sequence(self.resolve(entry)).map_err(|e| match e {
            Error::Io(io) => Error::Manifest(format!("{}: {io}", entry.path)),
            other => other,
        })
    }

    /// Distinct labels in sorted order; index in this list is the class id.
    pub fn classes(&self) -> Vec<String> {
        let mut labels: Vec<String> = self.entries.iter().map(|e| e.label.clone()).collect();
        labels.sort();
        labels.dedup();
        labels
    }

    /// Distinct split ids in ascending order.
    pub fn splits(&self) -> Vec<u32> {
        let mut s: Vec<u32> = self.entries.iter().map(|e| e.split).collect();
        s.sort_unstable();
        s.dedup();
        s
    }

    /// Checks that every referenced file exists.
    pub fn verify(&self) -> Result<()> {
        for e in &self.entries {
            let p = self.resolve(e);
            if !p.is_file() {
                return Err(Error::Manifest(format!("missing sequence file {}", p.display())));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = DatasetManifest::new(
            vec![
                ManifestEntry { path: "a.seqf".into(), label: "forward".into(), split: 1 },
                ManifestEntry { path: "b.seqf".into(), label: "reverse".into(), split: 2 },
            ],
            dir.path(),
        )
        .unwrap();
        let path = dir.path().join("manifest.jsonl");
        m.write(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().next().unwrap(), r#"{"path":"a.seqf","label":"forward","split":1}"#);
        let back = DatasetManifest::read(&path).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.classes(), vec!["forward", "reverse"]);
        assert_eq!(back.splits(), vec![1, 2]);
        assert!(back.verify().is_err());
    }

    #[test]
    fn empty_and_malformed() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.jsonl");
        std::fs::write(&path, "\n").unwrap();
        assert!(DatasetManifest::read(&path).is_err());
        std::fs::write(&path, "{\"path\": 3}\n").unwrap();
        assert!(matches!(DatasetManifest::read(&path), Err(Error::Manifest(_))));
    }
}
