use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use kgalign_core::Result;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to re-run a command: the invocation, the resolved
/// configuration and seeds, and digests of what was read and written.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seeds: BTreeMap<String, u64>,
    pub deterministic: bool,
    pub threads: Option<usize>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub version: String,
    pub duration_secs: f64,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Files under `path` in sorted order (the path itself if it is a file),
/// skipping manifests.
fn files_under(path: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
        entries.sort();
        for e in entries {
            files_under(&e, out)?;
        }
    } else if path.file_name().is_none_or(|n| n != MANIFEST_FILE) {
        out.push(path.to_path_buf());
    }
    Ok(())
}

pub fn digests(paths: &[PathBuf]) -> Result<Vec<FileDigest>> {
    let mut files = Vec::new();
    for p in paths {
        files_under(p, &mut files)?;
    }
    files
        .into_iter()
        .map(|p| {
            Ok(FileDigest {
                sha256: sha256_file(&p)?,
                path: p.display().to_string(),
            })
        })
        .collect()
}

pub struct ManifestBuilder {
    pub manifest: RunManifest,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, deterministic: bool, threads: Option<usize>) -> Self {
        Self {
            manifest: RunManifest {
                command: command.to_string(),
                argv: std::env::args().collect(),
                config: serde_json::Value::Null,
                seeds: BTreeMap::new(),
                deterministic,
                threads,
                inputs: Vec::new(),
                outputs: Vec::new(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                duration_secs: 0.0,
            },
            started: Instant::now(),
        }
    }

    pub fn config<T: Serialize>(&mut self, cfg: &T) -> Result<&mut Self> {
        self.manifest.config = serde_json::to_value(cfg)?;
        Ok(self)
    }

    pub fn seed(&mut self, name: &str, value: u64) -> &mut Self {
        self.manifest.seeds.insert(name.to_string(), value);
        self
    }

    pub fn inputs(&mut self, paths: &[PathBuf]) -> Result<&mut Self> {
        self.manifest.inputs.extend(digests(paths)?);
        Ok(self)
    }

    /// Digests the outputs and writes `manifest.json` into `dir` through a
    /// temporary file, so readers never see a partial manifest.
    pub fn finish(&mut self, dir: &Path, outputs: &[PathBuf]) -> Result<PathBuf> {
        self.manifest.outputs = digests(outputs)?;
        self.manifest.duration_secs = self.started.elapsed().as_secs_f64();
        fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        tmp.write_all(serde_json::to_string_pretty(&self.manifest)?.as_bytes())?;
        tmp.write_all(b"\n")?;
        let target = dir.join(MANIFEST_FILE);
        tmp.persist(&target).map_err(|e| e.error)?;
        Ok(target)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_known_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x");
        fs::write(&p, b"abc").unwrap();
        assert_eq!(
            sha256_file(&p).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn directories_are_walked_in_order_without_manifests() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("sub")).unwrap();
        for name in ["b", "a", "sub/c", MANIFEST_FILE] {
            fs::write(dir.path().join(name), name).unwrap();
        }
        let d = digests(&[dir.path().to_path_buf()]).unwrap();
        let names: Vec<String> = d
            .iter()
            .map(|f| Path::new(&f.path).strip_prefix(dir.path()).unwrap().display().to_string())
            .collect();
        assert_eq!(names, ["a", "b", "sub/c"]);
    }

    #[test]
    fn manifest_lands_atomically() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("o.txt");
        fs::write(&out, "x").unwrap();
        let mut b = ManifestBuilder::new("test", true, None);
        b.seed("master", 7);
        let path = b.finish(dir.path(), &[out]).unwrap();
        let m: RunManifest = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(m.seeds["master"], 7);
        assert_eq!(m.outputs.len(), 1);
        let leftovers = fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(leftovers, 2);
    }
}
