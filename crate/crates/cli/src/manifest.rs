//! Report-bundle manifest: every machine artifact listed with its content
//! digest. The run-metadata sidecar and the cache are deliberately outside
//! the manifest — they carry timestamps and resumable state, not results.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

/// Subdirectories whose files form the report bundle.
const BUNDLE_DIRS: [&str; 4] = ["matrices", "figures", "audit", "reports"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the output directory, with `/` separators.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub files: Vec<ManifestEntry>,
}

fn digest_file(path: &Path) -> Result<(String, u64), CliError> {
    let data = fs::read(path)
        .map_err(|e| CliError::Corrupt(format!("cannot read {}: {e}", path.display())))?;
    Ok((hex::encode(Sha256::digest(&data)), data.len() as u64))
}

/// Walks the bundle directories and digests every file, sorted by path.
pub fn build(root: &Path) -> Result<Manifest, CliError> {
    let mut files = Vec::new();
    for dir in BUNDLE_DIRS {
        let full = root.join(dir);
        if !full.is_dir() {
            continue;
        }
        let mut names: Vec<String> = fs::read_dir(&full)
            .map_err(|e| CliError::Validation(format!("{}: {e}", full.display())))?
            .filter_map(|entry| {
                let entry = entry.ok()?;
                entry
                    .file_type()
                    .ok()?
                    .is_file()
                    .then(|| entry.file_name().to_string_lossy().into_owned())
            })
            .collect();
        names.sort();
        for name in names {
            let path = full.join(&name);
            let (sha256, bytes) = digest_file(&path)?;
            files.push(ManifestEntry {
                path: format!("{dir}/{name}"),
                sha256,
                bytes,
            });
        }
    }
    if files.is_empty() {
        return Err(CliError::Validation(
            "nothing to manifest: the output directory has no bundle files".into(),
        ));
    }
    Ok(Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        files,
    })
}

pub fn write(manifest: &Manifest, path: &Path) -> Result<(), CliError> {
    let mut json = serde_json::to_string_pretty(manifest)
        .map_err(|e| CliError::Validation(format!("manifest serialization: {e}")))?;
    json.push('\n');
    fs::write(path, json)
        .map_err(|e| CliError::Validation(format!("cannot write {}: {e}", path.display())))
}

pub fn read(path: &Path) -> Result<Manifest, CliError> {
    let text = fs::read_to_string(path).map_err(|e| {
        CliError::Validation(format!(
            "cannot read manifest {} (run `moralign analyze` first): {e}",
            path.display()
        ))
    })?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Corrupt(format!("manifest {}: {e}", path.display())))
}

/// Re-digests every manifested file and refuses on any mismatch.
pub fn verify(manifest: &Manifest, root: &Path) -> Result<(), CliError> {
    let mut broken = Vec::new();
    for entry in &manifest.files {
        let path = root.join(&entry.path);
        match digest_file(&path) {
            Ok((sha256, _)) if sha256 == entry.sha256 => {}
            Ok((sha256, _)) => broken.push(format!(
                "{}: digest {} != manifest {}",
                entry.path,
                &sha256[..12],
                &entry.sha256[..12]
            )),
            Err(_) => broken.push(format!("{}: missing or unreadable", entry.path)),
        }
    }
    if broken.is_empty() {
        Ok(())
    } else {
        Err(CliError::Corrupt(format!(
            "bundle corrupt ({} file(s)):\n  {}",
            broken.len(),
            broken.join("\n  ")
        )))
    }
}
