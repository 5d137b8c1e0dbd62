//! Output directory layout and the single-writer lock file.

use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

/// Fixed layout inside one run's output directory.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    /// Opens (creating if needed) the run directory and takes the writer
    /// lock. The lock is released when the returned guard drops.
    pub fn open(root: &Path) -> Result<(Self, LockGuard), CliError> {
        fs::create_dir_all(root)
            .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", root.display())))?;
        let lock = LockGuard::acquire(root)?;
        Ok((
            Self {
                root: root.to_path_buf(),
            },
            lock,
        ))
    }

    /// Opens the directory read-only (report verification).
    pub fn open_readonly(root: &Path) -> Result<Self, CliError> {
        if !root.is_dir() {
            return Err(CliError::Validation(format!(
                "output directory not found: {}",
                root.display()
            )));
        }
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn sub(&self, name: &str) -> Result<PathBuf, CliError> {
        let dir = self.root.join(name);
        fs::create_dir_all(&dir)
            .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", dir.display())))?;
        Ok(dir)
    }

    pub fn survey_matrix_file(&self, survey_id: &str) -> Result<PathBuf, CliError> {
        Ok(self
            .sub("matrices")?
            .join(format!("survey_{}.csv", safe(survey_id))))
    }

    pub fn survey_meta_file(&self, survey_id: &str) -> Result<PathBuf, CliError> {
        Ok(self
            .sub("matrices")?
            .join(format!("survey_{}.meta.json", safe(survey_id))))
    }

    pub fn model_matrix_file(&self, model_id: &str) -> Result<PathBuf, CliError> {
        Ok(self
            .sub("matrices")?
            .join(format!("model_{}.csv", safe(model_id))))
    }

    pub fn audit_file(&self, model_id: &str) -> Result<PathBuf, CliError> {
        Ok(self
            .sub("audit")?
            .join(format!("model_{}_pairs.csv", safe(model_id))))
    }

    pub fn figure_file(&self, name: &str) -> Result<PathBuf, CliError> {
        Ok(self.sub("figures")?.join(format!("{}.csv", safe(name))))
    }

    pub fn report_file(&self, name: &str) -> Result<PathBuf, CliError> {
        Ok(self.sub("reports")?.join(format!("{}.json", safe(name))))
    }

    pub fn cache_file(&self) -> Result<PathBuf, CliError> {
        Ok(self.sub("cache")?.join("scores.cache"))
    }

    pub fn manifest_file(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn run_meta_file(&self) -> PathBuf {
        self.root.join("run_meta.json")
    }

    pub fn summary_file(&self) -> PathBuf {
        self.root.join("summary.md")
    }
}

/// Replaces path-hostile characters in ids used as file-name fragments.
fn safe(id: &str) -> String {
    id.chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' {
                c
            } else {
                '_'
            }
        })
        .collect()
}

/// Exclusive-creation lock file guarding against concurrent writers in one
/// output directory. Removed on drop; a crash can leave it behind, in which
/// case the error message names the stale file.
pub struct LockGuard {
    path: PathBuf,
}

impl LockGuard {
    fn acquire(root: &Path) -> Result<Self, CliError> {
        let path = root.join(".moralign.lock");
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut file) => {
                use std::io::Write;
                let _ = writeln!(file, "{}", std::process::id());
                Ok(Self { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(CliError::Validation(format!(
                    "another run is writing to {} (or a previous run crashed); remove {} to proceed",
                    root.display(),
                    path.display()
                )))
            }
            Err(e) => Err(CliError::Validation(format!(
                "cannot take lock {}: {e}",
                path.display()
            ))),
        }
    }
}

impl Drop for LockGuard {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}
