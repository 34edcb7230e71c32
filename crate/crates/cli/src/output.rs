//! Output files staged in temporaries next to their targets and renamed into
//! place only once a command has succeeded.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use tempfile::NamedTempFile;

use crate::failure::Failure;

pub struct Outputs {
    dir: PathBuf,
    staged: Vec<(BufWriter<NamedTempFile>, PathBuf)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Self {
        Outputs { dir: dir.to_path_buf(), staged: Vec::new() }
    }

    /// Relative paths resolve against the output directory.
    pub fn target(&self, path: &Path) -> PathBuf {
        self.dir.join(path)
    }

    /// Starts a staged file and returns its handle for [`Outputs::writer`].
    pub fn open(&mut self, path: &Path) -> Result<usize, Failure> {
        let target = self.target(path);
        let parent = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&parent)
            .map_err(|e| Failure::Usage(format!("cannot create {}: {e}", parent.display())))?;
        let tmp = NamedTempFile::new_in(&parent)
            .map_err(|e| Failure::Usage(format!("cannot write in {}: {e}", parent.display())))?;
        self.staged.push((BufWriter::new(tmp), target));
        Ok(self.staged.len() - 1)
    }

    pub fn writer(&mut self, handle: usize) -> &mut BufWriter<NamedTempFile> {
        &mut self.staged[handle].0
    }

    pub fn write<F>(&mut self, path: &Path, fill: F) -> Result<(), Failure>
    where
        F: FnOnce(&mut dyn Write) -> geoconsensus::Result<()>,
    {
        let h = self.open(path)?;
        fill(self.writer(h))?;
        Ok(())
    }

    pub fn write_bytes(&mut self, path: &Path, bytes: &[u8]) -> Result<(), Failure> {
        self.write(path, |w| Ok(w.write_all(bytes)?))
    }

    /// Renames every staged file onto its target.
    pub fn commit(self) -> Result<Vec<PathBuf>, Failure> {
        let mut done = Vec::with_capacity(self.staged.len());
        for (w, target) in self.staged {
            let tmp = w.into_inner().map_err(|e| Failure::Usage(format!("cannot flush {}: {e}", target.display())))?;
            // temporaries are created owner-only
            #[cfg(unix)]
            {
                use std::os::unix::fs::PermissionsExt;
                tmp.as_file().set_permissions(fs::Permissions::from_mode(0o644))?;
            }
            tmp.persist(&target).map_err(|e| Failure::Usage(format!("cannot write {}: {e}", target.display())))?;
            done.push(target);
        }
        Ok(done)
    }
}
