use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::commands::Failure;

/// Files collected in memory and written together at the end of a
/// command. Each file goes to a temporary sibling first and is renamed into
/// place, so readers never see a partial file.
pub struct Outputs {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir)
            .map_err(|e| Failure::config(format!("cannot create {}: {e}", dir.display())))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn add(&mut self, name: &str, contents: Vec<u8>) {
        self.files.push((name.to_string(), contents));
    }

    pub fn commit(self) -> Result<(), Failure> {
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let tmp = self.dir.join(format!(".{name}.tmp"));
            write_synced(&tmp, contents)
                .map_err(|e| Failure::data(format!("cannot write {}: {e}", tmp.display())))?;
            staged.push((tmp, self.dir.join(name)));
        }
        for (tmp, dest) in staged {
            fs::rename(&tmp, &dest)
                .map_err(|e| Failure::data(format!("cannot write {}: {e}", dest.display())))?;
        }
        Ok(())
    }
}

fn write_synced(path: &Path, contents: &[u8]) -> std::io::Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(contents)?;
    f.sync_all()
}
