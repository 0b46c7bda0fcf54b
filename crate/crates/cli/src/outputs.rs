use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;

/// Files written by one run. If the run fails, [`Outputs::discard`] removes
/// them together with any directories the run created.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    created_dirs: Vec<PathBuf>,
    files: Vec<PathBuf>,
}

impl Outputs {
    pub fn create(dir: &Path) -> io::Result<Self> {
        let mut created_dirs = Vec::new();
        let mut p = Some(dir);
        while let Some(d) = p {
            if d.as_os_str().is_empty() || d.exists() {
                break;
            }
            created_dirs.push(d.to_path_buf());
            p = d.parent();
        }
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            created_dirs,
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Registers `name` as an output of this run and returns its path.
    pub fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        if !self.files.contains(&p) {
            self.files.push(p.clone());
        }
        p
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        let p = self.path(name);
        fs::write(&p, text).with_context(|| format!("writing {}", p.display()))
    }

    pub fn write_json<T: Serialize + ?Sized>(
        &mut self,
        name: &str,
        value: &T,
    ) -> anyhow::Result<()> {
        let p = self.path(name);
        lidscope::io::write_json(value, &p)?;
        Ok(())
    }

    pub fn csv_writer(&mut self, name: &str) -> anyhow::Result<(PathBuf, csv::Writer<fs::File>)> {
        let p = self.path(name);
        let w = csv::Writer::from_path(&p).with_context(|| format!("creating {}", p.display()))?;
        Ok((p, w))
    }

    pub fn discard(self) {
        for f in &self.files {
            let _ = fs::remove_file(f);
        }
        // Innermost first; only succeeds on directories left empty.
        for d in &self.created_dirs {
            let _ = fs::remove_dir(d);
        }
    }
}
