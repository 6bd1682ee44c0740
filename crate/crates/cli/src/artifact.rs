//! Output files. Every artifact carries the tool version and the hash of
//! the effective configuration.

use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::Serialize;

use crate::config::Config;

pub const TOOL: &str = concat!("holosurf-cli ", env!("CARGO_PKG_VERSION"));

pub struct Out {
    pub dir: PathBuf,
    pub config: Config,
}

impl Out {
    fn path(&self, name: &str) -> anyhow::Result<PathBuf> {
        std::fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        Ok(self.dir.join(name))
    }

    /// CSV with three `#` comment lines (tool, hash, config) before the header.
    pub fn csv(&self, name: &str) -> anyhow::Result<(PathBuf, csv::Writer<File>)> {
        let path = self.path(name)?;
        let mut f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        writeln!(f, "# tool: {TOOL}")?;
        writeln!(f, "# config_sha256: {}", self.config.hash())?;
        writeln!(f, "# config: {}", self.config.canonical_json())?;
        Ok((path, csv::Writer::from_writer(f)))
    }

    pub fn json<T: Serialize>(&self, name: &str, report: &T) -> anyhow::Result<PathBuf> {
        let path = self.path(name)?;
        let doc = serde_json::json!({
            "tool": TOOL,
            "config_sha256": self.config.hash(),
            "config": self.config,
            "report": report,
        });
        std::fs::write(&path, serde_json::to_string_pretty(&doc)? + "\n")
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

/// Configuration embedded in a CSV written by [`Out::csv`], checked against its hash.
pub fn embedded_config(path: &Path) -> anyhow::Result<Config> {
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    let (mut hash, mut cfg) = (None, None);
    for line in BufReader::new(f).lines() {
        let line = line?;
        let Some(rest) = line.strip_prefix("# ") else { break };
        if let Some(h) = rest.strip_prefix("config_sha256: ") {
            hash = Some(h.to_string());
        } else if let Some(c) = rest.strip_prefix("config: ") {
            cfg = Some(serde_json::from_str::<Config>(c).context("embedded config")?);
        }
    }
    let (Some(hash), Some(cfg)) = (hash, cfg) else { bail!("{} has no config header", path.display()) };
    if cfg.hash() != hash {
        bail!("config hash mismatch in {}", path.display());
    }
    Ok(cfg)
}
