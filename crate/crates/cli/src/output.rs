//! Output directory handling and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub struct Outputs {
    dir: PathBuf,
    csv: bool,
    vtk: bool,
    written: Vec<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config_hash: String,
    seed: u64,
    h: &'a [f64],
    outputs: &'a [String],
}

impl Outputs {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let dir = cfg.output_dir();
        std::fs::create_dir_all(&dir).map_err(|e| CliError::Io { path: dir.display().to_string(), source: e })?;
        let formats = cfg.list("output.formats");
        for f in &formats {
            if !matches!(f.as_str(), "json" | "csv" | "vtk") {
                return Err(CliError::Config(format!("output.formats: unknown format {f:?}")));
            }
        }
        let has = |f: &str| formats.iter().any(|x| x == f);
        Ok(Outputs { dir, csv: has("csv"), vtk: has("vtk"), written: Vec::new() })
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn dir(&self) -> &PathBuf {
        &self.dir
    }

    fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> freeharm_core::Result<()>,
    ) -> Result<()> {
        let path = self.dir.join(name);
        let io = |e: std::io::Error| CliError::Io { path: path.display().to_string(), source: e };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        f(&mut w)?;
        w.flush().map_err(io)?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Pretty JSON with a trailing newline. Always written.
    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value).expect("report types serialize");
        self.write_with(name, |w| {
            w.write_all(text.as_bytes())?;
            w.write_all(b"\n")?;
            Ok(())
        })
    }

    pub fn csv(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> freeharm_core::Result<()>,
    ) -> Result<()> {
        if self.csv {
            self.write_with(name, f)?;
        }
        Ok(())
    }

    pub fn vtk(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> freeharm_core::Result<()>,
    ) -> Result<()> {
        if self.vtk {
            self.write_with(name, f)?;
        }
        Ok(())
    }

    /// `manifest.json`, listing everything written so far.
    pub fn manifest(&mut self, cfg: &RunConfig, command: &str, h: &[f64]) -> Result<()> {
        let outputs = self.written.clone();
        let m = Manifest {
            tool: "freeharm",
            version: VERSION,
            command,
            config_hash: cfg.hash(),
            seed: cfg.usize("run.seed")? as u64,
            h,
            outputs: &outputs,
        };
        self.json("manifest.json", &m)
    }
}
