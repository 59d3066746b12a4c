//! Output files: CSV tables with `#` metadata lines, JSON reports and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, Result};

/// Version of every CSV schema written by this build.
pub const CSV_SCHEMA_VERSION: u32 = 1;

/// Twelve significant digits, fixed scientific format.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.11e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Num(f64),
    Flag(bool),
}

impl Cell {
    fn render(self) -> String {
        match self {
            Cell::Num(x) => num(x),
            Cell::Flag(b) => (if b { "1" } else { "0" }).to_string(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Flag(b)
    }
}

/// Collects the files written by one command.
pub struct Sink {
    dir: PathBuf,
    pub written: Vec<String>,
}

fn write_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Write {
        path: path.to_path_buf(),
        source,
    }
}

impl Sink {
    pub fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(write_err(dir))?;
        Ok(Sink {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn create(&mut self, name: &str) -> Result<(PathBuf, BufWriter<File>)> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(write_err(&path))?;
        self.written.push(name.to_string());
        Ok((path, BufWriter::new(f)))
    }

    /// Writes `name` as CSV: a schema line, `# key = value` metadata, a header and the rows.
    pub fn csv(
        &mut self,
        name: &str,
        schema: &str,
        meta: &[(&str, String)],
        header: &[&str],
        rows: impl IntoIterator<Item = Vec<Cell>>,
    ) -> Result<()> {
        let (path, mut w) = self.create(name)?;
        let io = write_err(&path);
        let mut head = format!("# hetspec {schema} v{CSV_SCHEMA_VERSION}\n");
        for (k, v) in meta {
            head.push_str(&format!("# {k} = {v}\n"));
        }
        w.write_all(head.as_bytes()).map_err(io)?;
        let mut cw = csv::Writer::from_writer(w);
        let result = (|| -> std::result::Result<(), csv::Error> {
            cw.write_record(header)?;
            for row in rows {
                cw.write_record(row.into_iter().map(Cell::render))?;
            }
            cw.flush()?;
            Ok(())
        })();
        result.map_err(|e| CliError::Write {
            path: path.clone(),
            source: std::io::Error::other(e),
        })
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let (path, mut w) = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, value)
            .map_err(std::io::Error::other)
            .and_then(|_| w.write_all(b"\n"))
            .and_then(|_| w.flush())
            .map_err(write_err(&path))
    }

    pub fn text(&mut self, name: &str, body: &str) -> Result<()> {
        let (path, mut w) = self.create(name)?;
        w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(write_err(&path))
    }
}

/// Everything needed to repeat a run: pass the manifest itself as `--config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub hetspec_version: String,
    pub command: String,
    pub seed: u64,
    pub files: Vec<String>,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(command: &str, config: &RunConfig, files: &[String]) -> Self {
        Manifest {
            hetspec_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: config.montecarlo.seed,
            files: files.to_vec(),
            config: config.clone(),
        }
    }
}

/// Loads either a plain config or a manifest written by a previous run.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::ReadConfig {
        path: path.to_path_buf(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("hetspec_version").is_some() && value.get("config").is_some() {
        let m: Manifest = serde_json::from_value(value)?;
        Ok(m.config)
    } else {
        RunConfig::parse(&text)
    }
}
