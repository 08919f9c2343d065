//! Artifact files. Every run writes `summary.json` next to its CSVs; the
//! only field that differs between identical runs is `generated_at`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::{OutputConfig, RunConfig};
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const PARTIAL_SUFFIX: &str = ".partial";

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    generated_at: u64,
    status: &'a str,
    config: &'a RunConfig,
    result: &'a T,
}

pub struct Emitter {
    dir: PathBuf,
    output: OutputConfig,
    written: Vec<PathBuf>,
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(format!("writing {}", path.display()), io),
        other => CliError::io(format!("writing {}", path.display()), std::io::Error::other(format!("{other:?}"))),
    }
}

impl Emitter {
    pub fn new(cfg: &RunConfig) -> Result<Self, CliError> {
        let dir = cfg.output_dir();
        fs::create_dir_all(&dir).map_err(|e| CliError::io(format!("creating {}", dir.display()), e))?;
        Ok(Emitter { dir, output: cfg.output.clone(), written: Vec::new() })
    }

    fn open(&mut self, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        let path = self.dir.join(name);
        let f = File::create(&path).map_err(|e| CliError::io(format!("creating {}", path.display()), e))?;
        self.written.push(path.clone());
        Ok((path, BufWriter::new(f)))
    }

    /// Writes a CSV through `fill` unless CSV output is switched off.
    pub fn csv<F>(&mut self, name: &str, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<(), csv::Error>,
    {
        if !self.output.csv {
            return Ok(());
        }
        let (path, mut w) = self.open(name)?;
        fill(&mut w).map_err(|e| csv_err(&path, e))?;
        w.flush().map_err(|e| CliError::io(format!("writing {}", path.display()), e))
    }

    /// Table CSV from a header and rows of already formatted cells.
    pub fn table(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        self.csv(name, |w| {
            let mut wr = csv::Writer::from_writer(w);
            wr.write_record(header)?;
            for r in rows {
                wr.write_record(r)?;
            }
            wr.flush()?;
            Ok(())
        })
    }

    pub fn summary<T: Serialize>(&mut self, name: &str, cfg: &RunConfig, command: &str, status: &str, result: &T) -> Result<(), CliError> {
        if !self.output.json {
            return Ok(());
        }
        let env = Envelope { tool: "sel", version: VERSION, command, generated_at: timestamp(), status, config: cfg, result };
        let (path, mut w) = self.open(name)?;
        serde_json::to_writer_pretty(&mut w, &env)
            .map_err(|e| CliError::io(format!("writing {}", path.display()), std::io::Error::other(e)))?;
        writeln!(w).and_then(|_| w.flush()).map_err(|e| CliError::io(format!("writing {}", path.display()), e))
    }

    /// Renames the files written so far to `<name>.partial` and returns their
    /// new paths.
    pub fn mark_partial(&mut self) -> Vec<String> {
        let mut out = Vec::new();
        for p in self.written.drain(..) {
            let mut name = p.clone().into_os_string();
            name.push(PARTIAL_SUFFIX);
            let target = PathBuf::from(name);
            if fs::rename(&p, &target).is_ok() {
                out.push(target.display().to_string());
            }
        }
        out
    }
}

fn timestamp() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}
