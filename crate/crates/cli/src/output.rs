//! CSV and JSON writers. Floats use Rust's shortest round-trip formatting so
//! CSV cells and JSON numbers parse back to the same `f64`.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::PathBuf;

use serde::Serialize;

use crate::error::{CliError, CliResult};

/// An output directory; created on first write.
#[derive(Clone, Debug)]
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    fn ensure(&self) -> CliResult<()> {
        fs::create_dir_all(&self.root).map_err(|e| CliError::io(&self.root, e))
    }

    pub fn write_text(&self, name: &str, text: &str) -> CliResult<()> {
        self.ensure()?;
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))
    }

    pub fn write_json<T: Serialize + ?Sized>(&self, name: &str, value: &T) -> CliResult<()> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Io(format!("{name}: {e}")))?;
        self.write_text(name, &(text + "\n"))
    }

    pub fn csv(&self, name: &str, header: &[&str]) -> CliResult<CsvSink> {
        self.ensure()?;
        let path = self.path(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut sink = CsvSink {
            writer: csv::Writer::from_writer(BufWriter::new(file)),
            path,
        };
        sink.record(header.iter().map(|s| s.to_string()))?;
        Ok(sink)
    }
}

/// One cell of a CSV row.
pub enum Cell {
    F(f64),
    I(i64),
    U(u64),
    B(bool),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Self::F(v) => format!("{v:?}"),
            Self::I(v) => v.to_string(),
            Self::U(v) => v.to_string(),
            Self::B(v) => v.to_string(),
            Self::Empty => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::F(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Self::I(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::U(v as u64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Self::U(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::B(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Self::Empty, Self::F)
    }
}

pub struct CsvSink {
    writer: csv::Writer<BufWriter<File>>,
    path: PathBuf,
}

impl CsvSink {
    fn record(&mut self, fields: impl IntoIterator<Item = String>) -> CliResult<()> {
        self.writer
            .write_record(fields)
            .map_err(|e| CliError::io(&self.path, e))
    }

    pub fn row(&mut self, cells: Vec<Cell>) -> CliResult<()> {
        self.record(cells.iter().map(Cell::render))
    }

    /// Pushes buffered rows to disk so an interrupted run keeps them.
    pub fn flush(&mut self) -> CliResult<()> {
        self.writer.flush().map_err(|e| CliError::io(&self.path, e))
    }

    pub fn finish(mut self) -> CliResult<()> {
        self.flush()
    }
}
