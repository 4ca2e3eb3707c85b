//! JSON results documents.
//!
//! Floats are written in scientific notation with 17 significant digits,
//! which is enough to recover every `f64` exactly on parse.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::harness::{Experiment, MetricsReport};
use crate::metrics::AccuracyMatrix;

use super::FormatError;

pub const RESULTS_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultsDocument {
    pub schema_version: u32,
    pub dataset: String,
    pub accuracy_matrix: AccuracyMatrix,
    pub report: MetricsReport,
}

impl ResultsDocument {
    pub fn new(dataset: impl Into<String>, experiment: &Experiment) -> Self {
        Self {
            schema_version: RESULTS_SCHEMA_VERSION,
            dataset: dataset.into(),
            accuracy_matrix: experiment.accuracy.clone(),
            report: experiment.report.clone(),
        }
    }
}

/// Formats an `f64` the way results documents store it.
pub fn format_f64(value: f64) -> String {
    format!("{value:.16e}")
}

/// Pretty JSON with fixed-width float output.
struct Sig17(PrettyFormatter<'static>);

impl Formatter for Sig17 {
    fn write_f64<W: ?Sized + Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        writer.write_all(format_f64(value).as_bytes())
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

pub fn serialize_results(doc: &ResultsDocument) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Sig17(PrettyFormatter::new()));
    doc.serialize(&mut ser)
        .expect("results documents contain only finite numbers");
    out.push(b'\n');
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

pub fn parse_results(text: &str) -> Result<ResultsDocument, serde_json::Error> {
    serde_json::from_str(text)
}

pub fn write_results(doc: &ResultsDocument, path: impl AsRef<Path>) -> Result<(), FormatError> {
    let path = path.as_ref();
    fs::write(path, serialize_results(doc)).map_err(|e| FormatError::io(path, e))
}

pub fn read_results(path: impl AsRef<Path>) -> Result<ResultsDocument, FormatError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| FormatError::io(path, e))?;
    parse_results(&text).map_err(|e| FormatError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}
