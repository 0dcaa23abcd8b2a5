use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::Result;
use crate::observables::{Manifest, TimeSeries};

/// In-memory output of one experiment: named CSV files plus the manifest.
#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub manifest: Manifest,
    pub files: Vec<(String, String)>,
}

impl Bundle {
    pub fn new(manifest: Manifest) -> Self {
        Self {
            manifest,
            files: Vec::new(),
        }
    }

    pub fn add_series(&mut self, name: &str, series: &TimeSeries) {
        self.add_text(&format!("{name}.csv"), series.to_csv());
    }

    pub fn add_text(&mut self, name: &str, text: String) {
        self.manifest.outputs.push(name.to_string());
        self.files.push((name.to_string(), text));
    }

    pub fn record(&mut self, key: &str, value: impl Serialize) -> Result<()> {
        self.manifest
            .results
            .insert(key.to_string(), serde_json::to_value(value)?);
        Ok(())
    }

    pub fn file(&self, name: &str) -> Option<&str> {
        self.files
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.as_str())
    }

    /// Writes every file and `manifest.json` into `dir`, creating it.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        for (name, text) in &self.files {
            std::fs::write(dir.join(name), text)?;
        }
        self.manifest.write(&dir.join("manifest.json"))
    }

    /// A gnuplot script that plots every CSV of the bundle, one page each.
    /// Complex series are drawn as `|value|` on a log scale.
    pub fn gnuplot_script(&self) -> String {
        let mut s = String::from("set datafile separator ','\nset datafile commentschars '#t'\nset key off\nset xlabel 't [1/J]'\n");
        let _ = writeln!(
            s,
            "set terminal pdfcairo\nset output '{}.pdf'",
            self.manifest.model
        );
        for (name, text) in &self.files {
            if !name.ends_with(".csv") {
                continue;
            }
            let header = text.lines().find(|l| !l.starts_with('#')).unwrap_or("");
            let complex = header.split(',').count() >= 3;
            let _ = writeln!(
                s,
                "set title '{}'",
                name.trim_end_matches(".csv").replace('_', " ")
            );
            if complex {
                let _ = writeln!(
                    s,
                    "set logscale y\nplot '{name}' using 1:(sqrt($2**2+$3**2)) with lines"
                );
            } else {
                let _ = writeln!(s, "unset logscale y\nplot '{name}' using 1:2 with lines");
            }
        }
        s
    }
}

/// Output of an experiment: the summary plus the files to write. The
/// summary is also recorded in the manifest.
#[derive(Clone, Debug)]
pub struct Outcome<R> {
    pub report: R,
    pub bundle: Bundle,
}

impl<R: Serialize> Outcome<R> {
    pub fn new(report: R, mut bundle: Bundle) -> Result<Self> {
        bundle.record("report", &report)?;
        Ok(Self { report, bundle })
    }
}
