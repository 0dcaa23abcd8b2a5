//! Versioned configuration documents.
//!
//! A document holds one section per experiment, keyed by the subcommand
//! name with underscores. A subcommand reads only its own section, so one
//! file can describe several runs that belong together.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use quenchlab_core::pipeline::{
    CumulantConfig, MatrixElementConfig, OtocConfig, PredictConfig, StabilityConfig, TrimerConfig,
};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    DimerMatrixElements,
    DimerOtoc,
    DimerCumulants,
    TrimerCollapse,
    MeanfieldStability,
    Predict,
}

impl Experiment {
    pub fn key(&self) -> &'static str {
        match self {
            Experiment::DimerMatrixElements => "dimer_matrix_elements",
            Experiment::DimerOtoc => "dimer_otoc",
            Experiment::DimerCumulants => "dimer_cumulants",
            Experiment::TrimerCollapse => "trimer_collapse",
            Experiment::MeanfieldStability => "meanfield_stability",
            Experiment::Predict => "predict",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimer_matrix_elements: Option<MatrixElementConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimer_otoc: Option<OtocConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimer_cumulants: Option<CumulantConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trimer_collapse: Option<TrimerConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meanfield_stability: Option<StabilityConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predict: Option<PredictConfig>,
}

impl ConfigFile {
    /// Reads a configuration document, or the manifest of an earlier run
    /// (recognized by its `outputs` list), whose `config` is one.
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut value: Value = serde_json::from_str(text).context("not valid JSON")?;
        if value.get("outputs").is_some() {
            value = value
                .get_mut("config")
                .map(Value::take)
                .context("manifest without a `config` entry")?;
        }
        match value.get("schema").and_then(Value::as_u64) {
            Some(v) if v == SCHEMA as u64 => {}
            Some(v) => bail!("schema version {v} is not supported (expected {SCHEMA})"),
            None => bail!("missing `schema` (expected {SCHEMA})"),
        }
        serde_path_to_error::deserialize(value).map_err(|e| {
            let path = e.path().to_string();
            anyhow::anyhow!("field `{path}`: {}", e.into_inner())
        })
    }

    fn missing(&self, e: Experiment) -> anyhow::Error {
        anyhow::anyhow!("the configuration has no `{}` section", e.key())
    }

    /// The document reduced to the section of `e`.
    pub fn section(&self, e: Experiment) -> Result<Value> {
        let full = serde_json::to_value(self)?;
        let body = full.get(e.key()).cloned().ok_or_else(|| self.missing(e))?;
        Ok(json!({ "schema": SCHEMA, e.key(): body }))
    }

    pub fn warnings(&self, e: Experiment) -> Vec<String> {
        let model = match e {
            Experiment::DimerMatrixElements => {
                self.dimer_matrix_elements.as_ref().map(|c| &c.model)
            }
            Experiment::DimerOtoc => self.dimer_otoc.as_ref().map(|c| &c.model),
            Experiment::DimerCumulants => self.dimer_cumulants.as_ref().map(|c| &c.model),
            Experiment::Predict => self.predict.as_ref().map(|c| &c.model),
            Experiment::TrimerCollapse => {
                return self
                    .trimer_collapse
                    .as_ref()
                    .map(|c| c.warnings())
                    .unwrap_or_default()
            }
            Experiment::MeanfieldStability => None,
        };
        model.map(|m| m.warnings()).unwrap_or_default()
    }

    /// Sites and particle number of the Fock basis the experiment uses.
    pub fn basis(&self, e: Experiment) -> Result<Option<(usize, u32)>> {
        Ok(match e {
            Experiment::DimerMatrixElements => Some((2, self.matrix_elements()?.model.particles)),
            Experiment::DimerOtoc => Some((2, self.otoc()?.model.particles)),
            Experiment::DimerCumulants => Some((2, self.cumulants()?.model.particles)),
            Experiment::Predict => Some((2, self.predict()?.model.particles)),
            Experiment::TrimerCollapse => Some((3, self.trimer()?.particles)),
            Experiment::MeanfieldStability => None,
        })
    }

    pub fn matrix_elements(&self) -> Result<&MatrixElementConfig> {
        self.dimer_matrix_elements
            .as_ref()
            .ok_or_else(|| self.missing(Experiment::DimerMatrixElements))
    }

    pub fn otoc(&self) -> Result<&OtocConfig> {
        self.dimer_otoc
            .as_ref()
            .ok_or_else(|| self.missing(Experiment::DimerOtoc))
    }

    pub fn cumulants(&self) -> Result<&CumulantConfig> {
        self.dimer_cumulants
            .as_ref()
            .ok_or_else(|| self.missing(Experiment::DimerCumulants))
    }

    pub fn trimer(&self) -> Result<&TrimerConfig> {
        self.trimer_collapse
            .as_ref()
            .ok_or_else(|| self.missing(Experiment::TrimerCollapse))
    }

    pub fn stability(&self) -> Result<&StabilityConfig> {
        self.meanfield_stability
            .as_ref()
            .ok_or_else(|| self.missing(Experiment::MeanfieldStability))
    }

    pub fn predict(&self) -> Result<&PredictConfig> {
        self.predict
            .as_ref()
            .ok_or_else(|| self.missing(Experiment::Predict))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn figure_files_match_the_recipes() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
        let fig1 = ConfigFile::load(&dir.join("fig1.json")).unwrap();
        assert_eq!(
            fig1.dimer_matrix_elements,
            Some(MatrixElementConfig::figure(100_000))
        );
        let fig2 = ConfigFile::load(&dir.join("fig2.json")).unwrap();
        assert_eq!(fig2.dimer_otoc, Some(OtocConfig::figure(10_000)));
        assert_eq!(fig2.dimer_cumulants, Some(CumulantConfig::figure(10_000)));
        let fig3 = ConfigFile::load(&dir.join("fig3.json")).unwrap();
        assert_eq!(fig3.trimer_collapse, Some(TrimerConfig::figure()));
    }

    #[test]
    fn field_errors_name_the_path() {
        let err = ConfigFile::parse(r#"{"schema": 1, "trimer_collapse": {"particles": "many"}}"#)
            .unwrap_err();
        assert!(
            format!("{err:#}").contains("trimer_collapse.particles"),
            "{err:#}"
        );
        let err = ConfigFile::parse(r#"{"schema": 1, "dimer_otoc": {"modle": 1}}"#).unwrap_err();
        assert!(format!("{err:#}").contains("dimer_otoc"), "{err:#}");
    }

    #[test]
    fn schema_version_is_checked() {
        assert!(ConfigFile::parse(r#"{"schema": 2}"#).is_err());
        assert!(ConfigFile::parse(r#"{}"#).is_err());
        assert!(ConfigFile::parse(r#"{"schema": 1}"#).is_ok());
    }

    #[test]
    fn section_round_trips() {
        let file = ConfigFile {
            schema: SCHEMA,
            trimer_collapse: Some(TrimerConfig::figure()),
            meanfield_stability: Some(StabilityConfig::trimer()),
            ..ConfigFile::default()
        };
        let doc = file.section(Experiment::TrimerCollapse).unwrap();
        let back = ConfigFile::parse(&doc.to_string()).unwrap();
        assert_eq!(back.trimer_collapse, file.trimer_collapse);
        assert!(back.meanfield_stability.is_none());
        assert!(file.section(Experiment::Predict).is_err());
    }
}
