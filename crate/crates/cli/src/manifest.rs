//! Run manifest written next to every artifact.

use crate::config::Settings;
use crate::error::CliError;
use dynn::dynn::DynnParams;
use dynn::preprocess::{BlockClass, TransformedLti};
use dynn::simulate::NfeReport;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub layers: usize,
    pub neurons_per_layer: Vec<usize>,
    pub first_order: usize,
    pub second_order: usize,
}

impl LayerSummary {
    pub fn of(params: &DynnParams) -> Self {
        let (first_order, second_order) = params.census();
        Self {
            layers: params.layers.len(),
            neurons_per_layer: params.layers.iter().map(|l| l.neurons.len()).collect(),
            first_order,
            second_order,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformSummary {
    pub cond_t: f64,
    pub orthogonal: bool,
    pub block_classes: Vec<BlockClass>,
    pub block_dims: Vec<usize>,
}

impl TransformSummary {
    pub fn of(tr: &TransformedLti) -> Self {
        Self {
            cond_t: tr.cond_t,
            orthogonal: tr.diagonalizable_path,
            block_classes: tr.blocks.iter().map(|b| b.class).collect(),
            block_dims: tr.blocks.iter().map(|b| b.dim()).collect(),
        }
    }
}

/// Error of the network against the exact reference, per output channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub max_abs: Vec<f64>,
    /// Largest absolute error divided by the largest reference magnitude.
    pub max_rel: Vec<f64>,
    pub overall_max_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub settings: Settings,
    /// Extra run parameters such as span, grid step and mode.
    pub parameters: BTreeMap<String, String>,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub seconds: f64,
    pub transform: Option<TransformSummary>,
    pub layer_summary: Option<LayerSummary>,
    pub nfe: Option<NfeReport>,
    pub errors: Option<ErrorSummary>,
    pub warnings: Vec<String>,
}

impl RunManifest {
    pub fn new(command: &str, settings: &Settings) -> Self {
        Self {
            command: command.into(),
            settings: settings.clone(),
            parameters: BTreeMap::new(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
            seconds: 0.0,
            transform: None,
            layer_summary: None,
            nfe: None,
            errors: None,
            warnings: Vec::new(),
        }
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.into(), value.to_string());
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest is plain data")
    }

    #[cfg_attr(not(test), allow(dead_code))]
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.to_json()).map_err(|e| CliError::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_round_trips() {
        let mut m = RunManifest::new("compare", &Settings::default());
        m.param("span", "0..10");
        m.seconds = 0.123456789012345;
        m.transform = Some(TransformSummary {
            cond_t: 2742.3456789012,
            orthogonal: false,
            block_classes: vec![BlockClass::Real, BlockClass::Mixed],
            block_dims: vec![1, 3],
        });
        m.errors = Some(ErrorSummary {
            max_abs: vec![1.2345678901234567e-11],
            max_rel: vec![3.0e-12],
            overall_max_abs: 1.2345678901234567e-11,
        });
        m.warnings.push("w".into());
        assert_eq!(RunManifest::from_json(&m.to_json()).unwrap(), m);
    }
}
