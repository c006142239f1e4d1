use std::path::PathBuf;

use clap::Args;
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind, FieldKind};
use crate::error::{config_error, Result};

/// Command-line mirror of [`ExperimentConfig`]; every flag is optional.
#[derive(Args, Clone, Debug, Default, Serialize)]
pub struct ConfigFlags {
    /// JSON config file; its keys override the flags.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Walk lengths, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<f64>>,
    /// Window side per axis, comma separated.
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sides: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replicates: Option<usize>,
    /// Output directory.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldKind>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ball_radius: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub distances: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_star: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_fraction: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iota: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub half_sides: Option<Vec<usize>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cut_radius: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slack: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condition_g0: Option<bool>,

    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k_n: Option<f64>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_local: Option<f64>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub box_half_side: Option<usize>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c1: Option<f64>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_d: Option<f64>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_circ: Option<f64>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_low: Option<f64>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_high: Option<f64>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub survival_horizon: Option<usize>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hit_radius: Option<f64>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pocket_radius: Option<f64>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub separation: Option<f64>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_star: Option<f64>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps_exponent: Option<f64>,
    #[arg(long, help_heading = "Scale overrides")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda_quantile: Option<f64>,
}

impl ConfigFlags {
    /// Flags of kind `kind`, overlaid by the config file when one is given.
    pub fn resolve(&self, kind: ExperimentKind) -> Result<ExperimentConfig> {
        let serde_json::Value::Object(mut map) = serde_json::to_value(self).expect("flags serialise") else {
            unreachable!("flags serialise to an object")
        };
        map.insert("kind".into(), serde_json::to_value(kind).expect("plain enum"));
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            let file: serde_json::Value = serde_json::from_str(&text).map_err(|e| config_error(e.to_string()))?;
            let serde_json::Value::Object(file) = file else {
                return Err(config_error("config file must hold a JSON object"));
            };
            map.extend(file);
        }
        ExperimentConfig::from_json(&serde_json::Value::Object(map).to_string())
    }
}
