//! Text checkpoints.
//!
//! ```text
//! # highway checkpoint
//! format_version = 1
//! global_step = 40000
//! config.<key> = <value>                 one line per RunConfig key
//! optimizer.<field> = <value>            kind, learning_rate, beta1, beta2, epsilon, step
//! param.<layer>.weight = <rows> <cols> <rows*cols values>
//! param.<layer>.bias = <rows> <values>
//! optimizer.m = <n> <values>             adam only
//! optimizer.v = <n> <values>             adam only
//! end = <number of lines above>
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so every `f64` is restored exactly.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

use super::config::{ConfigError, RunConfig};
use crate::env::Action;
use crate::nn::{NnError, Optimizer, OptimizerKind, QFunctionNet};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("checkpoint format version {found} is not supported (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },
    #[error("checkpoint is truncated")]
    Truncated,
    #[error("field `{field}` holds {got} values, expected {expected}")]
    FieldCount {
        field: String,
        expected: usize,
        got: usize,
    },
    #[error("checkpoint line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("checkpoint parameters do not match its configuration: {0}")]
    DimensionMismatch(String),
    #[error("checkpoint configuration: {0}")]
    Config(#[from] ConfigError),
}

/// Everything needed to restore a trained agent's policy and optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: RunConfig,
    pub net: QFunctionNet,
    pub optimizer: Optimizer,
    pub global_step: u64,
}

fn join_floats(values: &[f64]) -> String {
    let mut s = String::with_capacity(values.len() * 24);
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&format!("{v:e}"));
    }
    s
}

impl Checkpoint {
    /// Builds the network topology from a configuration, validating that it fits the
    /// highway observation and action spaces.
    pub fn network_for(config: &RunConfig) -> Result<QFunctionNet, NnError> {
        QFunctionNet::zeros(
            &config.agent.layer_dims(config.env.obs_dim()),
            Action::COUNT,
            config.agent.head_kind(),
        )
    }

    pub fn to_text(&self) -> String {
        let mut lines = vec![
            "# highway checkpoint".to_string(),
            format!("format_version = {FORMAT_VERSION}"),
            format!("global_step = {}", self.global_step),
        ];
        for (k, v) in self.config.entries() {
            lines.push(format!("config.{k} = {v}"));
        }
        let opt = &self.optimizer;
        let kind = match opt.kind {
            OptimizerKind::Adam => "adam",
            OptimizerKind::Sgd => "sgd",
        };
        lines.push(format!("optimizer.kind = {kind}"));
        lines.push(format!("optimizer.learning_rate = {:e}", opt.learning_rate));
        lines.push(format!("optimizer.beta1 = {:e}", opt.beta1));
        lines.push(format!("optimizer.beta2 = {:e}", opt.beta2));
        lines.push(format!("optimizer.epsilon = {:e}", opt.epsilon));
        lines.push(format!("optimizer.step = {}", opt.step));
        let params = self.net.params();
        for (name, layer) in self.net.named_layers() {
            let w_end = layer.offset + layer.fan_in * layer.fan_out;
            lines.push(format!(
                "param.{name}.weight = {} {} {}",
                layer.fan_out,
                layer.fan_in,
                join_floats(&params[layer.offset..w_end])
            ));
            lines.push(format!(
                "param.{name}.bias = {} {}",
                layer.fan_out,
                join_floats(&params[w_end..w_end + layer.fan_out])
            ));
        }
        if opt.kind == OptimizerKind::Adam {
            lines.push(format!("optimizer.m = {} {}", opt.m.len(), join_floats(&opt.m)));
            lines.push(format!("optimizer.v = {} {}", opt.v.len(), join_floats(&opt.v)));
        }
        let count = lines.len();
        lines.push(format!("end = {count}"));
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CheckpointError> {
        let mut fields: HashMap<&str, (usize, &str)> = HashMap::new();
        let mut content_lines = 0usize;
        let mut end: Option<usize> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            if end.is_some() {
                return Err(CheckpointError::Parse {
                    line,
                    msg: "content after end marker".into(),
                });
            }
            let (key, value) = match raw.split_once('=') {
                Some((k, v)) => (k.trim(), v.trim()),
                None if raw.trim().is_empty() || raw.starts_with('#') => {
                    content_lines += 1;
                    continue;
                }
                None => return Err(CheckpointError::Truncated),
            };
            if key == "end" {
                let declared: usize = value.parse().map_err(|_| CheckpointError::Truncated)?;
                if declared != content_lines {
                    return Err(CheckpointError::Truncated);
                }
                end = Some(line);
                continue;
            }
            if fields.insert(key, (line, value)).is_some() {
                return Err(CheckpointError::Parse {
                    line,
                    msg: format!("duplicate field `{key}`"),
                });
            }
            content_lines += 1;
        }

        match fields.get("format_version") {
            Some((_, v)) if *v == FORMAT_VERSION.to_string() => {}
            Some((_, v)) => {
                return Err(CheckpointError::VersionMismatch {
                    found: v.to_string(),
                    expected: FORMAT_VERSION,
                })
            }
            None => return Err(CheckpointError::Truncated),
        }
        if end.is_none() {
            return Err(CheckpointError::Truncated);
        }

        let get = |key: &str| -> Result<(usize, &str), CheckpointError> {
            fields.get(key).copied().ok_or_else(|| CheckpointError::Parse {
                line: 0,
                msg: format!("missing field `{key}`"),
            })
        };
        fn scalar<T: std::str::FromStr>((line, v): (usize, &str), key: &str) -> Result<T, CheckpointError> {
            v.parse().map_err(|_| CheckpointError::Parse {
                line,
                msg: format!("bad value for `{key}`"),
            })
        }

        let mut config = RunConfig::default();
        let mut config_keys: Vec<(&str, usize, &str)> = fields
            .iter()
            .filter_map(|(k, (line, v))| k.strip_prefix("config.").map(|k| (k, *line, *v)))
            .collect();
        config_keys.sort_by_key(|(_, line, _)| *line);
        for (key, line, value) in config_keys {
            config.set(key, value).map_err(|e| CheckpointError::Parse {
                line,
                msg: format!("config.{key}: {e}"),
            })?;
        }
        config.validate()?;

        let mut net = Self::network_for(&config).map_err(|e| CheckpointError::DimensionMismatch(e.to_string()))?;
        let expected_layers = net.named_layers();
        let param_layers = fields
            .keys()
            .filter(|k| k.starts_with("param.") && k.ends_with(".weight"))
            .count();
        if param_layers != expected_layers.len() {
            return Err(CheckpointError::DimensionMismatch(format!(
                "{} weight tensors stored, configuration needs {}",
                param_layers,
                expected_layers.len()
            )));
        }
        let mut params = vec![0.0; net.num_params()];
        for (name, layer) in &expected_layers {
            let w_key = format!("param.{name}.weight");
            let (line, text) = get(&w_key)?;
            let values = parse_floats(text, line)?;
            if values.len() < 2 || values[0] != layer.fan_out as f64 || values[1] != layer.fan_in as f64 {
                return Err(CheckpointError::DimensionMismatch(format!(
                    "{w_key} shape does not match {}x{}",
                    layer.fan_out, layer.fan_in
                )));
            }
            let w_end = layer.offset + layer.fan_in * layer.fan_out;
            fill(&mut params[layer.offset..w_end], &values[2..], &w_key)?;

            let b_key = format!("param.{name}.bias");
            let (line, text) = get(&b_key)?;
            let values = parse_floats(text, line)?;
            if values.is_empty() || values[0] != layer.fan_out as f64 {
                return Err(CheckpointError::DimensionMismatch(format!(
                    "{b_key} length does not match {}",
                    layer.fan_out
                )));
            }
            fill(&mut params[w_end..w_end + layer.fan_out], &values[1..], &b_key)?;
        }
        net.set_params(params)
            .map_err(|e| CheckpointError::DimensionMismatch(e.to_string()))?;

        let kind = match get("optimizer.kind")?.1 {
            "adam" => OptimizerKind::Adam,
            "sgd" => OptimizerKind::Sgd,
            other => {
                return Err(CheckpointError::Parse {
                    line: get("optimizer.kind")?.0,
                    msg: format!("unknown optimizer `{other}`"),
                })
            }
        };
        let mut optimizer = Optimizer::new(kind, scalar(get("optimizer.learning_rate")?, "learning_rate")?, net.num_params());
        optimizer.beta1 = scalar(get("optimizer.beta1")?, "beta1")?;
        optimizer.beta2 = scalar(get("optimizer.beta2")?, "beta2")?;
        optimizer.epsilon = scalar(get("optimizer.epsilon")?, "epsilon")?;
        optimizer.step = scalar(get("optimizer.step")?, "step")?;
        if kind == OptimizerKind::Adam {
            for (key, target) in [("optimizer.m", &mut optimizer.m), ("optimizer.v", &mut optimizer.v)] {
                let (line, text) = get(key)?;
                let values = parse_floats(text, line)?;
                if values.is_empty() || values[0] != target.len() as f64 {
                    return Err(CheckpointError::DimensionMismatch(format!(
                        "{key} length does not match the network"
                    )));
                }
                fill(target, &values[1..], key)?;
            }
        }

        Ok(Self {
            config,
            net,
            optimizer,
            global_step: scalar(get("global_step")?, "global_step")?,
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), CheckpointError> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_text().as_bytes())?;
        f.sync_all()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, CheckpointError> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

fn parse_floats(text: &str, line: usize) -> Result<Vec<f64>, CheckpointError> {
    text.split_ascii_whitespace()
        .map(|t| {
            t.parse::<f64>().map_err(|_| CheckpointError::Parse {
                line,
                msg: format!("bad number `{t}`"),
            })
        })
        .collect()
}

fn fill(dst: &mut [f64], values: &[f64], field: &str) -> Result<(), CheckpointError> {
    if values.len() != dst.len() {
        return Err(CheckpointError::FieldCount {
            field: field.to_string(),
            expected: dst.len(),
            got: values.len(),
        });
    }
    dst.copy_from_slice(values);
    Ok(())
}
