use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::graph::OperatorKind;
use crate::kv;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
}

/// Branch readout. Only `Sum` is injective; `Mean` and `Max` exist to exhibit collisions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Readout {
    #[default]
    Sum,
    Mean,
    Max,
}

impl fmt::Display for Readout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Readout::Sum => "sum",
            Readout::Mean => "mean",
            Readout::Max => "max",
        })
    }
}

impl FromStr for Readout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sum" => Ok(Readout::Sum),
            "mean" => Ok(Readout::Mean),
            "max" => Ok(Readout::Max),
            other => Err(format!("unknown readout `{other}`")),
        }
    }
}

/// Architecture hyperparameters. The model has `r + 1` branches.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinConfig {
    pub r: usize,
    pub operator: OperatorKind,
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub g_layers: usize,
    pub attention: bool,
    pub dropout: f64,
    pub classifier_layers: usize,
    pub num_classes: usize,
    pub readout: Readout,
}

impl Default for SpinConfig {
    fn default() -> Self {
        Self {
            r: 3,
            operator: OperatorKind::default(),
            input_dim: 1,
            hidden_dim: 16,
            g_layers: 2,
            attention: true,
            dropout: 0.0,
            classifier_layers: 2,
            num_classes: 2,
            readout: Readout::Sum,
        }
    }
}

const KEYS: &[&str] = &[
    "r",
    "operator",
    "input_dim",
    "hidden_dim",
    "g_layers",
    "attention",
    "dropout",
    "classifier_layers",
    "num_classes",
    "readout",
];

impl SpinConfig {
    pub fn branches(&self) -> usize {
        self.r + 1
    }

    /// Length of `e_G`.
    pub fn embedding_dim(&self) -> usize {
        self.branches() * self.hidden_dim
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fail = |m: &str| Err(ModelError::InvalidConfig(m.to_string()));
        if self.input_dim == 0 {
            return fail("input_dim must be at least 1");
        }
        if self.hidden_dim == 0 {
            return fail("hidden_dim must be at least 1");
        }
        if self.g_layers == 0 {
            return fail("g_layers must be at least 1");
        }
        if self.classifier_layers == 0 {
            return fail("classifier_layers must be at least 1");
        }
        if self.num_classes < 2 {
            return fail("num_classes must be at least 2");
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail("dropout must lie in [0, 1)");
        }
        Ok(())
    }

    /// Sets one field from its textual form. Returns `Ok(false)` for keys this struct does not own.
    pub fn set(&mut self, key: &str, value: &str) -> Result<bool, ModelError> {
        let bad = || ModelError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        };
        match key {
            "r" => self.r = value.parse().map_err(|_| bad())?,
            "operator" => self.operator = value.parse().map_err(|_| bad())?,
            "input_dim" => self.input_dim = value.parse().map_err(|_| bad())?,
            "hidden_dim" => self.hidden_dim = value.parse().map_err(|_| bad())?,
            "g_layers" => self.g_layers = value.parse().map_err(|_| bad())?,
            "attention" => self.attention = value.parse().map_err(|_| bad())?,
            "dropout" => self.dropout = value.parse().map_err(|_| bad())?,
            "classifier_layers" => self.classifier_layers = value.parse().map_err(|_| bad())?,
            "num_classes" => self.num_classes = value.parse().map_err(|_| bad())?,
            "readout" => self.readout = value.parse().map_err(|_| bad())?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    pub fn to_kv(&self) -> String {
        let values = [
            self.r.to_string(),
            self.operator.to_string(),
            self.input_dim.to_string(),
            self.hidden_dim.to_string(),
            self.g_layers.to_string(),
            self.attention.to_string(),
            format!("{:?}", self.dropout),
            self.classifier_layers.to_string(),
            self.num_classes.to_string(),
            self.readout.to_string(),
        ];
        KEYS.iter().zip(values).map(|(k, v)| format!("{k} = {v}\n")).collect()
    }

    /// Parses `key = value` lines; every key must belong to this struct.
    pub fn from_kv(text: &str) -> Result<Self, ModelError> {
        let mut cfg = Self::default();
        let pairs = kv::parse(text).map_err(|e| ModelError::InvalidConfig(e.to_string()))?;
        for (k, v) in pairs {
            if !cfg.set(&k, &v)? {
                return Err(ModelError::UnknownKey(k));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
