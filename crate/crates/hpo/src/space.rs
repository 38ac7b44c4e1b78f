//! Search-space definition, hyperparameter extraction from training-script
//! source, and conversion between named configurations and normalized
//! `[0,1]^d` vectors.
//!
//! Extraction uses a restricted line-oriented grammar: a hyperparameter is a
//! top-level statement of the form `NAME = literal` at column 0, where `NAME`
//! is ALL_CAPS and the literal is an integer, float, or quoted string. Ranges
//! are merged in from a sidecar config at build time; the bundled 14-HP
//! preset ships as data files.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Bundled sample training script matching the built-in preset.
pub const SAMPLE_TRAIN_SCRIPT: &str = include_str!("../data/sample_train.py");
/// Bundled range sidecar for the built-in 14-HP preset.
pub const PRESET_RANGES_JSON: &str = include_str!("../data/preset_ranges.json");

#[derive(Debug, thiserror::Error)]
pub enum SpaceError {
    #[error("no range entry for extracted parameter {0}")]
    MissingRange(String),
    #[error("range entry for unknown parameter {0}")]
    UnknownRange(String),
    #[error("parameter {name}: default {default} outside range")]
    DefaultOutOfRange { name: String, default: String },
    #[error("parameter {name}: {reason}")]
    BadDefinition { name: String, reason: String },
    #[error("invalid range config: {0}")]
    BadRangeConfig(String),
    #[error("invalid configuration: {0}")]
    Invalid(ValidationReport),
}

/// A single hyperparameter value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Int(i64),
    Float(f64),
    Str(String),
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Int(v) => write!(f, "{v}"),
            ParamValue::Float(v) => write!(f, "{v}"),
            ParamValue::Str(v) => write!(f, "{v}"),
        }
    }
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Int(v) => Some(*v as f64),
            ParamValue::Float(v) => Some(*v),
            ParamValue::Str(_) => None,
        }
    }

    /// Literal form as it appears in script source (strings quoted).
    pub fn to_literal(&self) -> String {
        match self {
            ParamValue::Str(s) => format!("{s:?}"),
            other => other.to_string(),
        }
    }
}

/// Bounds and scale of one hyperparameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ParamDomain {
    Integer {
        low: i64,
        high: i64,
        #[serde(default)]
        log: bool,
    },
    Real {
        low: f64,
        high: f64,
        #[serde(default)]
        log: bool,
    },
    Categorical { choices: Vec<String> },
}

/// One hyperparameter: name, domain, and the default pulled from the
/// training script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperparameterDef {
    pub name: String,
    #[serde(flatten)]
    pub domain: ParamDomain,
    pub default: ParamValue,
}

impl HyperparameterDef {
    pub fn is_categorical(&self) -> bool {
        matches!(self.domain, ParamDomain::Categorical { .. })
    }

    fn check(&self) -> Result<(), SpaceError> {
        let bad = |reason: &str| SpaceError::BadDefinition {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        match &self.domain {
            ParamDomain::Integer { low, high, log } => {
                if low >= high {
                    return Err(bad("low must be < high"));
                }
                if *log && *low <= 0 {
                    return Err(bad("log scale requires low > 0"));
                }
            }
            ParamDomain::Real { low, high, log } => {
                if !(low < high) {
                    return Err(bad("low must be < high"));
                }
                if *log && *low <= 0.0 {
                    return Err(bad("log scale requires low > 0"));
                }
            }
            ParamDomain::Categorical { choices } => {
                if choices.is_empty() {
                    return Err(bad("choices must be non-empty"));
                }
                let mut seen = std::collections::BTreeSet::new();
                for c in choices {
                    if !seen.insert(c) {
                        return Err(bad("choices must be unique"));
                    }
                }
            }
        }
        if self.violation(&self.default).is_some() {
            return Err(SpaceError::DefaultOutOfRange {
                name: self.name.clone(),
                default: self.default.to_string(),
            });
        }
        Ok(())
    }

    /// Reason this value does not satisfy the definition, if any.
    pub fn violation(&self, value: &ParamValue) -> Option<String> {
        match (&self.domain, value) {
            (ParamDomain::Integer { low, high, .. }, ParamValue::Int(v)) => {
                if v < low {
                    Some(format!("below lower bound {low}"))
                } else if v > high {
                    Some(format!("above upper bound {high}"))
                } else {
                    None
                }
            }
            (ParamDomain::Real { low, high, .. }, v) => match v.as_f64() {
                Some(x) if x < *low => Some(format!("below lower bound {low}")),
                Some(x) if x > *high => Some(format!("above upper bound {high}")),
                Some(_) => None,
                None => Some("expected a number".to_string()),
            },
            (ParamDomain::Categorical { choices }, ParamValue::Str(s)) => {
                if choices.iter().any(|c| c == s) {
                    None
                } else {
                    Some(format!("not one of {choices:?}"))
                }
            }
            (ParamDomain::Integer { .. }, _) => Some("expected an integer".to_string()),
            (ParamDomain::Categorical { .. }, _) => Some("expected a choice string".to_string()),
        }
    }

    /// Maps a valid value onto `[0,1]`. Linear params map via
    /// `(v-low)/(high-low)`, log params via the same in ln-space, and
    /// categoricals to the bin midpoint `(index + 0.5)/K`.
    pub fn normalize_value(&self, value: &ParamValue) -> f64 {
        match &self.domain {
            ParamDomain::Integer { low, high, log } => {
                let v = value.as_f64().expect("validated");
                norm_numeric(v, *low as f64, *high as f64, *log)
            }
            ParamDomain::Real { low, high, log } => {
                let v = value.as_f64().expect("validated");
                norm_numeric(v, *low, *high, *log)
            }
            ParamDomain::Categorical { choices } => {
                let s = match value {
                    ParamValue::Str(s) => s,
                    _ => panic!("validated"),
                };
                let idx = choices.iter().position(|c| c == s).expect("validated");
                (idx as f64 + 0.5) / choices.len() as f64
            }
        }
    }

    /// Inverse of [`normalize_value`]; the coordinate is clamped to `[0,1]`
    /// first, integers are rounded half-up then clamped, and categoricals
    /// decode by `min(K-1, floor(u*K))`.
    ///
    /// [`normalize_value`]: Self::normalize_value
    pub fn denormalize_coord(&self, u: f64) -> ParamValue {
        let u = u.clamp(0.0, 1.0);
        match &self.domain {
            ParamDomain::Integer { low, high, log } => {
                let raw = denorm_numeric(u, *low as f64, *high as f64, *log);
                let rounded = (raw + 0.5).floor() as i64;
                ParamValue::Int(rounded.clamp(*low, *high))
            }
            ParamDomain::Real { low, high, log } => {
                ParamValue::Float(denorm_numeric(u, *low, *high, *log).clamp(*low, *high))
            }
            ParamDomain::Categorical { choices } => {
                let k = choices.len();
                let idx = ((u * k as f64).floor() as usize).min(k - 1);
                ParamValue::Str(choices[idx].clone())
            }
        }
    }
}

fn norm_numeric(v: f64, low: f64, high: f64, log: bool) -> f64 {
    if log {
        (v.ln() - low.ln()) / (high.ln() - low.ln())
    } else {
        (v - low) / (high - low)
    }
}

fn denorm_numeric(u: f64, low: f64, high: f64, log: bool) -> f64 {
    if log {
        (low.ln() + u * (high.ln() - low.ln())).exp()
    } else {
        low + u * (high - low)
    }
}

/// Ordered, flat search space. Ordering is stable across serializations;
/// normalization depends on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: Vec<HyperparameterDef>,
}

impl SearchSpace {
    pub fn new(params: Vec<HyperparameterDef>) -> Result<Self, SpaceError> {
        let mut names = std::collections::BTreeSet::new();
        for p in &params {
            p.check()?;
            if !names.insert(p.name.clone()) {
                return Err(SpaceError::BadDefinition {
                    name: p.name.clone(),
                    reason: "duplicate parameter name".to_string(),
                });
            }
        }
        Ok(Self { params })
    }

    /// Every parameter maps to one `[0,1]` dimension, categoricals included.
    pub fn total_dims(&self) -> usize {
        self.params.len()
    }

    pub fn continuous_dims(&self) -> usize {
        self.params.iter().filter(|p| !p.is_categorical()).count()
    }

    pub fn param(&self, name: &str) -> Option<&HyperparameterDef> {
        self.params.iter().find(|p| p.name == name)
    }

    /// The configuration made of every parameter's default.
    pub fn defaults(&self) -> Configuration {
        Configuration {
            values: self
                .params
                .iter()
                .map(|p| (p.name.clone(), p.default.clone()))
                .collect(),
        }
    }

    pub fn validate(&self, config: &Configuration) -> ValidationReport {
        let mut entries = Vec::new();
        for p in &self.params {
            match config.values.get(&p.name) {
                None => entries.push(format!("{}: missing parameter", p.name)),
                Some(v) => {
                    if let Some(reason) = p.violation(v) {
                        entries.push(format!("{}: {}", p.name, reason));
                    }
                }
            }
        }
        for name in config.values.keys() {
            if self.param(name).is_none() {
                entries.push(format!("{name}: unknown parameter"));
            }
        }
        ValidationReport { entries }
    }

    pub fn normalize(&self, config: &Configuration) -> Result<UnitVector, SpaceError> {
        let report = self.validate(config);
        if !report.is_valid() {
            return Err(SpaceError::Invalid(report));
        }
        let coords = self
            .params
            .iter()
            .map(|p| p.normalize_value(&config.values[&p.name]))
            .collect();
        Ok(UnitVector { coords })
    }

    /// Total function: out-of-range coordinates are clamped.
    pub fn denormalize(&self, u: &UnitVector) -> Configuration {
        assert_eq!(u.coords.len(), self.total_dims(), "dimension mismatch");
        Configuration {
            values: self
                .params
                .iter()
                .zip(&u.coords)
                .map(|(p, &c)| (p.name.clone(), p.denormalize_coord(c)))
                .collect(),
        }
    }

    /// Normalized coordinates of the continuous (non-categorical) params only,
    /// in space order. Used by diversity metrics and synthetic objectives.
    pub fn normalize_continuous(&self, config: &Configuration) -> Result<Vec<f64>, SpaceError> {
        let u = self.normalize(config)?;
        Ok(self
            .params
            .iter()
            .zip(&u.coords)
            .filter(|(p, _)| !p.is_categorical())
            .map(|(_, &c)| c)
            .collect())
    }

    /// Stable digest over the serialized parameter list; studies persist it
    /// so resume can reject a mismatched space.
    pub fn digest(&self) -> String {
        use sha2::Digest;
        let bytes = serde_json::to_vec(self).expect("space serializes");
        let mut h = sha2::Sha256::new();
        h.update(&bytes);
        hex_string(&h.finalize())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("space serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        let space: SearchSpace = serde_json::from_str(text)
            .map_err(|e| SpaceError::BadRangeConfig(format!("space file: {e}")))?;
        SearchSpace::new(space.params)
    }

    /// The built-in 14-HP preset: the bundled sample script run through
    /// extraction and merged with the bundled range sidecar.
    pub fn preset() -> Self {
        let extracted = parse_script_hyperparameters(SAMPLE_TRAIN_SCRIPT);
        let ranges = RangeConfig::from_json(PRESET_RANGES_JSON).expect("bundled ranges parse");
        build_search_space(&extracted, &ranges).expect("bundled preset builds")
    }
}

pub(crate) fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// A named assignment of every hyperparameter in a space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Configuration {
    pub values: BTreeMap<String, ParamValue>,
}

impl Configuration {
    pub fn new(values: BTreeMap<String, ParamValue>) -> Self {
        Self { values }
    }

    pub fn get(&self, name: &str) -> Option<&ParamValue> {
        self.values.get(name)
    }
}

/// Normalized image of a configuration: one coordinate in `[0,1]` per
/// parameter, in space order.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    pub coords: Vec<f64>,
}

impl UnitVector {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }
}

/// Outcome of validating a configuration; empty means valid.
#[derive(Debug, Clone, Default)]
pub struct ValidationReport {
    pub entries: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.entries.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.entries.join("; "))
    }
}

/// One hyperparameter pulled from script source: name plus the literal
/// default. Strings become categoricals with their choices filled in at
/// range-merge time.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractedParam {
    pub name: String,
    pub default: ParamValue,
}

/// Collects, in order of first appearance, every top-level `NAME = literal`
/// assignment where `NAME` is ALL_CAPS and the literal is an integer, float,
/// or quoted string. Anything else (lowercase names, indented lines, call
/// expressions) is skipped.
pub fn parse_script_hyperparameters(source: &str) -> Vec<ExtractedParam> {
    let mut out: Vec<ExtractedParam> = Vec::new();
    for line in source.lines() {
        let Some((name, rhs)) = split_assignment(line) else {
            continue;
        };
        if out.iter().any(|p| p.name == name) {
            continue;
        }
        if let Some(value) = parse_literal(rhs) {
            out.push(ExtractedParam {
                name: name.to_string(),
                default: value,
            });
        }
    }
    out
}

/// `NAME = rhs` at column 0 with an ALL_CAPS name; returns (name, rhs).
fn split_assignment(line: &str) -> Option<(&str, &str)> {
    let bytes = line.as_bytes();
    if bytes.is_empty() || !bytes[0].is_ascii_uppercase() {
        return None;
    }
    let name_end = line
        .find(|c: char| !(c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_'))
        .unwrap_or(line.len());
    let name = &line[..name_end];
    let rest = line[name_end..].trim_start();
    let rhs = rest.strip_prefix('=')?;
    // `==` is a comparison, not an assignment.
    if rhs.starts_with('=') {
        return None;
    }
    Some((name, rhs.trim_start()))
}

/// Parses an integer, float, or quoted-string literal, allowing a trailing
/// `#` comment. Returns `None` for any other expression.
fn parse_literal(rhs: &str) -> Option<ParamValue> {
    let rhs = rhs.trim_end();
    if let Some(quote) = rhs.chars().next().filter(|c| *c == '"' || *c == '\'') {
        let body_and_rest = &rhs[1..];
        let close = body_and_rest.find(quote)?;
        let body = &body_and_rest[..close];
        let rest = body_and_rest[close + 1..].trim();
        if !(rest.is_empty() || rest.starts_with('#')) {
            return None;
        }
        return Some(ParamValue::Str(body.to_string()));
    }
    let value_part = rhs.split('#').next().unwrap_or("").trim();
    if value_part.is_empty() {
        return None;
    }
    if let Ok(i) = value_part.parse::<i64>() {
        return Some(ParamValue::Int(i));
    }
    if let Ok(f) = value_part.parse::<f64>() {
        if f.is_finite() {
            return Some(ParamValue::Float(f));
        }
    }
    None
}

/// Sidecar range config: maps parameter names to numeric bounds or
/// categorical choices. Schema per entry is `{low, high, log?}` or
/// `{choices: [...]}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(transparent)]
pub struct RangeConfig {
    pub entries: BTreeMap<String, RangeEntry>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum RangeEntry {
    Numeric {
        low: f64,
        high: f64,
        #[serde(default)]
        log: bool,
    },
    Choices { choices: Vec<String> },
}

impl RangeConfig {
    pub fn from_json(text: &str) -> Result<Self, SpaceError> {
        serde_json::from_str(text).map_err(|e| SpaceError::BadRangeConfig(e.to_string()))
    }
}

/// Merges extracted defaults with sidecar ranges into a search space.
/// Every extracted name needs a range entry, every range entry must match
/// an extracted name, and defaults must lie inside their ranges.
pub fn build_search_space(
    extracted: &[ExtractedParam],
    ranges: &RangeConfig,
) -> Result<SearchSpace, SpaceError> {
    for name in ranges.entries.keys() {
        if !extracted.iter().any(|p| &p.name == name) {
            return Err(SpaceError::UnknownRange(name.clone()));
        }
    }
    let mut params = Vec::with_capacity(extracted.len());
    for ex in extracted {
        let entry = ranges
            .entries
            .get(&ex.name)
            .ok_or_else(|| SpaceError::MissingRange(ex.name.clone()))?;
        let domain = match (&ex.default, entry) {
            (ParamValue::Int(_), RangeEntry::Numeric { low, high, log }) => ParamDomain::Integer {
                low: *low as i64,
                high: *high as i64,
                log: *log,
            },
            (ParamValue::Float(_), RangeEntry::Numeric { low, high, log }) => ParamDomain::Real {
                low: *low,
                high: *high,
                log: *log,
            },
            (ParamValue::Str(_), RangeEntry::Choices { choices }) => ParamDomain::Categorical {
                choices: choices.clone(),
            },
            _ => {
                return Err(SpaceError::BadDefinition {
                    name: ex.name.clone(),
                    reason: "range entry kind does not match extracted literal".to_string(),
                })
            }
        };
        params.push(HyperparameterDef {
            name: ex.name.clone(),
            domain,
            default: ex.default.clone(),
        });
    }
    SearchSpace::new(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn preset() -> SearchSpace {
        SearchSpace::preset()
    }

    #[test]
    fn extracts_all_caps_literal_assignments() {
        let out = parse_script_hyperparameters("DEPTH = 8\n");
        assert_eq!(
            out,
            vec![ExtractedParam {
                name: "DEPTH".to_string(),
                default: ParamValue::Int(8),
            }]
        );
    }

    #[test]
    fn lowercase_names_are_excluded() {
        assert!(parse_script_hyperparameters("depth = 8\n").is_empty());
    }

    #[test]
    fn non_literal_rhs_is_excluded() {
        assert!(parse_script_hyperparameters("DEPTH = compute_depth()\n").is_empty());
        assert!(parse_script_hyperparameters("DEPTH = 2 * 4\n").is_empty());
        assert!(parse_script_hyperparameters("    DEPTH = 8\n").is_empty());
        assert!(parse_script_hyperparameters("DEPTH == 8\n").is_empty());
    }

    #[test]
    fn literals_with_comments_and_strings() {
        let out = parse_script_hyperparameters(
            "LR = 0.5  # learning rate\nPATTERN = \"SSSL\"  # window\nNEG = -3\n",
        );
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].default, ParamValue::Float(0.5));
        assert_eq!(out[1].default, ParamValue::Str("SSSL".to_string()));
        assert_eq!(out[2].default, ParamValue::Int(-3));
    }

    #[test]
    fn extraction_is_idempotent() {
        let a = parse_script_hyperparameters(SAMPLE_TRAIN_SCRIPT);
        let b = parse_script_hyperparameters(SAMPLE_TRAIN_SCRIPT);
        assert_eq!(a, b);
    }

    #[test]
    fn preset_matches_published_table() {
        let space = preset();
        assert_eq!(space.total_dims(), 14);
        assert_eq!(space.continuous_dims(), 13);
        let names: Vec<&str> = space.params.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(
            names,
            [
                "DEPTH",
                "ASPECT_RATIO",
                "HEAD_DIM",
                "DEVICE_BATCH_SIZE",
                "TOTAL_BATCH_SIZE",
                "EMBEDDING_LR",
                "UNEMBEDDING_LR",
                "MATRIX_LR",
                "SCALAR_LR",
                "WEIGHT_DECAY",
                "WARMUP_RATIO",
                "WARMDOWN_RATIO",
                "FINAL_LR_FRAC",
                "WINDOW_PATTERN",
            ]
        );
        let head_dim = space.param("HEAD_DIM").unwrap();
        assert_eq!(
            head_dim.domain,
            ParamDomain::Integer {
                low: 64,
                high: 256,
                log: true
            }
        );
        assert_eq!(head_dim.default, ParamValue::Int(128));
        let wp = space.param("WINDOW_PATTERN").unwrap();
        assert_eq!(
            wp.domain,
            ParamDomain::Categorical {
                choices: ["SSSL", "SSLL", "SLSL", "LLLL", "SSSS", "LSSL"]
                    .iter()
                    .map(|s| s.to_string())
                    .collect()
            }
        );
        assert_eq!(wp.default, ParamValue::Str("SSSL".to_string()));
        assert_eq!(
            space.param("TOTAL_BATCH_SIZE").unwrap().domain,
            ParamDomain::Integer {
                low: 65_536,
                high: 2_097_152,
                log: true
            }
        );
        assert_eq!(
            space.param("WEIGHT_DECAY").unwrap().default,
            ParamValue::Float(0.2)
        );
    }

    #[test]
    fn build_merges_ranges_with_log_flag() {
        let extracted = vec![ExtractedParam {
            name: "HEAD_DIM".to_string(),
            default: ParamValue::Int(128),
        }];
        let ranges =
            RangeConfig::from_json(r#"{"HEAD_DIM": {"low": 64, "high": 256, "log": true}}"#)
                .unwrap();
        let space = build_search_space(&extracted, &ranges).unwrap();
        assert_eq!(
            space.params[0].domain,
            ParamDomain::Integer {
                low: 64,
                high: 256,
                log: true
            }
        );
    }

    #[test]
    fn build_rejects_default_out_of_range() {
        let extracted = vec![ExtractedParam {
            name: "DEPTH".to_string(),
            default: ParamValue::Int(30),
        }];
        let ranges = RangeConfig::from_json(r#"{"DEPTH": {"low": 4, "high": 24}}"#).unwrap();
        let err = build_search_space(&extracted, &ranges).unwrap_err();
        assert!(matches!(err, SpaceError::DefaultOutOfRange { .. }));
    }

    #[test]
    fn build_rejects_missing_and_unknown_ranges() {
        let extracted = vec![ExtractedParam {
            name: "DEPTH".to_string(),
            default: ParamValue::Int(8),
        }];
        let empty = RangeConfig::from_json("{}").unwrap();
        assert!(matches!(
            build_search_space(&extracted, &empty).unwrap_err(),
            SpaceError::MissingRange(name) if name == "DEPTH"
        ));
        let extra =
            RangeConfig::from_json(r#"{"DEPTH": {"low": 4, "high": 24}, "X": {"low": 0, "high": 1}}"#)
                .unwrap();
        assert!(matches!(
            build_search_space(&extracted, &extra).unwrap_err(),
            SpaceError::UnknownRange(name) if name == "X"
        ));
    }

    #[test]
    fn normalize_known_values() {
        let space = preset();
        let mut config = space.defaults();
        config
            .values
            .insert("HEAD_DIM".to_string(), ParamValue::Int(128));
        let u = space.normalize(&config).unwrap();
        let idx = |name: &str| space.params.iter().position(|p| p.name == name).unwrap();
        // geometric midpoint of log range 64..256
        assert!((u.coords[idx("HEAD_DIM")] - 0.5).abs() < 1e-12);
        // 0.2 on linear 0..0.5
        assert!((u.coords[idx("WEIGHT_DECAY")] - 0.4).abs() < 1e-12);
        config
            .values
            .insert("DEPTH".to_string(), ParamValue::Int(4));
        let u = space.normalize(&config).unwrap();
        assert_eq!(u.coords[idx("DEPTH")], 0.0);
    }

    #[test]
    fn denormalize_known_values() {
        let space = preset();
        let head_dim = space.param("HEAD_DIM").unwrap();
        assert_eq!(head_dim.denormalize_coord(0.5), ParamValue::Int(128));
        let wp = space.param("WINDOW_PATTERN").unwrap();
        assert_eq!(wp.denormalize_coord(0.999), ParamValue::Str("LSSL".into()));
        assert_eq!(wp.denormalize_coord(1.0), ParamValue::Str("LSSL".into()));
        assert_eq!(wp.denormalize_coord(1.7), ParamValue::Str("LSSL".into()));
    }

    #[test]
    fn validate_reports_violations() {
        let space = preset();
        assert!(space.validate(&space.defaults()).is_valid());
        let mut config = space.defaults();
        config
            .values
            .insert("DEPTH".to_string(), ParamValue::Int(3));
        let report = space.validate(&config);
        assert_eq!(report.entries, vec!["DEPTH: below lower bound 4"]);
        let mut config = space.defaults();
        config.values.remove("SCALAR_LR");
        let report = space.validate(&config);
        assert_eq!(report.entries, vec!["SCALAR_LR: missing parameter"]);
    }

    #[test]
    fn space_serialization_round_trips() {
        let space = preset();
        let json = space.to_json();
        let back = SearchSpace::from_json(&json).unwrap();
        assert_eq!(space, back);
        assert_eq!(space.digest(), back.digest());
    }

    fn arbitrary_config(space: &SearchSpace, raw: &[f64]) -> Configuration {
        space.denormalize(&UnitVector::new(raw.to_vec()))
    }

    proptest! {
        #[test]
        fn round_trip_is_exact(raw in proptest::collection::vec(0.0f64..=1.0, 14)) {
            let space = preset();
            let config = arbitrary_config(&space, &raw);
            let u = space.normalize(&config).unwrap();
            let back = space.denormalize(&u);
            for p in &space.params {
                let a = &config.values[&p.name];
                let b = &back.values[&p.name];
                match (a, b) {
                    (ParamValue::Float(x), ParamValue::Float(y)) => {
                        let rel = if *x == 0.0 { (y - x).abs() } else { ((y - x) / x).abs() };
                        prop_assert!(rel <= 1e-12, "{}: {} vs {}", p.name, x, y);
                    }
                    _ => prop_assert_eq!(a, b, "{}", &p.name),
                }
            }
        }

        #[test]
        fn normalize_is_monotone_in_numeric_params(
            a in 0.0f64..=1.0,
            b in 0.0f64..=1.0,
        ) {
            let space = preset();
            let p = space.param("EMBEDDING_LR").unwrap();
            let (lo, hi) = (a.min(b), a.max(b));
            prop_assume!(hi - lo > 1e-9);
            let va = p.denormalize_coord(lo).as_f64().unwrap();
            let vb = p.denormalize_coord(hi).as_f64().unwrap();
            prop_assume!(vb > va);
            let na = p.normalize_value(&ParamValue::Float(va));
            let nb = p.normalize_value(&ParamValue::Float(vb));
            prop_assert!(nb > na);
        }
    }
}
