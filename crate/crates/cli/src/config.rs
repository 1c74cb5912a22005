//! Flat `key = value` run configuration with annotated units.
//!
//! One key per line, `#` starts a comment. Quantities accept a unit suffix
//! (`0.85 MHz`, `250 um`, `0.94 us`); bare numbers are SI. Frequencies
//! given in Hz, kHz or MHz are cyclic and converted to rad/s. Lists are
//! comma separated with one trailing unit for all entries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected 'key = value', got '{text}'")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: duplicate key '{key}'")]
    Duplicate { line: usize, key: String },
    #[error("invalid value for '{key}': {reason}")]
    Value { key: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    Frequency,
    Length,
    Time,
    Velocity,
    Temperature,
    Voltage,
    Mass,
    Number,
    Count,
    Flag,
    Word(&'static [&'static str]),
    Path,
}

impl Kind {
    /// `(suffix, factor to SI)`; the first entry is the SI unit written back.
    fn units(self) -> &'static [(&'static str, f64)] {
        use std::f64::consts::TAU;
        match self {
            Kind::Frequency => &[("rad/s", 1.0), ("MHz", TAU * 1e6), ("kHz", TAU * 1e3), ("Hz", TAU)],
            Kind::Length => &[("m", 1.0), ("mm", 1e-3), ("um", 1e-6), ("nm", 1e-9)],
            Kind::Time => &[("s", 1.0), ("ms", 1e-3), ("us", 1e-6), ("ns", 1e-9)],
            Kind::Velocity => &[("m/s", 1.0), ("km/s", 1e3)],
            Kind::Temperature => &[("K", 1.0), ("mK", 1e-3)],
            Kind::Voltage => &[("V", 1.0), ("mV", 1e-3)],
            Kind::Mass => &[("kg", 1.0), ("u", beamforge_core::physics::ATOMIC_MASS_UNIT)],
            _ => &[],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Bound {
    Any,
    Positive,
    NonNegative,
    NonZero,
}

#[derive(Debug, Clone, Copy)]
struct Field {
    key: &'static str,
    kind: Kind,
    list: bool,
    bound: Bound,
    default: &'static str,
}

const fn field(key: &'static str, kind: Kind, bound: Bound, default: &'static str) -> Field {
    Field {
        key,
        kind,
        list: false,
        bound,
        default,
    }
}

const fn list(key: &'static str, kind: Kind, bound: Bound, default: &'static str) -> Field {
    Field {
        key,
        kind,
        list: true,
        bound,
        default,
    }
}

const AXIAL_KINDS: &[&str] = &["polynomial", "static"];
const RADIAL_MODES: &[&str] = &["none", "momentum", "position"];
const NOISE_MODES: &[&str] = &["per-shot-offset", "white"];
const FORCE_MODELS: &[&str] = &["effective-harmonic", "full-potential"];

/// Radial duration default, `1 / (2 pi 1.4 MHz)`.
const RADIAL_DURATION: &str = "1.1368210220849668e-7 s";

use Bound::*;
use Kind::*;

const SCHEMA: &[Field] = &[
    field("species.mass", Mass, Positive, "28.006 u"),
    field("species.charge", Number, NonZero, "1"),
    field("thermal.temperature", Temperature, NonNegative, "1000 K"),
    field("axial.kind", Word(AXIAL_KINDS), Any, "polynomial"),
    field("axial.scaling", Number, NonZero, "0.2"),
    field("axial.velocity", Velocity, Any, "5 km/s"),
    field("axial.freq_start", Frequency, Positive, "0.85 MHz"),
    field("axial.freq_end", Frequency, Positive, "0.85 MHz"),
    field("axial.final_center", Length, Any, "250 um"),
    field("axial.final_center_velocity", Velocity, Any, "10 km/s"),
    field("axial.duration", Time, Positive, "0.94 us"),
    field("axial.u_mid", Number, Any, "13"),
    field("axial.a9", Number, Any, "0"),
    field("axial.a10", Number, Any, "0"),
    field("axial.b10", Number, Any, "0"),
    field("axial.b11", Number, Any, "0"),
    field("axial.optimize", Flag, Any, "true"),
    field("axial.voltage_limit", Voltage, NonNegative, "9 V"),
    field("optimize.grid", Count, Positive, "2048"),
    field("optimize.max_iterations", Count, Any, "500"),
    field("optimize.restarts", Count, Any, "2"),
    field("design.grid", Count, Positive, "2048"),
    field("design.artifact", Path, Any, ""),
    field("radial.mode", Word(RADIAL_MODES), Any, "momentum"),
    field("radial.scaling", Number, Positive, "0.2"),
    field("radial.freq_start", Frequency, Positive, "1.4 MHz"),
    field("radial.freq_end", Frequency, Positive, "1.4 MHz"),
    field("radial.duration", Time, Positive, RADIAL_DURATION),
    field("electrode1.amplitude", Number, NonZero, "0.2"),
    field("electrode1.center", Length, Any, "0 um"),
    field("electrode1.sigma", Length, Positive, "200 um"),
    field("electrode2.amplitude", Number, NonZero, "0.2"),
    field("electrode2.center", Length, Any, "250 um"),
    field("electrode2.sigma", Length, Positive, "200 um"),
    field("beamline.flight_distance", Length, Positive, "300 mm"),
    field("beamline.focal_length", Length, Positive, "13 mm"),
    field("beamline.velocity", Velocity, Positive, "50 km/s"),
    field("noise.level", Number, NonNegative, "0"),
    field("noise.mode", Word(NOISE_MODES), Any, "per-shot-offset"),
    field("noise.force", Word(FORCE_MODELS), Any, "effective-harmonic"),
    field("simulate.samples", Count, Positive, "10000"),
    field("simulate.steps", Count, Positive, "4000"),
    field("simulate.checkpoints", Count, Positive, "20"),
    field("run.seed", Count, Any, "1"),
    list("sweep.noise.levels", Number, NonNegative, "1e-5, 1e-3, 1e-1"),
    field("sweep.noise.shots", Count, Positive, "50"),
    field("sweep.noise.samples", Count, Positive, "1000"),
    list("sweep.temperature.values", Temperature, NonNegative, "4, 300, 1000 K"),
    list("sweep.radial.values", Number, Positive, "1, 0.5, 0.2, 0.1, 0.05"),
    list("sweep.velocity.values", Velocity, Any, "1, 2, 5 km/s"),
];

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Real(f64),
    Reals(Vec<f64>),
    Count(u64),
    Flag(bool),
    Text(String),
}

/// A fully resolved configuration: every schema key has a value.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<&'static str, Value>,
}

fn schema_field(key: &str) -> Option<&'static Field> {
    SCHEMA.iter().find(|f| f.key == key)
}

fn value_error(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn parse_number(key: &str, text: &str) -> Result<f64, ConfigError> {
    let v: f64 = text
        .trim()
        .parse()
        .map_err(|_| value_error(key, format!("'{text}' is not a number")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(value_error(key, "must be finite"))
    }
}

/// Split a trailing unit off `text` and return `(numbers part, SI factor)`.
fn split_unit<'t>(f: &Field, text: &'t str) -> Result<(&'t str, f64), ConfigError> {
    let units = f.kind.units();
    let t = text.trim();
    if let Some((num, unit)) = t.rsplit_once(' ') {
        let unit = unit.trim();
        if unit.chars().next().is_some_and(|c| c.is_ascii_alphabetic()) {
            return units
                .iter()
                .find(|(u, _)| *u == unit)
                .map(|&(_, factor)| (num, factor))
                .ok_or_else(|| value_error(f.key, format!("unknown unit '{unit}'")));
        }
    }
    Ok((t, 1.0))
}

fn check_bound(f: &Field, v: f64) -> Result<(), ConfigError> {
    let ok = match f.bound {
        Any => true,
        Positive => v > 0.0,
        NonNegative => v >= 0.0,
        NonZero => v != 0.0,
    };
    if ok {
        Ok(())
    } else {
        let what = match f.bound {
            Positive => "positive",
            NonNegative => "non-negative",
            _ => "nonzero",
        };
        Err(value_error(f.key, format!("must be {what}, got {v}")))
    }
}

fn parse_value(f: &Field, text: &str) -> Result<Value, ConfigError> {
    let text = text.trim();
    match f.kind {
        Flag => match text {
            "true" => Ok(Value::Flag(true)),
            "false" => Ok(Value::Flag(false)),
            _ => Err(value_error(f.key, format!("'{text}' is not true or false"))),
        },
        Word(options) => {
            if options.contains(&text) {
                Ok(Value::Text(text.to_string()))
            } else {
                Err(value_error(
                    f.key,
                    format!("'{text}' is not one of {}", options.join(", ")),
                ))
            }
        }
        Path => Ok(Value::Text(text.to_string())),
        Count => {
            let n: u64 = text
                .parse()
                .map_err(|_| value_error(f.key, format!("'{text}' is not a non-negative integer")))?;
            check_bound(f, n as f64)?;
            Ok(Value::Count(n))
        }
        _ => {
            let (nums, factor) = split_unit(f, text)?;
            let parse_one = |s: &str| -> Result<f64, ConfigError> {
                let v = parse_number(f.key, s)? * factor;
                check_bound(f, v)?;
                Ok(v)
            };
            if f.list {
                let items: Vec<&str> = nums.split(',').map(str::trim).collect();
                if items.iter().any(|s| s.is_empty()) {
                    return Err(value_error(f.key, "list entries must be non-empty"));
                }
                Ok(Value::Reals(
                    items.into_iter().map(parse_one).collect::<Result<_, _>>()?,
                ))
            } else {
                Ok(Value::Real(parse_one(nums)?))
            }
        }
    }
}

fn format_value(f: &Field, v: &Value) -> String {
    let unit = f.kind.units().first().map(|(u, _)| format!(" {u}")).unwrap_or_default();
    match v {
        Value::Real(x) => format!("{x:e}{unit}"),
        Value::Reals(xs) => {
            let items: Vec<String> = xs.iter().map(|x| format!("{x:e}")).collect();
            format!("{}{unit}", items.join(", "))
        }
        Value::Count(n) => n.to_string(),
        Value::Flag(b) => b.to_string(),
        Value::Text(s) => s.clone(),
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        let values = SCHEMA
            .iter()
            .map(|f| (f.key, parse_value(f, f.default).expect("schema defaults parse")))
            .collect();
        Self { values }
    }
}

impl RunConfig {
    /// Start from the defaults and apply every line of `text`.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line,
                    text: raw.to_string(),
                });
            };
            let key = key.trim();
            let f = schema_field(key).ok_or_else(|| ConfigError::UnknownKey {
                line,
                key: key.to_string(),
            })?;
            if seen.insert(f.key, line).is_some() {
                return Err(ConfigError::Duplicate {
                    line,
                    key: key.to_string(),
                });
            }
            cfg.values.insert(f.key, parse_value(f, value)?);
        }
        Ok(cfg)
    }

    /// Override one key from its textual form.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let f = schema_field(key).ok_or_else(|| ConfigError::UnknownKey {
            line: 0,
            key: key.to_string(),
        })?;
        self.values.insert(f.key, parse_value(f, value)?);
        Ok(())
    }

    /// Every key in schema order, SI units.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in SCHEMA {
            let _ = writeln!(out, "{} = {}", f.key, format_value(f, &self.values[f.key]));
        }
        out
    }

    pub fn real(&self, key: &str) -> f64 {
        match self.values.get(key) {
            Some(Value::Real(x)) => *x,
            other => panic!("{key} is not a scalar quantity: {other:?}"),
        }
    }

    pub fn reals(&self, key: &str) -> &[f64] {
        match self.values.get(key) {
            Some(Value::Reals(x)) => x,
            other => panic!("{key} is not a list: {other:?}"),
        }
    }

    pub fn count(&self, key: &str) -> u64 {
        match self.values.get(key) {
            Some(Value::Count(n)) => *n,
            other => panic!("{key} is not a count: {other:?}"),
        }
    }

    pub fn flag(&self, key: &str) -> bool {
        match self.values.get(key) {
            Some(Value::Flag(b)) => *b,
            other => panic!("{key} is not a flag: {other:?}"),
        }
    }

    pub fn text(&self, key: &str) -> &str {
        match self.values.get(key) {
            Some(Value::Text(s)) => s,
            other => panic!("{key} is not text: {other:?}"),
        }
    }
}
