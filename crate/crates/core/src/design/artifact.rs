use std::collections::BTreeMap;

use thiserror::Error;

use super::{AuxiliaryPair, BoundaryConditions, FreeCoefficients, ShapeParams};
use crate::poly::Polynomial;

pub const ARTIFACT_FORMAT: &str = "beamforge-design-1";

#[derive(Debug, Error, PartialEq)]
pub enum ArtifactError {
    #[error("line {line}: expected 'key = value'")]
    Syntax { line: usize },
    #[error("line {line}: duplicate key '{key}'")]
    Duplicate { line: usize, key: String },
    #[error("missing key '{0}'")]
    Missing(String),
    #[error("key '{key}': cannot parse '{value}' as a number")]
    Number { key: String, value: String },
    #[error("unsupported format '{0}'")]
    Format(String),
    #[error("invalid polynomial for '{key}': {reason}")]
    Polynomial { key: String, reason: String },
}

/// A design with free-form metadata (targets, residuals) carried alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignArtifact {
    pub pair: AuxiliaryPair,
    pub metadata: Vec<(String, String)>,
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

impl DesignArtifact {
    pub fn new(pair: AuxiliaryPair) -> Self {
        Self {
            pair,
            metadata: Vec::new(),
        }
    }

    pub fn with_metadata(mut self, entries: impl IntoIterator<Item = (String, String)>) -> Self {
        self.metadata.extend(entries);
        self
    }

    pub fn to_text(&self) -> String {
        let p = &self.pair;
        let b = &p.bcs;
        let mut lines = vec![
            ("format".to_string(), ARTIFACT_FORMAT.to_string()),
            ("t_f".into(), num(p.duration())),
            ("mass".into(), num(p.mass)),
            ("shape.u_mid".into(), num(p.shape.u_mid)),
        ];
        for (j, c) in p.u.coefficients().iter().enumerate() {
            lines.push((format!("a{j}"), num(*c)));
        }
        lines.push(("f.present".into(), p.f.is_some().to_string()));
        if let Some(f) = &p.f {
            for (k, c) in f.coefficients().iter().enumerate() {
                lines.push((format!("b{k}"), num(*c)));
            }
        }
        for (name, vals) in [
            ("bc.u_start", &b.u_start[..]),
            ("bc.u_end", &b.u_end[..]),
            ("bc.f_start", &b.f_start[..]),
            ("bc.f_end", &b.f_end[..]),
        ] {
            for (i, v) in vals.iter().enumerate() {
                lines.push((format!("{name}.{i}"), num(*v)));
            }
        }
        let roots: Vec<String> = p.matched_roots.iter().map(|&t| num(t)).collect();
        lines.push(("matched_roots".into(), roots.join(",")));
        lines.extend(self.metadata.iter().cloned());
        let mut out = String::new();
        for (k, v) in lines {
            out.push_str(&k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, ArtifactError> {
        let mut map: BTreeMap<String, String> = BTreeMap::new();
        let mut order = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ArtifactError::Syntax { line: i + 1 })?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            if map.insert(k.clone(), v).is_some() {
                return Err(ArtifactError::Duplicate { line: i + 1, key: k });
            }
            order.push(k);
        }
        let get = |k: &str| map.get(k).ok_or_else(|| ArtifactError::Missing(k.to_string()));
        let getf = |k: &str| -> Result<f64, ArtifactError> {
            let v = get(k)?;
            v.parse().map_err(|_| ArtifactError::Number {
                key: k.to_string(),
                value: v.clone(),
            })
        };
        let format = get("format")?;
        if format != ARTIFACT_FORMAT {
            return Err(ArtifactError::Format(format.clone()));
        }
        let tf = getf("t_f")?;
        let mass = getf("mass")?;
        let coeffs = |prefix: &str| -> Result<Vec<f64>, ArtifactError> {
            let mut out = Vec::new();
            while map.contains_key(&format!("{prefix}{}", out.len())) {
                out.push(getf(&format!("{prefix}{}", out.len()))?);
            }
            if out.is_empty() {
                return Err(ArtifactError::Missing(format!("{prefix}0")));
            }
            Ok(out)
        };
        let poly = |prefix: &str| -> Result<Polynomial, ArtifactError> {
            Polynomial::new(coeffs(prefix)?, tf).map_err(|e| ArtifactError::Polynomial {
                key: prefix.to_string(),
                reason: e.to_string(),
            })
        };
        let u = poly("a")?;
        let f = match get("f.present")?.as_str() {
            "true" => Some(poly("b")?),
            "false" => None,
            other => {
                return Err(ArtifactError::Number {
                    key: "f.present".into(),
                    value: other.into(),
                })
            }
        };
        let arr4 = |name: &str| -> Result<[f64; 4], ArtifactError> {
            Ok([
                getf(&format!("{name}.0"))?,
                getf(&format!("{name}.1"))?,
                getf(&format!("{name}.2"))?,
                getf(&format!("{name}.3"))?,
            ])
        };
        let arr3 = |name: &str| -> Result<[f64; 3], ArtifactError> {
            Ok([
                getf(&format!("{name}.0"))?,
                getf(&format!("{name}.1"))?,
                getf(&format!("{name}.2"))?,
            ])
        };
        let bcs = BoundaryConditions {
            duration: tf,
            mass,
            u_start: arr4("bc.u_start")?,
            u_end: arr4("bc.u_end")?,
            f_start: arr3("bc.f_start")?,
            f_end: arr3("bc.f_end")?,
        };
        let roots = get("matched_roots")?;
        let matched_roots = if roots.is_empty() {
            Vec::new()
        } else {
            roots
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|_| ArtifactError::Number {
                        key: "matched_roots".into(),
                        value: s.into(),
                    })
                })
                .collect::<Result<_, _>>()?
        };
        let c = |v: &[f64], j: usize| v.get(j).copied().unwrap_or(0.0);
        let free = FreeCoefficients {
            a9: c(u.coefficients(), 9),
            a10: c(u.coefficients(), 10),
            b10: f.as_ref().map_or(0.0, |f| c(f.coefficients(), 10)),
            b11: f.as_ref().map_or(0.0, |f| c(f.coefficients(), 11)),
        };
        let pair = AuxiliaryPair {
            u,
            f,
            mass,
            bcs,
            shape: ShapeParams {
                u_mid: getf("shape.u_mid")?,
                free,
            },
            matched_roots,
        };
        let structural = |k: &str| {
            ["format", "t_f", "mass", "shape.u_mid", "f.present", "matched_roots"].contains(&k)
                || k.starts_with("bc.")
                || is_coefficient_key(k)
        };
        let metadata = order
            .into_iter()
            .filter(|k| !structural(k))
            .map(|k| {
                let v = map[&k].clone();
                (k, v)
            })
            .collect();
        Ok(Self { pair, metadata })
    }
}

fn is_coefficient_key(k: &str) -> bool {
    let mut chars = k.chars();
    matches!(chars.next(), Some('a' | 'b')) && {
        let rest = chars.as_str();
        !rest.is_empty() && rest.chars().all(|c| c.is_ascii_digit())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{build_boundary_conditions, solve_constrained_polynomials, solve_static_center};
    use crate::scenarios;

    #[test]
    fn round_trip_is_exact() {
        let t = scenarios::extraction_targets();
        let bcs = build_boundary_conditions(&t).unwrap();
        let pair = solve_constrained_polynomials(&bcs, ShapeParams::default_for(&bcs)).unwrap();
        let art = DesignArtifact::new(pair).with_metadata([("target.R".to_string(), "0.2".to_string())]);
        let back = DesignArtifact::parse(&art.to_text()).unwrap();
        assert_eq!(back, art);
    }

    #[test]
    fn static_design_round_trips() {
        let t = scenarios::extraction_targets();
        let bcs = build_boundary_conditions(&t).unwrap();
        let pair = solve_static_center(&bcs, 3.0).unwrap();
        let art = DesignArtifact::new(pair);
        assert_eq!(DesignArtifact::parse(&art.to_text()).unwrap(), art);
    }

    #[test]
    fn malformed_documents_are_rejected() {
        assert_eq!(
            DesignArtifact::parse("nonsense"),
            Err(ArtifactError::Syntax { line: 1 })
        );
        assert!(matches!(
            DesignArtifact::parse("format = x"),
            Err(ArtifactError::Format(_))
        ));
        assert!(matches!(
            DesignArtifact::parse("format = beamforge-design-1\nt_f = 1\nt_f = 2"),
            Err(ArtifactError::Duplicate { line: 3, .. })
        ));
    }
}
