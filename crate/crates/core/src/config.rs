//! Experiment configuration files.
//!
//! A small JSON document:
//!
//! ```json
//! {
//!   "beam_waist_um": 55.0,
//!   "alpha_rad": "pi/4",
//!   "beta_rad": "3pi/4 + 0.022",
//!   "crystal": { "thickness_um": 331.0, "n_e": 1.55165, "n_o": 1.54261,
//!                "theta_deg": 30.0, "wavelength_nm": 633.0 },
//!   "rule": { "critical_point": 1.0 }
//! }
//! ```
//!
//! Angles are radians, given either as numbers or as strings that may use
//! `pi` (`"3pi/4"`, `"pi/4 - 0.01"`) or end in `deg` (`"135deg"`). They are
//! written back as plain radians.

use std::fmt;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::hypothesis::DecisionRule;
use crate::optics::{CrystalSpec, ExperimentSetup};

/// The quartz-plate experiment with the near-crossed analyzer of case (b).
pub const BUNDLED_JSON: &str = include_str!("../examples/quartz_plate.json");

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Angle(pub f64);

impl Serialize for Angle {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Angle {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct AngleVisitor;

        impl Visitor<'_> for AngleVisitor {
            type Value = Angle;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an angle in radians, as a number or a string such as \"3pi/4\" or \"45deg\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Angle, E> {
                Ok(Angle(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Angle, E> {
                Ok(Angle(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Angle, E> {
                Ok(Angle(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Angle, E> {
                parse_angle(v).map(Angle).map_err(E::custom)
            }
        }

        d.deserialize_any(AngleVisitor)
    }
}

/// Parse `"3pi/4 + 0.022"`, `"-pi/8"`, `"135deg"`, `"0.5"`, `"2.2e-2"`.
pub fn parse_angle(text: &str) -> std::result::Result<f64, String> {
    let trimmed = text.trim();
    let (expr, scale) = match trimmed.strip_suffix("deg") {
        Some(rest) => (rest, std::f64::consts::PI / 180.0),
        None => (trimmed.strip_suffix("rad").unwrap_or(trimmed), 1.0),
    };
    let mut parser = AngleParser {
        chars: expr.chars().filter(|c| !c.is_whitespace()).collect(),
        pos: 0,
    };
    let value = parser.sum().map_err(|e| format!("cannot parse angle {text:?}: {e}"))?;
    if parser.pos != parser.chars.len() {
        return Err(format!("cannot parse angle {text:?}: trailing input"));
    }
    Ok(value * scale)
}

struct AngleParser {
    chars: Vec<char>,
    pos: usize,
}

impl AngleParser {
    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn sum(&mut self) -> std::result::Result<f64, String> {
        let mut total = self.signed_term()?;
        while let Some(op) = self.peek() {
            match op {
                '+' => {
                    self.pos += 1;
                    total += self.term()?;
                }
                '-' => {
                    self.pos += 1;
                    total -= self.term()?;
                }
                other => return Err(format!("unexpected {other:?}")),
            }
        }
        Ok(total)
    }

    fn signed_term(&mut self) -> std::result::Result<f64, String> {
        match self.peek() {
            Some('-') => {
                self.pos += 1;
                Ok(-self.term()?)
            }
            Some('+') => {
                self.pos += 1;
                self.term()
            }
            _ => self.term(),
        }
    }

    // term := [number] ['*'] ['pi'] ['/' number]
    fn term(&mut self) -> std::result::Result<f64, String> {
        let coefficient = self.number();
        if self.peek() == Some('*') {
            self.pos += 1;
        }
        let has_pi = self.chars[self.pos..].starts_with(&['p', 'i']);
        if has_pi {
            self.pos += 2;
        }
        let mut value = match (coefficient, has_pi) {
            (Some(c), true) => c * std::f64::consts::PI,
            (None, true) => std::f64::consts::PI,
            (Some(c), false) => c,
            (None, false) => return Err("expected a number or pi".into()),
        };
        if self.peek() == Some('/') {
            self.pos += 1;
            let den = self.number().ok_or("expected a denominator")?;
            value /= den;
        }
        Ok(value)
    }

    fn number(&mut self) -> Option<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
            self.pos += 1;
        }
        if self.pos > start && matches!(self.peek(), Some('e' | 'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            let digits = self.pos;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == digits {
                self.pos = mark;
            }
        }
        if self.pos == start {
            return None;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        match text.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                self.pos = start;
                None
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrystalFile {
    pub thickness_um: f64,
    pub n_e: f64,
    pub n_o: f64,
    pub theta_deg: f64,
    pub wavelength_nm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleFile {
    pub critical_point: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub beam_waist_um: f64,
    pub alpha_rad: Angle,
    pub beta_rad: Angle,
    pub crystal: CrystalFile,
    pub rule: RuleFile,
}

impl ExperimentFile {
    /// Parse and validate. Syntax errors carry serde's line/column; invalid
    /// values name the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let file: ExperimentFile = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        file.setup()?;
        file.rule()?;
        Ok(file)
    }

    pub fn bundled() -> Self {
        Self::from_json(BUNDLED_JSON).expect("bundled configuration is valid")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn crystal_spec(&self) -> Result<CrystalSpec> {
        let c = &self.crystal;
        CrystalSpec::new(c.thickness_um, c.n_e, c.n_o, c.theta_deg.to_radians(), c.wavelength_nm)
            .map_err(|e| Error::Config(format!("crystal.{}", field_message(&e))))
    }

    pub fn setup(&self) -> Result<ExperimentSetup> {
        let crystal = self.crystal_spec()?;
        ExperimentSetup::new(self.beam_waist_um, self.alpha_rad.0, self.beta_rad.0, crystal).map_err(|e| {
            let msg = field_message(&e);
            Error::Config(msg.replace("alpha", "alpha_rad").replace("beta", "beta_rad"))
        })
    }

    pub fn rule(&self) -> Result<DecisionRule> {
        DecisionRule::new(self.rule.critical_point).map_err(|e| Error::Config(format!("rule.{}", field_message(&e))))
    }
}

fn field_message(e: &Error) -> String {
    match e {
        Error::InvalidParameter { field, reason } => format!("{field}: {reason}"),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn angle_expressions() {
        assert_eq!(parse_angle("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_angle("3pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_angle("3*pi/4 + 2.2e-2").unwrap(), 3.0 * PI / 4.0 + 0.022);
        assert_eq!(parse_angle("-pi/8").unwrap(), -PI / 8.0);
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert_eq!(parse_angle("0.25rad").unwrap(), 0.25);
        assert!((parse_angle("45deg").unwrap() - PI / 4.0).abs() < 1e-15);
        assert!((parse_angle("135 deg").unwrap() - 3.0 * PI / 4.0).abs() < 1e-15);
        assert!(parse_angle("pie").is_err());
        assert!(parse_angle("").is_err());
        assert!(parse_angle("1/").is_err());
    }

    #[test]
    fn bundled_file_is_the_case_b_setup() {
        let f = ExperimentFile::bundled();
        let s = f.setup().unwrap();
        assert_eq!(s.beam_waist_um, 55.0);
        assert_eq!(s.alpha, PI / 4.0);
        assert_eq!(s.beta, 3.0 * PI / 4.0 + 0.022);
        assert_eq!(s.crystal.incidence_angle_rad, 30f64.to_radians());
        assert_eq!(f.rule().unwrap().critical_point(), 1.0);
    }

    #[test]
    fn round_trip_preserves_setup() {
        let f = ExperimentFile::bundled();
        let again = ExperimentFile::from_json(&f.to_json()).unwrap();
        assert_eq!(f, again);
        assert_eq!(f.setup().unwrap(), again.setup().unwrap());
    }

    #[test]
    fn missing_field_is_named() {
        let text = BUNDLED_JSON.replace("\"n_o\": 1.54261,", "");
        let err = ExperimentFile::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("n_o") && err.contains("line"), "{err}");
    }

    #[test]
    fn invalid_values_are_named() {
        let text = BUNDLED_JSON.replace("\"beam_waist_um\": 55.0", "\"beam_waist_um\": -1");
        let err = ExperimentFile::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("beam_waist_um"), "{err}");
        let text = BUNDLED_JSON.replace("\"n_e\": 1.55165", "\"n_e\": 0.5");
        let err = ExperimentFile::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("crystal.n_e"), "{err}");
        let text = BUNDLED_JSON.replace("\"critical_point\": 1.0", "\"critical_point\": 0");
        assert!(ExperimentFile::from_json(&text)
            .unwrap_err()
            .to_string()
            .contains("rule.critical_point"));
        let text = BUNDLED_JSON.replace("\"pi/4\"", "\"quarter\"");
        let err = ExperimentFile::from_json(&text).unwrap_err().to_string();
        assert!(err.contains("quarter") && err.contains("line 3"), "{err}");
        let text = BUNDLED_JSON.replace("\"rule\"", "\"rules\"");
        assert!(ExperimentFile::from_json(&text).is_err());
    }
}
