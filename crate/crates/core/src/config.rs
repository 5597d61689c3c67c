//! Run configuration files.
//!
//! A configuration is a TOML document with optional top-level `output_path`
//! and `format` keys and three optional sections:
//!
//! ```toml
//! [atom]            # SI units
//! d43 = 2.5e-29     # C·m
//! mu42 = 7.0e-23    # A·m²
//! density_N = 5e22  # m⁻³
//!
//! [drive]           # multiples of gamma_unit, except gamma_unit (s⁻¹) and phi (rad)
//! gamma_unit = 1e6
//! phi = -2.356194490192345
//!
//! [sweep]
//! dp_min = -2.5
//! dp_max = 2.5
//! points = 1001
//! variant = "corrected"   # or "as-printed"
//! mode = "literal"        # or "passive"
//! ```
//!
//! Missing keys take their default values; unknown keys are errors.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::Format;
use crate::params::{validate, AtomParameters, DriveParameters, Violation};
use crate::sweep::{join_violations, SweepConfig};

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
    pub format: Format,
    pub atom: AtomParameters,
    pub drive: DriveParameters,
    pub sweep: SweepConfig,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}{}: {message}", section.as_ref().map(|s| format!(" [{s}]")).unwrap_or_default())]
    Parse {
        line: usize,
        section: Option<String>,
        message: String,
    },
    #[error("invalid configuration: {}", join_violations(.0))]
    Validation(Vec<Violation>),
}

impl RunConfig {
    pub fn violations(&self) -> Vec<Violation> {
        let mut v = validate(&self.atom, &self.drive);
        v.extend(self.sweep.violations());
        v
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }
}

fn section_at(text: &str, line: usize) -> Option<String> {
    text.lines()
        .take(line)
        .filter_map(|l| {
            let t = l.trim();
            t.strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .map(|s| s.trim().to_owned())
        })
        .last()
}

/// Parses and validates a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(1);
        let message = e.message().replace("unknown field", "unknown key");
        ConfigError::Parse {
            line,
            section: section_at(text, line),
            message,
        }
    })?;
    let violations = config.violations();
    if violations.is_empty() {
        Ok(config)
    } else {
        Err(ConfigError::Validation(violations))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::EquationVariant;

    #[test]
    fn empty_document_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.atom.density_n, 5e22);
        assert_eq!(c.atom.d43, 2.5e-29);
        assert_eq!(c.atom.mu42, 7.0e-23);
        assert_eq!(c.drive.gamma_unit, 1e6);
        assert_eq!(
            (c.drive.gamma1, c.drive.gamma2, c.drive.gamma3),
            (1.0, 1.0, 1.0)
        );
        assert_eq!((c.drive.delta1, c.drive.delta2), (-1.5, 1.5));
        assert_eq!(c.drive.omega_p, 0.01);
        assert_eq!(c.drive.omega_mag, 2.5);
        assert_eq!(c.drive.phi, -3.0 * std::f64::consts::PI / 4.0);
        assert_eq!(c.sweep.points, 1001);
        assert_eq!(c.sweep.variant, EquationVariant::Corrected);
    }

    #[test]
    fn single_override() {
        let c = parse_config("[drive]\nphi = -2.356194490192345\n").unwrap();
        let want = RunConfig {
            drive: DriveParameters {
                phi: -2.356194490192345,
                ..Default::default()
            },
            ..Default::default()
        };
        assert_eq!(c, want);
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = parse_config("[drive]\nomega_p = 0.02\nomega_q = 1.0\n").unwrap_err();
        match &err {
            ConfigError::Parse {
                line,
                section,
                message,
            } => {
                assert_eq!(*line, 3);
                assert_eq!(section.as_deref(), Some("drive"));
                assert!(message.contains("unknown key"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_section_is_an_error() {
        assert!(matches!(
            parse_config("[probe]\nx = 1\n"),
            Err(ConfigError::Parse { .. })
        ));
    }

    #[test]
    fn invalid_values_are_reported() {
        let err = parse_config("[drive]\nomega_p = 0.0\n[sweep]\npoints = 1\n").unwrap_err();
        match err {
            ConfigError::Validation(v) => {
                let fields: Vec<_> = v.iter().map(|x| x.field).collect();
                assert_eq!(fields, ["omega_p", "points"]);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn variant_and_format_keys() {
        let c = parse_config("format = \"json\"\noutput_path = \"out/s.json\"\n[sweep]\nvariant = \"as-printed\"\nmode = \"passive\"\n")
            .unwrap();
        assert_eq!(c.format, Format::Json);
        assert_eq!(c.output_path, Some(PathBuf::from("out/s.json")));
        assert_eq!(c.sweep.variant, EquationVariant::AsPrinted);
    }

    proptest::proptest! {
        #[test]
        fn config_round_trips(phi in -10.0f64..10.0, dp in 0.001f64..1.0, points in 2usize..5000, n in 1e10f64..1e30) {
            let c = RunConfig {
                atom: AtomParameters { density_n: n, ..Default::default() },
                drive: DriveParameters { phi, delta_p: dp, ..Default::default() },
                sweep: SweepConfig { points, ..Default::default() },
                ..Default::default()
            };
            proptest::prop_assert_eq!(parse_config(&c.to_toml()).unwrap(), c);
        }
    }
}
