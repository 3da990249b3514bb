//! Plain-text model configuration.
//!
//! One `key = value` line per scalar and `key = t0:v0, t1:v1, ...` for
//! profiles. Keys: `lambda`, `mu1`, `mu2`, `beta`, `p`, `n` (profiles, a bare
//! number means a constant profile), `x1_0`, `x2_0`, `horizon` (scalars).
//! Whitespace is ignored and `#` starts a comment.
//!
//! ```text
//! # service node with orbit
//! lambda  = 0:45, 2:55, 4:45, 6:55, 8:45, 10:55, 12:45, 14:55, 16:45, 18:55
//! mu1     = 1
//! mu2     = 0.2
//! beta    = 2.0
//! p       = 0.5
//! n       = 50
//! x1_0    = 40
//! x2_0    = 0
//! horizon = 20
//! ```

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::model::{ModelError, ModelSpec, State, TimeProfile};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing key `{0}`")]
    MissingKey(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

const PROFILE_KEYS: [&str; 6] = ["lambda", "mu1", "mu2", "beta", "p", "n"];
const SCALAR_KEYS: [&str; 3] = ["x1_0", "x2_0", "horizon"];

/// Parses a full model from configuration text.
pub fn parse_model(text: &str) -> Result<ModelSpec, ConfigError> {
    let mut entries: HashMap<&str, (usize, String)> = HashMap::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::Parse {
                line: line_no,
                msg: format!("expected `key = value`, got `{line}`"),
            });
        };
        let key = key.trim();
        let value = value.trim();
        let Some(canonical) = PROFILE_KEYS
            .iter()
            .chain(SCALAR_KEYS.iter())
            .find(|k| **k == key)
        else {
            return Err(ConfigError::Parse {
                line: line_no,
                msg: format!("unknown key `{key}`"),
            });
        };
        if let Some((first_line, _)) = entries.get(canonical) {
            return Err(ConfigError::Parse {
                line: line_no,
                msg: format!("duplicate key `{key}` (first set on line {first_line})"),
            });
        }
        entries.insert(canonical, (line_no, value.to_string()));
    }

    let mut profile = |key: &'static str| -> Result<TimeProfile, ConfigError> {
        let (line, value) = entries.remove(key).ok_or(ConfigError::MissingKey(key))?;
        parse_profile(&value).map_err(|msg| ConfigError::Parse { line, msg })
    };
    let lambda = profile("lambda")?;
    let mu1 = profile("mu1")?;
    let mu2 = profile("mu2")?;
    let beta = profile("beta")?;
    let p = profile("p")?;
    let n = profile("n")?;

    let mut scalar = |key: &'static str| -> Result<f64, ConfigError> {
        let (line, value) = entries.remove(key).ok_or(ConfigError::MissingKey(key))?;
        value.parse::<f64>().map_err(|_| ConfigError::Parse {
            line,
            msg: format!("`{value}` is not a number"),
        })
    };
    let x1_0 = scalar("x1_0")?;
    let x2_0 = scalar("x2_0")?;
    let horizon = scalar("horizon")?;

    Ok(ModelSpec::new(
        lambda,
        mu1,
        mu2,
        beta,
        p,
        n,
        State::new(x1_0, x2_0),
        horizon,
    )?)
}

/// Loads and parses a model configuration file.
pub fn load_model(path: &Path) -> Result<ModelSpec, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model(&text)
}

fn parse_profile(value: &str) -> Result<TimeProfile, String> {
    if !value.contains(':') {
        let v = value
            .parse::<f64>()
            .map_err(|_| format!("`{value}` is not a number"))?;
        return Ok(TimeProfile::constant(v));
    }
    let mut breakpoints = Vec::new();
    let mut values = Vec::new();
    for part in value.split(',') {
        let part = part.trim();
        let Some((t, v)) = part.split_once(':') else {
            return Err(format!("expected `time:value`, got `{part}`"));
        };
        let t = t
            .trim()
            .parse::<f64>()
            .map_err(|_| format!("`{}` is not a time", t.trim()))?;
        let v = v
            .trim()
            .parse::<f64>()
            .map_err(|_| format!("`{}` is not a value", v.trim()))?;
        breakpoints.push(t);
        values.push(v);
    }
    TimeProfile::new(breakpoints, values).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = "\
# comment line
lambda  = 0:45, 2:55, 4:45   # trailing comment
mu1=1
 mu2 = 0.2
beta = 2.0
p = 0.5
n = 50
x1_0 = 40
x2_0 = 0
horizon = 20
";

    #[test]
    fn parses_full_config() {
        let spec = parse_model(GOOD).unwrap();
        assert_eq!(spec.lambda.value_at(2.5).unwrap(), 55.0);
        assert_eq!(spec.mu1.value_at(19.0).unwrap(), 1.0);
        assert_eq!(spec.x0.x1, 40.0);
        assert_eq!(spec.horizon, 20.0);
    }

    #[test]
    fn missing_key_is_reported() {
        let text = GOOD.replace("beta = 2.0", "");
        match parse_model(&text) {
            Err(ConfigError::MissingKey("beta")) => {}
            other => panic!("expected missing beta, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = GOOD.replace("mu1=1", "mu1=one");
        match parse_model(&text) {
            Err(ConfigError::Parse { line: 3, .. }) => {}
            other => panic!("expected parse error on line 3, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = format!("{GOOD}extra = 1\n");
        match parse_model(&text) {
            Err(ConfigError::Parse { line: 11, msg }) => {
                assert!(msg.contains("unknown key"), "{msg}");
            }
            other => panic!("expected unknown-key error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_key_is_rejected() {
        let text = format!("{GOOD}p = 0.3\n");
        assert!(matches!(
            parse_model(&text),
            Err(ConfigError::Parse { line: 11, .. })
        ));
    }

    #[test]
    fn model_validation_errors_propagate() {
        let text = GOOD.replace("p = 0.5", "p = 1.5");
        assert!(matches!(parse_model(&text), Err(ConfigError::Model(_))));
    }

    #[test]
    fn load_reports_missing_file_with_path() {
        let err = load_model(Path::new("definitely-missing.cfg")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("definitely-missing.cfg"), "{msg}");
    }
}
