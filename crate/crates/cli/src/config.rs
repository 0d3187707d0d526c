//! Flat key=value config files and flag/config/default resolution.
//! Command-line flags always win over config entries.

use std::collections::HashMap;
use std::fmt::Display;
use std::path::Path;
use std::str::FromStr;

/// Terminal failure with the process exit code it maps to:
/// 1 verdict-fail, 2 usage/config, 3 numeric/runtime.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<perptail::Error> for Failure {
    fn from(e: perptail::Error) -> Self {
        use perptail::Error::*;
        let code = match e {
            Domain(_) | Parse(_) | Unsupported(_) | EmptySamples => 2,
            MissingCertificate | NotFound(_) => 1,
            QuadratureDiverged { .. } | NoSignChange(..) | Truncated { .. } => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure {
            code: 3,
            message: format!("i/o error: {e}"),
        }
    }
}

#[derive(Debug, Default)]
pub struct Settings {
    map: HashMap<String, String>,
}

impl Settings {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let mut map = HashMap::new();
        if let Some(path) = path {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Failure::usage(format!("cannot read config {}: {e}", path.display()))
            })?;
            for (lineno, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') {
                    continue;
                }
                let (k, v) = line.split_once('=').ok_or_else(|| {
                    Failure::usage(format!(
                        "{}:{}: expected key=value, got '{line}'",
                        path.display(),
                        lineno + 1
                    ))
                })?;
                map.insert(k.trim().to_string(), v.trim().to_string());
            }
        }
        Ok(Settings { map })
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, Failure>
    where
        T::Err: Display,
    {
        match self.map.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| Failure::usage(format!("config key '{key}': bad value '{raw}': {e}"))),
        }
    }

    /// flag > config > default; an error if none of the three is present.
    pub fn resolve<T: FromStr>(
        &self,
        flag: Option<T>,
        key: &str,
        default: Option<T>,
    ) -> Result<T, Failure>
    where
        T::Err: Display,
    {
        if let Some(v) = flag {
            return Ok(v);
        }
        if let Some(v) = self.get(key)? {
            return Ok(v);
        }
        default.ok_or_else(|| Failure::usage(format!("missing required parameter '{key}'")))
    }
}
