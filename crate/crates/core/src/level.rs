use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Verbosity level of a log statement.
///
/// The six named levels are ordered by severity, `Trace` = 0 through
/// `Fatal` = 5. `Unknown` marks calls whose level cannot be derived from the
/// invoked method name and sits outside the ordering.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Level {
    Trace,
    Debug,
    Info,
    Warn,
    Error,
    Fatal,
    Unknown,
}

impl Level {
    pub const NAMED: [Level; 6] = [
        Level::Trace,
        Level::Debug,
        Level::Info,
        Level::Warn,
        Level::Error,
        Level::Fatal,
    ];

    pub fn ordinal(self) -> Option<usize> {
        match self {
            Level::Trace => Some(0),
            Level::Debug => Some(1),
            Level::Info => Some(2),
            Level::Warn => Some(3),
            Level::Error => Some(4),
            Level::Fatal => Some(5),
            Level::Unknown => None,
        }
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Level> {
        Level::NAMED.get(ordinal).copied()
    }

    /// Maps a logger method name (`info`, `warn`, ...) to its level.
    pub fn from_method_name(name: &str) -> Level {
        match name.to_ascii_lowercase().as_str() {
            "trace" => Level::Trace,
            "debug" => Level::Debug,
            "info" => Level::Info,
            "warn" => Level::Warn,
            "error" => Level::Error,
            "fatal" => Level::Fatal,
            _ => Level::Unknown,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Level::Trace => "TRACE",
            Level::Debug => "DEBUG",
            Level::Info => "INFO",
            Level::Warn => "WARN",
            Level::Error => "ERROR",
            Level::Fatal => "FATAL",
            Level::Unknown => "UNKNOWN",
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown log level `{0}`")]
pub struct ParseLevelError(pub String);

impl FromStr for Level {
    type Err = ParseLevelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "TRACE" => Ok(Level::Trace),
            "DEBUG" => Ok(Level::Debug),
            "INFO" => Ok(Level::Info),
            "WARN" => Ok(Level::Warn),
            "ERROR" => Ok(Level::Error),
            "FATAL" => Ok(Level::Fatal),
            "UNKNOWN" => Ok(Level::Unknown),
            _ => Err(ParseLevelError(s.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordinals_follow_severity() {
        for (i, level) in Level::NAMED.iter().enumerate() {
            assert_eq!(level.ordinal(), Some(i));
            assert_eq!(Level::from_ordinal(i), Some(*level));
        }
        assert_eq!(Level::Unknown.ordinal(), None);
    }

    #[test]
    fn method_names_map_case_insensitively() {
        assert_eq!(Level::from_method_name("WARN"), Level::Warn);
        assert_eq!(Level::from_method_name("debug"), Level::Debug);
        assert_eq!(Level::from_method_name("severe"), Level::Unknown);
        assert_eq!("info".parse::<Level>().unwrap(), Level::Info);
        assert!("verbose".parse::<Level>().is_err());
    }
}
