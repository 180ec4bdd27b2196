use thiserror::Error;

/// Every failure the simulator can report.
///
/// The CLI maps [`Error::Config`] and [`Error::Validation`] to exit code 2 and
/// everything else to exit code 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Validation(Vec<String>),

    #[error("weak-modulation regime violated: mean depth {mu} rad exceeds 0.2 rad")]
    WeakModulation { mu: f64 },

    #[error("frequency lock failure: {0}")]
    LockFailure(String),

    #[error("calibration error: {0}")]
    Calibration(String),

    #[error("no detection: correlation peak {peak:.3} below threshold")]
    NoDetection { peak: f64 },

    #[error("invalid filter: {0}")]
    InvalidFilter(String),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("solver did not converge after {iterations} iterations (last gap {gap:.3e})")]
    NonConvergence { iterations: usize, gap: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Wraps the error with the name of the pipeline stage that produced it.
    pub fn at(self, stage: impl Into<String>) -> Error {
        Error::Stage {
            stage: stage.into(),
            source: Box::new(self),
        }
    }

    /// True for configuration problems (as opposed to runtime failures),
    /// looking through any stage wrappers.
    pub fn is_config(&self) -> bool {
        match self {
            Error::Config(_) | Error::Validation(_) | Error::WeakModulation { .. } => true,
            Error::Stage { source, .. } => source.is_config(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stage_wrapping_keeps_config_class() {
        let e = Error::Config("bad".into()).at("encoder");
        assert!(e.is_config());
        assert!(e.to_string().starts_with("encoder: "));
        assert!(!Error::NoDetection { peak: 0.1 }.at("sensing").is_config());
    }

    #[test]
    fn validation_lists_every_problem() {
        let e = Error::Validation(vec!["a".into(), "b".into()]);
        let s = e.to_string();
        assert!(s.contains("- a") && s.contains("- b"));
    }
}
