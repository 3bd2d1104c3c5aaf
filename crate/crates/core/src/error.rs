use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to parse {path}: {reason}")]
    ParseError { path: PathBuf, reason: String },

    #[error("domain has no foreground cells")]
    EmptyForeground,

    #[error("unsupported dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("spectra have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),

    #[error("spectra carry different normalisations ({0} vs {1})")]
    NormalisationMismatch(String, String),

    #[error("spectrum is already normalised ({0})")]
    AlreadyNormalised(String),

    #[error("exponent p = {p} must exceed d/2 = {half_d}")]
    InvalidExponent { p: f64, half_d: f64 },

    #[error("bound bracket {name} is negative ({value:e}); spectra are inconsistent with Dirichlet spectra of the declared volume")]
    NegativeBoundBracket { name: &'static str, value: f64 },

    #[error("requested {requested} modes but only {available} are available")]
    LengthShortfall { requested: usize, available: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("eigensolver did not converge: {converged} of {requested} eigenpairs after {matvecs} operator applications")]
    NonConvergence {
        requested: usize,
        converged: usize,
        matvecs: usize,
    },

    #[error("residual target {target} not reached within N = {cap}")]
    TargetUnreachable { target: f64, cap: usize },

    #[error("neighbourhood graph is disconnected: {}", format_components(.0))]
    DisconnectedGraph(Vec<Vec<String>>),

    #[error("inputs are heterogeneous: {0}")]
    Heterogeneous(String),

    #[error("dataset: {0}")]
    InvalidDataset(String),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization: {0}")]
    Serde(#[from] serde_json::Error),
}

fn format_components(components: &[Vec<String>]) -> String {
    components
        .iter()
        .map(|c| format!("{{{}}}", c.join(", ")))
        .collect::<Vec<_>>()
        .join(" ")
}

impl Error {
    /// Stable machine-readable name, printed by the CLI on failure.
    pub fn name(&self) -> &'static str {
        match self {
            Error::ParseError { .. } => "ParseError",
            Error::EmptyForeground => "EmptyForeground",
            Error::UnsupportedDimension(_) => "UnsupportedDimension",
            Error::InvalidDomain(_) => "InvalidDomain",
            Error::DimensionMismatch(..) => "DimensionMismatch",
            Error::NormalisationMismatch(..) => "NormalisationMismatch",
            Error::AlreadyNormalised(_) => "AlreadyNormalised",
            Error::InvalidExponent { .. } => "InvalidExponent",
            Error::NegativeBoundBracket { .. } => "NegativeBoundBracket",
            Error::LengthShortfall { .. } => "LengthShortfall",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::NonConvergence { .. } => "NonConvergence",
            Error::TargetUnreachable { .. } => "TargetUnreachable",
            Error::DisconnectedGraph(_) => "DisconnectedGraph",
            Error::Heterogeneous(_) => "Heterogeneous",
            Error::InvalidDataset(_) => "InvalidDataset",
            Error::Io { .. } => "IoError",
            Error::Serde(_) => "ParseError",
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, reason: impl Into<String>) -> Self {
        Error::ParseError {
            path: path.into(),
            reason: reason.into(),
        }
    }
}
