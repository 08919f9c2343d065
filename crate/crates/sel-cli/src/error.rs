use serde::Serialize;
use thiserror::Error;

use sel_core::barrier::BarrierError;
use sel_core::classifier::ClassifierError;
use sel_core::eigensolver::EigenError;
use sel_core::rates::RateError;
use sel_core::scalar_solver::ScalarError;
use sel_core::system_solver::SystemError;

pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_SOLVER: u8 = 3;
pub const EXIT_REGIME: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{message}")]
    Config { message: String, precondition: Option<String> },
    #[error("{message}")]
    Solver { message: String, partial: Vec<String> },
    #[error("{message}")]
    Regime { message: String, precondition: String, reference: String },
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
}

/// Payload written to stderr as a single JSON line.
#[derive(Debug, Serialize)]
pub struct ErrorPayload<'a> {
    pub error: &'static str,
    pub exit_code: u8,
    pub message: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precondition: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reference: Option<&'a str>,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    pub partial_artifacts: &'a [String],
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError::Config { message: message.into(), precondition: None }
    }

    pub fn solver(message: impl Into<String>) -> Self {
        CliError::Solver { message: message.into(), partial: Vec::new() }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { context: context.into(), source }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } => EXIT_CONFIG,
            CliError::Solver { .. } => EXIT_SOLVER,
            CliError::Regime { .. } => EXIT_REGIME,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    pub fn payload(&self) -> ErrorPayload<'_> {
        let (kind, precondition, reference, partial): (_, _, _, &[String]) = match self {
            CliError::Config { precondition, .. } => ("config", precondition.as_deref(), None, &[]),
            CliError::Solver { partial, .. } => ("solver_failure", None, None, partial),
            CliError::Regime { precondition, reference, .. } => ("regime_unsupported", Some(precondition.as_str()), Some(reference.as_str()), &[]),
            CliError::Io { .. } => ("io", None, None, &[]),
        };
        ErrorPayload { error: kind, exit_code: self.exit_code(), message: self.to_string(), precondition, reference, partial_artifacts: partial }
    }

    pub fn with_partial(mut self, files: Vec<String>) -> Self {
        if let CliError::Solver { partial, .. } = &mut self {
            partial.extend(files);
        }
        self
    }
}

impl From<ScalarError> for CliError {
    fn from(e: ScalarError) -> Self {
        match &e {
            ScalarError::Weight(_) | ScalarError::Options(_) | ScalarError::Grid(_) | ScalarError::Operator(_) => CliError::config(e.to_string()),
            ScalarError::UnboundedLoad(_) => CliError::Regime {
                message: e.to_string(),
                precondition: "int_0 t k(t) dt < infinity".into(),
                reference: "integral criterion: a positive solution exists iff t k(t) is integrable at the boundary".into(),
            },
            _ => CliError::solver(e.to_string()),
        }
    }
}

impl From<SystemError> for CliError {
    fn from(e: SystemError) -> Self {
        match &e {
            SystemError::UnsupportedRegime(_) | SystemError::Classifier(ClassifierError::NoSolution(_)) => CliError::Regime {
                message: e.to_string(),
                precondition: "quad inside one of the existence regions E1, E2, E3".into(),
                reference: "existence theorem for the coupled system".into(),
            },
            SystemError::Input(_) | SystemError::Grid(_) | SystemError::Operator(_) | SystemError::Classifier(_) => CliError::config(e.to_string()),
            SystemError::Scalar(s) => s.clone().into(),
            _ => CliError::solver(e.to_string()),
        }
    }
}

impl From<EigenError> for CliError {
    fn from(e: EigenError) -> Self {
        match e {
            EigenError::Input(_) | EigenError::Operator(_) | EigenError::Grid(_) => CliError::config(e.to_string()),
            _ => CliError::solver(e.to_string()),
        }
    }
}

impl From<BarrierError> for CliError {
    fn from(e: BarrierError) -> Self {
        match e {
            BarrierError::Input(_) | BarrierError::Precondition(_) => CliError::config(e.to_string()),
            _ => CliError::solver(e.to_string()),
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::NoSolution(_) => CliError::Regime {
                message: e.to_string(),
                precondition: "int_0 t k(t) dt < infinity".into(),
                reference: "boundary rate theorem for singular weights".into(),
            },
            _ => CliError::config(e.to_string()),
        }
    }
}

impl From<RateError> for CliError {
    fn from(e: RateError) -> Self {
        CliError::solver(format!("rate fit failed: {e}"))
    }
}
