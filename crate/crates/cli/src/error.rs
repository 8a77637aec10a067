use thiserror::Error;

fn at_line(line: &Option<usize>) -> String {
    line.map_or_else(String::new, |l| format!(":{l}"))
}

/// Failures of a CLI run. Configuration problems map to exit code 3,
/// solver convergence failures to 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{source_name}{}: parse error: {message}", at_line(.line))]
    Parse {
        source_name: String,
        line: Option<usize>,
        message: String,
    },

    #[error("{source_name}{}: unknown key: {message}", at_line(.line))]
    UnknownKey {
        source_name: String,
        line: Option<usize>,
        message: String,
    },

    #[error("{source_name}:{line}: invalid {key}: {message}")]
    Invariant {
        source_name: String,
        line: usize,
        key: String,
        message: String,
    },

    #[error("{0}")]
    Usage(String),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("{context}: {source}")]
    Analysis {
        context: String,
        source: softmax_analog::Error,
    },
}

impl CliError {
    pub(crate) fn analysis(context: &str) -> impl FnOnce(softmax_analog::Error) -> Self + '_ {
        move |source| CliError::Analysis {
            context: context.to_owned(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Analysis { source, .. } if source.is_convergence() => 2,
            CliError::Io { .. } => 1,
            _ => 3,
        }
    }
}
