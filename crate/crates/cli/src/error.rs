use cauchy_core::geometry::GeometryError;
use cauchy_core::laplace::LaplaceError;
use cauchy_core::solver::SolverError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Parse(String),
    #[error("config: {0}")]
    Invalid(String),
    #[error("missing file: {0}")]
    MissingFile(String),
    #[error("{0}")]
    Geometry(#[from] GeometryError),
    #[error("data: {0}")]
    Data(String),
    #[error("{0}")]
    Solver(SolverError),
    #[error("{0}")]
    Laplace(LaplaceError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("seed-free check failed: {0}")]
    SeedFree(String),
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Geometry(g) => CliError::Geometry(g),
            e => CliError::Solver(e),
        }
    }
}

impl From<LaplaceError> for CliError {
    fn from(e: LaplaceError) -> Self {
        match e {
            LaplaceError::Solver(s) => s.into(),
            e => CliError::Laplace(e),
        }
    }
}

fn variant<T: std::fmt::Debug>(e: &T) -> String {
    let s = format!("{e:?}");
    let end = s.find(|c: char| !c.is_alphanumeric() && c != '_').unwrap_or(s.len());
    s[..end].to_string()
}

impl CliError {
    /// 2 for configuration errors, 3 for data errors, 4 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) | CliError::Invalid(_) | CliError::MissingFile(_) | CliError::Geometry(_) => 2,
            CliError::Data(_) | CliError::Io(_) => 3,
            CliError::Laplace(LaplaceError::TooFewSamples { .. } | LaplaceError::SampleMismatch { .. }) => 3,
            CliError::Solver(SolverError::TooFewTerms { .. }) => 2,
            CliError::Solver(SolverError::SampleMismatch { .. } | SolverError::PointOutsideD { .. }) => 3,
            CliError::Solver(_) | CliError::Laplace(_) | CliError::SeedFree(_) => 4,
        }
    }

    /// Name of the innermost error variant, e.g. `GammaThroughOrigin`.
    pub fn kind(&self) -> String {
        match self {
            CliError::Geometry(g) => variant(g),
            CliError::Solver(SolverError::Geometry(g)) => variant(g),
            CliError::Solver(SolverError::Basis(b)) => variant(b),
            CliError::Solver(SolverError::Potential(p)) => variant(p),
            CliError::Solver(SolverError::Kernel(k)) => variant(k),
            CliError::Solver(s) => variant(s),
            CliError::Laplace(LaplaceError::Potential(p)) => variant(p),
            CliError::Laplace(l) => variant(l),
            e => variant(e),
        }
    }

    /// One-line JSON for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "message": self.to_string(),
            "exit_code": self.exit_code(),
        })
        .to_string()
    }
}
