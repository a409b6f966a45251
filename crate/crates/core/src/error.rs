use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("mesh: {0}")]
    Mesh(String),
    #[error("solver: {0}")]
    Solver(String),
    #[error("probe: {0}")]
    Probe(String),
    #[error("profile: {0}")]
    Profile(String),
    #[error("monitor: {0}")]
    Monitor(String),
    #[error("quadrature tolerance not met: achieved {achieved:.3e}, requested {requested:.3e}")]
    QuadratureTolerance { achieved: f64, requested: f64 },
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable category for CLI error reporting.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Geometry(_) => "geometry",
            Error::Mesh(_) => "mesh",
            Error::Solver(_) => "solver",
            Error::Probe(_) => "probe",
            Error::Profile(_) => "profile",
            Error::Monitor(_) => "monitor",
            Error::QuadratureTolerance { .. } => "quadrature",
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Csv(_) => "io",
            Error::Json(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
