use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coefficient profile: {0}")]
    InvalidCoefficient(String),

    #[error("wavenumber k = {0} outside [-1/2, 1/2)")]
    InvalidWavenumber(f64),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("eigensolver failed on a pencil with {dofs} dofs: {detail}")]
    SolverFailure { dofs: usize, detail: String },

    #[error("point x = {x} outside the mesh domain [{start}, {end}]")]
    OutOfDomain { x: f64, start: f64, end: f64 },

    #[error("finite element functions live on different meshes")]
    MeshMismatch,

    #[error("mesh and ε-cells are not aligned: {0}")]
    MeshCellMismatch(String),

    #[error("macroscopic model is degenerate: coupling coefficient c vanishes")]
    DegenerateMacroModel,

    #[error("Bloch mode vanishes at y = 0 for k != 0 (periodic mode in disguise)")]
    PeriodicDegenerateMode,

    #[error("both Bloch modes vanish at y = 0: macroscopic boundary condition is void")]
    UnderdeterminedBoundary,

    #[error("simple k = 0 eigenvalue with φ(0) = {0} != 0: the first-order envelope is undetermined")]
    UndeterminedEnvelope(f64),

    #[error("closed-form macroscopic solutions require b(k,n,n) = 1 (rho = 1), got {0}")]
    NonUnitDensity(f64),

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),

    #[error("two-scale eigenvalue γ vanishes; relative residual undefined")]
    DegenerateNormalization,

    #[error("empty search space")]
    EmptySearch,

    #[error("no physical counterpart: smallest residual F = {f_min:.3e} exceeds 1")]
    NoPhysicalCounterpart { f_min: f64 },

    #[error("invalid ε-subsequence: {0}")]
    InvalidSubsequence(String),

    #[error("band sweep failed at {} wavenumber(s): {}", .0.len(), summarize(.0))]
    BandSweep(Vec<(f64, String)>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn summarize(failures: &[(f64, String)]) -> String {
    failures
        .iter()
        .map(|(k, msg)| format!("k={k}: {msg}"))
        .collect::<Vec<_>>()
        .join("; ")
}
