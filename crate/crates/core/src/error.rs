use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("metric matrix is singular or badly conditioned (condition estimate {condition:.3e})")]
    Singular { condition: f64 },
    #[error("grid spacing {spacing} exceeds the narrowest bump width {width}")]
    GridTooCoarse { spacing: f64, width: f64 },
    #[error("diffeomorphism moves a boundary point by {displacement:.3e}")]
    NotBoundaryFixing { displacement: f64 },
    #[error("ray did not leave the enclosing ball within parameter budget {budget}")]
    NoExit { budget: f64 },
    #[error("ray meets the boundary tangentially (radial speed ratio {ratio:.3e})")]
    GrazingRay { ratio: f64 },
    #[error("ray never enters the domain")]
    MissesDomain,
    #[error("initial point on the boundary is not moving inward")]
    NotInward,
    #[error(
        "Newton iteration did not converge after {iterations} steps (residual {residual:.3e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("eikonal quadratic has a near-double root (discriminant {discriminant:.3e})")]
    DegenerateRoot { discriminant: f64 },
    #[error("finite-difference stencils disagree by {mismatch:.3e}")]
    NonsmoothTau { mismatch: f64 },
    #[error("change of variables folds (Jacobian determinant {det:.3e})")]
    FoldDetected { det: f64 },
    #[error(
        "zeroed block mass {zeroed:.3e} exceeds ten times the special-form residual {residual:.3e}"
    )]
    FormViolation { zeroed: f64, residual: f64 },
    #[error("scattering data differ by {mismatch:.3e}")]
    ScatteringMismatch { mismatch: f64 },
    #[error("direction construction is singular (denominator {denominator:.3e})")]
    SingularDirection { denominator: f64 },
    #[error("parity elimination ill-conditioned: |rho2^2 - rho1^2| = {gap:.3e}")]
    IllConditioned { gap: f64 },
    #[error("H^2 norm {h2:.3e} exceeds K = {k} times the H^1 norm {h1:.3e}")]
    KViolated { h2: f64, h1: f64, k: f64 },
    #[error("direction recovery matrix is rank deficient (condition {condition:.3e})")]
    RankDeficient { condition: f64 },
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;
