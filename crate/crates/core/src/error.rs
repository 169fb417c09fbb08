use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("turning point input at x = {x}")]
    TurningPoint { x: Complex64 },

    #[error("path through branch point near x = {x}")]
    PathThroughBranchPoint { x: Complex64 },

    #[error("degenerate triple: denominator singulant {value:e} below threshold")]
    DegenerateTriple { value: f64 },

    #[error("{what} did not converge; last iterate {last}")]
    NoConvergence { what: &'static str, last: Complex64 },

    #[error("seed {seed} is not on the requested curve (|condition| = {residual:e})")]
    SeedOffCurve { seed: Complex64, residual: f64 },

    #[error("on Stokes curve at x = {x}")]
    OnStokesCurve { x: Complex64 },

    #[error("adjacency undefined on a higher-order Stokes curve at x = {x}")]
    AdjacencyUndefined { x: Complex64 },

    #[error("collapsed form invalid: x = {x} is not on a resonant lattice")]
    CollapsedFormInvalid { x: Complex64 },

    #[error("resonant lattice eigenvalue: singular pivot at index {index}")]
    SingularLattice { index: i64 },

    #[error("lattice too small: need more than {min} points")]
    LatticeTooSmall { min: usize },

    #[error("zero solution cannot be normalised")]
    ZeroSolution,

    #[error("empty comparison: every lattice point lies inside the exclusion radius")]
    EmptyComparison,

    #[error("formal sum; use lattice solver (x = {x} is on a non-resonant line with |q| = 1)")]
    FormalSum { x: Complex64 },

    #[error("quadrature tolerance unreachable: estimated relative error {estimate:e}")]
    Quadrature { estimate: f64 },

    #[error("valley decomposition failed: {0}")]
    Decomposition(String),

    #[error("no factorial growth detected in coefficient sequence")]
    NoFactorialGrowth,

    #[error("multiplier scan failed: {0}")]
    Scan(String),

    #[error("region classification is calibrated for |Arg σ| < π/6 only (Arg σ = {arg_sigma:.4})")]
    RegionsUnavailable { arg_sigma: f64 },

    #[error("degenerate Stokes structure: crossing point {crossing} lies {distance:.3e} from a turning point")]
    DegenerateStructure { crossing: Complex64, distance: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
