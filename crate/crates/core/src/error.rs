use thiserror::Error;

pub type Result<T> = core::result::Result<T, ChoreoError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChoreoError {
    #[error("point outside the disk: |z| = {modulus} for radius {radius}")]
    OutOfDisk { modulus: f64, radius: f64 },
    #[error("points are not on the forward sheet (-X.Y/R^2 = {0})")]
    InvalidGeometry(f64),
    #[error("collision: separation {0:e} at or below the collision threshold")]
    Collision(f64),
    #[error("curvature radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("period must be positive, got {0}")]
    NonpositivePeriod(f64),
    #[error("{nodes} nodes cannot resolve {coefficients} coefficients")]
    Undersampled { nodes: usize, coefficients: usize },
    #[error("node count must be odd, got {0}")]
    EvenGrid(usize),
    #[error("coefficient vector must have odd length 2K+1, got {0}")]
    BadCoefficientCount(usize),
    #[error("cannot pad bandwidth {from} down to {to}")]
    PadShrink { from: usize, to: usize },
    #[error("cannot truncate bandwidth {from} up to {to}")]
    TruncateGrow { from: usize, to: usize },
    #[error("variable vector of length {got} does not match bandwidth {bandwidth}")]
    VariableLength { got: usize, bandwidth: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("no feasible seed after {0} redraws")]
    InfeasibleSeed(usize),
    #[error("body counts differ ({0} vs {1})")]
    MismatchedBodies(usize, usize),
    #[error("need at least 3 points with positive differences, got {0}")]
    TooFewPoints(usize),
    #[error("continuation failed at R = {0}")]
    ContinuationFailed(f64),
    #[error("singular linear system")]
    Singular,
}
