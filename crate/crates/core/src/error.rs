use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unknown {kind} `{name}` (known: {known})")]
    UnknownName {
        kind: &'static str,
        name: String,
        known: String,
    },

    #[error("point is off the surface (residual {residual:e})")]
    PointOffSurface { residual: f64 },

    #[error("projection is ambiguous: point lies within {guard:e} of the medial axis")]
    AmbiguousProjection { guard: f64 },

    #[error("point is farther than the reach from the manifold (distance {distance}, reach {reach})")]
    OutsideTube { distance: f64, reach: f64 },

    #[error("noise level exceeds cap: sqrt(level) = {magnitude} > q = {cap}")]
    LevelExceedsCap { magnitude: f64, cap: f64 },

    #[error("cover budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("point is not covered by any partition-of-unity bump")]
    UncoveredPoint,

    #[error("grouping failed: {0}")]
    GroupingFailure(String),

    #[error("chart {chart}: point at distance {distance} lies outside the chart domain (radius {radius})")]
    OutOfChart {
        chart: usize,
        distance: f64,
        radius: f64,
    },

    #[error("chart {chart}: coordinates are outside the chart image")]
    OutOfImage { chart: usize },

    #[error("chart {chart}: chart inverse did not converge (residual {residual:e})")]
    NoConvergence { chart: usize, residual: f64 },

    #[error("covering radius {radius} must be below tau/2 = {limit}")]
    RadiusTooLarge { radius: f64, limit: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite gradient in parameter group {group}")]
    NonFiniteGradient { group: usize },

    #[error("non-finite loss at epoch {epoch} (learning rate {learning_rate:e}); try a smaller learning rate")]
    NonFiniteLoss { epoch: usize, learning_rate: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors caused by numerical breakdown rather than bad input or I/O.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteGradient { .. } | Error::NonFiniteLoss { .. } | Error::NoConvergence { .. }
        )
    }
}
