use thiserror::Error;

/// Errors produced by the calibration, undistortion and localization routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point lies behind the camera (depth {depth})")]
    DepthNotPositive { depth: f64 },

    #[error("matrix is not a rotation (orthogonality error {deviation:e})")]
    NotARotation { deviation: f64 },

    #[error("no admissible real solution for distorted point ({x}, {y})")]
    NoRealSolution { x: f64, y: f64 },

    #[error("numeric inversion did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("singular configuration: {0}")]
    SingularConfiguration(String),

    #[error("calibration target is behind the camera for both homography signs")]
    BehindCamera,

    #[error("viewing ray is parallel to the ground plane")]
    RayParallelToGround,

    #[error("ground intersection lies behind the camera (depth {depth})")]
    PointBehindCamera { depth: f64 },

    #[error("degenerate line: endpoints coincide")]
    DegenerateLine,

    #[error("undistorted endpoint observations coincide")]
    EndpointsCoincide,

    #[error("at least {required} views are required, got {got}")]
    InsufficientViews { required: usize, got: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
