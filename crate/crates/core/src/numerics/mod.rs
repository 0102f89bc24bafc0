//! Dense complex linear algebra and the Hermitian SDP solver.

mod hermitian;
mod ipm;
mod sdp;

pub use hermitian::{HermitianEigen, HermitianMatrix};
pub use sdp::{
    solve_sdp, solve_sdp_with, SdpConstraint, SdpObjective, SdpProblem, SdpSettings, SdpSolution,
    SdpStatus, Sense, MAX_PSD_DIM,
};

/// Absolute primal feasibility tolerance.
pub const TOL_FEAS: f64 = 1e-8;
/// Relative duality-gap tolerance.
pub const TOL_GAP: f64 = 1e-7;
/// Infeasibility certificate tolerance.
pub const TOL_INFEAS: f64 = 1e-8;
