//! Differentiable auto-leveling.
//!
//! Given a dense 2D correspondence field that maps a tilted perspective
//! view onto its gravity-leveled rendering, this module estimates the
//! camera's pitch and roll with a soft-argmin search over a candidate
//! rotation grid, differentiates that estimate analytically with respect to
//! every flow entry, and applies the resulting correction to panoramas.
//!
//! The stages:
//!
//! 1. [`gt_leveling_flow`] / [`rigid_flow`] — analytic flow fields induced
//!    by a rigid rotation of the camera (yaw drops out identically).
//! 2. [`soft_argmin_solve`] — candidate-grid search with softmax-weighted
//!    parameter averaging and multi-stage refinement.
//! 3. [`soft_argmin_gradient`] — closed-form gradient of the estimated
//!    parameters with respect to the input flow. The flow influences the
//!    output only through 3 scalars, so this Jacobian has rank ≤ 3.
//! 4. [`warp_to_canonical`] — undo the estimated pitch/roll on an ERP
//!    canvas, preserving yaw.

mod flow;
mod solver;

pub use flow::{
    gt_leveling_flow, leveling_flow_at, read_gflw, reprojection_error, rigid_flow,
    smooth_l1_flow_loss, write_gflw, DenseFlowField, RigidFlowModel,
};
pub use solver::{
    soft_argmin_gradient, soft_argmin_solve, soft_argmin_solve_single, warp_to_canonical,
    CandidateGrid, FlowGradient, RigidEstimate, SoftArgminConfig, SolverGradient,
};
