//! Soft-argmin rigid pose estimation over a candidate rotation grid.

use super::flow::{DenseFlowField, RigidFlowModel};
use crate::error::{Error, Result};
use crate::sphere::{rotate_erp, CameraIntrinsics, CameraPose, ErpImage, Rotation};

/// A separable grid of candidate poses.
///
/// Each axis is an inclusive `[min, max]` range sampled at `count` evenly
/// spaced points (`count == 1` places the single candidate at the range
/// midpoint). Total candidates = product of the three counts. The default
/// search grid spans ±45° in pitch and roll at 9×9 with a single yaw
/// candidate at 0, matching the data distribution's extreme-angle bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateGrid {
    pub pitch_min: f64,
    pub pitch_max: f64,
    pub pitch_count: u32,
    pub roll_min: f64,
    pub roll_max: f64,
    pub roll_count: u32,
    pub yaw_min: f64,
    pub yaw_max: f64,
    pub yaw_count: u32,
}

impl CandidateGrid {
    /// Grid over pitch and roll only, with yaw pinned to a single zero
    /// candidate.
    pub fn pitch_roll(
        pitch_min: f64,
        pitch_max: f64,
        pitch_count: u32,
        roll_min: f64,
        roll_max: f64,
        roll_count: u32,
    ) -> Result<Self> {
        let grid = CandidateGrid {
            pitch_min,
            pitch_max,
            pitch_count,
            roll_min,
            roll_max,
            roll_count,
            yaw_min: 0.0,
            yaw_max: 0.0,
            yaw_count: 1,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// The default ±45° 9×9 pitch–roll search grid.
    pub fn default_search() -> Self {
        let b = 45f64.to_radians();
        CandidateGrid::pitch_roll(-b, b, 9, -b, b, 9).expect("static grid is valid")
    }

    /// Validates counts, ordering, and finiteness.
    pub fn validate(&self) -> Result<()> {
        let axes = [
            ("pitch", self.pitch_min, self.pitch_max, self.pitch_count),
            ("roll", self.roll_min, self.roll_max, self.roll_count),
            ("yaw", self.yaw_min, self.yaw_max, self.yaw_count),
        ];
        for (name, min, max, count) in axes {
            if count == 0 {
                return Err(Error::Config(format!("{name} candidate count must be >= 1")));
            }
            if !(min.is_finite() && max.is_finite()) {
                return Err(Error::NonFinite(format!("{name} range must be finite")));
            }
            if min > max {
                return Err(Error::Config(format!(
                    "{name} range [{min}, {max}] is not well ordered"
                )));
            }
        }
        Ok(())
    }

    fn axis_values(min: f64, max: f64, count: u32) -> Vec<f64> {
        if count == 1 {
            return vec![0.5 * (min + max)];
        }
        (0..count)
            .map(|i| min + (max - min) * i as f64 / (count - 1) as f64)
            .collect()
    }

    /// All candidate poses, yaw-major then pitch then roll; the order is
    /// fixed and shared by every solver output (errors, weights).
    pub fn candidates(&self) -> Vec<CameraPose> {
        let yaws = Self::axis_values(self.yaw_min, self.yaw_max, self.yaw_count);
        let pitches = Self::axis_values(self.pitch_min, self.pitch_max, self.pitch_count);
        let rolls = Self::axis_values(self.roll_min, self.roll_max, self.roll_count);
        let mut out = Vec::with_capacity(yaws.len() * pitches.len() * rolls.len());
        for &yaw in &yaws {
            for &pitch in &pitches {
                for &roll in &rolls {
                    out.push(CameraPose { yaw, pitch, roll });
                }
            }
        }
        out
    }

    /// Total number of candidates.
    pub fn len(&self) -> usize {
        (self.yaw_count * self.pitch_count * self.roll_count) as usize
    }

    pub fn is_empty(&self) -> bool {
        false // counts are >= 1 by validation
    }

    /// The grid for the next refinement stage: centered on `estimate`, with
    /// every multi-candidate axis range scaled by `shrink`. Single-candidate
    /// axes collapse onto the estimate.
    pub fn re_centered(&self, estimate: &CameraPose, shrink: f64) -> CandidateGrid {
        let recenter = |min: f64, max: f64, count: u32, center: f64| -> (f64, f64) {
            if count == 1 {
                (center, center)
            } else {
                let half = 0.5 * (max - min) * shrink;
                (center - half, center + half)
            }
        };
        let (pitch_min, pitch_max) =
            recenter(self.pitch_min, self.pitch_max, self.pitch_count, estimate.pitch);
        let (roll_min, roll_max) =
            recenter(self.roll_min, self.roll_max, self.roll_count, estimate.roll);
        let (yaw_min, yaw_max) = recenter(self.yaw_min, self.yaw_max, self.yaw_count, estimate.yaw);
        CandidateGrid {
            pitch_min,
            pitch_max,
            pitch_count: self.pitch_count,
            roll_min,
            roll_max,
            roll_count: self.roll_count,
            yaw_min,
            yaw_max,
            yaw_count: self.yaw_count,
        }
    }
}

/// Soft-argmin solver configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SoftArgminConfig {
    /// Softmax temperature in the error's units (pixels²); must be > 0.
    /// As τ → 0 the solver approaches the hard grid argmin; as τ → ∞ it
    /// approaches the grid centroid.
    pub temperature: f64,
    /// Number of refinement stages, ≥ 1.
    pub stages: u32,
    /// Per-stage range shrink factor in (0, 1).
    pub shrink: f64,
}

impl Default for SoftArgminConfig {
    /// τ = 0.5 px² (comparable to sub-pixel flow noise), 3 stages,
    /// shrink 0.2.
    fn default() -> Self {
        SoftArgminConfig {
            temperature: 0.5,
            stages: 3,
            shrink: 0.2,
        }
    }
}

impl SoftArgminConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.temperature.is_finite() && self.temperature > 0.0) {
            return Err(Error::Config(format!(
                "temperature {} must be a positive finite number",
                self.temperature
            )));
        }
        if self.stages == 0 {
            return Err(Error::Config("stage count must be >= 1".into()));
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::Config(format!(
                "shrink factor {} must lie in (0, 1)",
                self.shrink
            )));
        }
        Ok(())
    }
}

/// Result of a soft-argmin solve.
///
/// `errors` and `weights` refer to the candidates of `final_grid` in
/// [`CandidateGrid::candidates`] order. Weights are a probability vector
/// (nonnegative, summing to 1 within 1e−9); `final_error` is the mean
/// squared flow residual at the estimated pose.
#[derive(Debug, Clone)]
pub struct RigidEstimate {
    pub pose: CameraPose,
    pub errors: Vec<f64>,
    pub weights: Vec<f64>,
    pub final_error: f64,
    pub final_grid: CandidateGrid,
}

/// Gradient planes (∂/∂dx, ∂/∂dy) of one estimated parameter with respect
/// to every flow entry; zero at pixels that are invalid or never jointly
/// valid with any candidate.
#[derive(Debug, Clone)]
pub struct FlowGradient {
    pub width: u32,
    pub height: u32,
    pub dx: Vec<f64>,
    pub dy: Vec<f64>,
}

impl FlowGradient {
    fn zeros(width: u32, height: u32) -> Self {
        let n = (width * height) as usize;
        FlowGradient {
            width,
            height,
            dx: vec![0.0; n],
            dy: vec![0.0; n],
        }
    }

    /// Gradient pair at pixel `(u, v)`.
    pub fn get(&self, u: u32, v: u32) -> (f64, f64) {
        let i = (v * self.width + u) as usize;
        (self.dx[i], self.dy[i])
    }
}

/// Full solver gradient: the three parameter gradients (in pitch, roll,
/// yaw order) plus the estimate they were taken at.
///
/// The flow enters the estimate only through the three averaged
/// parameters, so the stacked Jacobian `[d_pitch; d_roll; d_yaw]` has at
/// most 3 independent rows regardless of the flow resolution — the
/// rank-3 bottleneck the solver imposes on any downstream consumer.
#[derive(Debug, Clone)]
pub struct SolverGradient {
    pub estimate: RigidEstimate,
    pub d_pitch: FlowGradient,
    pub d_roll: FlowGradient,
    pub d_yaw: FlowGradient,
}

impl SolverGradient {
    /// Parameter gradient by index: 0 = pitch, 1 = roll, 2 = yaw.
    pub fn param(&self, k: usize) -> &FlowGradient {
        match k {
            0 => &self.d_pitch,
            1 => &self.d_roll,
            2 => &self.d_yaw,
            _ => panic!("parameter index {k} out of range"),
        }
    }
}

fn validate_inputs(flow: &DenseFlowField, intr: &CameraIntrinsics) -> Result<()> {
    if (flow.width(), flow.height()) != (intr.width_px, intr.height_px) {
        return Err(Error::Config(format!(
            "flow is {}x{} but intrinsics expect {}x{}",
            flow.width(),
            flow.height(),
            intr.width_px,
            intr.height_px
        )));
    }
    if flow.valid_count() == 0 {
        return Err(Error::Degenerate("flow has no valid pixels".into()));
    }
    if !flow.all_finite() {
        return Err(Error::NonFinite("flow contains NaN or infinite entries".into()));
    }
    Ok(())
}

/// Candidate errors, softmax weights, and the weighted parameter estimate
/// for one fixed grid.
fn solve_stage(
    model: &RigidFlowModel,
    flow: &DenseFlowField,
    grid: &CandidateGrid,
    temperature: f64,
) -> Result<(CameraPose, Vec<f64>, Vec<f64>)> {
    let candidates = grid.candidates();
    let mut errors = Vec::with_capacity(candidates.len());
    for cand in &candidates {
        let (err, n) = model.residual_error(flow, cand);
        if n == 0 {
            return Err(Error::Degenerate(format!(
                "candidate (pitch {:.4}, roll {:.4}, yaw {:.4}) shares no valid pixels with the flow",
                cand.pitch, cand.roll, cand.yaw
            )));
        }
        errors.push(err);
    }
    // Softmax of -E/τ with the minimum error subtracted for stability.
    let min_err = errors.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut weights: Vec<f64> = errors
        .iter()
        .map(|e| (-(e - min_err) / temperature).exp())
        .collect();
    let z: f64 = weights.iter().sum();
    if !(z.is_finite() && z > 0.0) {
        return Err(Error::Degenerate(
            "softmax normalization collapsed to an empty support".into(),
        ));
    }
    weights.iter_mut().for_each(|w| *w /= z);

    let mut est = CameraPose::level();
    for (w, cand) in weights.iter().zip(&candidates) {
        est.pitch += w * cand.pitch;
        est.roll += w * cand.roll;
        est.yaw += w * cand.yaw;
    }
    Ok((est, errors, weights))
}

/// Single-stage soft-argmin at a fixed grid.
///
/// This is the map the analytic gradient differentiates: candidate errors
/// `E_i`, weights `softmax(−E/τ)`, and the per-parameter convex
/// combination, with no re-centering.
pub fn soft_argmin_solve_single(
    flow: &DenseFlowField,
    intr: &CameraIntrinsics,
    grid: &CandidateGrid,
    temperature: f64,
) -> Result<RigidEstimate> {
    validate_inputs(flow, intr)?;
    grid.validate()?;
    if !(temperature.is_finite() && temperature > 0.0) {
        return Err(Error::Config(format!(
            "temperature {temperature} must be a positive finite number"
        )));
    }
    let model = RigidFlowModel::new(intr);
    let (pose, errors, weights) = solve_stage(&model, flow, grid, temperature)?;
    let (final_error, _) = model.residual_error(flow, &pose);
    Ok(RigidEstimate {
        pose,
        errors,
        weights,
        final_error,
        final_grid: grid.clone(),
    })
}

/// Multi-stage soft-argmin pose estimation.
///
/// Stage 1 evaluates the full grid; each later stage re-centers a grid of
/// the same candidate counts on the current estimate with the axis ranges
/// scaled by `cfg.shrink`, and repeats. Returned errors/weights belong to
/// the last stage's grid.
pub fn soft_argmin_solve(
    flow: &DenseFlowField,
    intr: &CameraIntrinsics,
    grid: &CandidateGrid,
    cfg: &SoftArgminConfig,
) -> Result<RigidEstimate> {
    validate_inputs(flow, intr)?;
    grid.validate()?;
    cfg.validate()?;
    let model = RigidFlowModel::new(intr);
    let mut current = grid.clone();
    let mut last: Option<(CameraPose, Vec<f64>, Vec<f64>)> = None;
    for stage in 0..cfg.stages {
        let out = solve_stage(&model, flow, &current, cfg.temperature)?;
        if stage + 1 < cfg.stages {
            current = current.re_centered(&out.0, cfg.shrink);
        }
        last = Some(out);
    }
    let (pose, errors, weights) = last.expect("stages >= 1 by validation");
    let (final_error, _) = model.residual_error(flow, &pose);
    Ok(RigidEstimate {
        pose,
        errors,
        weights,
        final_error,
        final_grid: current,
    })
}

/// Analytic gradient of the estimated parameters with respect to every
/// valid flow entry.
///
/// Runs the full multi-stage solve, then differentiates the final stage
/// only (earlier stages act as a fixed, non-differentiable initializer
/// that positions the last grid). For parameter `k` and flow component
/// `F_c(p)`:
///
/// ```text
/// ∂θ̂_k/∂F_c(p) = −(2/τ) · Σ_j (w_j/N_j) · (θ_{j,k} − θ̂_k) · (F_c(p) − G_{j,c}(p))
/// ```
///
/// summed over candidates `j` whose rigid flow `G_j` is valid at `p`, with
/// `N_j` the joint-valid count of candidate `j`. This combines the softmax
/// Jacobian (scaled by −1/τ) with the mean-squared-error derivative
/// `∂E_j/∂F_c(p) = 2(F_c(p) − G_{j,c}(p))/N_j`.
pub fn soft_argmin_gradient(
    flow: &DenseFlowField,
    intr: &CameraIntrinsics,
    grid: &CandidateGrid,
    cfg: &SoftArgminConfig,
) -> Result<SolverGradient> {
    let estimate = soft_argmin_solve(flow, intr, grid, cfg)?;
    let model = RigidFlowModel::new(intr);
    let (w, h) = (flow.width(), flow.height());
    let mut grads = [
        FlowGradient::zeros(w, h),
        FlowGradient::zeros(w, h),
        FlowGradient::zeros(w, h),
    ];

    let candidates = estimate.final_grid.candidates();
    for (j, cand) in candidates.iter().enumerate() {
        let g_j = model.flow_for(cand);
        let mut n_j = 0usize;
        for i in 0..flow.dx().len() {
            if flow.validity()[i] && g_j.validity()[i] {
                n_j += 1;
            }
        }
        debug_assert!(n_j > 0, "solve succeeded, so every candidate overlaps");
        let params = [cand.pitch, cand.roll, cand.yaw];
        let est = [estimate.pose.pitch, estimate.pose.roll, estimate.pose.yaw];
        let w_j = estimate.weights[j];
        for k in 0..3 {
            let coef = -(2.0 * w_j) / (cfg.temperature * n_j as f64) * (params[k] - est[k]);
            if coef == 0.0 {
                continue;
            }
            let gk = &mut grads[k];
            for i in 0..flow.dx().len() {
                if flow.validity()[i] && g_j.validity()[i] {
                    gk.dx[i] += coef * (flow.dx()[i] - g_j.dx()[i]);
                    gk.dy[i] += coef * (flow.dy()[i] - g_j.dy()[i]);
                }
            }
        }
    }

    let [d_pitch, d_roll, d_yaw] = grads;
    Ok(SolverGradient {
        estimate,
        d_pitch,
        d_roll,
        d_yaw,
    })
}

/// Warps a conditioning panorama into the canonical frame implied by an
/// estimate: the estimated pitch and roll are undone, yaw is untouched.
pub fn warp_to_canonical(cond: &ErpImage, estimate: &RigidEstimate) -> ErpImage {
    let leveling =
        Rotation::pitch(estimate.pose.pitch).mul(&Rotation::roll(estimate.pose.roll));
    rotate_erp(cond, &leveling)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::leveling::flow::gt_leveling_flow;
    use crate::sphere::{geodesic_distance, intrinsics_from_fov, pose_to_rotation};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn pose(pitch_deg: f64, roll_deg: f64) -> CameraPose {
        CameraPose {
            yaw: 0.0,
            pitch: pitch_deg.to_radians(),
            roll: roll_deg.to_radians(),
        }
    }

    fn rotation_err_deg(a: &CameraPose, b: &CameraPose) -> f64 {
        geodesic_distance(&pose_to_rotation(a), &pose_to_rotation(b)).to_degrees()
    }

    #[test]
    fn grid_validation_and_candidate_layout() {
        assert!(CandidateGrid::pitch_roll(-0.1, 0.1, 0, -0.1, 0.1, 3).is_err());
        assert!(CandidateGrid::pitch_roll(0.2, -0.2, 3, -0.1, 0.1, 3).is_err());
        let grid = CandidateGrid::pitch_roll(-0.2, 0.2, 3, -0.1, 0.1, 2).unwrap();
        assert_eq!(grid.len(), 6);
        let cands = grid.candidates();
        assert_eq!(cands.len(), 6);
        assert!((cands[0].pitch + 0.2).abs() < 1e-15 && (cands[0].roll + 0.1).abs() < 1e-15);
        // Roll varies fastest.
        assert!((cands[1].pitch + 0.2).abs() < 1e-15 && (cands[1].roll - 0.1).abs() < 1e-15);
        // Single-candidate axes sit at the range midpoint.
        let single = CandidateGrid::pitch_roll(-0.4, 0.2, 1, 0.0, 0.0, 1).unwrap();
        assert!((single.candidates()[0].pitch + 0.1).abs() < 1e-15);
    }

    #[test]
    fn exact_node_with_cold_softmax_is_recovered_exactly() {
        let intr = intrinsics_from_fov(FRAC_PI_2, 1.0, 32, 32).unwrap();
        // 11.25 deg increments: (22.5, -11.25) lies on the default grid.
        let gt = pose(22.5, -11.25);
        let flow = gt_leveling_flow(&intr, &gt);
        let est = soft_argmin_solve_single(&flow, &intr, &CandidateGrid::default_search(), 1e-6)
            .unwrap();
        assert!((est.pose.pitch - gt.pitch).abs() < 1e-12);
        assert!((est.pose.roll - gt.roll).abs() < 1e-12);
        assert!(est.final_error < 1e-18);
    }

    #[test]
    fn zero_flow_estimates_the_level_pose() {
        let intr = intrinsics_from_fov(FRAC_PI_2, 1.0, 32, 32).unwrap();
        let flow = gt_leveling_flow(&intr, &CameraPose::level());
        let est = soft_argmin_solve(
            &flow,
            &intr,
            &CandidateGrid::default_search(),
            &SoftArgminConfig::default(),
        )
        .unwrap();
        assert!(est.pose.pitch.abs() < 1e-9 && est.pose.roll.abs() < 1e-9);
        assert_eq!(est.pose.yaw, 0.0);
    }

    #[test]
    fn off_grid_pose_is_recovered_by_refinement() {
        let intr = intrinsics_from_fov(FRAC_PI_2, 1.0, 64, 64).unwrap();
        let gt = pose(10.0, -5.0);
        let flow = gt_leveling_flow(&intr, &gt);
        let est = soft_argmin_solve(
            &flow,
            &intr,
            &CandidateGrid::default_search(),
            &SoftArgminConfig::default(),
        )
        .unwrap();
        let err = rotation_err_deg(&est.pose, &gt);
        assert!(err <= 0.25, "recovered within {err:.4} deg");
    }

    #[test]
    fn weights_are_a_probability_vector_and_final_error_is_bounded() {
        let intr = intrinsics_from_fov(1.2, 1.0, 32, 32).unwrap();
        let flow = gt_leveling_flow(&intr, &pose(17.0, 8.0));
        let est = soft_argmin_solve(
            &flow,
            &intr,
            &CandidateGrid::default_search(),
            &SoftArgminConfig::default(),
        )
        .unwrap();
        assert_eq!(est.weights.len(), est.final_grid.len());
        let sum: f64 = est.weights.iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(est.weights.iter().all(|&w| w >= 0.0));
        let max_err = est.errors.iter().cloned().fold(f64::MIN, f64::max);
        assert!(est.final_error <= max_err);
    }

    #[test]
    fn temperature_limits_select_argmin_and_centroid() {
        let intr = intrinsics_from_fov(FRAC_PI_2, 1.0, 32, 32).unwrap();
        let gt = pose(13.0, -3.0);
        let flow = gt_leveling_flow(&intr, &gt);
        let grid = CandidateGrid::default_search();

        // Cold limit: the single best node wins.
        let cold = soft_argmin_solve_single(&flow, &intr, &grid, 1e-9).unwrap();
        let cands = grid.candidates();
        let argmin = cold
            .errors
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert_eq!(cold.pose.pitch, cands[argmin].pitch);
        assert_eq!(cold.pose.roll, cands[argmin].roll);

        // Hot limit: the grid centroid (zero for a symmetric grid).
        let hot = soft_argmin_solve_single(&flow, &intr, &grid, 1e9).unwrap();
        let centroid_pitch: f64 =
            cands.iter().map(|c| c.pitch).sum::<f64>() / cands.len() as f64;
        assert!((hot.pose.pitch - centroid_pitch).abs() < 1e-6);
        assert!(hot.pose.roll.abs() < 1e-6);
    }

    #[test]
    fn yaw_in_the_source_pose_does_not_move_the_estimate() {
        let intr = intrinsics_from_fov(1.1, 1.0, 32, 32).unwrap();
        let base = gt_leveling_flow(&intr, &pose(9.0, 4.0));
        let yawed = gt_leveling_flow(
            &intr,
            &CameraPose {
                yaw: -2.4,
                ..pose(9.0, 4.0)
            },
        );
        let grid = CandidateGrid::default_search();
        let cfg = SoftArgminConfig::default();
        let a = soft_argmin_solve(&base, &intr, &grid, &cfg).unwrap();
        let b = soft_argmin_solve(&yawed, &intr, &grid, &cfg).unwrap();
        assert_eq!(a.pose, b.pose);
    }

    #[test]
    fn degenerate_and_nonfinite_flows_are_rejected() {
        let intr = intrinsics_from_fov(1.0, 1.0, 8, 8).unwrap();
        let grid = CandidateGrid::default_search();
        let cfg = SoftArgminConfig::default();

        let empty = DenseFlowField::new(8, 8).unwrap();
        assert!(matches!(
            soft_argmin_solve(&empty, &intr, &grid, &cfg),
            Err(Error::Degenerate(_))
        ));

        let mut poisoned = gt_leveling_flow(&intr, &pose(5.0, 5.0));
        poisoned.set(3, 3, f64::NAN, 0.0);
        assert!(matches!(
            soft_argmin_solve(&poisoned, &intr, &grid, &cfg),
            Err(Error::NonFinite(_))
        ));

        let mismatched = DenseFlowField::new(4, 4).unwrap();
        assert!(matches!(
            soft_argmin_solve(&mismatched, &intr, &grid, &cfg),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn analytic_gradient_matches_central_differences() {
        let intr = intrinsics_from_fov(FRAC_PI_2, 1.0, 24, 24).unwrap();
        let gt = pose(11.0, -6.0);
        let mut flow = gt_leveling_flow(&intr, &gt);
        // Perturb the flow so residuals (and hence gradients) are nonzero.
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0010);
        for v in 0..24 {
            for u in 0..24 {
                if flow.is_valid(u, v) {
                    let (dx, dy) = flow.get(u, v);
                    flow.set(
                        u,
                        v,
                        dx + rng.random_range(-0.3..0.3),
                        dy + rng.random_range(-0.3..0.3),
                    );
                }
            }
        }
        let grid = CandidateGrid::pitch_roll(
            -20f64.to_radians(),
            20f64.to_radians(),
            5,
            -20f64.to_radians(),
            20f64.to_radians(),
            5,
        )
        .unwrap();
        let cfg = SoftArgminConfig {
            temperature: 0.5,
            stages: 1,
            shrink: 0.2,
        };
        let grad = soft_argmin_gradient(&flow, &intr, &grid, &cfg).unwrap();

        let h = 1e-4;
        let mut checked = 0;
        while checked < 10 {
            let u = rng.random_range(0..24u32);
            let v = rng.random_range(0..24u32);
            if !flow.is_valid(u, v) {
                continue;
            }
            for component in 0..2 {
                let (dx, dy) = flow.get(u, v);
                let mut plus = flow.clone();
                let mut minus = flow.clone();
                if component == 0 {
                    plus.set(u, v, dx + h, dy);
                    minus.set(u, v, dx - h, dy);
                } else {
                    plus.set(u, v, dx, dy + h);
                    minus.set(u, v, dx, dy - h);
                }
                let ep = soft_argmin_solve_single(&plus, &intr, &grid, cfg.temperature).unwrap();
                let em = soft_argmin_solve_single(&minus, &intr, &grid, cfg.temperature).unwrap();
                let fd = [
                    (ep.pose.pitch - em.pose.pitch) / (2.0 * h),
                    (ep.pose.roll - em.pose.roll) / (2.0 * h),
                ];
                for (k, fd_k) in fd.iter().enumerate() {
                    let g = grad.param(k).get(u, v);
                    let analytic = if component == 0 { g.0 } else { g.1 };
                    let scale = fd_k.abs().max(analytic.abs()).max(1e-12);
                    assert!(
                        (analytic - fd_k).abs() / scale < 1e-4,
                        "pixel ({u},{v}) comp {component} param {k}: analytic {analytic:.6e} vs fd {fd_k:.6e}"
                    );
                }
            }
            checked += 1;
        }
    }

    #[test]
    fn gradient_magnitude_obeys_the_analytic_bound() {
        // Flow equal to one candidate's rigid flow, warm softmax: every
        // entry of the gradient is bounded by
        // 2 · range_k · max|residual| / (τ · N_min).
        let intr = intrinsics_from_fov(FRAC_PI_2, 1.0, 24, 24).unwrap();
        let grid = CandidateGrid::pitch_roll(
            -15f64.to_radians(),
            15f64.to_radians(),
            5,
            -15f64.to_radians(),
            15f64.to_radians(),
            5,
        )
        .unwrap();
        let node = grid.candidates()[7];
        let flow = gt_leveling_flow(&intr, &node);
        let cfg = SoftArgminConfig {
            temperature: 50.0,
            stages: 1,
            shrink: 0.2,
        };
        let grad = soft_argmin_gradient(&flow, &intr, &grid, &cfg).unwrap();

        let model = RigidFlowModel::new(&intr);
        let mut max_resid = 0.0f64;
        let mut n_min = usize::MAX;
        for cand in grid.candidates() {
            let g = model.flow_for(&cand);
            let mut n = 0;
            for i in 0..flow.dx().len() {
                if flow.validity()[i] && g.validity()[i] {
                    n += 1;
                    max_resid = max_resid
                        .max((flow.dx()[i] - g.dx()[i]).abs())
                        .max((flow.dy()[i] - g.dy()[i]).abs());
                }
            }
            n_min = n_min.min(n);
        }
        let ranges = [30f64.to_radians(), 30f64.to_radians(), 0.0];
        for k in 0..3 {
            let bound = 2.0 * ranges[k] * max_resid / (cfg.temperature * n_min as f64);
            let g = grad.param(k);
            let observed = g
                .dx
                .iter()
                .chain(g.dy.iter())
                .fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(
                observed <= bound + 1e-15,
                "param {k}: observed {observed:.3e} exceeds bound {bound:.3e}"
            );
        }
    }

    #[test]
    fn warp_with_identity_estimate_is_lossless() {
        let erp = ErpImage::from_fn(64, 32, 1, |u, v, _| ((u * 7 + v) % 13) as f32 / 13.0).unwrap();
        let est = RigidEstimate {
            pose: CameraPose::level(),
            errors: vec![0.0],
            weights: vec![1.0],
            final_error: 0.0,
            final_grid: CandidateGrid::pitch_roll(0.0, 0.0, 1, 0.0, 0.0, 1).unwrap(),
        };
        assert_eq!(warp_to_canonical(&erp, &est), erp);
    }

    #[test]
    fn warping_with_the_exact_estimate_levels_a_tilted_panorama() {
        // Tilt a smooth panorama by a known pitch/roll, then undo it with
        // an estimate holding the exact pose.
        let erp = ErpImage::from_fn(256, 128, 1, |u, v, _| {
            let th = 2.0 * std::f64::consts::PI * (u as f64 + 0.5) / 256.0;
            let ph = std::f64::consts::PI * (v as f64 + 0.5) / 128.0;
            (0.5 + 0.25 * (th + ph).cos() + 0.2 * (2.0 * th - 0.5 * ph).sin()) as f32
        })
        .unwrap();
        let p = pose(12.0, -7.0);
        let tilt = Rotation::pitch(p.pitch).mul(&Rotation::roll(p.roll)).inverse();
        let tilted = rotate_erp(&erp, &tilt);
        let est = RigidEstimate {
            pose: p,
            errors: vec![0.0],
            weights: vec![1.0],
            final_error: 0.0,
            final_grid: CandidateGrid::pitch_roll(p.pitch, p.pitch, 1, p.roll, p.roll, 1).unwrap(),
        };
        let leveled = warp_to_canonical(&tilted, &est);
        let mut se = 0.0f64;
        for i in 0..erp.data().len() {
            let d = erp.data()[i] as f64 - leveled.data()[i] as f64;
            se += d * d;
        }
        let psnr = 10.0 * ((erp.data().len() as f64 / se).log10());
        assert!(psnr >= 32.0, "tilt-then-level PSNR {psnr:.2} dB");
    }

    #[test]
    fn warped_mask_stays_binary_after_thresholding() {
        use crate::sphere::{project_perspective_to_erp, PerspectiveImage};
        let intr = intrinsics_from_fov(1.1, 4.0 / 3.0, 48, 36).unwrap();
        let persp = PerspectiveImage::from_fn(48, 36, 1, |_, _, _| 1.0).unwrap();
        let p = pose(10.0, -4.0);
        let (_, mask) = project_perspective_to_erp(&persp, &intr, &p, 256, 128).unwrap();
        let est = RigidEstimate {
            pose: p,
            errors: vec![0.0],
            weights: vec![1.0],
            final_error: 0.0,
            final_grid: CandidateGrid::pitch_roll(p.pitch, p.pitch, 1, p.roll, p.roll, 1).unwrap(),
        };
        let warped = warp_to_canonical(&mask, &est);
        // Thresholding at 0.5 restores a strictly binary plane.
        let binary = |img: &ErpImage| {
            img.data()
                .iter()
                .map(|&v| if v > 0.5 { 1.0f32 } else { 0.0 })
                .collect::<Vec<_>>()
        };
        assert!(binary(&warped).iter().all(|&v| v == 0.0 || v == 1.0));
        // Area must be measured in solid angle (cos-latitude weight):
        // pixel counts alone are not rotation invariant on this grid.
        let area = |img: &ErpImage| -> f64 {
            let mut a = 0.0;
            for v in 0..128u32 {
                let lat = std::f64::consts::FRAC_PI_2
                    - std::f64::consts::PI * (v as f64 + 0.5) / 128.0;
                for u in 0..256u32 {
                    if img.get(u, v, 0) > 0.5 {
                        a += lat.cos();
                    }
                }
            }
            a
        };
        let before = area(&mask);
        let after = area(&warped);
        assert!(
            (after - before).abs() / before < 0.02,
            "mask area changed by {:.2}% after warping",
            100.0 * (after - before).abs() / before
        );
    }
}
