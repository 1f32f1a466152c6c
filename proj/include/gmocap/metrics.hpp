#pragma once

#include "gmocap/pipeline.hpp"

namespace gmocap {

struct MetricStat {
    double mean = 0.0;
    double stddev = 0.0;
};

// Mean camera position error (m), averaged per camera over frames >= skip.
// Cameras lacking ground truth are simply not passed in.
MetricStat mcpe(const std::vector<CameraTrack>& est, const std::vector<CameraTrack>& gt,
                int skip_frames = 0);

// Mean geodesic camera orientation error (rad).
MetricStat mcoe(const std::vector<CameraTrack>& est, const std::vector<CameraTrack>& gt,
                int skip_frames = 0);

// Root position / orientation errors over frames >= skip (the evaluation
// convention drops the first 10 frames).
MetricStat mpe(const BodyTrajectory& est, const BodyTrajectory& gt, int skip_frames = 10);
MetricStat moe(const BodyTrajectory& est, const BodyTrajectory& gt, int skip_frames = 10);

// Root-aligned mean per-joint position error: both trajectories are run
// through FK with root pose and shape zeroed, so only articulation counts.
MetricStat ra_mpjpe(const BodyTrajectory& est, const BodyTrajectory& gt,
                    const SkeletonModel& model, int skip_frames = 10);

// Mean absolute bone-length difference (m) implied by the two shapes.
MetricStat shape_error(const VecX& beta_est, const VecX& beta_gt, const SkeletonModel& model);

// Least-squares planar rigid transform taking the estimated root track onto
// the ground truth over frames >= skip.
PlanarPose fit_gauge_alignment(const BodyTrajectory& est, const BodyTrajectory& gt,
                               int skip_frames = 10);

void apply_planar(BodyTrajectory* body, const PlanarPose& w);
void apply_planar(std::vector<CameraTrack>* cameras, const PlanarPose& w);

// Resolves the world-frame gauge freedom against ground truth; the same
// transform is applied jointly to the body and the cameras.
FitResult gauge_align(const FitResult& est, const BodyTrajectory& gt_body, int skip_frames = 10);

} // namespace gmocap
