#pragma once

#include "gmocap/rng.hpp"
#include "gmocap/skeleton.hpp"

namespace gmocap {

enum class MotionKind {
    kWalkCircle,
    kWalkLine,
    kTurnInPlace,
    kCrouchWave,
    kComposite,
};

const char* motion_kind_name(MotionKind kind);
MotionKind motion_kind_from_name(const std::string& name); // throws ValidationError

// Procedural gait parameters. The curves are smooth closed-form functions
// of time, so trajectories are C-infinity and fully determined by this
// struct. The texture fields add small low-frequency per-component angle
// variation so sampled poses span the full 63-dim angle space.
struct GaitParams {
    MotionKind kind = MotionKind::kWalkCircle;
    double speed = 0.9;       // m/s along the path
    double radius = 1.2;      // walk-circle radius, m
    double start_angle = 0.0; // position on the circle / line heading
    double turn_rate = 0.6;   // rad/s for turn-in-place
    double stride_hz = 0.95;  // full gait cycles per second
    double gait_phase0 = 0.0;
    double hip_amp = 0.30;
    double knee_amp = 0.55;
    double arm_amp = 0.35;
    double crouch_depth = 0.45; // max crouch flexion angle, rad
    double crouch_hz = 0.30;
    double wave_hz = 1.7;
    double root_height = 0.91;
    double bob_amp = 0.012;
    Eigen::Matrix<double, kAngleDim, 1> texture_amp;
    Eigen::Matrix<double, kAngleDim, 1> texture_hz;
    Eigen::Matrix<double, kAngleDim, 1> texture_phase;

    GaitParams() {
        texture_amp.setZero();
        texture_hz.setOnes();
        texture_phase.setZero();
    }
};

// Randomizes plausible parameters for a motion kind.
GaitParams make_gait_params(MotionKind kind, Rng& rng);

// Joint angles at time t (seconds).
VecX gait_angles(const GaitParams& p, double t);

// Root position and heading yaw at time t. Yaw 0 faces world +Y.
void gait_root(const GaitParams& p, double t, Vec3* tau, double* yaw);

} // namespace gmocap
