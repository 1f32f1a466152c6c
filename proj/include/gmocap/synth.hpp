#pragma once

#include <vector>

#include "gmocap/gait.hpp"
#include "gmocap/objective.hpp"

namespace gmocap {

// One synthetic camera. Static and pan cameras sit at `distance` from the
// motion centroid at bearing `azimuth`; orbit cameras circle the centroid at
// radius `distance` starting from `azimuth` with `angular_speed` rad/s.
struct CameraSpec {
    enum class Kind { kStatic, kOrbit, kPan };
    Kind kind = Kind::kStatic;
    double distance = 5.0;
    double height = 1.8;
    double azimuth = 0.0;
    double angular_speed = 0.25;
    CameraIntrinsics intrinsics{1100.0, 1100.0, 960.0, 540.0};
};

struct NoiseSpec {
    double sigma_px = 0.0;
    double dropout = 0.0; // probability of a dropped keypoint (w = 0)
};

struct SceneSpec {
    MotionKind motion = MotionKind::kWalkCircle;
    int frames = 100;
    int fps = 30; // fixed
    std::vector<CameraSpec> cameras;
    NoiseSpec noise;
    std::uint64_t seed = 1;
    std::uint64_t noise_seed = 0; // 0: derived from seed

    void validate() const; // throws ValidationError
};

struct SyntheticScene {
    BodyTrajectory body;
    std::vector<BodyState> states;
    std::vector<CameraTrack> cameras;
    Observations observations;
};

// Smooth procedural motion, deterministic per seed. Root stays above the
// ground and the generated keypoint geometry keeps all joints above z = 0.
BodyTrajectory generate_motion(const SceneSpec& spec, const SkeletonModel& model,
                               std::vector<BodyState>* states_out = nullptr);

std::vector<CameraTrack> generate_cameras(const SceneSpec& spec,
                                          const std::vector<BodyState>& states);

// Projects all joints into all cameras and applies the noise model: pixel
// sigma, dropout, confidences uniform in [0.5, 1]; joints behind a camera
// get w = 0. Deterministic per seed.
Observations render_keypoints(const std::vector<BodyState>& states,
                              const std::vector<CameraTrack>& cameras, const NoiseSpec& noise,
                              std::uint64_t seed);

SyntheticScene make_scene(const SceneSpec& spec, const SkeletonModel& model);

// Canonicalized windows sampled across motion kinds and parameter draws,
// shape held at beta = 0.
std::vector<MotionWindow> build_prior_corpus(int n_windows, std::uint64_t seed,
                                             const SkeletonModel& model);

} // namespace gmocap
