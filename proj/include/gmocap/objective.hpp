#pragma once

#include <optional>
#include <vector>

#include "gmocap/camera.hpp"
#include "gmocap/prior.hpp"
#include "gmocap/skeleton.hpp"

namespace gmocap {

// Per-frame, per-camera, per-joint 2D keypoints with detector confidences.
// Missing detections are encoded as w = 0.
class Observations {
  public:
    struct Keypoint {
        double u = 0.0;
        double v = 0.0;
        double w = 0.0;
    };

    Observations() = default;
    Observations(int frames, int cameras)
        : frames_(frames), cameras_(cameras),
          data_(static_cast<std::size_t>(frames) * cameras * kNumJoints) {}

    int frame_count() const { return frames_; }
    int camera_count() const { return cameras_; }

    Keypoint& at(int t, int c, int n) { return data_[index(t, c, n)]; }
    const Keypoint& at(int t, int c, int n) const { return data_[index(t, c, n)]; }

    Observations slice(int start, int len) const {
        Observations out(len, cameras_);
        for (int t = 0; t < len; ++t)
            for (int c = 0; c < cameras_; ++c)
                for (int n = 0; n < kNumJoints; ++n) out.at(t, c, n) = at(start + t, c, n);
        return out;
    }

  private:
    std::size_t index(int t, int c, int n) const {
        return (static_cast<std::size_t>(t) * cameras_ + c) * kNumJoints + n;
    }

    int frames_ = 0;
    int cameras_ = 0;
    std::vector<Keypoint> data_;
};

struct LossWeights {
    double w_2d = 1.0;
    double w_m = 2e-4;
    double w_3ds = 2e-3;
    double w_cos = 10.0;
    double w_cps = 1.0;
    double w_beta = 1e-2;
    double w_z = 1e-3;
    double w_gp = 100.0;
    double w_cgp = 100.0;
};

struct LossTerms {
    double e_2d = 0.0;
    double e_motion = 0.0;
    double e_3ds = 0.0;
    double e_cos = 0.0;
    double e_cps = 0.0;
    double e_beta = 0.0;
    double e_z = 0.0;
    double e_hgp = 0.0;
    double e_cgp = 0.0;

    double weighted_total(const LossWeights& w) const {
        return w.w_2d * e_2d + w.w_m * e_motion + w.w_3ds * e_3ds + w.w_cos * e_cos +
               w.w_cps * e_cps + w.w_beta * e_beta + w.w_z * e_z + w.w_gp * e_hgp +
               w.w_cgp * e_cgp;
    }
};

// Body trajectory plus camera tracks; the unit the optimizer works on.
struct ProblemState {
    BodyTrajectory body;
    std::vector<CameraTrack> cameras;
};

// Flat parameter order: beta | per-frame (tau, phi, z) | per-camera,
// per-frame (r, p). Intrinsics are constants and never packed.
struct ParamLayout {
    int frames = 0;
    int cameras = 0;

    static constexpr int kFrameDim = 6 + kPoseLatentDim; // tau, phi, z
    static constexpr int kCamDim = 9;                    // r, p

    int dim() const { return kShapeDim + frames * kFrameDim + cameras * frames * kCamDim; }
    int beta_offset() const { return 0; }
    int frame_offset(int t) const { return kShapeDim + t * kFrameDim; }
    int cam_offset(int c, int t) const {
        return kShapeDim + frames * kFrameDim + (c * frames + t) * kCamDim;
    }

    VecX pack(const ProblemState& state) const;
    void unpack(const VecX& params, ProblemState* state) const;
};

// The weighted multi-term fitting objective over one body trajectory and C
// camera tracks, with an analytic gradient over all parameters.
class Objective {
  public:
    Objective(const Observations& obs, std::vector<CameraIntrinsics> intrinsics,
              const PriorModel& prior, const SkeletonModel& model, const LossWeights& weights,
              double confidence_floor = 0.3);

    const ParamLayout& layout() const { return layout_; }
    const LossWeights& weights() const { return weights_; }

    LossTerms terms(const ProblemState& state) const;

    double loss(const VecX& params) const;

    // Gradient in the layout order; frozen entries (mask != 0) are zeroed.
    // Throws NonFiniteLoss / NonFiniteGradient.
    double loss_and_grad(const VecX& params, VecX* grad, LossTerms* terms = nullptr,
                         const std::vector<std::uint8_t>* frozen = nullptr) const;

    // Empty state carrying the intrinsics, sized for unpack.
    ProblemState make_state() const;

  private:
    ProblemState make_state_from_params(const VecX& params) const;
    LossTerms evaluate(const ProblemState& state, VecX* grad) const;

    const Observations* obs_;
    const PriorModel* prior_;
    const SkeletonModel* model_;
    LossWeights weights_;
    double conf_floor_;
    ParamLayout layout_;
    std::vector<CameraIntrinsics> intrinsics_;
};

} // namespace gmocap
