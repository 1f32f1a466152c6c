#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gmocap/geometry.hpp"

namespace gmocap {

inline constexpr int kNumJoints = 22;
inline constexpr int kNumBones = 21;
inline constexpr int kShapeDim = 10;
inline constexpr int kAngleDim = 63; // 21 non-root joints * 3 axis-angle
inline constexpr int kPoseLatentDim = 32;

// SMPL-compatible 22-joint body topology (hands excluded).
namespace joint {
inline constexpr int kPelvis = 0;
inline constexpr int kLeftHip = 1;
inline constexpr int kRightHip = 2;
inline constexpr int kSpine1 = 3;
inline constexpr int kLeftKnee = 4;
inline constexpr int kRightKnee = 5;
inline constexpr int kSpine2 = 6;
inline constexpr int kLeftAnkle = 7;
inline constexpr int kRightAnkle = 8;
inline constexpr int kSpine3 = 9;
inline constexpr int kLeftFoot = 10;
inline constexpr int kRightFoot = 11;
inline constexpr int kNeck = 12;
inline constexpr int kLeftCollar = 13;
inline constexpr int kRightCollar = 14;
inline constexpr int kHead = 15;
inline constexpr int kLeftShoulder = 16;
inline constexpr int kRightShoulder = 17;
inline constexpr int kLeftElbow = 18;
inline constexpr int kRightElbow = 19;
inline constexpr int kLeftWrist = 20;
inline constexpr int kRightWrist = 21;
} // namespace joint

// Offset of joint j's axis-angle block inside a 63-dim angle vector.
inline constexpr int angle_offset(int j) { return 3 * (j - 1); }

// One frame of the body parameterization: root position tau (m), root
// orientation phi (axis-angle), articulated pose latent z.
struct FramePose {
    Vec3 tau = Vec3::Zero();
    Vec3 phi = Vec3::Zero();
    VecX z = VecX::Zero(kPoseLatentDim);
};

// A motion: per-frame poses plus a single shared shape vector.
struct BodyTrajectory {
    std::vector<FramePose> frames;
    VecX beta = VecX::Zero(kShapeDim);
};

// World-frame joint positions and orientations.
struct BodyState {
    Mat3X joint_pos{3, kNumJoints};
    std::array<Mat3, kNumJoints> joint_rot;

    Vec6 joint_rot6d(int j) const { return matrix_to_rot6d(joint_rot[j]); }
};

// Parametric stick skeleton: a fixed joint tree, per-bone rest directions
// and lengths, a linear shape-to-bone-length map, and a PCA pose space
// mapping the 32-dim latent to 63 joint angles.
//
// World convention: Z is vertical, the ground is the XY plane, and the rest
// pose (all parameters zero) stands on the ground facing +Y.
struct SkeletonModel {
    std::array<std::string, kNumJoints> joint_names;
    std::array<int, kNumJoints> parent; // parent[0] == -1
    MatX rest_dir;                      // 3 x 21, unit columns, bone b attaches joint b+1
    VecX base_len;                      // 21, meters
    MatX shape_basis;                   // 21 x 10, meters per unit beta
    VecX pose_mean;                     // 63
    MatX pose_basis;                    // 63 x 32, orthonormal columns
    VecX pose_scale;                    // 32, per-component stddev

    // Throws ValidationError when any structural invariant fails.
    void validate() const;

    std::uint64_t fingerprint() const;

    static const SkeletonModel& default_model();
    static SkeletonModel load_file(const std::string& path);
    void save_file(const std::string& path) const;
};

VecX bone_lengths(const VecX& beta, const SkeletonModel& model);

// theta = pose_mean + pose_basis * (pose_scale .* z); exact inverse pair on
// the span of the basis.
VecX pose_decode(const VecX& z, const SkeletonModel& model);
VecX pose_encode(const VecX& theta, const SkeletonModel& model);

// Intermediates kept for fk_backward.
struct FkCache {
    Vec3 phi;
    VecX theta;
    VecX lens;
    std::array<Mat3, kNumJoints> local_rot; // [0] = exp(phi)
    BodyState state;
};

BodyState forward_kinematics(const FramePose& pose, const VecX& beta, const SkeletonModel& model,
                             FkCache* cache = nullptr);

struct FkGrad {
    Vec3 d_tau = Vec3::Zero();
    Vec3 d_phi = Vec3::Zero();
    VecX d_z = VecX::Zero(kPoseLatentDim);
    VecX d_beta = VecX::Zero(kShapeDim);
};

// Pulls adjoints of the world joint positions/orientations back to the
// frame parameters and shape.
FkGrad fk_backward(const FkCache& cache, const SkeletonModel& model, const Mat3X& d_pos,
                   const std::array<Mat3, kNumJoints>& d_rot);

} // namespace gmocap
