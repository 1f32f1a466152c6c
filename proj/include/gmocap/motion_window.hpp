#pragma once

#include <span>

#include "gmocap/skeleton.hpp"

namespace gmocap {

// 25 consecutive canonicalized body poses: per frame and joint, a 6D world
// orientation followed by a world position. This is the unit the motion
// prior models.
struct MotionWindow {
    static constexpr int kWindowLen = 25;
    static constexpr int kJointDim = 9;                       // 6 rotation + 3 position
    static constexpr int kFrameDim = kNumJoints * kJointDim;  // 198
    static constexpr int kDim = kWindowLen * kFrameDim;       // 4950

    VecX values = VecX::Zero(kDim);

    static int offset(int t, int j) { return (t * kNumJoints + j) * kJointDim; }

    void set_joint(int t, int j, const Mat3& rot, const Vec3& pos) {
        values.segment<6>(offset(t, j)) = matrix_to_rot6d(rot);
        values.segment<3>(offset(t, j) + 6) = pos;
    }
    Vec6 rot6d(int t, int j) const { return values.segment<6>(offset(t, j)); }
    Vec3 pos(int t, int j) const { return values.segment<3>(offset(t, j) + 6); }
};

// Planar pose of a frame: root ground projection plus heading. Yaw 0 means
// the body forward axis (root-frame +Y in world) points along world +Y.
struct Anchor {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;

    PlanarPose pose() const { return {x, y, yaw}; }
};

// Anchor of a root pose. Throws DegenerateHeading when the forward axis is
// within 1e-6 of vertical.
Anchor anchor_of(const Vec3& root_pos, const Mat3& root_rot);
Anchor anchor_of(const FramePose& pose);

// Applies the inverse planar transform of the first frame's anchor to all
// joints. Vertical coordinates are untouched.
MotionWindow canonicalize_states(std::span<const BodyState> states, Anchor* anchor_out = nullptr);

// Convenience overload that runs FK on 25 frame poses first.
std::pair<MotionWindow, Anchor> canonicalize(std::span<const FramePose> frames, const VecX& beta,
                                             const SkeletonModel& model);

} // namespace gmocap
