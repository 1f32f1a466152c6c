#include "gmocap/motion_window.hpp"

#include <cmath>

#include "gmocap/error.hpp"

namespace gmocap {

Anchor anchor_of(const Vec3& root_pos, const Mat3& root_rot) {
    const Vec3 fwd = root_rot.col(1); // root-frame +Y in world
    const double planar = std::hypot(fwd.x(), fwd.y());
    if (planar <= 1e-6) throw DegenerateHeading("anchor: forward axis near vertical");
    return {root_pos.x(), root_pos.y(), wrap_angle(std::atan2(fwd.y(), fwd.x()) - M_PI / 2.0)};
}

Anchor anchor_of(const FramePose& pose) { return anchor_of(pose.tau, so3_exp(pose.phi)); }

MotionWindow canonicalize_states(std::span<const BodyState> states, Anchor* anchor_out) {
    if (states.size() != MotionWindow::kWindowLen)
        throw ValidationError("canonicalize: window must have exactly 25 frames");
    const Anchor anchor = anchor_of(states[0].joint_pos.col(0), states[0].joint_rot[0]);
    const Mat3 M = rot_z(-anchor.yaw);
    const Vec3 shift(anchor.x, anchor.y, 0.0);

    MotionWindow w;
    for (int t = 0; t < MotionWindow::kWindowLen; ++t) {
        for (int j = 0; j < kNumJoints; ++j) {
            const Vec3 pos = M * (states[t].joint_pos.col(j) - shift);
            const Mat3 rot = M * states[t].joint_rot[j];
            const int off = MotionWindow::offset(t, j);
            w.values.segment<3>(off) = rot.col(0);
            w.values.segment<3>(off + 3) = rot.col(1);
            w.values.segment<3>(off + 6) = pos;
        }
    }
    if (anchor_out) *anchor_out = anchor;
    return w;
}

std::pair<MotionWindow, Anchor> canonicalize(std::span<const FramePose> frames, const VecX& beta,
                                             const SkeletonModel& model) {
    if (frames.size() != MotionWindow::kWindowLen)
        throw ValidationError("canonicalize: window must have exactly 25 frames");
    std::vector<BodyState> states(MotionWindow::kWindowLen);
    for (int t = 0; t < MotionWindow::kWindowLen; ++t)
        states[t] = forward_kinematics(frames[t], beta, model);
    Anchor anchor;
    MotionWindow w = canonicalize_states(states, &anchor);
    return {std::move(w), anchor};
}

} // namespace gmocap
