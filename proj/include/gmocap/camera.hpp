#pragma once

#include <string>
#include <vector>

#include "gmocap/geometry.hpp"

namespace gmocap {

// Pinhole intrinsics in pixels. Held constant per camera; never optimized.
struct CameraIntrinsics {
    double fx = 1000.0;
    double fy = 1000.0;
    double cx = 500.0;
    double cy = 500.0;
};

// World-from-camera pose: the camera center sits at p and R(r) maps
// camera coordinates (x right, y down, z forward) into world coordinates.
struct CameraFramePose {
    Vec6 r = (Vec6() << 1, 0, 0, 0, 1, 0).finished();
    Vec3 p = Vec3::Zero();
};

struct CameraTrack {
    std::string name;
    CameraIntrinsics intrinsics;
    std::vector<CameraFramePose> frames;
};

inline constexpr double kMinDepth = 1e-6;

// Pinhole projection; X must be at least kMinDepth in front of the camera,
// otherwise BehindCamera is thrown.
Vec2 project(const Mat3& R, const Vec3& p, const CameraIntrinsics& K, const Vec3& X);
Vec2 project(const Vec6& r, const Vec3& p, const CameraIntrinsics& K, const Vec3& X);

// Non-throwing variant; returns false when the point is behind the camera.
bool try_project(const Mat3& R, const Vec3& p, const CameraIntrinsics& K, const Vec3& X, Vec2* uv);

// Accumulates the adjoint of project into d_R, d_p, d_X (any may be null).
void project_backward(const Mat3& R, const Vec3& p, const CameraIntrinsics& K, const Vec3& X,
                      const Vec2& d_uv, Mat3* d_R, Vec3* d_p, Vec3* d_X);

// Camera resection: weighted DLT followed by Gauss-Newton refinement of the
// reprojection error. Needs >= 6 points with positive weight. Returns the
// world-from-camera pose. Throws InsufficientPoints or
// SingularConfiguration.
std::pair<Vec6, Vec3> pnp_resect(const std::vector<Vec3>& points3d, const std::vector<Vec2>& points2d,
                                 const std::vector<double>& weights, const CameraIntrinsics& K,
                                 int max_refine_iters = 50);

} // namespace gmocap
