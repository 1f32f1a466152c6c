#pragma once

#include <Eigen/Dense>

namespace gmocap {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using VecX = Eigen::VectorXd;
using Mat3 = Eigen::Matrix3d;
using MatX = Eigen::MatrixXd;
using Mat3X = Eigen::Matrix3Xd;

Mat3 hat(const Vec3& w);

// Rodrigues exponential map, smooth for all inputs (series near zero).
Mat3 so3_exp(const Vec3& w);

// Inverse of so3_exp; returns the axis-angle with angle in [0, pi].
Vec3 so3_log(const Mat3& R);

// Adjoint of so3_exp: given dL/dR, returns dL/dw.
Vec3 so3_exp_backward(const Vec3& w, const Mat3& d_R);

// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

// Re-canonicalizes an axis-angle so its norm lies in [0, pi]. Applied at
// input boundaries only; the optimizer itself never wraps.
Vec3 wrap_axis_angle(const Vec3& phi);

Mat3 rot_z(double yaw);

// Rigid transform confined to the ground plane: yaw about the vertical axis
// plus horizontal translation. Used for window canonicalization, chunk
// stitching and gauge alignment.
struct PlanarPose {
    double x = 0.0;
    double y = 0.0;
    double yaw = 0.0;

    Mat3 rotation() const { return rot_z(yaw); }
    Vec3 translation() const { return {x, y, 0.0}; }

    Vec3 apply(const Vec3& p) const;
    Mat3 apply_rotation(const Mat3& R) const { return rotation() * R; }
    PlanarPose inverse() const;
    PlanarPose compose(const PlanarPose& other) const; // this ∘ other
};

// Rotation built from the first two columns of a rotation matrix via
// Gram-Schmidt. Continuous in the 6 parameters, scale/shear invariant.
// Throws DegenerateRotation6D if the first vector is near zero or the two
// vectors are near parallel.
Mat3 rot6d_to_matrix(const Vec6& r);

// First two columns of R, flattened column-major. Exact right inverse of
// rot6d_to_matrix on rotations.
Vec6 matrix_to_rot6d(const Mat3& R);

// Adjoint of rot6d_to_matrix: given dL/dR, returns dL/dr.
Vec6 rot6d_backward(const Vec6& r, const Mat3& d_R);

} // namespace gmocap
