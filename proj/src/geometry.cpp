#include "gmocap/geometry.hpp"

#include <cmath>

#include "gmocap/error.hpp"

namespace gmocap {

namespace {

// Coefficients of R = I + a*K + b*K^2 with K = hat(w), theta = |w|, and the
// theta-derivative ratios p = a'(theta)/theta, q = b'(theta)/theta. Series
// below theta ~ 1e-4 keep everything smooth through zero.
struct RodriguesCoeffs {
    double a, b, p, q;
};

RodriguesCoeffs rodrigues_coeffs(double theta) {
    RodriguesCoeffs c{};
    const double t2 = theta * theta;
    if (theta < 1e-4) {
        c.a = 1.0 - t2 / 6.0 + t2 * t2 / 120.0;
        c.b = 0.5 - t2 / 24.0 + t2 * t2 / 720.0;
        c.p = -1.0 / 3.0 + t2 / 30.0;
        c.q = -1.0 / 12.0 + t2 / 180.0;
    } else {
        const double s = std::sin(theta);
        const double co = std::cos(theta);
        c.a = s / theta;
        c.b = (1.0 - co) / t2;
        c.p = (theta * co - s) / (t2 * theta);
        c.q = (theta * s - 2.0 * (1.0 - co)) / (t2 * t2);
    }
    return c;
}

// vee of the antisymmetric part scaled by 2: s_k = sum_ij A_ij d hat(e_k)_ij.
Vec3 skew_inner(const Mat3& A) {
    return {A(2, 1) - A(1, 2), A(0, 2) - A(2, 0), A(1, 0) - A(0, 1)};
}

} // namespace

Mat3 hat(const Vec3& w) {
    Mat3 K;
    K << 0.0, -w.z(), w.y(), w.z(), 0.0, -w.x(), -w.y(), w.x(), 0.0;
    return K;
}

Mat3 so3_exp(const Vec3& w) {
    const double theta = w.norm();
    const RodriguesCoeffs c = rodrigues_coeffs(theta);
    const Mat3 K = hat(w);
    return Mat3::Identity() + c.a * K + c.b * (K * K);
}

Vec3 so3_log(const Mat3& R) {
    Eigen::AngleAxisd aa(R);
    return aa.angle() * aa.axis();
}

Vec3 so3_exp_backward(const Vec3& w, const Mat3& d_R) {
    const double theta = w.norm();
    const RodriguesCoeffs c = rodrigues_coeffs(theta);
    const Mat3 K = hat(w);
    const Mat3 K2 = K * K;

    const double inner_K = (d_R.array() * K.array()).sum();
    const double inner_K2 = (d_R.array() * K2.array()).sum();
    const Vec3 s = skew_inner(d_R);
    const Vec3 s1 = skew_inner(d_R * K.transpose());
    const Vec3 s2 = skew_inner(K.transpose() * d_R);

    return (c.p * inner_K + c.q * inner_K2) * w + c.a * s + c.b * (s1 + s2);
}

double wrap_angle(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    if (a > M_PI) a -= 2.0 * M_PI;
    if (a <= -M_PI) a += 2.0 * M_PI;
    return a;
}

Vec3 wrap_axis_angle(const Vec3& phi) {
    const double theta = phi.norm();
    if (theta <= M_PI || theta < 1e-12) return phi;
    double t = std::fmod(theta, 2.0 * M_PI);
    if (t > M_PI) t -= 2.0 * M_PI; // negative: flip direction below
    return phi * (t / theta);
}

Mat3 rot_z(double yaw) {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    Mat3 R;
    R << c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0;
    return R;
}

Vec3 PlanarPose::apply(const Vec3& p) const {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    return {c * p.x() - s * p.y() + x, s * p.x() + c * p.y() + y, p.z()};
}

PlanarPose PlanarPose::inverse() const {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    return {-(c * x + s * y), -(-s * x + c * y), wrap_angle(-yaw)};
}

PlanarPose PlanarPose::compose(const PlanarPose& o) const {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    return {x + c * o.x - s * o.y, y + s * o.x + c * o.y, wrap_angle(yaw + o.yaw)};
}

Mat3 rot6d_to_matrix(const Vec6& r) {
    const Vec3 a1 = r.head<3>();
    const Vec3 a2 = r.tail<3>();
    const double n1 = a1.norm();
    if (n1 <= 1e-8) throw DegenerateRotation6D("rot6d: first vector near zero");
    const Vec3 b1 = a1 / n1;
    const Vec3 w = a2 - a2.dot(b1) * b1;
    const double n2 = w.norm();
    if (n2 <= 1e-8 * std::max(1.0, a2.norm()))
        throw DegenerateRotation6D("rot6d: vectors near parallel");
    const Vec3 b2 = w / n2;
    Mat3 R;
    R.col(0) = b1;
    R.col(1) = b2;
    R.col(2) = b1.cross(b2);
    return R;
}

Vec6 matrix_to_rot6d(const Mat3& R) {
    Vec6 r;
    r.head<3>() = R.col(0);
    r.tail<3>() = R.col(1);
    return r;
}

Vec6 rot6d_backward(const Vec6& r, const Mat3& d_R) {
    const Vec3 a1 = r.head<3>();
    const Vec3 a2 = r.tail<3>();
    const double n1 = a1.norm();
    const Vec3 b1 = a1 / n1;
    const double d = a2.dot(b1);
    const Vec3 w = a2 - d * b1;
    const double n2 = w.norm();
    const Vec3 b2 = w / n2;

    const Vec3 g1 = d_R.col(0);
    const Vec3 g2 = d_R.col(1);
    const Vec3 g3 = d_R.col(2);

    // b3 = b1 x b2
    Vec3 d_b1 = g1 + b2.cross(g3);
    Vec3 d_b2 = g2 + g3.cross(b1);

    // b2 = w / |w|
    const Vec3 d_w = (d_b2 - b2 * b2.dot(d_b2)) / n2;

    // w = a2 - (a2 . b1) b1
    Vec3 d_a2 = d_w - b1 * b1.dot(d_w);
    d_b1 += -(d_w.dot(b1)) * a2 - d * d_w;

    // b1 = a1 / |a1|
    const Vec3 d_a1 = (d_b1 - b1 * b1.dot(d_b1)) / n1;

    Vec6 out;
    out.head<3>() = d_a1;
    out.tail<3>() = d_a2;
    return out;
}

} // namespace gmocap
