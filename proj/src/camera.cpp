#include "gmocap/camera.hpp"

#include <cmath>

#include "gmocap/error.hpp"

namespace gmocap {

Vec2 project(const Mat3& R, const Vec3& p, const CameraIntrinsics& K, const Vec3& X) {
    Vec2 uv;
    if (!try_project(R, p, K, X, &uv)) throw BehindCamera("project: point behind camera");
    return uv;
}

Vec2 project(const Vec6& r, const Vec3& p, const CameraIntrinsics& K, const Vec3& X) {
    return project(rot6d_to_matrix(r), p, K, X);
}

bool try_project(const Mat3& R, const Vec3& p, const CameraIntrinsics& K, const Vec3& X, Vec2* uv) {
    const Vec3 xc = R.transpose() * (X - p);
    if (xc.z() <= kMinDepth) return false;
    (*uv)[0] = K.fx * xc.x() / xc.z() + K.cx;
    (*uv)[1] = K.fy * xc.y() / xc.z() + K.cy;
    return true;
}

void project_backward(const Mat3& R, const Vec3& p, const CameraIntrinsics& K, const Vec3& X,
                      const Vec2& d_uv, Mat3* d_R, Vec3* d_p, Vec3* d_X) {
    const Vec3 c = X - p;
    const Vec3 xc = R.transpose() * c;
    const double iz = 1.0 / xc.z();
    // u = fx*x/z + cx, v = fy*y/z + cy
    Vec3 d_xc;
    d_xc.x() = d_uv[0] * K.fx * iz;
    d_xc.y() = d_uv[1] * K.fy * iz;
    d_xc.z() = -(d_uv[0] * K.fx * xc.x() + d_uv[1] * K.fy * xc.y()) * iz * iz;
    const Vec3 d_c = R * d_xc;
    if (d_X) *d_X += d_c;
    if (d_p) *d_p -= d_c;
    if (d_R) d_R->noalias() += c * d_xc.transpose();
}

namespace {

struct NormalizedPoints2D {
    std::vector<Vec2> pts;
    Mat3 T; // applied transform
};

struct NormalizedPoints3D {
    std::vector<Vec3> pts;
    Eigen::Matrix4d T;
};

NormalizedPoints2D normalize2d(const std::vector<Vec2>& pts, const std::vector<int>& idx) {
    Vec2 mean = Vec2::Zero();
    for (int i : idx) mean += pts[i];
    mean /= static_cast<double>(idx.size());
    double rms = 0.0;
    for (int i : idx) rms += (pts[i] - mean).squaredNorm();
    rms = std::sqrt(rms / static_cast<double>(idx.size()));
    const double s = rms > 1e-12 ? std::sqrt(2.0) / rms : 1.0;
    NormalizedPoints2D out;
    out.pts.reserve(idx.size());
    for (int i : idx) out.pts.push_back(s * (pts[i] - mean));
    out.T = Mat3::Identity();
    out.T(0, 0) = out.T(1, 1) = s;
    out.T(0, 2) = -s * mean.x();
    out.T(1, 2) = -s * mean.y();
    return out;
}

NormalizedPoints3D normalize3d(const std::vector<Vec3>& pts, const std::vector<int>& idx) {
    Vec3 mean = Vec3::Zero();
    for (int i : idx) mean += pts[i];
    mean /= static_cast<double>(idx.size());
    double rms = 0.0;
    for (int i : idx) rms += (pts[i] - mean).squaredNorm();
    rms = std::sqrt(rms / static_cast<double>(idx.size()));
    const double s = rms > 1e-12 ? std::sqrt(3.0) / rms : 1.0;
    NormalizedPoints3D out;
    out.pts.reserve(idx.size());
    for (int i : idx) out.pts.push_back(s * (pts[i] - mean));
    out.T = Eigen::Matrix4d::Identity();
    out.T(0, 0) = out.T(1, 1) = out.T(2, 2) = s;
    out.T.block<3, 1>(0, 3) = -s * mean;
    return out;
}

double weighted_rms(const std::vector<Vec3>& p3, const std::vector<Vec2>& p2,
                    const std::vector<double>& w, const std::vector<int>& idx,
                    const CameraIntrinsics& K, const Mat3& R, const Vec3& p) {
    double sum = 0.0, wsum = 0.0;
    for (int i : idx) {
        Vec2 uv;
        if (!try_project(R, p, K, p3[i], &uv)) {
            sum += w[i] * 1e8; // behind-camera candidates are heavily penalized
            wsum += w[i];
            continue;
        }
        sum += w[i] * (uv - p2[i]).squaredNorm();
        wsum += w[i];
    }
    return std::sqrt(sum / std::max(wsum, 1e-12));
}

} // namespace

std::pair<Vec6, Vec3> pnp_resect(const std::vector<Vec3>& points3d, const std::vector<Vec2>& points2d,
                                 const std::vector<double>& weights, const CameraIntrinsics& K,
                                 int max_refine_iters) {
    if (points3d.size() != points2d.size() || points3d.size() != weights.size())
        throw ValidationError("pnp_resect: size mismatch");
    std::vector<int> idx;
    for (int i = 0; i < static_cast<int>(weights.size()); ++i)
        if (weights[i] > 0.0) idx.push_back(i);
    if (idx.size() < 6) throw InsufficientPoints("pnp_resect: need >= 6 weighted points");

    const NormalizedPoints2D n2 = normalize2d(points2d, idx);
    const NormalizedPoints3D n3 = normalize3d(points3d, idx);

    const int n = static_cast<int>(idx.size());
    MatX A(2 * n, 12);
    for (int k = 0; k < n; ++k) {
        const double sw = std::sqrt(weights[idx[k]]);
        const Vec3& X = n3.pts[k];
        const Vec2& x = n2.pts[k];
        Eigen::Matrix<double, 1, 4> Xh;
        Xh << X.x(), X.y(), X.z(), 1.0;
        A.row(2 * k).setZero();
        A.row(2 * k).segment<4>(0) = sw * Xh;
        A.row(2 * k).segment<4>(8) = -sw * x.x() * Xh;
        A.row(2 * k + 1).setZero();
        A.row(2 * k + 1).segment<4>(4) = sw * Xh;
        A.row(2 * k + 1).segment<4>(8) = -sw * x.y() * Xh;
    }
    Eigen::JacobiSVD<MatX> svd(A, Eigen::ComputeThinV);
    const VecX& sv = svd.singularValues();
    if (sv(10) < 1e-10 * sv(0))
        throw SingularConfiguration("pnp_resect: rank-deficient DLT system");
    const VecX h = svd.matrixV().col(11);
    Eigen::Matrix<double, 3, 4> Pn;
    Pn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8), h(9), h(10), h(11);

    // undo normalization: x = T2 * P * T3 * X
    Mat3 Kmat = Mat3::Identity();
    Kmat(0, 0) = K.fx;
    Kmat(1, 1) = K.fy;
    Kmat(0, 2) = K.cx;
    Kmat(1, 2) = K.cy;
    Eigen::Matrix<double, 3, 4> P = n2.T.inverse() * Pn * n3.T;

    Eigen::Matrix<double, 3, 4> Pc = Kmat.inverse() * P; // ~ s [R_cw | t_cw]
    Mat3 M = Pc.block<3, 3>(0, 0);
    if (M.determinant() < 0.0) {
        Pc = -Pc;
        M = -M;
    }
    Eigen::JacobiSVD<Mat3> msvd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (msvd.singularValues()(2) < 1e-10 * msvd.singularValues()(0))
        throw SingularConfiguration("pnp_resect: degenerate camera matrix");
    Mat3 R_cw = msvd.matrixU() * msvd.matrixV().transpose();
    const double scale = msvd.singularValues().mean();
    const Vec3 t_cw = Pc.col(3) / scale;

    Mat3 R = R_cw.transpose(); // world-from-camera
    Vec3 p = -R_cw.transpose() * t_cw;

    // Gauss-Newton refinement with Levenberg damping on the weighted
    // reprojection error; keeps the best iterate, so the returned pose is
    // never worse than the DLT estimate.
    double best_rms = weighted_rms(points3d, points2d, weights, idx, K, R, p);
    Mat3 best_R = R;
    Vec3 best_p = p;
    double lambda = 1e-4;
    for (int it = 0; it < max_refine_iters; ++it) {
        Eigen::Matrix<double, 6, 6> H = Eigen::Matrix<double, 6, 6>::Zero();
        Eigen::Matrix<double, 6, 1> g = Eigen::Matrix<double, 6, 1>::Zero();
        for (int i : idx) {
            const Vec3 xc = R.transpose() * (points3d[i] - p);
            if (xc.z() <= kMinDepth) continue;
            const double iz = 1.0 / xc.z();
            Vec2 uv(K.fx * xc.x() * iz + K.cx, K.fy * xc.y() * iz + K.cy);
            const Vec2 res = uv - points2d[i];
            Eigen::Matrix<double, 2, 3> J_xc;
            J_xc << K.fx * iz, 0.0, -K.fx * xc.x() * iz * iz, 0.0, K.fy * iz,
                -K.fy * xc.y() * iz * iz;
            // xc = exp(-w)^ R^T (X - p): d xc/d w = hat(xc), d xc/d p = -R^T
            Eigen::Matrix<double, 2, 6> J;
            J.block<2, 3>(0, 0) = J_xc * hat(xc);
            J.block<2, 3>(0, 3) = -J_xc * R.transpose();
            H.noalias() += weights[i] * J.transpose() * J;
            g.noalias() += weights[i] * J.transpose() * res;
        }
        const Eigen::Matrix<double, 6, 6> Hd =
            H + lambda * Eigen::Matrix<double, 6, 6>(H.diagonal().asDiagonal());
        const Eigen::Matrix<double, 6, 1> step = Hd.ldlt().solve(-g);
        if (!step.allFinite()) break;
        const Mat3 R_new = R * so3_exp(step.head<3>());
        const Vec3 p_new = p + step.tail<3>();
        const double rms = weighted_rms(points3d, points2d, weights, idx, K, R_new, p_new);
        if (rms < best_rms) {
            R = R_new;
            p = p_new;
            best_R = R;
            best_p = p;
            const bool converged = (best_rms - rms) < 1e-12 * std::max(1.0, best_rms);
            best_rms = rms;
            lambda = std::max(lambda * 0.5, 1e-9);
            if (converged) break;
        } else {
            lambda *= 10.0;
            if (lambda > 1e6) break;
        }
    }
    return {matrix_to_rot6d(best_R), best_p};
}

} // namespace gmocap
