#include "gmocap/metrics.hpp"

#include <cmath>

#include "gmocap/error.hpp"

namespace gmocap {

namespace {

MetricStat stats_of(const std::vector<double>& samples) {
    MetricStat s;
    if (samples.empty()) return s;
    double sum = 0.0;
    for (double v : samples) sum += v;
    s.mean = sum / samples.size();
    double var = 0.0;
    for (double v : samples) var += (v - s.mean) * (v - s.mean);
    s.stddev = samples.size() > 1 ? std::sqrt(var / (samples.size() - 1)) : 0.0;
    return s;
}

double geodesic_angle(const Mat3& a, const Mat3& b) {
    const double c = 0.5 * ((b * a.transpose()).trace() - 1.0);
    return std::acos(std::clamp(c, -1.0, 1.0));
}

void check_track_sizes(const std::vector<CameraTrack>& est, const std::vector<CameraTrack>& gt) {
    if (est.size() != gt.size()) throw ValidationError("metrics: camera count mismatch");
    for (std::size_t c = 0; c < est.size(); ++c)
        if (est[c].frames.size() != gt[c].frames.size())
            throw ValidationError("metrics: camera frame count mismatch");
}

} // namespace

MetricStat mcpe(const std::vector<CameraTrack>& est, const std::vector<CameraTrack>& gt,
                int skip_frames) {
    check_track_sizes(est, gt);
    std::vector<double> all;
    double mean_of_cams = 0.0;
    for (std::size_t c = 0; c < est.size(); ++c) {
        double cam_mean = 0.0;
        int n = 0;
        for (std::size_t t = skip_frames; t < est[c].frames.size(); ++t) {
            const double d = (est[c].frames[t].p - gt[c].frames[t].p).norm();
            cam_mean += d;
            all.push_back(d);
            ++n;
        }
        mean_of_cams += cam_mean / std::max(n, 1);
    }
    MetricStat s = stats_of(all);
    s.mean = mean_of_cams / std::max<std::size_t>(est.size(), 1);
    return s;
}

MetricStat mcoe(const std::vector<CameraTrack>& est, const std::vector<CameraTrack>& gt,
                int skip_frames) {
    check_track_sizes(est, gt);
    std::vector<double> all;
    double mean_of_cams = 0.0;
    for (std::size_t c = 0; c < est.size(); ++c) {
        double cam_mean = 0.0;
        int n = 0;
        for (std::size_t t = skip_frames; t < est[c].frames.size(); ++t) {
            const double d =
                geodesic_angle(rot6d_to_matrix(est[c].frames[t].r), rot6d_to_matrix(gt[c].frames[t].r));
            cam_mean += d;
            all.push_back(d);
            ++n;
        }
        mean_of_cams += cam_mean / std::max(n, 1);
    }
    MetricStat s = stats_of(all);
    s.mean = mean_of_cams / std::max<std::size_t>(est.size(), 1);
    return s;
}

MetricStat mpe(const BodyTrajectory& est, const BodyTrajectory& gt, int skip_frames) {
    if (est.frames.size() != gt.frames.size())
        throw ValidationError("metrics: trajectory length mismatch");
    std::vector<double> samples;
    for (std::size_t t = skip_frames; t < est.frames.size(); ++t)
        samples.push_back((est.frames[t].tau - gt.frames[t].tau).norm());
    return stats_of(samples);
}

MetricStat moe(const BodyTrajectory& est, const BodyTrajectory& gt, int skip_frames) {
    if (est.frames.size() != gt.frames.size())
        throw ValidationError("metrics: trajectory length mismatch");
    std::vector<double> samples;
    for (std::size_t t = skip_frames; t < est.frames.size(); ++t)
        samples.push_back(geodesic_angle(so3_exp(est.frames[t].phi), so3_exp(gt.frames[t].phi)));
    return stats_of(samples);
}

MetricStat ra_mpjpe(const BodyTrajectory& est, const BodyTrajectory& gt,
                    const SkeletonModel& model, int skip_frames) {
    if (est.frames.size() != gt.frames.size())
        throw ValidationError("metrics: trajectory length mismatch");
    const VecX beta0 = VecX::Zero(kShapeDim);
    std::vector<double> samples;
    for (std::size_t t = skip_frames; t < est.frames.size(); ++t) {
        FramePose a, b;
        a.z = est.frames[t].z;
        b.z = gt.frames[t].z;
        const BodyState sa = forward_kinematics(a, beta0, model);
        const BodyState sb = forward_kinematics(b, beta0, model);
        double frame_mean = 0.0;
        for (int j = 0; j < kNumJoints; ++j)
            frame_mean += (sa.joint_pos.col(j) - sb.joint_pos.col(j)).norm();
        samples.push_back(frame_mean / kNumJoints);
    }
    return stats_of(samples);
}

MetricStat shape_error(const VecX& beta_est, const VecX& beta_gt, const SkeletonModel& model) {
    const VecX le = bone_lengths(beta_est, model);
    const VecX lg = bone_lengths(beta_gt, model);
    std::vector<double> samples;
    for (int b = 0; b < kNumBones; ++b) samples.push_back(std::abs(le(b) - lg(b)));
    return stats_of(samples);
}

PlanarPose fit_gauge_alignment(const BodyTrajectory& est, const BodyTrajectory& gt,
                               int skip_frames) {
    if (est.frames.size() != gt.frames.size())
        throw ValidationError("metrics: trajectory length mismatch");
    Vec2 ca = Vec2::Zero(), cb = Vec2::Zero();
    int n = 0;
    for (std::size_t t = skip_frames; t < est.frames.size(); ++t) {
        ca += est.frames[t].tau.head<2>();
        cb += gt.frames[t].tau.head<2>();
        ++n;
    }
    if (n == 0) return {};
    ca /= n;
    cb /= n;
    double sin_sum = 0.0, cos_sum = 0.0;
    for (std::size_t t = skip_frames; t < est.frames.size(); ++t) {
        const Vec2 a = est.frames[t].tau.head<2>() - ca;
        const Vec2 b = gt.frames[t].tau.head<2>() - cb;
        cos_sum += a.dot(b);
        sin_sum += a.x() * b.y() - a.y() * b.x();
    }
    const double yaw = (sin_sum == 0.0 && cos_sum == 0.0) ? 0.0 : std::atan2(sin_sum, cos_sum);
    const double c = std::cos(yaw), s = std::sin(yaw);
    PlanarPose w;
    w.yaw = yaw;
    w.x = cb.x() - (c * ca.x() - s * ca.y());
    w.y = cb.y() - (s * ca.x() + c * ca.y());
    return w;
}

void apply_planar(BodyTrajectory* body, const PlanarPose& w) {
    const Mat3 Rz = w.rotation();
    for (FramePose& f : body->frames) {
        f.tau = w.apply(f.tau);
        f.phi = wrap_axis_angle(so3_log(Rz * so3_exp(f.phi)));
    }
}

void apply_planar(std::vector<CameraTrack>* cameras, const PlanarPose& w) {
    const Mat3 Rz = w.rotation();
    for (CameraTrack& cam : *cameras)
        for (CameraFramePose& f : cam.frames) {
            f.p = w.apply(f.p);
            f.r = matrix_to_rot6d(Rz * rot6d_to_matrix(f.r));
        }
}

FitResult gauge_align(const FitResult& est, const BodyTrajectory& gt_body, int skip_frames) {
    FitResult aligned = est;
    const PlanarPose w = fit_gauge_alignment(est.trajectory, gt_body, skip_frames);
    apply_planar(&aligned.trajectory, w);
    apply_planar(&aligned.cameras, w);
    return aligned;
}

} // namespace gmocap
