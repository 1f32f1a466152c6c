#include "gmocap/objective.hpp"

#include <cmath>

#include "gmocap/error.hpp"
#include "gmocap/motion_window.hpp"

namespace gmocap {

namespace {

// Derivative of Rz(-yaw) with respect to yaw, applied to a vector.
Vec3 d_rotz_neg(double yaw, const Vec3& v) {
    const double c = std::cos(-yaw);
    const double s = std::sin(-yaw);
    // d/dyaw [c -s; s c] with c=cos(-yaw), s=sin(-yaw): dc/dyaw = s*?  Use chain:
    // M = Rz(-yaw); dM/dyaw = [-sin(-yaw), -cos(-yaw); cos(-yaw), -sin(-yaw)] * (-1)
    const double dc = s;        // d cos(-yaw)/dyaw = sin(-yaw)
    const double ds = -c;       // d sin(-yaw)/dyaw = -cos(-yaw)
    return {dc * v.x() - ds * v.y(), ds * v.x() + dc * v.y(), 0.0};
}

void check_finite_terms(const LossTerms& t) {
    const double vals[] = {t.e_2d, t.e_motion, t.e_3ds, t.e_cos, t.e_cps,
                           t.e_beta, t.e_z, t.e_hgp, t.e_cgp};
    const char* names[] = {"E_2D", "E_m", "E_3DS", "E_COS", "E_CPS",
                           "E_beta", "E_z", "E_HGP", "E_CGP"};
    for (int i = 0; i < 9; ++i)
        if (!std::isfinite(vals[i]))
            throw NonFiniteLoss(std::string("objective: non-finite term ") + names[i]);
}

} // namespace

VecX ParamLayout::pack(const ProblemState& state) const {
    VecX out(dim());
    out.segment<kShapeDim>(beta_offset()) = state.body.beta;
    for (int t = 0; t < frames; ++t) {
        const FramePose& f = state.body.frames[t];
        out.segment<3>(frame_offset(t)) = f.tau;
        out.segment<3>(frame_offset(t) + 3) = f.phi;
        out.segment<kPoseLatentDim>(frame_offset(t) + 6) = f.z;
    }
    for (int c = 0; c < cameras; ++c)
        for (int t = 0; t < frames; ++t) {
            out.segment<6>(cam_offset(c, t)) = state.cameras[c].frames[t].r;
            out.segment<3>(cam_offset(c, t) + 6) = state.cameras[c].frames[t].p;
        }
    return out;
}

void ParamLayout::unpack(const VecX& params, ProblemState* state) const {
    state->body.beta = params.segment<kShapeDim>(beta_offset());
    state->body.frames.resize(frames);
    for (int t = 0; t < frames; ++t) {
        FramePose& f = state->body.frames[t];
        f.tau = params.segment<3>(frame_offset(t));
        f.phi = params.segment<3>(frame_offset(t) + 3);
        f.z = params.segment<kPoseLatentDim>(frame_offset(t) + 6);
    }
    for (int c = 0; c < cameras; ++c) {
        state->cameras[c].frames.resize(frames);
        for (int t = 0; t < frames; ++t) {
            state->cameras[c].frames[t].r = params.segment<6>(cam_offset(c, t));
            state->cameras[c].frames[t].p = params.segment<3>(cam_offset(c, t) + 6);
        }
    }
}

Objective::Objective(const Observations& obs, std::vector<CameraIntrinsics> intrinsics,
                     const PriorModel& prior, const SkeletonModel& model,
                     const LossWeights& weights, double confidence_floor)
    : obs_(&obs), prior_(&prior), model_(&model), weights_(weights),
      conf_floor_(confidence_floor), intrinsics_(std::move(intrinsics)) {
    layout_.frames = obs.frame_count();
    layout_.cameras = obs.camera_count();
    if (static_cast<int>(intrinsics_.size()) != layout_.cameras)
        throw ValidationError("objective: intrinsics count must match camera count");
}

ProblemState Objective::make_state() const {
    ProblemState s;
    s.body.frames.resize(layout_.frames);
    s.cameras.resize(layout_.cameras);
    for (int c = 0; c < layout_.cameras; ++c) {
        s.cameras[c].name = "cam" + std::to_string(c);
        s.cameras[c].intrinsics = intrinsics_[c];
        s.cameras[c].frames.resize(layout_.frames);
    }
    return s;
}

ProblemState Objective::make_state_from_params(const VecX& params) const {
    ProblemState s = make_state();
    layout_.unpack(params, &s);
    return s;
}

LossTerms Objective::terms(const ProblemState& state) const { return evaluate(state, nullptr); }

double Objective::loss(const VecX& params) const {
    ProblemState state = make_state_from_params(params);
    const LossTerms t = evaluate(state, nullptr);
    return t.weighted_total(weights_);
}

double Objective::loss_and_grad(const VecX& params, VecX* grad, LossTerms* terms_out,
                                const std::vector<std::uint8_t>* frozen) const {
    ProblemState state = make_state_from_params(params);
    grad->setZero(layout_.dim());
    const LossTerms t = evaluate(state, grad);
    if (frozen) {
        for (int i = 0; i < grad->size(); ++i)
            if ((*frozen)[i]) (*grad)[i] = 0.0;
    }
    if (!grad->allFinite()) {
        int bad = 0;
        for (int i = 0; i < grad->size(); ++i)
            if (!std::isfinite((*grad)[i])) {
                bad = i;
                break;
            }
        throw NonFiniteGradient("objective: non-finite gradient entry at index " +
                                std::to_string(bad));
    }
    if (terms_out) *terms_out = t;
    return t.weighted_total(weights_);
}

LossTerms Objective::evaluate(const ProblemState& state, VecX* grad) const {
    const int T = layout_.frames;
    const int C = layout_.cameras;
    const int N = kNumJoints;
    const LossWeights& w = weights_;
    const bool with_grad = grad != nullptr;

    // forward kinematics for every frame
    std::vector<FkCache> fk(T);
    for (int t = 0; t < T; ++t)
        forward_kinematics(state.body.frames[t], state.body.beta, *model_, &fk[t]);

    // adjoint holders
    std::vector<Mat3X> d_pos;
    std::vector<std::array<Mat3, kNumJoints>> d_rot;
    std::vector<std::vector<Mat3>> d_cam_rot; // matrix-space adjoint from projection
    std::vector<std::vector<Vec6>> d_cam_r;   // direct 6D-space adjoint
    std::vector<std::vector<Vec3>> d_cam_p;
    if (with_grad) {
        d_pos.assign(T, Mat3X::Zero(3, N));
        std::array<Mat3, kNumJoints> zero_rot;
        zero_rot.fill(Mat3::Zero());
        d_rot.assign(T, zero_rot);
        d_cam_rot.assign(C, std::vector<Mat3>(T, Mat3::Zero()));
        d_cam_r.assign(C, std::vector<Vec6>(T, Vec6::Zero()));
        d_cam_p.assign(C, std::vector<Vec3>(T, Vec3::Zero()));
    }

    LossTerms terms;

    // E_2D: confidence-weighted squared reprojection error, 1/(N*T)
    {
        const double norm = 1.0 / (static_cast<double>(N) * T);
        for (int c = 0; c < C; ++c) {
            const CameraIntrinsics& K = state.cameras[c].intrinsics;
            for (int t = 0; t < T; ++t) {
                const Mat3 R = rot6d_to_matrix(state.cameras[c].frames[t].r);
                const Vec3& p = state.cameras[c].frames[t].p;
                for (int n = 0; n < N; ++n) {
                    const Observations::Keypoint& kp = obs_->at(t, c, n);
                    const double w_eff = kp.w < conf_floor_ ? 0.0 : kp.w;
                    if (w_eff == 0.0) continue;
                    Vec2 uv;
                    if (!try_project(R, p, K, fk[t].state.joint_pos.col(n), &uv))
                        continue; // behind camera: zero weight for this step
                    const Vec2 res = uv - Vec2(kp.u, kp.v);
                    terms.e_2d += norm * w_eff * res.squaredNorm();
                    if (with_grad) {
                        const Vec2 d_uv = 2.0 * w.w_2d * norm * w_eff * res;
                        Vec3 d_x = Vec3::Zero();
                        project_backward(R, p, K, fk[t].state.joint_pos.col(n), d_uv,
                                         &d_cam_rot[c][t], &d_cam_p[c][t], &d_x);
                        d_pos[t].col(n) += d_x;
                    }
                }
            }
        }
    }

    // E_m: prior Mahalanobis over all sliding 25-frame windows
    const int W = T - MotionWindow::kWindowLen + 1;
    if (W > 0) {
        std::vector<Anchor> anchors(W);
        MatX xc(MotionWindow::kDim, W);
        for (int s = 0; s < W; ++s) {
            const Anchor a = anchor_of(fk[s].state.joint_pos.col(0), fk[s].state.joint_rot[0]);
            anchors[s] = a;
            const Mat3 M = rot_z(-a.yaw);
            const Vec3 shift(a.x, a.y, 0.0);
            double* col = xc.col(s).data();
            for (int f = 0; f < MotionWindow::kWindowLen; ++f) {
                const BodyState& st = fk[s + f].state;
                for (int j = 0; j < N; ++j) {
                    const int off = MotionWindow::offset(f, j);
                    Eigen::Map<Vec3>(col + off) = M * st.joint_rot[j].col(0);
                    Eigen::Map<Vec3>(col + off + 3) = M * st.joint_rot[j].col(1);
                    Eigen::Map<Vec3>(col + off + 6) = M * (st.joint_pos.col(j) - shift);
                }
            }
        }
        const MatX m = encode_mu_batch(xc, *prior_);
        terms.e_motion = m.squaredNorm();
        if (with_grad && w.w_m > 0.0) {
            const MatX d_x = encode_mu_vjp_batch(xc, (2.0 * w.w_m) * m, *prior_);
            for (int s = 0; s < W; ++s) {
                const Anchor& a = anchors[s];
                const Mat3 M = rot_z(-a.yaw);
                const Mat3 Mt = M.transpose();
                const Vec3 shift(a.x, a.y, 0.0);
                double d_yaw = 0.0;
                Vec2 d_shift = Vec2::Zero();
                const double* col = d_x.col(s).data();
                for (int f = 0; f < MotionWindow::kWindowLen; ++f) {
                    const BodyState& st = fk[s + f].state;
                    for (int j = 0; j < N; ++j) {
                        const int off = MotionWindow::offset(f, j);
                        const Vec3 c0 = Eigen::Map<const Vec3>(col + off);
                        const Vec3 c1 = Eigen::Map<const Vec3>(col + off + 3);
                        const Vec3 dq = Eigen::Map<const Vec3>(col + off + 6);
                        Mat3& dR = d_rot[s + f][j];
                        dR.col(0) += Mt * c0;
                        dR.col(1) += Mt * c1;
                        const Vec3 dq_world = Mt * dq;
                        d_pos[s + f].col(j) += dq_world;
                        d_shift -= dq_world.head<2>();
                        d_yaw += c0.dot(d_rotz_neg(a.yaw, st.joint_rot[j].col(0)));
                        d_yaw += c1.dot(d_rotz_neg(a.yaw, st.joint_rot[j].col(1)));
                        d_yaw += dq.dot(d_rotz_neg(a.yaw, st.joint_pos.col(j) - shift));
                    }
                }
                // anchor = (root x, root y, atan2(f_y, f_x) - pi/2) at frame s
                d_pos[s](0, 0) += d_shift.x();
                d_pos[s](1, 0) += d_shift.y();
                const Vec3 fwd = fk[s].state.joint_rot[0].col(1);
                const double denom = fwd.x() * fwd.x() + fwd.y() * fwd.y();
                d_rot[s][0](0, 1) += d_yaw * (-fwd.y() / denom);
                d_rot[s][0](1, 1) += d_yaw * (fwd.x() / denom);
            }
        }
    }

    // E_3DS: squared frame-to-frame joint motion, unnormalized
    for (int t = 1; t < T; ++t) {
        const Mat3X diff = fk[t].state.joint_pos - fk[t - 1].state.joint_pos;
        terms.e_3ds += diff.squaredNorm();
        if (with_grad) {
            d_pos[t] += 2.0 * w.w_3ds * diff;
            d_pos[t - 1] -= 2.0 * w.w_3ds * diff;
        }
    }

    // E_COS / E_CPS: camera smoothness in 6D-rotation and position space
    if (C > 0 && T > 1) {
        const double norm = 1.0 / (static_cast<double>(C) * T);
        for (int c = 0; c < C; ++c)
            for (int t = 1; t < T; ++t) {
                const Vec6 dr = state.cameras[c].frames[t].r - state.cameras[c].frames[t - 1].r;
                const Vec3 dp = state.cameras[c].frames[t].p - state.cameras[c].frames[t - 1].p;
                terms.e_cos += norm * dr.squaredNorm();
                terms.e_cps += norm * dp.squaredNorm();
                if (with_grad) {
                    d_cam_r[c][t] += 2.0 * w.w_cos * norm * dr;
                    d_cam_r[c][t - 1] -= 2.0 * w.w_cos * norm * dr;
                    d_cam_p[c][t] += 2.0 * w.w_cps * norm * dp;
                    d_cam_p[c][t - 1] -= 2.0 * w.w_cps * norm * dp;
                }
            }
    }

    // E_beta / E_z
    terms.e_beta = state.body.beta.squaredNorm();
    for (int t = 0; t < T; ++t) terms.e_z += state.body.frames[t].z.squaredNorm();

    // E_HGP / E_CGP: hinge on penetration below the ground plane
    for (int t = 0; t < T; ++t)
        for (int j = 0; j < N; ++j) {
            const double z = fk[t].state.joint_pos(2, j);
            if (z < 0.0) {
                terms.e_hgp += -z / T;
                if (with_grad) d_pos[t](2, j) -= w.w_gp / T;
            }
        }
    if (C > 0) {
        const double norm = 1.0 / (static_cast<double>(C) * T);
        for (int c = 0; c < C; ++c)
            for (int t = 0; t < T; ++t) {
                const double z = state.cameras[c].frames[t].p.z();
                if (z < 0.0) {
                    terms.e_cgp += -z * norm;
                    if (with_grad) d_cam_p[c][t].z() -= w.w_cgp * norm;
                }
            }
    }

    check_finite_terms(terms);
    if (!with_grad) return terms;

    // pull joint adjoints back to the body parameters
    for (int t = 0; t < T; ++t) {
        const FkGrad g = fk_backward(fk[t], *model_, d_pos[t], d_rot[t]);
        grad->segment<3>(layout_.frame_offset(t)) = g.d_tau;
        grad->segment<3>(layout_.frame_offset(t) + 3) = g.d_phi;
        grad->segment<kPoseLatentDim>(layout_.frame_offset(t) + 6) =
            g.d_z + 2.0 * w.w_z * state.body.frames[t].z;
        grad->segment<kShapeDim>(layout_.beta_offset()) += g.d_beta;
    }
    grad->segment<kShapeDim>(layout_.beta_offset()) += 2.0 * w.w_beta * state.body.beta;

    for (int c = 0; c < C; ++c)
        for (int t = 0; t < T; ++t) {
            Vec6 dr = d_cam_r[c][t];
            if (d_cam_rot[c][t].cwiseAbs().sum() > 0.0)
                dr += rot6d_backward(state.cameras[c].frames[t].r, d_cam_rot[c][t]);
            grad->segment<6>(layout_.cam_offset(c, t)) = dr;
            grad->segment<3>(layout_.cam_offset(c, t) + 6) = d_cam_p[c][t];
        }

    return terms;
}

} // namespace gmocap
