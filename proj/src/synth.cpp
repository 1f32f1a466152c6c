#include "gmocap/synth.hpp"

#include <cmath>

#include "gmocap/error.hpp"
#include "gmocap/motion_window.hpp"

namespace gmocap {

namespace {

Mat3 look_at(const Vec3& from, const Vec3& target) {
    Vec3 fwd = target - from;
    const double n = fwd.norm();
    fwd = n < 1e-9 ? Vec3(0, 1, 0) : Vec3(fwd / n);
    Vec3 up(0, 0, 1);
    if (std::hypot(fwd.x(), fwd.y()) < 1e-9) up = Vec3(0, 1, 0);
    Mat3 R;
    R.col(2) = fwd;                        // camera z: forward
    R.col(0) = fwd.cross(up).normalized(); // camera x: right in the image
    R.col(1) = R.col(2).cross(R.col(0));   // camera y: down
    return R;
}

Vec3 motion_centroid(const std::vector<BodyState>& states) {
    Vec3 c = Vec3::Zero();
    for (const BodyState& s : states) c += s.joint_pos.col(0);
    return c / static_cast<double>(states.size());
}

} // namespace

void SceneSpec::validate() const {
    if (frames < MotionWindow::kWindowLen)
        throw ValidationError("scene: frames must be >= 25");
    if (fps != 30) throw ValidationError("scene: fps is fixed at 30");
    if (noise.sigma_px < 0.0) throw ValidationError("scene: sigma must be >= 0");
    if (noise.dropout < 0.0 || noise.dropout >= 1.0)
        throw ValidationError("scene: dropout must be in [0, 1)");
    if (cameras.empty()) throw ValidationError("scene: need at least one camera");
}

BodyTrajectory generate_motion(const SceneSpec& spec, const SkeletonModel& model,
                               std::vector<BodyState>* states_out) {
    spec.validate();
    Rng rng(spec.seed);
    const GaitParams params = make_gait_params(spec.motion, rng);

    BodyTrajectory body;
    body.frames.resize(spec.frames);
    for (int t = 0; t < spec.frames; ++t) {
        const double time = t / 30.0;
        Vec3 tau;
        double yaw = 0.0;
        gait_root(params, time, &tau, &yaw);
        body.frames[t].tau = tau;
        body.frames[t].phi = Vec3(0.0, 0.0, wrap_angle(yaw));
        body.frames[t].z = pose_encode(gait_angles(params, time), model);
    }
    if (states_out) {
        states_out->resize(spec.frames);
        for (int t = 0; t < spec.frames; ++t)
            (*states_out)[t] = forward_kinematics(body.frames[t], body.beta, model);
    }
    return body;
}

std::vector<CameraTrack> generate_cameras(const SceneSpec& spec,
                                          const std::vector<BodyState>& states) {
    const Vec3 centroid = motion_centroid(states);
    std::vector<CameraTrack> cams;
    cams.reserve(spec.cameras.size());
    for (std::size_t c = 0; c < spec.cameras.size(); ++c) {
        const CameraSpec& cs = spec.cameras[c];
        CameraTrack track;
        track.name = "cam" + std::to_string(c);
        track.intrinsics = cs.intrinsics;
        track.frames.resize(states.size());
        for (std::size_t t = 0; t < states.size(); ++t) {
            const double time = static_cast<double>(t) / 30.0;
            Vec3 pos;
            Vec3 target;
            switch (cs.kind) {
            case CameraSpec::Kind::kStatic:
                pos = Vec3(centroid.x() + cs.distance * std::cos(cs.azimuth),
                           centroid.y() + cs.distance * std::sin(cs.azimuth), cs.height);
                target = Vec3(centroid.x(), centroid.y(), centroid.z());
                break;
            case CameraSpec::Kind::kOrbit: {
                const double a = cs.azimuth + cs.angular_speed * time;
                pos = Vec3(centroid.x() + cs.distance * std::cos(a),
                           centroid.y() + cs.distance * std::sin(a), cs.height);
                target = states[t].joint_pos.col(0);
                break;
            }
            case CameraSpec::Kind::kPan:
                pos = Vec3(centroid.x() + cs.distance * std::cos(cs.azimuth),
                           centroid.y() + cs.distance * std::sin(cs.azimuth), cs.height);
                target = states[t].joint_pos.col(0);
                break;
            }
            track.frames[t].p = pos;
            track.frames[t].r = matrix_to_rot6d(look_at(pos, target));
        }
        cams.push_back(std::move(track));
    }
    return cams;
}

Observations render_keypoints(const std::vector<BodyState>& states,
                              const std::vector<CameraTrack>& cameras, const NoiseSpec& noise,
                              std::uint64_t seed) {
    const int T = static_cast<int>(states.size());
    const int C = static_cast<int>(cameras.size());
    Observations obs(T, C);
    Rng rng(seed);
    for (int t = 0; t < T; ++t)
        for (int c = 0; c < C; ++c) {
            const Mat3 R = rot6d_to_matrix(cameras[c].frames[t].r);
            const Vec3& p = cameras[c].frames[t].p;
            for (int n = 0; n < kNumJoints; ++n) {
                // fixed draw count per keypoint keeps the stream aligned
                const double u_drop = rng.uniform();
                const double nx = rng.normal();
                const double ny = rng.normal();
                const double conf = rng.uniform(0.5, 1.0);
                Observations::Keypoint& kp = obs.at(t, c, n);
                Vec2 uv;
                if (!try_project(R, p, cameras[c].intrinsics, states[t].joint_pos.col(n), &uv)) {
                    kp = {0.0, 0.0, 0.0};
                    continue;
                }
                kp.u = uv.x() + noise.sigma_px * nx;
                kp.v = uv.y() + noise.sigma_px * ny;
                kp.w = u_drop < noise.dropout ? 0.0 : conf;
            }
        }
    return obs;
}

SyntheticScene make_scene(const SceneSpec& spec, const SkeletonModel& model) {
    SyntheticScene scene;
    scene.body = generate_motion(spec, model, &scene.states);
    scene.cameras = generate_cameras(spec, scene.states);
    const std::uint64_t noise_seed =
        spec.noise_seed ? spec.noise_seed : spec.seed ^ 0x9e3779b97f4a7c15ull;
    scene.observations = render_keypoints(scene.states, scene.cameras, spec.noise, noise_seed);
    return scene;
}

std::vector<MotionWindow> build_prior_corpus(int n_windows, std::uint64_t seed,
                                             const SkeletonModel& model) {
    const MotionKind kinds[] = {MotionKind::kWalkCircle, MotionKind::kWalkLine,
                                MotionKind::kTurnInPlace, MotionKind::kCrouchWave,
                                MotionKind::kComposite};
    std::vector<MotionWindow> corpus;
    corpus.reserve(n_windows);
    const VecX beta = VecX::Zero(kShapeDim);
    for (int i = 0; i < n_windows; ++i) {
        Rng rng(seed * 0x9e3779b97f4a7c15ull + static_cast<std::uint64_t>(i) + 1);
        const GaitParams params = make_gait_params(kinds[i % 5], rng);
        const double t0 = rng.uniform(0.0, 6.0);
        std::vector<FramePose> frames(MotionWindow::kWindowLen);
        for (int k = 0; k < MotionWindow::kWindowLen; ++k) {
            const double time = t0 + k / 30.0;
            Vec3 tau;
            double yaw = 0.0;
            gait_root(params, time, &tau, &yaw);
            frames[k].tau = tau;
            frames[k].phi = Vec3(0.0, 0.0, wrap_angle(yaw));
            frames[k].z = pose_encode(gait_angles(params, time), model);
        }
        corpus.push_back(canonicalize(frames, beta, model).first);
    }
    return corpus;
}

} // namespace gmocap
