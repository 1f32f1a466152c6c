#include "gmocap/gait.hpp"

#include <cmath>

#include "gmocap/error.hpp"

namespace gmocap {

namespace {

constexpr double kTwoPi = 2.0 * M_PI;
// Thigh + shank length of the default skeleton; used to keep the feet on
// the ground while crouching.
constexpr double kLegDrop = 0.76;

// Activity envelopes shared by the angle and root curves so both stay
// consistent (e.g. legs stop swinging when the composite motion halts).
struct Envelopes {
    double walk = 0.0;   // stride amplitude scale
    double march = 0.0;  // in-place stepping scale
    double crouch = 0.0; // crouch flexion angle, rad
    double wave = 0.0;   // arm wave scale
};

Envelopes envelopes(const GaitParams& p, double t) {
    Envelopes e;
    switch (p.kind) {
    case MotionKind::kWalkCircle:
    case MotionKind::kWalkLine:
        e.walk = 1.0;
        break;
    case MotionKind::kTurnInPlace:
        e.march = 1.0;
        break;
    case MotionKind::kCrouchWave:
        e.crouch = p.crouch_depth * 0.5 * (1.0 - std::cos(kTwoPi * p.crouch_hz * t));
        e.wave = 1.0;
        break;
    case MotionKind::kComposite: {
        const double period = 10.0;
        const double ev = 0.5 * (1.0 + std::cos(kTwoPi * t / period));
        e.walk = ev;
        e.march = std::max(0.15 - ev, 0.0); // keep a little stepping when halted
        e.crouch = p.crouch_depth * (1.0 - ev);
        e.wave = 1.0 - ev;
        break;
    }
    }
    return e;
}

double composite_arc(const GaitParams& p, double t) {
    const double period = 10.0;
    // integral of speed * (1+cos(2 pi t/P))/2
    return p.speed * (0.5 * t + period / (2.0 * kTwoPi) * std::sin(kTwoPi * t / period));
}

} // namespace

const char* motion_kind_name(MotionKind kind) {
    switch (kind) {
    case MotionKind::kWalkCircle: return "walk-circle";
    case MotionKind::kWalkLine: return "walk-line";
    case MotionKind::kTurnInPlace: return "turn-in-place";
    case MotionKind::kCrouchWave: return "crouch-wave";
    case MotionKind::kComposite: return "composite";
    }
    return "unknown";
}

MotionKind motion_kind_from_name(const std::string& name) {
    if (name == "walk-circle") return MotionKind::kWalkCircle;
    if (name == "walk-line") return MotionKind::kWalkLine;
    if (name == "turn-in-place") return MotionKind::kTurnInPlace;
    if (name == "crouch-wave") return MotionKind::kCrouchWave;
    if (name == "composite") return MotionKind::kComposite;
    throw ValidationError("unknown motion kind: " + name);
}

GaitParams make_gait_params(MotionKind kind, Rng& rng) {
    GaitParams p;
    p.kind = kind;
    p.speed = rng.uniform(0.7, 1.1);
    p.radius = rng.uniform(1.0, 1.6);
    p.start_angle = rng.uniform(0.0, kTwoPi);
    p.turn_rate = (rng.uniform() < 0.5 ? -1.0 : 1.0) * rng.uniform(0.45, 0.8);
    p.stride_hz = rng.uniform(0.85, 1.1);
    p.gait_phase0 = rng.uniform(0.0, kTwoPi);
    p.hip_amp = rng.uniform(0.26, 0.34);
    p.knee_amp = rng.uniform(0.45, 0.65);
    p.arm_amp = rng.uniform(0.28, 0.42);
    p.crouch_depth = rng.uniform(0.32, 0.5);
    p.crouch_hz = rng.uniform(0.25, 0.4);
    p.wave_hz = rng.uniform(1.4, 2.0);
    p.root_height = rng.uniform(0.905, 0.92);
    p.bob_amp = rng.uniform(0.008, 0.014);
    if (kind == MotionKind::kTurnInPlace) {
        p.hip_amp = rng.uniform(0.12, 0.18);
        p.knee_amp = rng.uniform(0.4, 0.55);
        p.arm_amp = rng.uniform(0.1, 0.18);
    }
    for (int i = 0; i < kAngleDim; ++i) p.texture_amp[i] = rng.uniform(0.008, 0.04);
    for (int i = 0; i < kAngleDim; ++i) p.texture_hz[i] = rng.uniform(0.1, 0.9);
    for (int i = 0; i < kAngleDim; ++i) p.texture_phase[i] = rng.uniform(0.0, kTwoPi);
    return p;
}

VecX gait_angles(const GaitParams& p, double t) {
    using namespace joint;
    VecX theta = VecX::Zero(kAngleDim);
    const Envelopes env = envelopes(p, t);
    const double phase = kTwoPi * p.stride_hz * t + p.gait_phase0;
    const double sw = std::sin(phase);

    const double stride = env.walk + 0.55 * env.march;
    const double lift = env.walk + env.march;

    // legs: hip swing about the lateral axis, knee flexion peaking in swing
    theta[angle_offset(kLeftHip) + 0] = p.hip_amp * stride * sw + env.crouch;
    theta[angle_offset(kRightHip) + 0] = -p.hip_amp * stride * sw + env.crouch;
    theta[angle_offset(kLeftKnee) + 0] =
        -p.knee_amp * lift * 0.5 * (1.0 - std::cos(phase - 0.6)) - 2.0 * env.crouch;
    theta[angle_offset(kRightKnee) + 0] =
        -p.knee_amp * lift * 0.5 * (1.0 - std::cos(phase + M_PI - 0.6)) - 2.0 * env.crouch;
    theta[angle_offset(kLeftAnkle) + 0] = 0.12 * stride * std::sin(phase + 0.3) + env.crouch;
    theta[angle_offset(kRightAnkle) + 0] = -0.12 * stride * std::sin(phase + 0.3) + env.crouch;
    theta[angle_offset(kLeftFoot) + 0] = 0.05 * stride * std::sin(phase - 0.2);
    theta[angle_offset(kRightFoot) + 0] = -0.05 * stride * std::sin(phase - 0.2);

    // arms swing opposite the same-side leg
    theta[angle_offset(kLeftShoulder) + 0] = -p.arm_amp * stride * sw;
    theta[angle_offset(kRightShoulder) + 0] = p.arm_amp * stride * sw;
    theta[angle_offset(kLeftElbow) + 0] = 0.28 + 0.1 * stride * std::sin(phase + 0.5);
    theta[angle_offset(kRightElbow) + 0] = 0.28 - 0.1 * stride * std::sin(phase + 0.5);

    // torso counter-rotation and slight forward lean
    theta[angle_offset(kSpine3) + 2] = 0.06 * stride * sw;
    theta[angle_offset(kSpine1) + 0] = 0.04 * stride + 0.25 * env.crouch;
    theta[angle_offset(kNeck) + 0] = -0.02 * stride - 0.15 * env.crouch;

    // right-arm wave: raise the upper arm, oscillate the forearm
    theta[angle_offset(kRightShoulder) + 1] += 1.25 * env.wave;
    theta[angle_offset(kRightElbow) + 2] += 0.45 * env.wave * std::sin(kTwoPi * p.wave_hz * t);

    for (int i = 0; i < kAngleDim; ++i)
        theta[i] += p.texture_amp[i] * std::sin(kTwoPi * p.texture_hz[i] * t + p.texture_phase[i]);
    return theta;
}

void gait_root(const GaitParams& p, double t, Vec3* tau, double* yaw) {
    const Envelopes env = envelopes(p, t);
    const double phase = kTwoPi * p.stride_hz * t + p.gait_phase0;
    const double bob = p.bob_amp * std::cos(2.0 * phase);
    const double crouch_drop = kLegDrop * (1.0 - std::cos(env.crouch));

    double x = 0.0, y = 0.0, psi = 0.0, bob_scale = 1.0;
    switch (p.kind) {
    case MotionKind::kWalkCircle: {
        const double a = p.start_angle + (p.speed / p.radius) * t;
        x = p.radius * (std::cos(a) - std::cos(p.start_angle));
        y = p.radius * (std::sin(a) - std::sin(p.start_angle));
        psi = a; // CCW path: heading is the tangent
        break;
    }
    case MotionKind::kWalkLine: {
        psi = p.start_angle;
        x = -std::sin(psi) * p.speed * t;
        y = std::cos(psi) * p.speed * t;
        break;
    }
    case MotionKind::kTurnInPlace:
        psi = p.start_angle + p.turn_rate * t;
        bob_scale = 0.4;
        break;
    case MotionKind::kCrouchWave:
        psi = p.start_angle + 0.06 * std::sin(kTwoPi * 0.2 * t);
        bob_scale = 0.3;
        break;
    case MotionKind::kComposite: {
        const double a = p.start_angle + composite_arc(p, t) / p.radius;
        x = p.radius * (std::cos(a) - std::cos(p.start_angle));
        y = p.radius * (std::sin(a) - std::sin(p.start_angle));
        psi = a;
        bob_scale = std::max(0.3, env.walk);
        break;
    }
    }
    *tau = Vec3(x, y, p.root_height + bob_scale * bob - crouch_drop);
    *yaw = wrap_angle(psi);
}

} // namespace gmocap
