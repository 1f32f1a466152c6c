#include "gmocap/skeleton.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "gmocap/error.hpp"
#include "gmocap/gait.hpp"
#include "gmocap/rng.hpp"

namespace gmocap {

namespace {

struct BoneDef {
    const char* name;
    int parent;
    double dx, dy, dz; // rest direction in the parent frame, normalized below
    double len;        // meters
};

// Rest pose: standing on the XY ground plane, facing +Y, left side on +X.
constexpr BoneDef kDefaultBones[kNumBones] = {
    {"left_hip", 0, 0.80, 0.0, -0.60, 0.11},
    {"right_hip", 0, -0.80, 0.0, -0.60, 0.11},
    {"spine1", 0, 0.0, -0.05, 1.0, 0.12},
    {"left_knee", 1, 0.0, 0.0, -1.0, 0.37},
    {"right_knee", 2, 0.0, 0.0, -1.0, 0.37},
    {"spine2", 3, 0.0, 0.02, 1.0, 0.13},
    {"left_ankle", 4, 0.0, 0.0, -1.0, 0.39},
    {"right_ankle", 5, 0.0, 0.0, -1.0, 0.39},
    {"spine3", 6, 0.0, 0.03, 1.0, 0.10},
    {"left_foot", 7, 0.0, 0.94, -0.34, 0.14},
    {"right_foot", 8, 0.0, 0.94, -0.34, 0.14},
    {"neck", 9, 0.0, -0.03, 1.0, 0.18},
    {"left_collar", 9, 0.96, 0.0, 0.28, 0.12},
    {"right_collar", 9, -0.96, 0.0, 0.28, 0.12},
    {"head", 12, 0.0, 0.02, 1.0, 0.20},
    {"left_shoulder", 13, 1.0, 0.0, 0.0, 0.08},
    {"right_shoulder", 14, -1.0, 0.0, 0.0, 0.08},
    {"left_elbow", 16, 0.30, 0.0, -0.95, 0.26},
    {"right_elbow", 17, -0.30, 0.0, -0.95, 0.26},
    {"left_wrist", 18, 0.12, 0.0, -0.99, 0.25},
    {"right_wrist", 19, -0.12, 0.0, -0.99, 0.25},
};

constexpr std::uint64_t kShapeBasisSeed = 0x53484150u; // fixed; part of the model definition

// Random column-orthogonal 21x10 matrix with per-bone row scales. Rows are
// capped so bone lengths stay positive for any |beta| <= 3.
MatX build_shape_basis(const VecX& base_len) {
    Rng rng(kShapeBasisSeed);
    MatX g(kNumBones, kShapeDim);
    for (int i = 0; i < kNumBones; ++i)
        for (int j = 0; j < kShapeDim; ++j) g(i, j) = rng.normal();
    Eigen::HouseholderQR<MatX> qr(g);
    MatX q = qr.householderQ() * MatX::Identity(kNumBones, kShapeDim);
    for (int i = 0; i < kNumBones; ++i) {
        const double target = std::min(0.05, 0.30 * base_len(i));
        const double n = q.row(i).norm();
        if (n > 1e-9) q.row(i) *= target / n;
    }
    return q;
}

// The pose space is a PCA fit over angles sampled from the procedural gait
// generator (fixed schedule, fixed seed), so decode/encode are calibrated
// against the same motion family the synthetic scenes use.
void fit_pose_space(SkeletonModel& model) {
    const MotionKind kinds[] = {MotionKind::kWalkCircle, MotionKind::kWalkLine,
                                MotionKind::kTurnInPlace, MotionKind::kCrouchWave};
    Rng rng(0xA11CEull);
    std::vector<VecX> samples;
    samples.reserve(4 * 3 * 240);
    for (MotionKind kind : kinds) {
        for (int draw = 0; draw < 3; ++draw) {
            GaitParams p = make_gait_params(kind, rng);
            for (int f = 0; f < 240; ++f) samples.push_back(gait_angles(p, f / 30.0));
        }
    }
    const int n = static_cast<int>(samples.size());
    VecX mean = VecX::Zero(kAngleDim);
    for (const VecX& s : samples) mean += s;
    mean /= n;
    MatX cov = MatX::Zero(kAngleDim, kAngleDim);
    for (const VecX& s : samples) {
        const VecX d = s - mean;
        cov.noalias() += d * d.transpose();
    }
    cov /= (n - 1);
    Eigen::SelfAdjointEigenSolver<MatX> eig(cov);
    // eigenvalues ascending; take the top kPoseLatentDim
    model.pose_mean = mean;
    model.pose_basis.resize(kAngleDim, kPoseLatentDim);
    model.pose_scale.resize(kPoseLatentDim);
    for (int k = 0; k < kPoseLatentDim; ++k) {
        const int src = kAngleDim - 1 - k;
        model.pose_basis.col(k) = eig.eigenvectors().col(src);
        model.pose_scale(k) = std::sqrt(std::max(eig.eigenvalues()(src), 1e-6));
    }
}

void finish_model(SkeletonModel& model) {
    model.shape_basis = build_shape_basis(model.base_len);
    fit_pose_space(model);
    model.validate();
}

} // namespace

void SkeletonModel::validate() const {
    if (parent[0] != -1) throw ValidationError("skeleton: joint 0 must be the root");
    for (int j = 1; j < kNumJoints; ++j)
        if (parent[j] < 0 || parent[j] >= j)
            throw ValidationError("skeleton: parents must form a tree ordered root-first");
    for (int b = 0; b < kNumBones; ++b) {
        if (std::abs(rest_dir.col(b).norm() - 1.0) > 1e-9)
            throw ValidationError("skeleton: rest_dir must be unit length");
        if (base_len(b) <= 0.0) throw ValidationError("skeleton: bone lengths must be positive");
        if (base_len(b) - 3.0 * shape_basis.row(b).norm() <= 0.0)
            throw ValidationError("skeleton: shape basis can produce non-positive bone length");
    }
    const MatX gram = pose_basis.transpose() * pose_basis;
    if ((gram - MatX::Identity(kPoseLatentDim, kPoseLatentDim)).cwiseAbs().maxCoeff() > 1e-9)
        throw ValidationError("skeleton: pose basis columns must be orthonormal");
    if ((pose_scale.array() <= 0.0).any())
        throw ValidationError("skeleton: pose scales must be positive");
}

std::uint64_t SkeletonModel::fingerprint() const {
    std::uint64_t h = fnv1a(parent.data(), parent.size() * sizeof(int));
    auto add = [&h](const double* p, std::size_t n) { h = fnv1a(p, n * sizeof(double), h); };
    add(rest_dir.data(), rest_dir.size());
    add(base_len.data(), base_len.size());
    add(shape_basis.data(), shape_basis.size());
    add(pose_mean.data(), pose_mean.size());
    add(pose_basis.data(), pose_basis.size());
    add(pose_scale.data(), pose_scale.size());
    return h;
}

const SkeletonModel& SkeletonModel::default_model() {
    static SkeletonModel model = [] {
        SkeletonModel m;
        m.joint_names[0] = "pelvis";
        m.parent[0] = -1;
        m.rest_dir.resize(3, kNumBones);
        m.base_len.resize(kNumBones);
        for (int b = 0; b < kNumBones; ++b) {
            const BoneDef& d = kDefaultBones[b];
            m.joint_names[b + 1] = d.name;
            m.parent[b + 1] = d.parent;
            m.rest_dir.col(b) = Vec3(d.dx, d.dy, d.dz).normalized();
            m.base_len(b) = d.len;
        }
        finish_model(m);
        return m;
    }();
    return model;
}

VecX bone_lengths(const VecX& beta, const SkeletonModel& model) {
    return model.base_len + model.shape_basis * beta;
}

VecX pose_decode(const VecX& z, const SkeletonModel& model) {
    return model.pose_mean + model.pose_basis * model.pose_scale.cwiseProduct(z);
}

VecX pose_encode(const VecX& theta, const SkeletonModel& model) {
    return (model.pose_basis.transpose() * (theta - model.pose_mean)).cwiseQuotient(model.pose_scale);
}

BodyState forward_kinematics(const FramePose& pose, const VecX& beta, const SkeletonModel& model,
                             FkCache* cache) {
    FkCache local;
    FkCache& c = cache ? *cache : local;
    c.phi = pose.phi;
    c.theta = pose_decode(pose.z, model);
    c.lens = bone_lengths(beta, model);
    c.local_rot[0] = so3_exp(pose.phi);
    c.state.joint_rot[0] = c.local_rot[0];
    c.state.joint_pos.col(0) = pose.tau;
    for (int j = 1; j < kNumJoints; ++j) {
        const int par = model.parent[j];
        c.local_rot[j] = so3_exp(c.theta.segment<3>(angle_offset(j)));
        c.state.joint_rot[j] = c.state.joint_rot[par] * c.local_rot[j];
        c.state.joint_pos.col(j) = c.state.joint_pos.col(par) +
                                   c.state.joint_rot[par] * (model.rest_dir.col(j - 1) * c.lens(j - 1));
    }
    return c.state;
}

FkGrad fk_backward(const FkCache& cache, const SkeletonModel& model, const Mat3X& d_pos,
                   const std::array<Mat3, kNumJoints>& d_rot) {
    Mat3X a_pos = d_pos;
    std::array<Mat3, kNumJoints> a_rot = d_rot;
    VecX d_theta = VecX::Zero(kAngleDim);
    VecX d_len = VecX::Zero(kNumBones);

    for (int j = kNumJoints - 1; j >= 1; --j) {
        const int par = model.parent[j];
        const Vec3 dir = model.rest_dir.col(j - 1);
        // X_j = X_par + R_par * dir * len
        a_pos.col(par) += a_pos.col(j);
        a_rot[par].noalias() += a_pos.col(j) * (dir * cache.lens(j - 1)).transpose();
        d_len(j - 1) += (cache.state.joint_rot[par] * dir).dot(a_pos.col(j));
        // R_j = R_par * E_j
        a_rot[par].noalias() += a_rot[j] * cache.local_rot[j].transpose();
        const Mat3 d_local = cache.state.joint_rot[par].transpose() * a_rot[j];
        d_theta.segment<3>(angle_offset(j)) +=
            so3_exp_backward(cache.theta.segment<3>(angle_offset(j)), d_local);
    }

    FkGrad g;
    g.d_tau = a_pos.col(0);
    g.d_phi = so3_exp_backward(cache.phi, a_rot[0]);
    g.d_z = model.pose_scale.cwiseProduct(model.pose_basis.transpose() * d_theta);
    g.d_beta = model.shape_basis.transpose() * d_len;
    return g;
}

SkeletonModel SkeletonModel::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("skeleton: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw ValidationError("skeleton: parse error in " + path + ": " + e.what());
    }
    if (j.value("schema", "") != "gmocap.skeleton/1")
        throw ValidationError("skeleton: unsupported schema in " + path);
    const auto& joints = j.at("joints");
    if (joints.size() != kNumJoints)
        throw ValidationError("skeleton: expected 22 joints in " + path);

    SkeletonModel m;
    m.rest_dir.resize(3, kNumBones);
    m.base_len.resize(kNumBones);
    for (int i = 0; i < kNumJoints; ++i) {
        const auto& e = joints[i];
        m.joint_names[i] = e.at("name").get<std::string>();
        m.parent[i] = e.at("parent").get<int>();
        if (i > 0) {
            const auto& dir = e.at("dir");
            m.rest_dir.col(i - 1) = Vec3(dir[0], dir[1], dir[2]).normalized();
            m.base_len(i - 1) = e.at("len").get<double>();
        }
    }
    finish_model(m);
    return m;
}

void SkeletonModel::save_file(const std::string& path) const {
    nlohmann::json joints = nlohmann::json::array();
    for (int i = 0; i < kNumJoints; ++i) {
        nlohmann::json e{{"name", joint_names[i]}, {"parent", parent[i]}};
        if (i > 0) {
            e["dir"] = {rest_dir(0, i - 1), rest_dir(1, i - 1), rest_dir(2, i - 1)};
            e["len"] = base_len(i - 1);
        }
        joints.push_back(e);
    }
    nlohmann::json j{{"schema", "gmocap.skeleton/1"}, {"joints", joints}};
    std::ofstream out(path);
    if (!out) throw ValidationError("skeleton: cannot write " + path);
    out << j.dump(2) << "\n";
}

} // namespace gmocap
