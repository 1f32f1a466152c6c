#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gmocap/metrics.hpp"
#include "gmocap/pipeline.hpp"
#include "gmocap/synth.hpp"

namespace gmocap {

// All files are versioned JSON ("gmocap.<kind>/<major>"); readers reject
// unknown kinds and major versions with a ValidationError. Payloads carry no
// timestamps, so identical inputs produce byte-identical outputs.

struct SceneFile {
    std::vector<std::string> camera_names;
    std::vector<CameraIntrinsics> intrinsics;
    Observations observations;
    int fps = 30;
};

void save_scene_file(const std::string& path, const SceneFile& scene);
SceneFile load_scene_file(const std::string& path);

struct GroundTruthFile {
    BodyTrajectory body;
    std::vector<CameraTrack> cameras;
    std::string motion_kind;
};

void save_gt_file(const std::string& path, const GroundTruthFile& gt);
GroundTruthFile load_gt_file(const std::string& path);

void save_prior_file(const std::string& path, const PriorModel& prior);
// Rejects priors built against a different skeleton when `expected_skeleton`
// is non-null.
PriorModel load_prior_file(const std::string& path, const SkeletonModel* expected_skeleton);

void save_result_file(const std::string& path, const FitResult& result,
                      const nlohmann::json& config_echo);
FitResult load_result_file(const std::string& path);

nlohmann::json fit_config_to_json(const FitConfig& config);
// Overlays the keys present in `j` onto `config`.
void apply_config_json(const nlohmann::json& j, FitConfig* config);
FitConfig load_fit_config(const std::string& path);

SceneSpec load_scene_spec(const std::string& path);

struct CorpusSpec {
    int windows = 600;
    std::uint64_t seed = 1;
    int latent_dim = 64;
    VaeTrainConfig vae;
};

CorpusSpec load_corpus_spec(const std::string& path);

struct MetricsRow {
    std::string name;
    MetricStat stat;
    std::string variant; // "raw" or "aligned"
};

void save_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                      const nlohmann::json& config_echo);

// Per-frame skeleton point clouds with bone and camera-frustum edges (ASCII
// PLY, one file per exported frame) plus a joints.csv table.
void export_result(const FitResult& result, const SkeletonModel& model,
                   const std::string& out_dir, int stride = 1);

} // namespace gmocap
