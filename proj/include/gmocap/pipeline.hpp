#pragma once

#include <array>
#include <string>

#include "gmocap/objective.hpp"
#include "gmocap/optimizer.hpp"
#include "gmocap/prior.hpp"

namespace gmocap {

struct FitConfig {
    int chunk_len = 25;   // fixed by the prior contract
    int stitch_group = 4; // chunks stitched per level

    // per-phase iteration caps: (cameras), (cameras + root), (all but pivot)
    std::array<int, 3> chunk_phase_iters{60, 80, 160};
    std::array<int, 3> segment_phase_iters{40, 60, 220};

    double rel_tol = 1e-6; // relative loss decrease over tol_window iterations
    int tol_window = 20;
    std::uint64_t seed = 0;
    int threads = 1;
    LossWeights weights;
    double confidence_floor = 0.3;
    std::string log_csv;        // optional per-iteration term log
    std::string checkpoint_dir; // optional per-stage result snapshots
};

struct PhaseTrace {
    int segment_start = 0;
    int segment_len = 0;
    int phase = 0;                // 1..3
    std::vector<double> loss;     // accepted iterates, loss[0] = phase start
};

// Pivot values captured around each segment optimization; the first-frame
// root pose must come back bit-identical.
struct PivotRecord {
    int segment_start = 0;
    Vec3 tau_before, phi_before, tau_after, phi_after;
};

struct FitDiagnostics {
    std::vector<PhaseTrace> traces;
    std::vector<PivotRecord> pivots;
    std::vector<double> junction_anchor_errors;
    std::vector<std::string> log_rows;
    int total_iterations = 0;
    double wall_seconds = 0.0;
};

struct FitResult {
    BodyTrajectory trajectory;
    std::vector<CameraTrack> cameras;
    FitDiagnostics diagnostics;
};

// A contiguous piece of the sequence under optimization.
struct SegmentState {
    int start = 0;
    ProblemState state;

    int length() const { return static_cast<int>(state.body.frames.size()); }
};

// Step 1: pose latents and shape at zero, root track from the decoded prior
// mean (tiled to T), every camera frame resected by PnP against the
// initialized joints; frames where PnP fails inherit the nearest successful
// frame's pose. Throws InitializationFailed when a camera has no usable
// frame at all.
ProblemState initialize(const Observations& obs, const std::vector<CameraIntrinsics>& intrinsics,
                        const PriorModel& prior, const SkeletonModel& model,
                        double confidence_floor = 0.3);

// Step 2 / 4: three minimize passes over a segment. Phase 1 frees the
// camera poses, phase 2 adds the root track, phase 3 everything; the
// first-frame root pose stays frozen throughout as the pivot.
void optimize_segment(SegmentState& segment, const Observations& obs_slice,
                      const PriorModel& prior, const SkeletonModel& model, const FitConfig& config,
                      const std::array<int, 3>& phase_iters, FitDiagnostics* diag);

// Step 3: consecutive segments are aligned by the planar transform mapping
// the next segment's anchor at the junction frame onto the previous
// segment's, then merged (the duplicated junction frames are dropped).
SegmentState stitch(const std::vector<SegmentState>& segments, FitDiagnostics* diag = nullptr);

// Chunk start indices: stride chunk_len-1 (one shared junction frame), the
// last chunk extended backward to full length.
std::vector<int> chunk_starts(int total_frames, int chunk_len = 25);

// The full estimation procedure: initialize, optimize chunks, stitch and
// re-optimize in groups of stitch_group until one segment remains, the last
// pass being the final full-sequence optimization. `init_override` replaces
// step 1 when provided.
FitResult fit_sequence(const Observations& obs, const std::vector<CameraIntrinsics>& intrinsics,
                       const PriorModel& prior, const SkeletonModel& model,
                       const FitConfig& config, const ProblemState* init_override = nullptr);

} // namespace gmocap
