#include "gmocap/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>

#include "gmocap/error.hpp"
#include "gmocap/io.hpp"
#include "gmocap/motion_window.hpp"

namespace gmocap {

namespace {

void merge_diagnostics(FitDiagnostics& into, FitDiagnostics& from) {
    for (auto& t : from.traces) into.traces.push_back(std::move(t));
    for (auto& p : from.pivots) into.pivots.push_back(p);
    for (double e : from.junction_anchor_errors) into.junction_anchor_errors.push_back(e);
    for (auto& r : from.log_rows) into.log_rows.push_back(std::move(r));
    into.total_iterations += from.total_iterations;
}

std::vector<CameraIntrinsics> track_intrinsics(const std::vector<CameraTrack>& cams) {
    std::vector<CameraIntrinsics> out;
    out.reserve(cams.size());
    for (const CameraTrack& c : cams) out.push_back(c.intrinsics);
    return out;
}

SegmentState slice_segment(const ProblemState& full, int start, int len) {
    SegmentState seg;
    seg.start = start;
    seg.state.body.beta = full.body.beta;
    seg.state.body.frames.assign(full.body.frames.begin() + start,
                                 full.body.frames.begin() + start + len);
    seg.state.cameras.resize(full.cameras.size());
    for (std::size_t c = 0; c < full.cameras.size(); ++c) {
        seg.state.cameras[c].name = full.cameras[c].name;
        seg.state.cameras[c].intrinsics = full.cameras[c].intrinsics;
        seg.state.cameras[c].frames.assign(full.cameras[c].frames.begin() + start,
                                           full.cameras[c].frames.begin() + start + len);
    }
    return seg;
}

// Planar transform applied jointly to the body and all cameras.
void transform_segment(SegmentState& seg, const PlanarPose& w) {
    const Mat3 Rz = w.rotation();
    for (FramePose& f : seg.state.body.frames) {
        f.tau = w.apply(f.tau);
        f.phi = wrap_axis_angle(so3_log(Rz * so3_exp(f.phi)));
    }
    for (CameraTrack& cam : seg.state.cameras)
        for (CameraFramePose& f : cam.frames) {
            f.p = w.apply(f.p);
            f.r = matrix_to_rot6d(Rz * rot6d_to_matrix(f.r));
        }
}

std::vector<std::uint8_t> phase_mask(const ParamLayout& layout, int phase) {
    // 1 = frozen. Phase 1: cameras only; phase 2: + root track; phase 3:
    // everything. The first-frame root pose (pivot) stays frozen always.
    std::vector<std::uint8_t> frozen(layout.dim(), 1);
    for (int c = 0; c < layout.cameras; ++c)
        for (int t = 0; t < layout.frames; ++t)
            for (int k = 0; k < ParamLayout::kCamDim; ++k)
                frozen[layout.cam_offset(c, t) + k] = 0;
    if (phase >= 2)
        for (int t = 1; t < layout.frames; ++t)
            for (int k = 0; k < 6; ++k) frozen[layout.frame_offset(t) + k] = 0;
    if (phase >= 3) {
        for (int k = 0; k < kShapeDim; ++k) frozen[layout.beta_offset() + k] = 0;
        for (int t = 0; t < layout.frames; ++t)
            for (int k = 6; k < ParamLayout::kFrameDim; ++k)
                frozen[layout.frame_offset(t) + k] = 0;
    }
    return frozen;
}

} // namespace

std::vector<int> chunk_starts(int total_frames, int chunk_len) {
    std::vector<int> starts;
    const int stride = chunk_len - 1;
    for (int s = 0; s + chunk_len <= total_frames; s += stride) starts.push_back(s);
    if (starts.empty() || starts.back() + chunk_len < total_frames)
        starts.push_back(total_frames - chunk_len);
    return starts;
}

ProblemState initialize(const Observations& obs, const std::vector<CameraIntrinsics>& intrinsics,
                        const PriorModel& prior, const SkeletonModel& model,
                        double confidence_floor) {
    const int T = obs.frame_count();
    const int C = obs.camera_count();

    // body: prior-mean root track tiled to T, articulation and shape at zero
    const MotionWindow mean_motion = decode(VecX::Zero(prior.latent_dim), prior);
    std::array<Vec3, MotionWindow::kWindowLen> taus;
    std::array<Vec3, MotionWindow::kWindowLen> phis;
    for (int i = 0; i < MotionWindow::kWindowLen; ++i) {
        taus[i] = mean_motion.pos(i, 0);
        phis[i] = wrap_axis_angle(so3_log(rot6d_to_matrix(mean_motion.rot6d(i, 0))));
    }
    ProblemState state;
    state.body.beta = VecX::Zero(kShapeDim);
    state.body.frames.resize(T);
    for (int t = 0; t < T; ++t) {
        state.body.frames[t].tau = taus[t % MotionWindow::kWindowLen];
        state.body.frames[t].phi = phis[t % MotionWindow::kWindowLen];
        state.body.frames[t].z = VecX::Zero(kPoseLatentDim);
    }

    std::vector<BodyState> states(T);
    for (int t = 0; t < T; ++t)
        states[t] = forward_kinematics(state.body.frames[t], state.body.beta, model);

    state.cameras.resize(C);
    for (int c = 0; c < C; ++c) {
        CameraTrack& cam = state.cameras[c];
        cam.name = "cam" + std::to_string(c);
        cam.intrinsics = intrinsics[c];
        cam.frames.resize(T);
        std::vector<char> ok(T, 0);
        for (int t = 0; t < T; ++t) {
            std::vector<Vec3> p3;
            std::vector<Vec2> p2;
            std::vector<double> w;
            for (int n = 0; n < kNumJoints; ++n) {
                const Observations::Keypoint& kp = obs.at(t, c, n);
                const double w_eff = kp.w < confidence_floor ? 0.0 : kp.w;
                if (w_eff == 0.0) continue;
                p3.push_back(states[t].joint_pos.col(n));
                p2.push_back(Vec2(kp.u, kp.v));
                w.push_back(w_eff);
            }
            if (static_cast<int>(p3.size()) < 6) continue;
            try {
                const auto [r, p] = pnp_resect(p3, p2, w, intrinsics[c]);
                cam.frames[t].r = r;
                cam.frames[t].p = p;
                ok[t] = 1;
            } catch (const NumericError&) {
                // leave for gap filling
            }
        }
        // frames without a resection inherit the nearest successful frame
        int any = -1;
        for (int t = 0; t < T && any < 0; ++t)
            if (ok[t]) any = t;
        if (any < 0)
            throw InitializationFailed("initialize: no frame admits PnP for camera " + cam.name);
        for (int t = 0; t < T; ++t) {
            if (ok[t]) continue;
            int best = -1, best_dist = T + 1;
            for (int s = 0; s < T; ++s)
                if (ok[s]) {
                    const int d = std::abs(s - t);
                    if (d < best_dist) {
                        best_dist = d;
                        best = s;
                    }
                }
            cam.frames[t] = cam.frames[best];
        }
    }
    return state;
}

void optimize_segment(SegmentState& segment, const Observations& obs_slice,
                      const PriorModel& prior, const SkeletonModel& model, const FitConfig& config,
                      const std::array<int, 3>& phase_iters, FitDiagnostics* diag) {
    Objective objective(obs_slice, track_intrinsics(segment.state.cameras), prior, model,
                        config.weights, config.confidence_floor);
    const ParamLayout& layout = objective.layout();
    VecX params = layout.pack(segment.state);

    PivotRecord pivot;
    pivot.segment_start = segment.start;
    pivot.tau_before = segment.state.body.frames[0].tau;
    pivot.phi_before = segment.state.body.frames[0].phi;

    for (int phase = 1; phase <= 3; ++phase) {
        const std::vector<std::uint8_t> frozen = phase_mask(layout, phase);
        MinimizeOptions opt;
        opt.max_iters = phase_iters[phase - 1];
        opt.rel_tol = config.rel_tol;
        opt.tol_window = config.tol_window;

        LossTerms last_terms;
        auto fn = [&](const VecX& x, VecX* g) -> double {
            if (!g) return objective.loss(x);
            return objective.loss_and_grad(x, g, &last_terms, &frozen);
        };
        AcceptCallback on_accept;
        if (diag && !config.log_csv.empty()) {
            on_accept = [&, phase](int iter, double loss, const VecX&) {
                char row[256];
                std::snprintf(row, sizeof(row),
                              "%d,%d,%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g",
                              segment.start, layout.frames, phase, iter, loss, last_terms.e_2d,
                              last_terms.e_motion, last_terms.e_3ds, last_terms.e_cos,
                              last_terms.e_cps, last_terms.e_beta, last_terms.e_z,
                              last_terms.e_hgp, last_terms.e_cgp);
                diag->log_rows.push_back(row);
            };
        }

        MinimizeResult res = minimize(std::move(params), fn, frozen, opt, on_accept);
        params = std::move(res.x);
        if (diag) {
            PhaseTrace trace;
            trace.segment_start = segment.start;
            trace.segment_len = layout.frames;
            trace.phase = phase;
            trace.loss = std::move(res.trace);
            diag->traces.push_back(std::move(trace));
            diag->total_iterations += res.iterations;
        }
    }

    layout.unpack(params, &segment.state);
    pivot.tau_after = segment.state.body.frames[0].tau;
    pivot.phi_after = segment.state.body.frames[0].phi;
    if (diag) diag->pivots.push_back(pivot);
}

SegmentState stitch(const std::vector<SegmentState>& segments, FitDiagnostics* diag) {
    if (segments.empty()) throw ValidationError("stitch: no segments");
    SegmentState acc = segments[0];
    double beta_frames = acc.length();
    VecX beta_sum = acc.state.body.beta * beta_frames;

    for (std::size_t k = 1; k < segments.size(); ++k) {
        SegmentState next = segments[k];
        const int junction = acc.start + acc.length() - 1;
        const int j_next = junction - next.start;
        if (j_next < 0 || j_next >= next.length())
            throw ValidationError("stitch: segments must overlap at the junction frame");

        const Anchor a_prev = anchor_of(acc.state.body.frames[acc.length() - 1]);
        const Anchor a_next = anchor_of(next.state.body.frames[j_next]);
        const PlanarPose w = a_prev.pose().compose(a_next.pose().inverse());
        transform_segment(next, w);

        if (diag) {
            const Anchor aligned = anchor_of(next.state.body.frames[j_next]);
            const double err = std::hypot(aligned.x - a_prev.x, aligned.y - a_prev.y) +
                               std::abs(wrap_angle(aligned.yaw - a_prev.yaw));
            diag->junction_anchor_errors.push_back(err);
        }

        for (int t = j_next + 1; t < next.length(); ++t)
            acc.state.body.frames.push_back(next.state.body.frames[t]);
        for (std::size_t c = 0; c < acc.state.cameras.size(); ++c)
            for (int t = j_next + 1; t < next.length(); ++t)
                acc.state.cameras[c].frames.push_back(next.state.cameras[c].frames[t]);

        beta_sum += next.state.body.beta * next.length();
        beta_frames += next.length();
    }
    acc.state.body.beta = beta_sum / beta_frames;
    return acc;
}

namespace {

void write_checkpoint(const FitConfig& config, const std::string& stage,
                      const ProblemState& state) {
    if (config.checkpoint_dir.empty()) return;
    FitResult snapshot;
    snapshot.trajectory = state.body;
    snapshot.cameras = state.cameras;
    save_result_file(config.checkpoint_dir + "/" + stage + ".json", snapshot,
                     fit_config_to_json(config));
}

// Runs fn(i) for i in [0, n) on up to `threads` workers. Results are
// deterministic because tasks are independent.
void parallel_for(int n, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> cursor{0};
    std::vector<std::future<void>> workers;
    const int k = std::min(threads, n);
    for (int w = 0; w < k; ++w)
        workers.push_back(std::async(std::launch::async, [&] {
            for (int i = cursor.fetch_add(1); i < n; i = cursor.fetch_add(1)) fn(i);
        }));
    for (auto& f : workers) f.get();
}

} // namespace

FitResult fit_sequence(const Observations& obs, const std::vector<CameraIntrinsics>& intrinsics,
                       const PriorModel& prior, const SkeletonModel& model,
                       const FitConfig& config, const ProblemState* init_override) {
    const auto t_start = std::chrono::steady_clock::now();
    const int T = obs.frame_count();
    const int C = obs.camera_count();
    if (T < config.chunk_len) throw ValidationError("fit_sequence: need at least 25 frames");
    if (C < 1) throw ValidationError("fit_sequence: need at least one camera");
    if (config.chunk_len != MotionWindow::kWindowLen)
        throw ValidationError("fit_sequence: chunk_len is fixed at 25 by the prior");
    if (config.stitch_group < 2) throw ValidationError("fit_sequence: stitch_group must be >= 2");

    FitResult result;
    FitDiagnostics& diag = result.diagnostics;

    const ProblemState init =
        init_override ? *init_override : initialize(obs, intrinsics, prior, model,
                                                    config.confidence_floor);
    write_checkpoint(config, "init", init);

    // split into chunks and optimize each independently
    const std::vector<int> starts = chunk_starts(T, config.chunk_len);
    std::vector<SegmentState> segments(starts.size());
    std::vector<Observations> slices(starts.size());
    std::vector<FitDiagnostics> seg_diag(starts.size());
    for (std::size_t i = 0; i < starts.size(); ++i) {
        segments[i] = slice_segment(init, starts[i], config.chunk_len);
        slices[i] = obs.slice(starts[i], config.chunk_len);
    }
    parallel_for(static_cast<int>(starts.size()), config.threads, [&](int i) {
        optimize_segment(segments[i], slices[i], prior, model, config, config.chunk_phase_iters,
                         &seg_diag[i]);
    });
    for (FitDiagnostics& d : seg_diag) merge_diagnostics(diag, d);
    if (!config.checkpoint_dir.empty() && segments.size() > 1)
        write_checkpoint(config, "chunks", stitch(segments).state);

    // stitch in groups and re-optimize until a single segment remains; the
    // last pass is the final full-sequence optimization
    int level = 0;
    bool final_pass_done = false;
    while (segments.size() > 1) {
        ++level;
        std::vector<SegmentState> merged;
        std::vector<int> needs_opt;
        for (std::size_t i = 0; i < segments.size(); i += config.stitch_group) {
            const std::size_t end = std::min(segments.size(), i + config.stitch_group);
            if (end - i == 1) {
                merged.push_back(std::move(segments[i])); // lone segment passes through
                continue;
            }
            std::vector<SegmentState> group(segments.begin() + i, segments.begin() + end);
            merged.push_back(stitch(group, &diag));
            needs_opt.push_back(static_cast<int>(merged.size()) - 1);
        }
        std::vector<Observations> merged_slices(merged.size());
        std::vector<FitDiagnostics> merged_diag(merged.size());
        for (int idx : needs_opt) merged_slices[idx] = obs.slice(merged[idx].start, merged[idx].length());
        parallel_for(static_cast<int>(needs_opt.size()), config.threads, [&](int k) {
            const int idx = needs_opt[k];
            optimize_segment(merged[idx], merged_slices[idx], prior, model, config,
                             config.segment_phase_iters, &merged_diag[idx]);
        });
        for (FitDiagnostics& d : merged_diag) merge_diagnostics(diag, d);
        segments = std::move(merged);
        if (segments.size() == 1 && !needs_opt.empty()) final_pass_done = true;
        write_checkpoint(config, "level" + std::to_string(level), segments[0].state);
    }

    if (!final_pass_done) { // single chunk from the start: run the final pass
        FitDiagnostics d;
        Observations full_slice = obs.slice(segments[0].start, segments[0].length());
        optimize_segment(segments[0], full_slice, prior, model, config,
                         config.segment_phase_iters, &d);
        merge_diagnostics(diag, d);
    }

    result.trajectory = std::move(segments[0].state.body);
    result.cameras = std::move(segments[0].state.cameras);
    for (FramePose& f : result.trajectory.frames) f.phi = wrap_axis_angle(f.phi);

    if (!config.log_csv.empty()) {
        std::ofstream log(config.log_csv);
        log << "segment_start,segment_len,phase,iter,total,e_2d,e_motion,e_3ds,e_cos,e_cps,"
               "e_beta,e_z,e_hgp,e_cgp\n";
        for (const std::string& row : diag.log_rows) log << row << "\n";
    }
    diag.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return result;
}

} // namespace gmocap
