#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "gmocap/geometry.hpp"

namespace gmocap {

struct MinimizeOptions {
    int max_iters = 200;
    int history = 10;        // L-BFGS memory
    double armijo_c1 = 1e-4;
    int max_backtracks = 40;
    double rel_tol = 1e-6;   // relative decrease over tol_window iterations
    int tol_window = 20;
};

struct MinimizeResult {
    VecX x;
    double loss = 0.0;
    int iterations = 0;
    bool converged = false;
    std::vector<double> trace; // accepted-iterate losses, trace[0] = initial
};

// Evaluates loss and, when grad != nullptr, the gradient.
using LossGradFn = std::function<double(const VecX&, VecX*)>;

// Called after each accepted iterate with (iteration, loss, x).
using AcceptCallback = std::function<void(int, double, const VecX&)>;

// First-order descent: L-BFGS directions with Armijo backtracking, falling
// back to steepest descent when curvature information is unusable. Accepted
// iterates never increase the loss. Entries with frozen[i] != 0 are held
// bit-exactly at their initial values. Candidate steps whose evaluation
// throws a NumericError are treated as failed and backtracked; non-finite
// values at an accepted iterate propagate as NonFiniteLoss/Gradient.
MinimizeResult minimize(VecX x0, const LossGradFn& fn, const std::vector<std::uint8_t>& frozen,
                        const MinimizeOptions& options, const AcceptCallback& on_accept = {});

} // namespace gmocap
