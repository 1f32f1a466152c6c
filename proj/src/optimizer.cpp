#include "gmocap/optimizer.hpp"

#include <cmath>
#include <deque>

#include "gmocap/error.hpp"

namespace gmocap {

namespace {

void apply_mask(VecX& v, const std::vector<std::uint8_t>& frozen) {
    if (frozen.empty()) return;
    for (int i = 0; i < v.size(); ++i)
        if (frozen[i]) v[i] = 0.0;
}

void restore_frozen(VecX& x, const VecX& x0, const std::vector<std::uint8_t>& frozen) {
    if (frozen.empty()) return;
    for (int i = 0; i < x.size(); ++i)
        if (frozen[i]) x[i] = x0[i];
}

} // namespace

MinimizeResult minimize(VecX x0, const LossGradFn& fn, const std::vector<std::uint8_t>& frozen,
                        const MinimizeOptions& opt, const AcceptCallback& on_accept) {
    const int n = static_cast<int>(x0.size());
    if (!frozen.empty() && static_cast<int>(frozen.size()) != n)
        throw ValidationError("minimize: frozen mask size mismatch");

    MinimizeResult res;
    res.x = std::move(x0);
    VecX grad(n);
    double f = fn(res.x, &grad);
    if (!std::isfinite(f)) throw NonFiniteLoss("minimize: non-finite loss at iteration 0");
    if (!grad.allFinite())
        throw NonFiniteGradient("minimize: non-finite gradient at iteration 0");
    apply_mask(grad, frozen);
    res.trace.push_back(f);

    std::deque<VecX> s_hist, y_hist;
    VecX x_new(n), grad_new(n), dir(n);

    for (int iter = 0; iter < opt.max_iters; ++iter) {
        const double gnorm = grad.norm();
        if (gnorm == 0.0) {
            res.converged = true;
            break;
        }

        // L-BFGS two-loop recursion
        dir = -grad;
        const int m = static_cast<int>(s_hist.size());
        std::vector<double> alpha(m), rho(m);
        for (int i = m - 1; i >= 0; --i) {
            rho[i] = 1.0 / y_hist[i].dot(s_hist[i]);
            alpha[i] = rho[i] * s_hist[i].dot(dir);
            dir -= alpha[i] * y_hist[i];
        }
        if (m > 0) {
            const double gamma = s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
            dir *= gamma;
        }
        for (int i = 0; i < m; ++i) {
            const double beta = rho[i] * y_hist[i].dot(dir);
            dir += (alpha[i] - beta) * s_hist[i];
        }
        apply_mask(dir, frozen);

        double slope = grad.dot(dir);
        if (!(slope < 0.0)) { // not a descent direction: restart from steepest descent
            s_hist.clear();
            y_hist.clear();
            dir = -grad;
            slope = -gnorm * gnorm;
        }

        // Armijo backtracking on loss-only evaluations; a candidate that
        // throws a NumericError (e.g. a degenerate rotation probe) counts as
        // a failed step.
        double step = 1.0;
        bool accepted = false;
        double f_new = f;
        for (int bt = 0; bt < opt.max_backtracks; ++bt) {
            x_new = res.x + step * dir;
            restore_frozen(x_new, res.x, frozen);
            bool ok = true;
            try {
                f_new = fn(x_new, nullptr);
            } catch (const NumericError&) {
                ok = false;
            }
            if (ok && std::isfinite(f_new) && f_new <= f + opt.armijo_c1 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (s_hist.empty()) break; // steepest descent failed: done
            s_hist.clear();            // drop stale curvature and retry once
            y_hist.clear();
            continue;
        }

        f_new = fn(x_new, &grad_new); // gradient only at the accepted point
        if (!std::isfinite(f_new))
            throw NonFiniteLoss("minimize: non-finite loss at accepted iterate " +
                                std::to_string(iter + 1));
        if (!grad_new.allFinite())
            throw NonFiniteGradient("minimize: non-finite gradient at accepted iterate " +
                                    std::to_string(iter + 1));
        apply_mask(grad_new, frozen);
        VecX s = x_new - res.x;
        VecX y = grad_new - grad;
        apply_mask(s, frozen);
        const double sy = s.dot(y);
        if (sy > 1e-12 * s.norm() * y.norm()) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            if (static_cast<int>(s_hist.size()) > opt.history) {
                s_hist.pop_front();
                y_hist.pop_front();
            }
        }

        res.x.swap(x_new);
        grad.swap(grad_new);
        f = f_new;
        res.iterations = iter + 1;
        res.trace.push_back(f);
        if (on_accept) on_accept(res.iterations, f, res.x);

        // relative-decrease stop over a trailing window
        const int k = static_cast<int>(res.trace.size()) - 1;
        if (k >= opt.tol_window) {
            const double before = res.trace[k - opt.tol_window];
            if (before - f <= opt.rel_tol * std::max(1.0, std::abs(before))) {
                res.converged = true;
                break;
            }
        }
    }

    res.loss = f;
    return res;
}

} // namespace gmocap
