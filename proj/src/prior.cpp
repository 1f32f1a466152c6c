#include "gmocap/prior.hpp"

#include <cmath>

#include "gmocap/error.hpp"
#include "gmocap/rng.hpp"
#include "gmocap/vae_internal.hpp"

namespace gmocap {

namespace {

VecX pca_sigma(const PcaPrior& p) {
    const double floor = std::max(1e-10, 1e-8 * p.variances.maxCoeff());
    return p.variances.cwiseMax(floor).cwiseSqrt();
}

} // namespace

VecX encode_mu(const MotionWindow& x, const PriorModel& prior) {
    return encode_mu_batch(x.values, prior).col(0);
}

MatX encode_mu_batch(const MatX& x, const PriorModel& prior) {
    if (prior.kind == PriorKind::kPca) {
        const VecX sigma = pca_sigma(prior.pca);
        MatX m = prior.pca.basis.transpose() * (x.colwise() - prior.pca.mean);
        m.array().colwise() /= sigma.array();
        return m;
    }
    return vae_encode_mu(prior.vae, x);
}

MatX encode_mu_vjp_batch(const MatX& x, const MatX& d_m, const PriorModel& prior) {
    if (prior.kind == PriorKind::kPca) {
        const VecX sigma = pca_sigma(prior.pca);
        return prior.pca.basis * (d_m.array().colwise() / sigma.array()).matrix();
    }
    return vae_encode_mu_vjp(prior.vae, x, d_m);
}

MotionWindow decode(const VecX& m, const PriorModel& prior) {
    MotionWindow w;
    if (prior.kind == PriorKind::kPca) {
        const VecX sigma = pca_sigma(prior.pca);
        w.values = prior.pca.mean + prior.pca.basis * sigma.cwiseProduct(m);
    } else {
        w.values = vae_decode(prior.vae, m);
    }
    return w;
}

std::uint64_t corpus_fingerprint(const std::vector<MotionWindow>& corpus) {
    const std::uint64_t n = corpus.size();
    std::uint64_t h = fnv1a(&n, sizeof(n));
    for (const MotionWindow& w : corpus)
        h = fnv1a(w.values.data(), sizeof(double) * w.values.size(), h);
    return h;
}

PriorModel fit_pca_prior(const std::vector<MotionWindow>& corpus, int latent_dim) {
    const int n = static_cast<int>(corpus.size());
    const int dim = MotionWindow::kDim;
    if (latent_dim < 1 || latent_dim > dim)
        throw ValidationError("fit_pca_prior: bad latent_dim");
    if (n < 2 * latent_dim)
        throw InsufficientData("fit_pca_prior: need at least 2*latent_dim windows");

    VecX mean = VecX::Zero(dim);
    for (const MotionWindow& w : corpus) mean += w.values;
    mean /= n;

    MatX xc(dim, n);
    for (int i = 0; i < n; ++i) xc.col(i) = corpus[i].values - mean;

    // Gram trick: eigenvectors of Xc^T Xc (n x n) give the principal
    // directions without forming the dim x dim covariance.
    const MatX gram = xc.transpose() * xc;
    Eigen::SelfAdjointEigenSolver<MatX> eig(gram);
    const double total = std::max(gram.trace(), 0.0);

    PriorModel prior;
    prior.kind = PriorKind::kPca;
    prior.latent_dim = latent_dim;
    prior.pca.mean = std::move(mean);
    prior.pca.basis = MatX::Zero(dim, latent_dim);
    prior.pca.variances = VecX::Zero(latent_dim);
    prior.pca.explained = VecX::Zero(latent_dim);

    double captured = 0.0;
    int fallback_index = 0;
    for (int k = 0; k < latent_dim; ++k) {
        const int src = n - 1 - k;
        const double ev = std::max(eig.eigenvalues()(src), 0.0);
        prior.pca.variances(k) = ev / (n - 1);
        prior.pca.explained(k) = total > 0.0 ? ev / total : 0.0;
        captured += ev;
        if (ev > 1e-12 * std::max(total, 1.0)) {
            prior.pca.basis.col(k) = xc * eig.eigenvectors().col(src) / std::sqrt(ev);
        } else {
            // degenerate direction: complete with a deterministic orthonormal
            // column so the basis invariant holds
            prior.pca.variances(k) = 0.0;
            while (fallback_index < dim) {
                VecX cand = VecX::Zero(dim);
                cand(fallback_index++) = 1.0;
                cand -= prior.pca.basis.leftCols(k) * (prior.pca.basis.leftCols(k).transpose() * cand);
                const double nn = cand.norm();
                if (nn > 0.5) {
                    prior.pca.basis.col(k) = cand / nn;
                    break;
                }
            }
        }
    }
    const double residual = std::max(total - captured, 0.0);
    prior.pca.residual_variance = dim > latent_dim ? residual / ((n - 1) * double(dim - latent_dim)) : 0.0;
    prior.corpus_fingerprint = corpus_fingerprint(corpus);
    return prior;
}

double kl_weight(int epoch) {
    const int e = ((epoch % 20) + 20) % 20;
    return e < 10 ? e / 10.0 : 1.0;
}

} // namespace gmocap
