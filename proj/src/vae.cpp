#include <cmath>
#include <cstdio>
#include <limits>

#include "gmocap/error.hpp"
#include "gmocap/vae_internal.hpp"

namespace gmocap {

namespace {

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * M_SQRT1_2)); }

double gelu_grad(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    return cdf + x * pdf;
}

MatX gelu(const MatX& z) { return z.unaryExpr([](double v) { return gelu(v); }); }
MatX gelu_grad(const MatX& z) { return z.unaryExpr([](double v) { return gelu_grad(v); }); }

MatX he_matrix(int rows, int cols, double scale, Rng& rng) {
    MatX w(rows, cols);
    for (int c = 0; c < cols; ++c)
        for (int r = 0; r < rows; ++r) w(r, c) = scale * rng.normal();
    return w;
}

struct EncoderCache {
    std::vector<MatX> z; // pre-activations per hidden layer
    std::vector<MatX> h; // activations per hidden layer
    MatX mu, logvar;
};

EncoderCache encode_forward(const DenseVae& v, const MatX& x) {
    EncoderCache c;
    const MatX* a = &x;
    for (std::size_t i = 0; i < v.enc_w.size(); ++i) {
        c.z.push_back((v.enc_w[i] * (*a)).colwise() + v.enc_b[i]);
        c.h.push_back(gelu(c.z.back()));
        a = &c.h.back();
    }
    c.mu = (v.w_mu * (*a)).colwise() + v.b_mu;
    c.logvar = (v.w_logvar * (*a)).colwise() + v.b_logvar;
    return c;
}

struct DecoderCache {
    std::vector<MatX> z;
    std::vector<MatX> h;
    MatX out;
};

DecoderCache decode_forward(const DenseVae& v, const MatX& m) {
    DecoderCache c;
    const MatX* a = &m;
    const std::size_t last = v.dec_w.size() - 1;
    for (std::size_t i = 0; i < last; ++i) {
        c.z.push_back((v.dec_w[i] * (*a)).colwise() + v.dec_b[i]);
        c.h.push_back(gelu(c.z.back()));
        a = &c.h.back();
    }
    c.out = (v.dec_w[last] * (*a)).colwise() + v.dec_b[last];
    return c;
}

} // namespace

DenseVae vae_init(int input_dim, int latent_dim, const std::vector<int>& hidden, Rng& rng) {
    if (hidden.empty()) throw ValidationError("vae_init: need at least one hidden layer");
    DenseVae v;
    v.hidden = hidden;
    int in = input_dim;
    for (int width : hidden) {
        v.enc_w.push_back(he_matrix(width, in, std::sqrt(2.0 / in), rng));
        v.enc_b.push_back(VecX::Zero(width));
        in = width;
    }
    v.w_mu = he_matrix(latent_dim, in, std::sqrt(1.0 / in), rng);
    v.b_mu = VecX::Zero(latent_dim);
    v.w_logvar = he_matrix(latent_dim, in, std::sqrt(1.0 / in), rng);
    v.b_logvar = VecX::Zero(latent_dim);
    in = latent_dim;
    for (auto it = hidden.rbegin(); it != hidden.rend(); ++it) {
        v.dec_w.push_back(he_matrix(*it, in, std::sqrt(2.0 / in), rng));
        v.dec_b.push_back(VecX::Zero(*it));
        in = *it;
    }
    v.dec_w.push_back(he_matrix(input_dim, in, std::sqrt(1.0 / in), rng));
    v.dec_b.push_back(VecX::Zero(input_dim));
    return v;
}

MatX vae_encode_mu(const DenseVae& v, const MatX& x) { return encode_forward(v, x).mu; }

MatX vae_encode_mu_vjp(const DenseVae& v, const MatX& x, const MatX& d_mu) {
    EncoderCache c = encode_forward(v, x);
    MatX d_a = v.w_mu.transpose() * d_mu;
    for (int i = static_cast<int>(v.enc_w.size()) - 1; i >= 0; --i) {
        const MatX d_z = d_a.cwiseProduct(gelu_grad(c.z[i]));
        d_a = v.enc_w[i].transpose() * d_z;
    }
    return d_a;
}

VecX vae_decode(const DenseVae& v, const VecX& m) { return decode_forward(v, m).out.col(0); }

VaeGrads vae_zero_grads(const DenseVae& v) {
    VaeGrads g;
    for (const MatX& w : v.enc_w) g.enc_w.push_back(MatX::Zero(w.rows(), w.cols()));
    for (const VecX& b : v.enc_b) g.enc_b.push_back(VecX::Zero(b.size()));
    g.w_mu = MatX::Zero(v.w_mu.rows(), v.w_mu.cols());
    g.w_logvar = MatX::Zero(v.w_logvar.rows(), v.w_logvar.cols());
    g.b_mu = VecX::Zero(v.b_mu.size());
    g.b_logvar = VecX::Zero(v.b_logvar.size());
    for (const MatX& w : v.dec_w) g.dec_w.push_back(MatX::Zero(w.rows(), w.cols()));
    for (const VecX& b : v.dec_b) g.dec_b.push_back(VecX::Zero(b.size()));
    return g;
}

VaeLoss vae_loss_and_grad(const DenseVae& v, const MatX& x, const MatX& eps, double w_kl,
                          VaeGrads* grads) {
    const int n = static_cast<int>(x.cols());
    const int latent = static_cast<int>(v.b_mu.size());

    EncoderCache enc = encode_forward(v, x);
    const MatX std_dev = (0.5 * enc.logvar).array().exp();
    const MatX m = enc.mu + std_dev.cwiseProduct(eps);
    DecoderCache dec = decode_forward(v, m);

    VaeLoss loss;
    const MatX resid = dec.out - x;
    loss.rec = resid.squaredNorm() / n;
    loss.kl = (-0.5 / latent) *
              (1.0 + enc.logvar.array() - enc.logvar.array().exp() - enc.mu.array().square())
                  .sum() /
              n;
    loss.total = loss.rec + w_kl * loss.kl;
    if (!grads) return loss;

    // decoder backward
    MatX d_out = 2.0 / n * resid;
    const int dec_last = static_cast<int>(v.dec_w.size()) - 1;
    const MatX& last_in = dec_last > 0 ? dec.h[dec_last - 1] : m;
    grads->dec_w[dec_last].noalias() += d_out * last_in.transpose();
    grads->dec_b[dec_last] += d_out.rowwise().sum();
    MatX d_a = v.dec_w[dec_last].transpose() * d_out;
    for (int i = dec_last - 1; i >= 0; --i) {
        const MatX d_z = d_a.cwiseProduct(gelu_grad(dec.z[i]));
        const MatX& in = i > 0 ? dec.h[i - 1] : m;
        grads->dec_w[i].noalias() += d_z * in.transpose();
        grads->dec_b[i] += d_z.rowwise().sum();
        d_a = v.dec_w[i].transpose() * d_z;
    }
    const MatX& d_m = d_a;

    // reparameterization and KL
    MatX d_mu = d_m + (w_kl / (n * latent)) * enc.mu;
    MatX d_logvar = 0.5 * d_m.cwiseProduct(eps).cwiseProduct(std_dev) -
                    (0.5 * w_kl / (n * latent)) * (1.0 - enc.logvar.array().exp()).matrix();

    // encoder backward
    const MatX& head_in = v.enc_w.empty() ? x : enc.h.back();
    grads->w_mu.noalias() += d_mu * head_in.transpose();
    grads->b_mu += d_mu.rowwise().sum();
    grads->w_logvar.noalias() += d_logvar * head_in.transpose();
    grads->b_logvar += d_logvar.rowwise().sum();
    MatX d_h = v.w_mu.transpose() * d_mu + v.w_logvar.transpose() * d_logvar;
    for (int i = static_cast<int>(v.enc_w.size()) - 1; i >= 0; --i) {
        const MatX d_z = d_h.cwiseProduct(gelu_grad(enc.z[i]));
        const MatX& in = i > 0 ? enc.h[i - 1] : x;
        grads->enc_w[i].noalias() += d_z * in.transpose();
        grads->enc_b[i] += d_z.rowwise().sum();
        d_h = v.enc_w[i].transpose() * d_z;
    }
    return loss;
}

namespace {

void sgd_update(MatX& w, MatX& vel, const MatX& g, double lr, double momentum) {
    vel = momentum * vel - lr * g;
    w += vel;
}

void sgd_update(VecX& w, VecX& vel, const VecX& g, double lr, double momentum) {
    vel = momentum * vel - lr * g;
    w += vel;
}

} // namespace

PriorModel train_vae(const std::vector<MotionWindow>& corpus, const VaeTrainConfig& config,
                     VaeTrainReport* report) {
    if (corpus.empty()) throw InsufficientData("train_vae: empty corpus");
    const int n = static_cast<int>(corpus.size());
    const int dim = MotionWindow::kDim;

    MatX data(dim, n);
    for (int i = 0; i < n; ++i) data.col(i) = corpus[i].values;

    Rng rng(config.seed);
    DenseVae vae = vae_init(dim, config.latent_dim, config.hidden, rng);
    VaeGrads velocity = vae_zero_grads(vae);

    // PCA baseline at equal latent_dim (when the corpus is large enough)
    double pca_rec = std::numeric_limits<double>::quiet_NaN();
    if (n >= 2 * config.latent_dim) {
        const PriorModel pca = fit_pca_prior(corpus, config.latent_dim);
        double err = 0.0;
        for (int i = 0; i < n; ++i) {
            const VecX xc = data.col(i) - pca.pca.mean;
            err += (xc - pca.pca.basis * (pca.pca.basis.transpose() * xc)).squaredNorm();
        }
        pca_rec = err / n;
    }

    VaeTrainReport local_report;
    VaeTrainReport& rep = report ? *report : local_report;
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    const int batch = std::max(1, std::min(config.batch, n));
    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        for (int i = n - 1; i > 0; --i)
            std::swap(order[i], order[rng.uniform_index(i + 1)]);
        const double wk = kl_weight(epoch);
        double rec_sum = 0.0, kl_sum = 0.0;
        int count = 0;
        for (int start = 0; start < n; start += batch) {
            const int b = std::min(batch, n - start);
            MatX xb(dim, b);
            for (int k = 0; k < b; ++k) xb.col(k) = data.col(order[start + k]);
            MatX eps(config.latent_dim, b);
            for (int c = 0; c < b; ++c)
                for (int r = 0; r < config.latent_dim; ++r) eps(r, c) = rng.normal();

            VaeGrads grads = vae_zero_grads(vae);
            const VaeLoss loss = vae_loss_and_grad(vae, xb, eps, wk, &grads);
            if (!std::isfinite(loss.total))
                throw NonFiniteLoss("train_vae: non-finite loss at epoch " + std::to_string(epoch) +
                                    " batch " + std::to_string(start / batch));
            for (std::size_t l = 0; l < vae.enc_w.size(); ++l) {
                sgd_update(vae.enc_w[l], velocity.enc_w[l], grads.enc_w[l], config.learning_rate,
                           config.momentum);
                sgd_update(vae.enc_b[l], velocity.enc_b[l], grads.enc_b[l], config.learning_rate,
                           config.momentum);
            }
            sgd_update(vae.w_mu, velocity.w_mu, grads.w_mu, config.learning_rate, config.momentum);
            sgd_update(vae.b_mu, velocity.b_mu, grads.b_mu, config.learning_rate, config.momentum);
            sgd_update(vae.w_logvar, velocity.w_logvar, grads.w_logvar, config.learning_rate,
                       config.momentum);
            sgd_update(vae.b_logvar, velocity.b_logvar, grads.b_logvar, config.learning_rate,
                       config.momentum);
            for (std::size_t l = 0; l < vae.dec_w.size(); ++l) {
                sgd_update(vae.dec_w[l], velocity.dec_w[l], grads.dec_w[l], config.learning_rate,
                           config.momentum);
                sgd_update(vae.dec_b[l], velocity.dec_b[l], grads.dec_b[l], config.learning_rate,
                           config.momentum);
            }
            rec_sum += loss.rec * b;
            kl_sum += loss.kl * b;
            count += b;
        }
        rep.rec_loss.push_back(rec_sum / count);
        rep.kl_loss.push_back(kl_sum / count);
        rep.kl_weight_used.push_back(wk);
    }

    rep.final_rec = rep.rec_loss.empty() ? 0.0 : rep.rec_loss.back();
    rep.pca_rec = pca_rec;
    rep.beats_pca = !(rep.final_rec >= pca_rec); // NaN baseline counts as a pass
    if (!rep.beats_pca)
        std::fprintf(stderr,
                     "train_vae: warning: final reconstruction %.6g does not beat the PCA "
                     "baseline %.6g at latent_dim %d\n",
                     rep.final_rec, rep.pca_rec, config.latent_dim);

    PriorModel prior;
    prior.kind = PriorKind::kVae;
    prior.latent_dim = config.latent_dim;
    prior.vae = std::move(vae);
    prior.corpus_fingerprint = corpus_fingerprint(corpus);
    return prior;
}

} // namespace gmocap
