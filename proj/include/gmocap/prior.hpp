#pragma once

#include <cstdint>
#include <vector>

#include "gmocap/motion_window.hpp"

namespace gmocap {

enum class PriorKind { kPca, kVae };

// Probabilistic-PCA motion model: encode_mu whitens by the per-component
// stddev, so |m|^2 is the Mahalanobis distance to the corpus mean.
struct PcaPrior {
    VecX mean;                      // 4950
    MatX basis;                     // 4950 x latent, orthonormal columns
    VecX variances;                 // latent, descending
    double residual_variance = 0.0; // mean per-dim variance outside the basis
    VecX explained;                 // explained-variance fraction per component
};

// Small dense VAE: vec(x) -> hidden -> (mu, logvar), latent -> hidden ->
// vec(x), GELU on hidden layers, linear heads and output.
struct DenseVae {
    std::vector<int> hidden;
    std::vector<MatX> enc_w;
    std::vector<VecX> enc_b;
    MatX w_mu, w_logvar;
    VecX b_mu, b_logvar;
    std::vector<MatX> dec_w; // last layer maps back to 4950
    std::vector<VecX> dec_b;
};

struct PriorModel {
    PriorKind kind = PriorKind::kPca;
    int latent_dim = 64;
    PcaPrior pca;
    DenseVae vae;
    std::uint64_t skeleton_fingerprint = 0;
    std::uint64_t corpus_fingerprint = 0;
};

// mu head of the prior encoder. Differentiable; the vjp variants below pull
// a latent adjoint back to the window tensor.
VecX encode_mu(const MotionWindow& x, const PriorModel& prior);
MatX encode_mu_batch(const MatX& x, const PriorModel& prior);                   // x: 4950 x n
MatX encode_mu_vjp_batch(const MatX& x, const MatX& d_m, const PriorModel& prior);

// decode(0) is the prior-mean motion used for initialization.
MotionWindow decode(const VecX& m, const PriorModel& prior);

std::uint64_t corpus_fingerprint(const std::vector<MotionWindow>& corpus);

// Closed-form prior fit. Requires at least 2*latent_dim windows.
PriorModel fit_pca_prior(const std::vector<MotionWindow>& corpus, int latent_dim);

// Cyclic annealing schedule with period 20: linear 0 -> 1 over the first 10
// epochs, constant 1 for the next 10, then the cycle repeats.
double kl_weight(int epoch);

struct VaeTrainConfig {
    int latent_dim = 64;
    std::vector<int> hidden{256};
    int epochs = 60;
    int batch = 32;
    double learning_rate = 2e-5;
    double momentum = 0.9;
    std::uint64_t seed = 1;
};

struct VaeTrainReport {
    std::vector<double> rec_loss;  // per epoch
    std::vector<double> kl_loss;   // per epoch
    std::vector<double> kl_weight_used;
    double final_rec = 0.0;
    double pca_rec = 0.0; // PCA reconstruction error at equal latent_dim
    bool beats_pca = false;
};

// Trains the dense VAE with SGD and reparameterized sampling; deterministic
// for a fixed seed. Throws NonFiniteLoss on divergence. Prints a warning if
// the final reconstruction loss does not beat the PCA baseline.
PriorModel train_vae(const std::vector<MotionWindow>& corpus, const VaeTrainConfig& config,
                     VaeTrainReport* report = nullptr);

} // namespace gmocap
