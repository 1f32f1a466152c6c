#pragma once

#include "gmocap/prior.hpp"
#include "gmocap/rng.hpp"

namespace gmocap {

// Dense-VAE building blocks, exposed for training and the gradient tests.
// All batch matrices hold one sample per column.

DenseVae vae_init(int input_dim, int latent_dim, const std::vector<int>& hidden, Rng& rng);

MatX vae_encode_mu(const DenseVae& v, const MatX& x);
MatX vae_encode_mu_vjp(const DenseVae& v, const MatX& x, const MatX& d_mu);
VecX vae_decode(const DenseVae& v, const VecX& m);

// Parameter gradients, same shapes as the corresponding DenseVae fields.
struct VaeGrads {
    std::vector<MatX> enc_w;
    std::vector<VecX> enc_b;
    MatX w_mu, w_logvar;
    VecX b_mu, b_logvar;
    std::vector<MatX> dec_w;
    std::vector<VecX> dec_b;
};

VaeGrads vae_zero_grads(const DenseVae& v);

struct VaeLoss {
    double total = 0.0;
    double rec = 0.0;
    double kl = 0.0;
};

// Loss and parameter gradients for one batch with fixed reparameterization
// noise eps (latent_dim x batch). Deterministic given eps.
VaeLoss vae_loss_and_grad(const DenseVae& v, const MatX& x, const MatX& eps, double w_kl,
                          VaeGrads* grads);

} // namespace gmocap
