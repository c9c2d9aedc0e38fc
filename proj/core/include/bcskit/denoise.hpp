#pragma once

#include <functional>

#include "bcskit/image.hpp"
#include "bcskit/rng.hpp"

namespace bcskit {

enum class DenoiserVariant { HardDct, SoftDct, Nlm };

// A denoiser family parameterized by the noise level sigma passed at call
// time. DCT variants threshold at tau * sigma in the orthonormal DCT domain;
// non-local means uses filter strength nlm_strength * sigma.
struct DenoiserKind {
  DenoiserVariant variant = DenoiserVariant::HardDct;
  double tau = 2.7;
  int nlm_patch = 7;
  int nlm_window = 21;
  double nlm_strength = 0.6;
};

// Applies the denoiser at noise level sigma. sigma = 0 is the identity for
// every variant. The DCT variants keep the DC coefficient untouched, so the
// image mean is preserved.
Image denoise(const Image& img, double sigma, const DenoiserKind& kind);

// DCT-domain hard thresholding at an absolute level: coefficients with
// |c| < lambda are zeroed, DC is always kept. Idempotent for a fixed lambda.
Image hard_threshold(const Image& img, double lambda);

// Default probe step for divergence estimation.
double default_probe_eps(const Image& img);

// Monte-Carlo divergence estimate: mean over probes of
// eta' * (D(x + eps * eta) - D(x)) / eps with standard normal eta.
double divergence_mc(const std::function<Image(const Image&)>& denoiser,
                     const Image& img, int probes, double eps, Rng& rng);

// Same estimator for a DenoiserKind at fixed sigma.
double divergence_mc(const DenoiserKind& kind, const Image& img, double sigma,
                     int probes, double eps, Rng& rng);

}  // namespace bcskit
