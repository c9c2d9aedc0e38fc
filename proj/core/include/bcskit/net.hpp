#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bcskit/image.hpp"
#include "bcskit/linalg.hpp"
#include "bcskit/sampling.hpp"

namespace bcskit {

// Unrolled multi-channel reconstruction network: one learned sampling matrix
// and one learned initial-reconstruction matrix per channel, then `phases`
// rounds of measurement projection followed by a small residual CNN.
struct NetConfig {
  int block_size = 16;
  std::vector<double> rates = {0.1, 0.2, 0.3};
  int features = 8;        // CNN width
  int kernel = 3;          // CNN kernel size, odd
  int phases = 2;          // unrolled projection+CNN rounds
  int layers_per_phase = 5;

  int n() const { return block_size * block_size; }
  int k() const { return static_cast<int>(rates.size()); }
  std::vector<int> counts() const { return measurement_counts(rates, block_size); }

  // Small enough to train on a laptop-size budget in tests.
  static NetConfig desk_scale() { return NetConfig{}; }
  // The full-size operating point.
  static NetConfig full_scale();
};

struct ConvLayer {
  int out_ch = 0;
  int in_ch = 0;
  int kernel = 0;
  std::vector<double> w;  // [out][in][ky][kx]
  std::vector<double> b;  // [out]

  double& wat(int o, int i, int ky, int kx) {
    return w[((static_cast<std::size_t>(o) * in_ch + i) * kernel + ky) * kernel + kx];
  }
  double wat(int o, int i, int ky, int kx) const {
    return w[((static_cast<std::size_t>(o) * in_ch + i) * kernel + ky) * kernel + kx];
  }
};

// All trainable state plus the frozen pseudo-inverse cache produced by the
// first training stage. Tensor declaration order is the checkpoint order.
struct NetParams {
  NetConfig config;
  std::vector<Matrix> w_samp;               // k of m_j x n, no bias
  std::vector<Matrix> w_init;               // k of n x m_j
  std::vector<std::vector<double>> b_init;  // k of n
  std::vector<std::vector<ConvLayer>> deep; // [phase][layer]
  std::vector<Matrix> pinv;                 // k of n x m_j, empty until cached
  int stage = 0;                            // highest completed training stage
};

// Gaussian N(0, 1/n) sampling and init matrices, He-scaled CNN kernels
// N(0, 2 / (kernel^2 * fan_in)), zero biases. Deterministic per seed.
NetParams init_params(const NetConfig& config, std::uint64_t seed);

// Fills params.pinv from the current sampling matrices. Training stage 1 does
// this on completion; call directly when assembling params by hand.
void cache_pinv(NetParams& params);

// y = w_samp[channel] * vec(block), raw pixel units.
std::vector<double> forward_sample(const NetParams& params, int channel,
                                   const Image& block);

// reshape(w_init[channel] * y + b_init[channel]), raw units.
Image forward_init(const NetParams& params, int channel, std::span<const double> y);

// Full reconstruction from measurements in raw pixel units: initial estimate,
// then per phase a per-block projection through the cached pseudo-inverse and
// a residual CNN pass. Requires the pinv cache; the assignment must agree
// with the measurement channels. Internally the network runs on [0, 1]
// intensities; measurements are scaled down and the output scaled back.
Image forward_full(const NetParams& params, const Measurements& meas,
                   const RateAssignment& assignment);

// Reassembled initial estimate alone, same conventions as forward_full.
Image initial_reconstruction(const NetParams& params, const Measurements& meas);

// A training pair: the image plus its per-block channel routing.
struct TrainExample {
  Image image;
  RateAssignment assignment;
};

// Builds routing from full-resolution saliency at the given target rate, or
// uniformly at the nearest channel when adaptive is false.
std::vector<TrainExample> make_training_set(const NetConfig& config,
                                            std::span<const Image> images,
                                            double target_rate, bool adaptive);

// Gradients, same shapes as the trainable tensors.
struct NetGrads {
  std::vector<Matrix> w_samp;
  std::vector<Matrix> w_init;
  std::vector<std::vector<double>> b_init;
  std::vector<std::vector<ConvLayer>> deep;
};
NetGrads zero_grads(const NetParams& params);

// Mean over the batch of 0.5 * || init(sample(X)) - X ||^2 on [0, 1]
// intensities. Gradients cover w_samp, w_init, b_init when grads is given.
double loss_stage1(const NetParams& params, std::span<const TrainExample> batch,
                   NetGrads* grads);

// Same objective through the full unrolled network. The sampling matrices are
// frozen: their gradient entries stay exactly zero. The projection uses the
// stage-1 pinv cache and never differentiates through it. Throws
// std::logic_error if stage 1 has not completed.
double loss_stage2(const NetParams& params, std::span<const TrainExample> batch,
                   NetGrads* grads);

struct TrainConfig {
  int steps = 200;
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 1;
};

struct LossPoint {
  int step = 0;
  int stage = 0;
  double loss = 0.0;
};

// Adam, batch size 1, examples visited cyclically. Stage 1 trains the
// sampling and init tensors and caches the pseudo-inverses on completion;
// stage 2 trains init and CNN tensors with sampling frozen. Deterministic
// per seed and inputs.
void train(NetParams& params, std::span<const TrainExample> examples, int stage,
           const TrainConfig& cfg, std::vector<LossPoint>* curve = nullptr);

// Little-endian binary checkpoint: magic, version, config, stage, tensors in
// declaration order, pinv cache when present.
void save_checkpoint(const NetParams& params, const std::string& path);
NetParams load_checkpoint(const std::string& path);

}  // namespace bcskit
