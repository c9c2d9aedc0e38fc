#pragma once

#include <vector>

#include "bcskit/image.hpp"
#include "bcskit/sampling.hpp"

namespace bcskit {

// Non-negative per-pixel saliency, normalized to sum exactly 1.
struct SaliencyMap {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
};

// Spectral-residual saliency: the log-amplitude spectrum minus its 3x3
// box-filtered version, recombined with the phase, inverse-transformed,
// squared, Gaussian-smoothed (sigma 2.5) and normalized. Constant images give
// the uniform map. Requires both dimensions >= 16.
SaliencyMap saliency(const Image& img);

// Saliency for large inputs at a fraction of the cost: area-average downscale
// to 10% per side (clamped to 16 px minimum), saliency there, bilinear
// upscale back, renormalize. Requires both dimensions >= 32.
SaliencyMap presample(const Image& img);

// Per-block saliency mass on the B-grid of the map, summing to 1. Padding
// never contributes; blocks are in row-major grid order.
std::vector<double> proportions(const SaliencyMap& map, int block_size);

// Saliency-driven rate allocation: each block's raw share is
// target_rate * p_i * block_count, clamped to the bank's rate range, snapped
// to the nearest channel, then greedily fine-tuned one channel step at a time
// until no single move brings the total closer to block_count * target_rate.
// Tied moves prefer the least salient block when stepping down and the most
// salient when stepping up, then the lowest block index. achieved_rate is the
// measurement-count total over block_count * B^2. target_rate must lie within
// the bank's rate range.
RateAssignment assign(const std::vector<double>& p, double target_rate,
                      const ChannelBank& bank);

// Same allocator against a plain rate list (used by the network trainer,
// which has no bank).
RateAssignment assign(const std::vector<double>& p, double target_rate,
                      const std::vector<double>& rates, int block_size);

// Resampling helpers shared by presample; exposed for tests.
Image resize_area(const Image& img, int out_h, int out_w);
Image resize_bilinear(const Image& img, int out_h, int out_w);

}  // namespace bcskit
