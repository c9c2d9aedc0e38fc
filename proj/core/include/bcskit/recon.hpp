#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bcskit/denoise.hpp"
#include "bcskit/image.hpp"
#include "bcskit/sampling.hpp"

namespace bcskit {

struct ReconConfig {
  int max_iters = 30;
  double rel_tol = 1e-4;
  DenoiserKind denoiser{};
  // Threshold schedule for the projected-thresholding engine.
  double lambda0 = 50.0;
  double lambda_decay = 0.9;
  // Monte-Carlo probes per divergence estimate. One keeps iterations cheap;
  // tests use more.
  int probes = 1;
  std::uint64_t seed = 1;
  // Force the whole-image divergence to be split uniformly over blocks even
  // for the hard-DCT denoiser, whose default split follows each block's share
  // of the surviving-coefficient basis mass.
  bool uniform_onsager_split = false;
};

// Per-iteration snapshots for diagnostics and equivalence tests: the estimate
// after each denoise and the noise level the denoiser saw.
struct ReconTrace {
  std::vector<Image> iterates;
  std::vector<double> sigmas;
};

// Projected thresholding: from the least-squares start, alternate per-block
// projection onto the measurement affine subspace with whole-image DCT hard
// thresholding under the decaying schedule lambda0 * decay^t. A final
// projection pass (no denoise) honors the measurements in the output.
Image bcs_spl(const Measurements& meas, const ChannelBank& bank,
              const ReconConfig& cfg, ReconTrace* trace = nullptr);

// Approximate message passing on a single block: starting from zero with
// residual z = y, iterate denoise at the estimated level, remeasure, and add
// the Onsager correction z * div / m. The divergence is estimated at the
// pre-denoise iterate with the same noise level the denoiser saw.
Image damp_block(std::span<const double> y, const Matrix& phi,
                 const Matrix& phi_pinv, const ReconConfig& cfg,
                 ReconTrace* trace = nullptr);

// damp_block applied independently to every block of a measurement set.
Image damp_blockwise(const Measurements& meas, const ChannelBank& bank,
                     const ReconConfig& cfg);

// Block-based AMP with a whole-image denoiser: per-block residuals and
// projections, one aggregate noise level sqrt(sum ||z_i||^2 / sum m_i), one
// whole-image denoise per iteration, and the whole-image divergence
// apportioned to blocks for the per-block Onsager terms. With a single
// whole-image block this reduces to damp_block iterate for iterate.
Image bcs_damp(const Measurements& meas, const ChannelBank& bank,
               const ReconConfig& cfg, ReconTrace* trace = nullptr);

}  // namespace bcskit
