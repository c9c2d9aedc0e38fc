#pragma once

#include <cstdint>
#include <vector>

#include "bcskit/image.hpp"
#include "bcskit/linalg.hpp"
#include "bcskit/rng.hpp"

namespace bcskit {

// One sampling operator per rate, shared by every block routed to that rate.
// Channel j measures m_j = max(1, round(rate_j * B^2)) coefficients of the
// row-major vectorized block. Pseudo-inverses are cached at build time.
struct ChannelBank {
  int block_size = 0;
  bool orthonormal = false;
  std::vector<double> rates;     // strictly ascending, in (0, 1]
  std::vector<Matrix> matrices;  // m_j x B^2
  std::vector<Matrix> pinvs;     // B^2 x m_j

  int n() const { return block_size * block_size; }
  int k() const { return static_cast<int>(rates.size()); }
  int m(int j) const { return matrices[j].rows; }
};

// Measurement counts for a rate list at block size B, without building
// matrices. Used for validation and by the allocator.
std::vector<int> measurement_counts(const std::vector<double>& rates, int block_size);

// Draws each channel's Gaussian operator from rng in channel order, then
// orthonormalizes rows when requested. Identical seeds give byte-identical
// banks. Throws std::invalid_argument for rates outside (0, 1], rates not
// strictly ascending, or rates so close that two channels would share a
// measurement count.
ChannelBank build_channel_bank(Rng& rng, int block_size,
                               const std::vector<double>& rates,
                               bool orthonormal);

// Per-block channel routing plus the bookkeeping the CLI records.
struct RateAssignment {
  std::vector<int> channels;  // grid order, one entry per block
  double target_rate = 0.0;
  double achieved_rate = 0.0;
};

// Every block on the channel whose rate is nearest the target (ties toward the
// lower channel).
RateAssignment uniform_assignment(const ChannelBank& bank, int block_count,
                                  double target_rate);

struct BlockMeasurement {
  int block = 0;    // row-major grid index
  int channel = 0;  // index into the bank
  std::vector<double> y;
};

struct Measurements {
  int block_size = 0;
  int grid_rows = 0;
  int grid_cols = 0;
  int image_height = 0;  // pre-padding size, for reassembly
  int image_width = 0;
  std::vector<BlockMeasurement> entries;

  int block_count() const { return grid_rows * grid_cols; }
};

// y = Phi_j * vec(block)
std::vector<double> sample_block(const ChannelBank& bank, int channel,
                                 const Image& block);

// Partitions with the bank's block size and samples every block with its
// assigned channel. The assignment must cover exactly the grid.
Measurements sample_image(const ChannelBank& bank, const RateAssignment& assignment,
                          const Image& img);

// Least-squares initial block estimate reshape(pinv(Phi_j) * y).
Image init_block(const ChannelBank& bank, int channel, std::span<const double> y);

// Reassembled initial estimate for a whole measurement set.
Image init_image(const ChannelBank& bank, const Measurements& meas);

}  // namespace bcskit
