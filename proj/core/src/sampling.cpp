#include "bcskit/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bcskit {

std::vector<int> measurement_counts(const std::vector<double>& rates, int block_size) {
  int n = block_size * block_size;
  std::vector<int> counts;
  counts.reserve(rates.size());
  for (double r : rates)
    counts.push_back(std::max(1, static_cast<int>(std::lround(r * n))));
  return counts;
}

ChannelBank build_channel_bank(Rng& rng, int block_size,
                               const std::vector<double>& rates, bool orthonormal) {
  if (block_size <= 0)
    throw std::invalid_argument("build_channel_bank: block size must be positive");
  if (rates.empty())
    throw std::invalid_argument("build_channel_bank: no rates given");
  for (std::size_t j = 0; j < rates.size(); ++j) {
    if (!(rates[j] > 0.0) || rates[j] > 1.0)
      throw std::invalid_argument("build_channel_bank: rates must lie in (0, 1]");
    if (j > 0 && !(rates[j] > rates[j - 1]))
      throw std::invalid_argument("build_channel_bank: rates must be strictly ascending");
  }
  ChannelBank bank;
  bank.block_size = block_size;
  bank.orthonormal = orthonormal;
  bank.rates = rates;
  auto counts = measurement_counts(rates, block_size);
  for (std::size_t j = 1; j < counts.size(); ++j)
    if (counts[j] <= counts[j - 1])
      throw std::invalid_argument(
          "build_channel_bank: adjacent rates round to the same measurement count");
  int n = bank.n();
  for (std::size_t j = 0; j < rates.size(); ++j) {
    Matrix phi = gauss_matrix(rng, counts[j], n);
    if (orthonormal) phi = orthonormalize_rows(phi);
    // Orthonormal rows make the transpose the exact pseudo-inverse; skip the
    // SVD both for speed and so the Penrose identities hold to the bit.
    Matrix pinv = orthonormal ? transpose(phi) : pseudo_inverse(phi);
    bank.matrices.push_back(std::move(phi));
    bank.pinvs.push_back(std::move(pinv));
  }
  return bank;
}

RateAssignment uniform_assignment(const ChannelBank& bank, int block_count,
                                  double target_rate) {
  if (block_count <= 0)
    throw std::invalid_argument("uniform_assignment: block count must be positive");
  int best = 0;
  for (int j = 1; j < bank.k(); ++j)
    if (std::abs(bank.rates[j] - target_rate) <
        std::abs(bank.rates[best] - target_rate))
      best = j;
  RateAssignment a;
  a.channels.assign(block_count, best);
  a.target_rate = target_rate;
  a.achieved_rate = static_cast<double>(bank.m(best)) / bank.n();
  return a;
}

std::vector<double> sample_block(const ChannelBank& bank, int channel,
                                 const Image& block) {
  if (channel < 0 || channel >= bank.k())
    throw std::invalid_argument("sample_block: channel out of range");
  if (block.height != bank.block_size || block.width != bank.block_size)
    throw std::invalid_argument("sample_block: block shape disagrees with bank");
  return matvec(bank.matrices[channel], block.data);
}

Measurements sample_image(const ChannelBank& bank, const RateAssignment& assignment,
                          const Image& img) {
  BlockGrid grid = partition(img, bank.block_size);
  int count = grid.grid_rows * grid.grid_cols;
  if (static_cast<int>(assignment.channels.size()) != count)
    throw std::invalid_argument("sample_image: assignment does not cover the grid");
  Measurements meas;
  meas.block_size = bank.block_size;
  meas.grid_rows = grid.grid_rows;
  meas.grid_cols = grid.grid_cols;
  meas.image_height = img.height;
  meas.image_width = img.width;
  meas.entries.reserve(count);
  for (int i = 0; i < count; ++i) {
    int j = assignment.channels[i];
    if (j < 0 || j >= bank.k())
      throw std::invalid_argument("sample_image: channel out of range");
    meas.entries.push_back({i, j, sample_block(bank, j, grid.blocks[i])});
  }
  return meas;
}

Image init_block(const ChannelBank& bank, int channel, std::span<const double> y) {
  if (channel < 0 || channel >= bank.k())
    throw std::invalid_argument("init_block: channel out of range");
  if (static_cast<int>(y.size()) != bank.m(channel))
    throw std::invalid_argument("init_block: measurement length disagrees");
  std::vector<double> x = matvec(bank.pinvs[channel], y);
  Image block(bank.block_size, bank.block_size);
  block.data = std::move(x);
  return block;
}

Image init_image(const ChannelBank& bank, const Measurements& meas) {
  if (meas.block_size != bank.block_size)
    throw std::invalid_argument("init_image: block size disagrees with bank");
  if (static_cast<int>(meas.entries.size()) != meas.block_count())
    throw std::invalid_argument("init_image: entry count disagrees with grid");
  BlockGrid grid;
  grid.block_size = bank.block_size;
  grid.grid_rows = meas.grid_rows;
  grid.grid_cols = meas.grid_cols;
  grid.orig_height = meas.image_height;
  grid.orig_width = meas.image_width;
  grid.blocks.resize(meas.entries.size());
  for (const auto& e : meas.entries) {
    if (e.block < 0 || e.block >= meas.block_count())
      throw std::invalid_argument("init_image: block index out of range");
    grid.blocks[e.block] = init_block(bank, e.channel, e.y);
  }
  return reassemble(grid);
}

}  // namespace bcskit
