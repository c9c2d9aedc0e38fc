#include "bcskit/recon.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "bcskit/transform.hpp"

namespace bcskit {

namespace {

// Measurements reordered by block index, validated against the bank.
struct OrderedMeas {
  int gr = 0, gc = 0;
  std::vector<int> chan;
  std::vector<std::vector<double>> y;
};

OrderedMeas ordered(const Measurements& meas, const ChannelBank& bank) {
  if (meas.block_size != bank.block_size)
    throw std::invalid_argument("recon: block size disagrees with the bank");
  if (meas.grid_rows <= 0 || meas.grid_cols <= 0)
    throw std::invalid_argument("recon: empty grid");
  int count = meas.block_count();
  if (static_cast<int>(meas.entries.size()) != count)
    throw std::invalid_argument("recon: entry count disagrees with the grid");
  int b = meas.block_size;
  bool h_ok = meas.image_height > (meas.grid_rows - 1) * b &&
              meas.image_height <= meas.grid_rows * b;
  bool w_ok = meas.image_width > (meas.grid_cols - 1) * b &&
              meas.image_width <= meas.grid_cols * b;
  if (!h_ok || !w_ok)
    throw std::invalid_argument("recon: image size disagrees with the grid");
  OrderedMeas o;
  o.gr = meas.grid_rows;
  o.gc = meas.grid_cols;
  o.chan.assign(count, -1);
  o.y.resize(count);
  for (const auto& e : meas.entries) {
    if (e.block < 0 || e.block >= count)
      throw std::invalid_argument("recon: block index out of range");
    if (o.chan[e.block] != -1)
      throw std::invalid_argument("recon: duplicate block entry");
    if (e.channel < 0 || e.channel >= bank.k())
      throw std::invalid_argument("recon: channel out of range");
    if (static_cast<int>(e.y.size()) != bank.m(e.channel))
      throw std::invalid_argument("recon: measurement length disagrees");
    o.chan[e.block] = e.channel;
    o.y[e.block] = e.y;
  }
  return o;
}

Image assemble_padded(const std::vector<std::vector<double>>& blocks, int gr,
                      int gc, int b) {
  Image out(gr * b, gc * b);
  for (int i = 0; i < gr * gc; ++i) {
    int r0 = (i / gc) * b, c0 = (i % gc) * b;
    for (int r = 0; r < b; ++r)
      for (int c = 0; c < b; ++c)
        out.at(r0 + r, c0 + c) = blocks[i][static_cast<std::size_t>(r) * b + c];
  }
  return out;
}

std::vector<std::vector<double>> split_padded(const Image& img, int gr, int gc,
                                              int b) {
  std::vector<std::vector<double>> blocks(
      static_cast<std::size_t>(gr) * gc,
      std::vector<double>(static_cast<std::size_t>(b) * b));
  for (int i = 0; i < gr * gc; ++i) {
    int r0 = (i / gc) * b, c0 = (i % gc) * b;
    for (int r = 0; r < b; ++r)
      for (int c = 0; c < b; ++c)
        blocks[i][static_cast<std::size_t>(r) * b + c] = img.at(r0 + r, c0 + c);
  }
  return blocks;
}

Image crop(const Image& img, int h, int w) {
  Image out(h, w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) out.at(r, c) = img.at(r, c);
  return out;
}

// ||next - prev|| / ||prev||, with 0/0 = 0 (converged at zero) and x/0 =
// infinity (keep going).
double rel_change(const Image& prev, const Image& next) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < prev.data.size(); ++i) {
    double d = next.data[i] - prev.data[i];
    num += d * d;
    den += prev.data[i] * prev.data[i];
  }
  if (den == 0.0)
    return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::sqrt(num / den);
}

double sumsq(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

// How much of the hard-DCT denoiser's Jacobian trace falls on each block.
// The denoiser projects onto the surviving coefficient set S, so the trace
// restricted to a block is sum_{k in S} of that basis function's squared mass
// over the block's pixels, separable in rows and columns.
std::vector<double> surviving_mass(const Image& img, double level, int gr,
                                   int gc, int b) {
  Matrix coef = dct2(image_to_matrix(img));
  int h = img.height, w = img.width;
  const Matrix& ch = dct_matrix(h);
  const Matrix& cw = dct_matrix(w);
  std::vector<double> row_mass(static_cast<std::size_t>(h) * gr, 0.0);
  std::vector<double> col_mass(static_cast<std::size_t>(w) * gc, 0.0);
  for (int u = 0; u < h; ++u)
    for (int r = 0; r < h; ++r)
      row_mass[static_cast<std::size_t>(u) * gr + r / b] += ch.at(u, r) * ch.at(u, r);
  for (int v = 0; v < w; ++v)
    for (int c = 0; c < w; ++c)
      col_mass[static_cast<std::size_t>(v) * gc + c / b] += cw.at(v, c) * cw.at(v, c);
  std::vector<double> mass(static_cast<std::size_t>(gr) * gc, 0.0);
  for (int u = 0; u < h; ++u)
    for (int v = 0; v < w; ++v) {
      bool survives = (u == 0 && v == 0) || std::abs(coef.at(u, v)) >= level;
      if (!survives) continue;
      for (int bi = 0; bi < gr; ++bi)
        for (int bj = 0; bj < gc; ++bj)
          mass[static_cast<std::size_t>(bi) * gc + bj] +=
              row_mass[static_cast<std::size_t>(u) * gr + bi] *
              col_mass[static_cast<std::size_t>(v) * gc + bj];
    }
  return mass;
}

// Per-block projection onto the measurement affine subspace:
// r_i = x_i + pinv(Phi_j) * (y_i - Phi_j x_i).
Image project_blocks(const Image& img, const OrderedMeas& o,
                     const ChannelBank& bank) {
  int b = bank.block_size;
  auto blocks = split_padded(img, o.gr, o.gc, b);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    int j = o.chan[i];
    std::vector<double> res = matvec(bank.matrices[j], blocks[i]);
    for (std::size_t q = 0; q < res.size(); ++q) res[q] = o.y[i][q] - res[q];
    std::vector<double> corr = matvec(bank.pinvs[j], res);
    for (std::size_t q = 0; q < blocks[i].size(); ++q) blocks[i][q] += corr[q];
  }
  return assemble_padded(blocks, o.gr, o.gc, b);
}

}  // namespace

Image bcs_spl(const Measurements& meas, const ChannelBank& bank,
              const ReconConfig& cfg, ReconTrace* trace) {
  OrderedMeas o = ordered(meas, bank);
  int b = bank.block_size;
  std::vector<std::vector<double>> init(o.y.size());
  for (std::size_t i = 0; i < o.y.size(); ++i)
    init[i] = matvec(bank.pinvs[o.chan[i]], o.y[i]);
  Image cur = assemble_padded(init, o.gr, o.gc, b);
  double lambda = cfg.lambda0;
  for (int t = 0; t < cfg.max_iters; ++t) {
    Image next = hard_threshold(project_blocks(cur, o, bank), lambda);
    if (trace) {
      trace->iterates.push_back(next);
      trace->sigmas.push_back(lambda);
    }
    double change = rel_change(cur, next);
    cur = std::move(next);
    lambda *= cfg.lambda_decay;
    if (change < cfg.rel_tol) break;
  }
  // Land on the measurement subspace, not on the thresholded estimate.
  cur = project_blocks(cur, o, bank);
  return crop(cur, meas.image_height, meas.image_width);
}

Image damp_block(std::span<const double> y, const Matrix& phi,
                 const Matrix& phi_pinv, const ReconConfig& cfg,
                 ReconTrace* trace) {
  int n = phi.cols;
  int b = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
  if (b * b != n)
    throw std::invalid_argument("damp_block: operator is not square-block");
  if (static_cast<int>(y.size()) != phi.rows)
    throw std::invalid_argument("damp_block: measurement length disagrees");
  if (phi_pinv.rows != n || phi_pinv.cols != phi.rows)
    throw std::invalid_argument("damp_block: pseudo-inverse shape disagrees");
  int m = phi.rows;
  Image xhat(b, b);
  std::vector<double> z(y.begin(), y.end());
  for (int t = 0; t < cfg.max_iters; ++t) {
    double sigma = std::sqrt(sumsq(z) / m);
    std::vector<double> corr = matvec(phi_pinv, z);
    Image u = xhat;
    for (std::size_t i = 0; i < u.data.size(); ++i) u.data[i] += corr[i];
    Image next = denoise(u, sigma, cfg.denoiser);
    double div = 0.0;
    if (sigma > 0.0 && cfg.probes > 0) {
      Rng prng = Rng::stream(cfg.seed, Stream::Probes, static_cast<std::uint64_t>(t));
      div = divergence_mc(cfg.denoiser, u, sigma, cfg.probes,
                          default_probe_eps(u), prng);
    }
    std::vector<double> remeas = matvec(phi, next.data);
    for (int q = 0; q < m; ++q)
      z[q] = y[q] - remeas[q] + z[q] * (div / m);
    if (trace) {
      trace->iterates.push_back(next);
      trace->sigmas.push_back(sigma);
    }
    double change = rel_change(xhat, next);
    xhat = std::move(next);
    if (change < cfg.rel_tol) break;
  }
  return xhat;
}

Image damp_blockwise(const Measurements& meas, const ChannelBank& bank,
                     const ReconConfig& cfg) {
  OrderedMeas o = ordered(meas, bank);
  int b = bank.block_size;
  BlockGrid grid;
  grid.block_size = b;
  grid.grid_rows = o.gr;
  grid.grid_cols = o.gc;
  grid.orig_height = meas.image_height;
  grid.orig_width = meas.image_width;
  grid.blocks.resize(o.y.size());
  for (std::size_t i = 0; i < o.y.size(); ++i) {
    int j = o.chan[i];
    ReconConfig bcfg = cfg;
    // Decorrelate the probe draws across blocks; bcs_damp keeps the plain
    // seed, so the single-block case stays comparable.
    bcfg.seed = mix64(cfg.seed + 0x9e3779b97f4a7c15ULL * (i + 1));
    grid.blocks[i] = damp_block(o.y[i], bank.matrices[j], bank.pinvs[j], bcfg);
  }
  return reassemble(grid);
}

Image bcs_damp(const Measurements& meas, const ChannelBank& bank,
               const ReconConfig& cfg, ReconTrace* trace) {
  OrderedMeas o = ordered(meas, bank);
  int b = bank.block_size;
  int count = static_cast<int>(o.y.size());
  int m_total = 0;
  for (int i = 0; i < count; ++i) m_total += bank.m(o.chan[i]);
  std::vector<std::vector<double>> xblocks(
      o.y.size(), std::vector<double>(static_cast<std::size_t>(b) * b, 0.0));
  std::vector<std::vector<double>> z = o.y;
  Image prev(o.gr * b, o.gc * b);
  for (int t = 0; t < cfg.max_iters; ++t) {
    double zsq = 0.0;
    for (const auto& zi : z) zsq += sumsq(zi);
    double sigma = std::sqrt(zsq / m_total);
    // One whole-image pre-denoise iterate from the per-block corrections.
    std::vector<std::vector<double>> ublocks = xblocks;
    for (int i = 0; i < count; ++i) {
      std::vector<double> corr = matvec(bank.pinvs[o.chan[i]], z[i]);
      for (std::size_t q = 0; q < ublocks[i].size(); ++q)
        ublocks[i][q] += corr[q];
    }
    Image u = assemble_padded(ublocks, o.gr, o.gc, b);
    Image next = denoise(u, sigma, cfg.denoiser);
    double div = 0.0;
    if (sigma > 0.0 && cfg.probes > 0) {
      Rng prng = Rng::stream(cfg.seed, Stream::Probes, static_cast<std::uint64_t>(t));
      div = divergence_mc(cfg.denoiser, u, sigma, cfg.probes,
                          default_probe_eps(u), prng);
    }
    auto nblocks = split_padded(next, o.gr, o.gc, b);
    // Apportion the whole-image divergence: the hard-DCT denoiser distributes
    // its Jacobian trace by surviving basis mass per block; everything else
    // splits uniformly by pixel count, as does the explicit override.
    std::vector<double> w(count, 1.0 / count);
    if (!cfg.uniform_onsager_split && sigma > 0.0 &&
        cfg.denoiser.variant == DenoiserVariant::HardDct) {
      std::vector<double> mass =
          surviving_mass(u, cfg.denoiser.tau * sigma, o.gr, o.gc, b);
      double total = 0.0;
      for (double v : mass) total += v;
      if (total > 0.0)
        for (int i = 0; i < count; ++i) w[i] = mass[i] / total;
    }
    for (int i = 0; i < count; ++i) {
      int j = o.chan[i];
      std::vector<double> remeas = matvec(bank.matrices[j], nblocks[i]);
      int mj = bank.m(j);
      for (int q = 0; q < mj; ++q)
        z[i][q] = o.y[i][q] - remeas[q] + z[i][q] * (div * w[i] / mj);
    }
    if (trace) {
      trace->iterates.push_back(next);
      trace->sigmas.push_back(sigma);
    }
    double change = rel_change(prev, next);
    xblocks = std::move(nblocks);
    prev = std::move(next);
    if (change < cfg.rel_tol) break;
  }
  return crop(prev, meas.image_height, meas.image_width);
}

}  // namespace bcskit
