#include "bcskit/net.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "bcskit/allocation.hpp"

namespace bcskit {

namespace {

constexpr char kMagic[8] = {'B', 'C', 'S', 'N', 'E', 'T', 'V', '1'};
constexpr double kScale = 255.0;  // the network runs on [0, 1] intensities

// ============================================================================
// Small dense tensors for the CNN path
// ============================================================================

struct Tensor3 {
  int ch = 0, h = 0, w = 0;
  std::vector<double> v;

  Tensor3() = default;
  Tensor3(int c_, int h_, int w_)
      : ch(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_) * h_ * w_, 0.0) {}

  double& at(int c, int y, int x) {
    return v[(static_cast<std::size_t>(c) * h + y) * w + x];
  }
  double at(int c, int y, int x) const {
    return v[(static_cast<std::size_t>(c) * h + y) * w + x];
  }
};

Tensor3 conv_forward(const Tensor3& in, const ConvLayer& l) {
  int r = l.kernel / 2;
  Tensor3 out(l.out_ch, in.h, in.w);
  for (int oc = 0; oc < l.out_ch; ++oc)
    for (int y = 0; y < in.h; ++y)
      for (int x = 0; x < in.w; ++x) {
        double acc = l.b[oc];
        for (int ic = 0; ic < l.in_ch; ++ic)
          for (int ky = 0; ky < l.kernel; ++ky) {
            int iy = y + ky - r;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < l.kernel; ++kx) {
              int ix = x + kx - r;
              if (ix < 0 || ix >= in.w) continue;
              acc += l.wat(oc, ic, ky, kx) * in.at(ic, iy, ix);
            }
          }
        out.at(oc, y, x) = acc;
      }
  return out;
}

// Accumulates the weight gradient and fills the input gradient.
void conv_backward(const Tensor3& in, const ConvLayer& l, const Tensor3& dout,
                   Tensor3& din, ConvLayer& grad) {
  int r = l.kernel / 2;
  din = Tensor3(in.ch, in.h, in.w);
  for (int oc = 0; oc < l.out_ch; ++oc)
    for (int y = 0; y < in.h; ++y)
      for (int x = 0; x < in.w; ++x) {
        double d = dout.at(oc, y, x);
        if (d == 0.0) continue;
        grad.b[oc] += d;
        for (int ic = 0; ic < l.in_ch; ++ic)
          for (int ky = 0; ky < l.kernel; ++ky) {
            int iy = y + ky - r;
            if (iy < 0 || iy >= in.h) continue;
            for (int kx = 0; kx < l.kernel; ++kx) {
              int ix = x + kx - r;
              if (ix < 0 || ix >= in.w) continue;
              grad.wat(oc, ic, ky, kx) += d * in.at(ic, iy, ix);
              din.at(ic, iy, ix) += d * l.wat(oc, ic, ky, kx);
            }
          }
      }
}

struct PhaseCache {
  std::vector<Tensor3> acts;  // acts[0] is the phase input, acts[L] the output
  std::vector<Tensor3> pre;   // pre-activations per layer
};

// Residual CNN: ReLU after every layer but the last, output subtracted from
// the input.
Image cnn_forward(const std::vector<ConvLayer>& layers, const Image& input,
                  PhaseCache* cache) {
  int L = static_cast<int>(layers.size());
  Tensor3 a(1, input.height, input.width);
  a.v = input.data;
  PhaseCache local;
  PhaseCache& pc = cache ? *cache : local;
  pc.acts.clear();
  pc.pre.clear();
  pc.acts.push_back(a);
  for (int l = 0; l < L; ++l) {
    Tensor3 z = conv_forward(pc.acts.back(), layers[l]);
    pc.pre.push_back(z);
    if (l + 1 < L)
      for (auto& v : z.v) v = v > 0.0 ? v : 0.0;
    pc.acts.push_back(std::move(z));
  }
  Image out(input.height, input.width);
  const Tensor3& last = pc.acts.back();
  for (std::size_t i = 0; i < out.data.size(); ++i)
    out.data[i] = input.data[i] - last.v[i];
  return out;
}

// Given dL/d(output), accumulates layer gradients and returns dL/d(input),
// including the skip connection.
Image cnn_backward(const std::vector<ConvLayer>& layers, const PhaseCache& pc,
                   const Image& dout, std::vector<ConvLayer>& grads) {
  int L = static_cast<int>(layers.size());
  Tensor3 d(1, dout.height, dout.width);
  for (std::size_t i = 0; i < d.v.size(); ++i) d.v[i] = -dout.data[i];
  for (int l = L - 1; l >= 0; --l) {
    if (l + 1 < L) {
      const Tensor3& z = pc.pre[l];
      for (std::size_t i = 0; i < d.v.size(); ++i)
        if (z.v[i] <= 0.0) d.v[i] = 0.0;
    }
    Tensor3 din;
    conv_backward(pc.acts[l], layers[l], d, din, grads[l]);
    d = std::move(din);
  }
  Image dinput(dout.height, dout.width);
  for (std::size_t i = 0; i < dinput.data.size(); ++i)
    dinput.data[i] = dout.data[i] + d.v[i];
  return dinput;
}

// ============================================================================
// Block plumbing in the padded domain
// ============================================================================

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
  std::vector<std::vector<double>> blocks(static_cast<std::size_t>(gr) * gc,
                                          std::vector<double>(static_cast<std::size_t>(b) * b));
  for (int i = 0; i < gr * gc; ++i) {
    int r0 = (i / gc) * b, c0 = (i % gc) * b;
    for (int r = 0; r < b; ++r)
      for (int c = 0; c < b; ++c)
        blocks[i][static_cast<std::size_t>(r) * b + c] = img.at(r0 + r, c0 + c);
  }
  return blocks;
}

void validate_config(const NetConfig& c) {
  if (c.block_size <= 0) throw std::invalid_argument("net: block size must be positive");
  if (c.kernel <= 0 || c.kernel % 2 == 0)
    throw std::invalid_argument("net: kernel size must be odd and positive");
  if (c.features <= 0) throw std::invalid_argument("net: feature width must be positive");
  if (c.phases < 0) throw std::invalid_argument("net: phase count must be non-negative");
  if (c.layers_per_phase < 2)
    throw std::invalid_argument("net: need at least two layers per phase");
  if (c.rates.empty()) throw std::invalid_argument("net: no channel rates");
  for (std::size_t j = 0; j < c.rates.size(); ++j) {
    if (!(c.rates[j] > 0.0) || c.rates[j] > 1.0)
      throw std::invalid_argument("net: rates must lie in (0, 1]");
    if (j > 0 && !(c.rates[j] > c.rates[j - 1]))
      throw std::invalid_argument("net: rates must be strictly ascending");
  }
}

void check_channel(const NetParams& p, int channel) {
  if (channel < 0 || channel >= p.config.k())
    throw std::invalid_argument("net: channel out of range");
}

// Shared forward state for the losses and the public reconstruction calls.
struct FullCache {
  int gr = 0, gc = 0;
  std::vector<int> chan;                  // per block
  std::vector<std::vector<double>> y;     // per block, scaled units
  std::vector<std::vector<double>> init;  // per block, scaled units
  Image init_padded;
  std::vector<Image> phase_in;            // R_t per phase
  std::vector<PhaseCache> cnn;
  Image out_padded;                       // estimate after the last phase
};

void run_init(const NetParams& p, FullCache& fc) {
  int b = p.config.block_size;
  int count = fc.gr * fc.gc;
  fc.init.resize(count);
  for (int i = 0; i < count; ++i) {
    int j = fc.chan[i];
    fc.init[i] = matvec(p.w_init[j], fc.y[i]);
    const auto& bias = p.b_init[j];
    for (int t = 0; t < p.config.n(); ++t) fc.init[i][t] += bias[t];
  }
  fc.init_padded = assemble_padded(fc.init, fc.gr, fc.gc, b);
}

void run_phases(const NetParams& p, FullCache& fc, bool keep_cache) {
  int b = p.config.block_size;
  Image cur = fc.init_padded;
  fc.phase_in.clear();
  fc.cnn.clear();
  for (int t = 0; t < p.config.phases; ++t) {
    auto blocks = split_padded(cur, fc.gr, fc.gc, b);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      int j = fc.chan[i];
      std::vector<double> res = matvec(p.w_samp[j], blocks[i]);
      for (std::size_t q = 0; q < res.size(); ++q) res[q] = fc.y[i][q] - res[q];
      std::vector<double> corr = matvec(p.pinv[j], res);
      for (std::size_t q = 0; q < blocks[i].size(); ++q) blocks[i][q] += corr[q];
    }
    Image r = assemble_padded(blocks, fc.gr, fc.gc, b);
    if (keep_cache) {
      fc.phase_in.push_back(r);
      fc.cnn.emplace_back();
      cur = cnn_forward(p.deep[t], r, &fc.cnn.back());
    } else {
      cur = cnn_forward(p.deep[t], r, nullptr);
    }
  }
  fc.out_padded = std::move(cur);
}

void require_pinv(const NetParams& p) {
  if (p.pinv.size() != static_cast<std::size_t>(p.config.k()))
    throw std::logic_error(
        "net: pseudo-inverse cache missing; complete training stage 1 first");
}

FullCache cache_from_measurements(const NetParams& p, const Measurements& meas) {
  if (meas.block_size != p.config.block_size)
    throw std::invalid_argument("net: measurement block size disagrees");
  if (static_cast<int>(meas.entries.size()) != meas.block_count())
    throw std::invalid_argument("net: entry count disagrees with grid");
  FullCache fc;
  fc.gr = meas.grid_rows;
  fc.gc = meas.grid_cols;
  fc.chan.resize(meas.entries.size());
  fc.y.resize(meas.entries.size());
  auto counts = p.config.counts();
  for (const auto& e : meas.entries) {
    if (e.block < 0 || e.block >= meas.block_count())
      throw std::invalid_argument("net: block index out of range");
    check_channel(p, e.channel);
    if (static_cast<int>(e.y.size()) != counts[e.channel])
      throw std::invalid_argument("net: measurement length disagrees");
    fc.chan[e.block] = e.channel;
    std::vector<double> scaled = e.y;
    for (auto& v : scaled) v /= kScale;
    fc.y[e.block] = std::move(scaled);
  }
  return fc;
}

// Scaled padded blocks of an image plus their measurements.
FullCache cache_from_image(const NetParams& p, const TrainExample& ex) {
  const NetConfig& c = p.config;
  Image scaled(ex.image.height, ex.image.width);
  for (std::size_t i = 0; i < scaled.data.size(); ++i)
    scaled.data[i] = ex.image.data[i] / kScale;
  BlockGrid grid = partition(scaled, c.block_size);
  if (static_cast<int>(ex.assignment.channels.size()) !=
      grid.grid_rows * grid.grid_cols)
    throw std::invalid_argument("net: assignment does not cover the grid");
  FullCache fc;
  fc.gr = grid.grid_rows;
  fc.gc = grid.grid_cols;
  fc.chan = ex.assignment.channels;
  fc.y.resize(grid.blocks.size());
  for (std::size_t i = 0; i < grid.blocks.size(); ++i) {
    check_channel(p, fc.chan[i]);
    fc.y[i] = matvec(p.w_samp[fc.chan[i]], grid.blocks[i].data);
  }
  return fc;
}

// 0.5 * squared error over the original region; fills the padded-domain
// gradient (zeros over the padding) scaled by `weight`.
double residual_loss(const Image& estimate_padded, const Image& raw_image,
                     double weight, Image* dpadded) {
  double loss = 0.0;
  if (dpadded) *dpadded = Image(estimate_padded.height, estimate_padded.width);
  for (int r = 0; r < raw_image.height; ++r)
    for (int c = 0; c < raw_image.width; ++c) {
      double e = estimate_padded.at(r, c) - raw_image.at(r, c) / kScale;
      loss += 0.5 * e * e;
      if (dpadded) dpadded->at(r, c) = e * weight;
    }
  return loss;
}

void accumulate_init_grads(const NetParams& p, const FullCache& fc,
                           const Image& dinit_padded, NetGrads& g,
                           bool into_sampling,
                           const std::vector<std::vector<double>>* xblocks) {
  int b = p.config.block_size;
  auto dblocks = split_padded(dinit_padded, fc.gr, fc.gc, b);
  int n = p.config.n();
  for (std::size_t i = 0; i < dblocks.size(); ++i) {
    int j = fc.chan[i];
    const auto& g0 = dblocks[i];
    const auto& y = fc.y[i];
    Matrix& gw = g.w_init[j];
    int m = static_cast<int>(y.size());
    for (int a = 0; a < n; ++a) {
      double ga = g0[a];
      if (ga == 0.0) continue;
      double* row = &gw.data[static_cast<std::size_t>(a) * m];
      for (int q = 0; q < m; ++q) row[q] += ga * y[q];
      g.b_init[j][a] += ga;
    }
    if (into_sampling) {
      std::vector<double> dy = matvec_t(p.w_init[j], g0);
      Matrix& gs = g.w_samp[j];
      const auto& xb = (*xblocks)[i];
      for (int q = 0; q < m; ++q) {
        double dq = dy[q];
        if (dq == 0.0) continue;
        double* row = &gs.data[static_cast<std::size_t>(q) * n];
        for (int a = 0; a < n; ++a) row[a] += dq * xb[a];
      }
    }
  }
}

}  // namespace

NetConfig NetConfig::full_scale() {
  NetConfig c;
  c.block_size = 32;
  c.rates = {0.01, 0.03, 0.05, 0.1, 0.2, 0.3, 0.4};
  c.features = 64;
  c.kernel = 3;
  c.phases = 10;
  c.layers_per_phase = 5;
  return c;
}

NetParams init_params(const NetConfig& config, std::uint64_t seed) {
  validate_config(config);
  auto counts = config.counts();
  for (std::size_t j = 1; j < counts.size(); ++j)
    if (counts[j] <= counts[j - 1])
      throw std::invalid_argument("net: adjacent rates share a measurement count");
  NetParams p;
  p.config = config;
  Rng rng = Rng::stream(seed, Stream::Weights);
  int n = config.n();
  double in_scale = 1.0 / std::sqrt(static_cast<double>(n));
  for (int j = 0; j < config.k(); ++j) {
    Matrix ws(counts[j], n);
    for (auto& v : ws.data) v = rng.normal() * in_scale;
    p.w_samp.push_back(std::move(ws));
  }
  for (int j = 0; j < config.k(); ++j) {
    Matrix wi(n, counts[j]);
    for (auto& v : wi.data) v = rng.normal() * in_scale;
    p.w_init.push_back(std::move(wi));
    p.b_init.emplace_back(n, 0.0);
  }
  for (int t = 0; t < config.phases; ++t) {
    std::vector<ConvLayer> phase;
    for (int l = 0; l < config.layers_per_phase; ++l) {
      ConvLayer layer;
      layer.in_ch = l == 0 ? 1 : config.features;
      layer.out_ch = l + 1 == config.layers_per_phase ? 1 : config.features;
      layer.kernel = config.kernel;
      layer.w.resize(static_cast<std::size_t>(layer.out_ch) * layer.in_ch *
                     layer.kernel * layer.kernel);
      layer.b.assign(layer.out_ch, 0.0);
      double he = std::sqrt(2.0 / (layer.kernel * layer.kernel * layer.in_ch));
      for (auto& v : layer.w) v = rng.normal() * he;
      phase.push_back(std::move(layer));
    }
    p.deep.push_back(std::move(phase));
  }
  return p;
}

void cache_pinv(NetParams& params) {
  params.pinv.clear();
  for (const auto& ws : params.w_samp)
    params.pinv.push_back(pseudo_inverse(ws));
}

std::vector<double> forward_sample(const NetParams& params, int channel,
                                   const Image& block) {
  check_channel(params, channel);
  if (block.height != params.config.block_size ||
      block.width != params.config.block_size)
    throw std::invalid_argument("forward_sample: block shape disagrees");
  return matvec(params.w_samp[channel], block.data);
}

Image forward_init(const NetParams& params, int channel, std::span<const double> y) {
  check_channel(params, channel);
  if (static_cast<int>(y.size()) != params.w_init[channel].cols)
    throw std::invalid_argument("forward_init: measurement length disagrees");
  std::vector<double> x = matvec(params.w_init[channel], y);
  const auto& bias = params.b_init[channel];
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += bias[i];
  Image block(params.config.block_size, params.config.block_size);
  block.data = std::move(x);
  return block;
}

Image forward_full(const NetParams& params, const Measurements& meas,
                   const RateAssignment& assignment) {
  require_pinv(params);
  if (static_cast<int>(assignment.channels.size()) != meas.block_count())
    throw std::invalid_argument("forward_full: assignment does not cover the grid");
  FullCache fc = cache_from_measurements(params, meas);
  for (int i = 0; i < meas.block_count(); ++i)
    if (assignment.channels[i] != fc.chan[i])
      throw std::invalid_argument("forward_full: assignment disagrees with measurements");
  run_init(params, fc);
  run_phases(params, fc, /*keep_cache=*/false);
  BlockGrid grid;
  grid.block_size = params.config.block_size;
  grid.grid_rows = fc.gr;
  grid.grid_cols = fc.gc;
  grid.orig_height = meas.image_height;
  grid.orig_width = meas.image_width;
  grid.blocks.resize(fc.y.size());
  auto blocks = split_padded(fc.out_padded, fc.gr, fc.gc, params.config.block_size);
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    Image blk(params.config.block_size, params.config.block_size);
    blk.data = std::move(blocks[i]);
    for (auto& v : blk.data) v *= kScale;
    grid.blocks[i] = std::move(blk);
  }
  return reassemble(grid);
}

Image initial_reconstruction(const NetParams& params, const Measurements& meas) {
  FullCache fc = cache_from_measurements(params, meas);
  run_init(params, fc);
  BlockGrid grid;
  grid.block_size = params.config.block_size;
  grid.grid_rows = fc.gr;
  grid.grid_cols = fc.gc;
  grid.orig_height = meas.image_height;
  grid.orig_width = meas.image_width;
  grid.blocks.resize(fc.init.size());
  for (std::size_t i = 0; i < fc.init.size(); ++i) {
    Image blk(params.config.block_size, params.config.block_size);
    blk.data = fc.init[i];
    for (auto& v : blk.data) v *= kScale;
    grid.blocks[i] = std::move(blk);
  }
  return reassemble(grid);
}

std::vector<TrainExample> make_training_set(const NetConfig& config,
                                            std::span<const Image> images,
                                            double target_rate, bool adaptive) {
  validate_config(config);
  std::vector<TrainExample> out;
  out.reserve(images.size());
  auto counts = measurement_counts(config.rates, config.block_size);
  for (const Image& img : images) {
    int gr = (img.height + config.block_size - 1) / config.block_size;
    int gc = (img.width + config.block_size - 1) / config.block_size;
    TrainExample ex;
    ex.image = img;
    if (adaptive) {
      SaliencyMap map = saliency(img);
      std::vector<double> p = proportions(map, config.block_size);
      ex.assignment = assign(p, target_rate, config.rates, config.block_size);
    } else {
      int best = 0;
      for (int j = 1; j < config.k(); ++j)
        if (std::abs(config.rates[j] - target_rate) <
            std::abs(config.rates[best] - target_rate))
          best = j;
      ex.assignment.channels.assign(static_cast<std::size_t>(gr) * gc, best);
      ex.assignment.target_rate = target_rate;
      ex.assignment.achieved_rate =
          static_cast<double>(counts[best]) / config.n();
    }
    out.push_back(std::move(ex));
  }
  return out;
}

NetGrads zero_grads(const NetParams& params) {
  NetGrads g;
  for (const auto& m : params.w_samp) g.w_samp.emplace_back(m.rows, m.cols);
  for (const auto& m : params.w_init) g.w_init.emplace_back(m.rows, m.cols);
  for (const auto& b : params.b_init) g.b_init.emplace_back(b.size(), 0.0);
  for (const auto& phase : params.deep) {
    std::vector<ConvLayer> gp;
    for (const auto& l : phase) {
      ConvLayer gl = l;
      std::fill(gl.w.begin(), gl.w.end(), 0.0);
      std::fill(gl.b.begin(), gl.b.end(), 0.0);
      gp.push_back(std::move(gl));
    }
    g.deep.push_back(std::move(gp));
  }
  return g;
}

double loss_stage1(const NetParams& params, std::span<const TrainExample> batch,
                   NetGrads* grads) {
  if (batch.empty()) throw std::invalid_argument("loss_stage1: empty batch");
  double weight = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const TrainExample& ex : batch) {
    FullCache fc = cache_from_image(params, ex);
    run_init(params, fc);
    Image dpad;
    total += weight * residual_loss(fc.init_padded, ex.image, weight,
                                    grads ? &dpad : nullptr);
    if (grads) {
      // Stage 1 backpropagates into the sampling matrices, so the scaled
      // padded source blocks are needed again.
      Image scaled(ex.image.height, ex.image.width);
      for (std::size_t i = 0; i < scaled.data.size(); ++i)
        scaled.data[i] = ex.image.data[i] / kScale;
      BlockGrid grid = partition(scaled, params.config.block_size);
      std::vector<std::vector<double>> xblocks(grid.blocks.size());
      for (std::size_t i = 0; i < grid.blocks.size(); ++i)
        xblocks[i] = grid.blocks[i].data;
      accumulate_init_grads(params, fc, dpad, *grads, /*into_sampling=*/true,
                            &xblocks);
    }
  }
  return total;
}

double loss_stage2(const NetParams& params, std::span<const TrainExample> batch,
                   NetGrads* grads) {
  if (batch.empty()) throw std::invalid_argument("loss_stage2: empty batch");
  if (params.stage < 1)
    throw std::logic_error("loss_stage2: training stage 1 has not completed");
  require_pinv(params);
  double weight = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  int b = params.config.block_size;
  for (const TrainExample& ex : batch) {
    FullCache fc = cache_from_image(params, ex);
    run_init(params, fc);
    run_phases(params, fc, /*keep_cache=*/grads != nullptr);
    Image dpad;
    total += weight * residual_loss(fc.out_padded, ex.image, weight,
                                    grads ? &dpad : nullptr);
    if (!grads) continue;
    // Walk the phases backwards: CNN first, then the projection, whose
    // pseudo-inverse is a constant of the graph.
    Image d = std::move(dpad);
    for (int t = params.config.phases - 1; t >= 0; --t) {
      Image dr = cnn_backward(params.deep[t], fc.cnn[t], d, grads->deep[t]);
      auto dblocks = split_padded(dr, fc.gr, fc.gc, b);
      for (std::size_t i = 0; i < dblocks.size(); ++i) {
        int j = fc.chan[i];
        std::vector<double> back = matvec_t(params.pinv[j], dblocks[i]);
        std::vector<double> through = matvec_t(params.w_samp[j], back);
        for (std::size_t q = 0; q < dblocks[i].size(); ++q)
          dblocks[i][q] -= through[q];
      }
      d = assemble_padded(dblocks, fc.gr, fc.gc, b);
    }
    accumulate_init_grads(params, fc, d, *grads, /*into_sampling=*/false, nullptr);
  }
  return total;
}

namespace {

std::vector<std::span<double>> trainable_spans(NetParams& p, int stage) {
  std::vector<std::span<double>> spans;
  if (stage == 1)
    for (auto& m : p.w_samp) spans.emplace_back(m.data);
  for (auto& m : p.w_init) spans.emplace_back(m.data);
  for (auto& b : p.b_init) spans.emplace_back(b);
  if (stage == 2)
    for (auto& phase : p.deep)
      for (auto& l : phase) {
        spans.emplace_back(l.w);
        spans.emplace_back(l.b);
      }
  return spans;
}

std::vector<std::span<double>> grad_spans(NetGrads& g, int stage) {
  std::vector<std::span<double>> spans;
  if (stage == 1)
    for (auto& m : g.w_samp) spans.emplace_back(m.data);
  for (auto& m : g.w_init) spans.emplace_back(m.data);
  for (auto& b : g.b_init) spans.emplace_back(b);
  if (stage == 2)
    for (auto& phase : g.deep)
      for (auto& l : phase) {
        spans.emplace_back(l.w);
        spans.emplace_back(l.b);
      }
  return spans;
}

}  // namespace

void train(NetParams& params, std::span<const TrainExample> examples, int stage,
           const TrainConfig& cfg, std::vector<LossPoint>* curve) {
  if (stage != 1 && stage != 2)
    throw std::invalid_argument("train: stage must be 1 or 2");
  if (examples.empty()) throw std::invalid_argument("train: no examples");
  if (cfg.steps < 0) throw std::invalid_argument("train: negative step count");
  if (stage == 2) {
    if (params.stage < 1)
      throw std::logic_error("train: stage 2 requires a completed stage 1");
    require_pinv(params);
  }
  auto pspans = trainable_spans(params, stage);
  std::vector<std::vector<double>> m1(pspans.size()), m2(pspans.size());
  for (std::size_t i = 0; i < pspans.size(); ++i) {
    m1[i].assign(pspans[i].size(), 0.0);
    m2[i].assign(pspans[i].size(), 0.0);
  }
  for (int step = 1; step <= cfg.steps; ++step) {
    const TrainExample& ex = examples[(step - 1) % examples.size()];
    NetGrads grads = zero_grads(params);
    std::span<const TrainExample> one(&ex, 1);
    double loss = stage == 1 ? loss_stage1(params, one, &grads)
                             : loss_stage2(params, one, &grads);
    auto gspans = grad_spans(grads, stage);
    double bc1 = 1.0 - std::pow(cfg.beta1, step);
    double bc2 = 1.0 - std::pow(cfg.beta2, step);
    for (std::size_t i = 0; i < pspans.size(); ++i)
      for (std::size_t q = 0; q < pspans[i].size(); ++q) {
        double g = gspans[i][q];
        m1[i][q] = cfg.beta1 * m1[i][q] + (1.0 - cfg.beta1) * g;
        m2[i][q] = cfg.beta2 * m2[i][q] + (1.0 - cfg.beta2) * g * g;
        double mhat = m1[i][q] / bc1;
        double vhat = m2[i][q] / bc2;
        pspans[i][q] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
      }
    if (curve) curve->push_back({step, stage, loss});
  }
  if (stage == 1) {
    cache_pinv(params);
    params.stage = std::max(params.stage, 1);
  } else {
    params.stage = std::max(params.stage, 2);
  }
}

// ============================================================================
// Checkpoints
// ============================================================================

namespace {

void write_raw(std::ostream& out, const void* p, std::size_t bytes) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(bytes));
}

void write_i32(std::ostream& out, std::int32_t v) { write_raw(out, &v, 4); }

void write_f64s(std::ostream& out, const std::vector<double>& v) {
  write_raw(out, v.data(), v.size() * sizeof(double));
}

void read_raw(std::istream& in, void* p, std::size_t bytes, const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(bytes));
  if (static_cast<std::size_t>(in.gcount()) != bytes)
    throw std::runtime_error(path + ": truncated checkpoint");
}

std::int32_t read_i32(std::istream& in, const std::string& path) {
  std::int32_t v;
  read_raw(in, &v, 4, path);
  return v;
}

void read_f64s(std::istream& in, std::vector<double>& v, const std::string& path) {
  read_raw(in, v.data(), v.size() * sizeof(double), path);
}

}  // namespace

void save_checkpoint(const NetParams& params, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  write_raw(out, kMagic, 8);
  write_i32(out, 1);  // version
  const NetConfig& c = params.config;
  write_i32(out, c.block_size);
  write_i32(out, c.k());
  write_i32(out, c.features);
  write_i32(out, c.kernel);
  write_i32(out, c.phases);
  write_i32(out, c.layers_per_phase);
  write_i32(out, params.stage);
  write_i32(out, params.pinv.empty() ? 0 : 1);
  write_f64s(out, c.rates);
  for (const auto& m : params.w_samp) write_f64s(out, m.data);
  for (const auto& m : params.w_init) write_f64s(out, m.data);
  for (const auto& b : params.b_init) write_f64s(out, b);
  for (const auto& phase : params.deep)
    for (const auto& l : phase) {
      write_f64s(out, l.w);
      write_f64s(out, l.b);
    }
  for (const auto& m : params.pinv) write_f64s(out, m.data);
  if (!out) throw std::runtime_error(path + ": write failed");
}

NetParams load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  char magic[8];
  read_raw(in, magic, 8, path);
  if (std::memcmp(magic, kMagic, 8) != 0)
    throw std::runtime_error(path + ": not a checkpoint file");
  if (read_i32(in, path) != 1)
    throw std::runtime_error(path + ": unsupported checkpoint version");
  NetConfig c;
  c.block_size = read_i32(in, path);
  int k = read_i32(in, path);
  c.features = read_i32(in, path);
  c.kernel = read_i32(in, path);
  c.phases = read_i32(in, path);
  c.layers_per_phase = read_i32(in, path);
  int stage = read_i32(in, path);
  int has_pinv = read_i32(in, path);
  if (k <= 0 || k > 64) throw std::runtime_error(path + ": implausible channel count");
  c.rates.resize(k);
  read_f64s(in, c.rates, path);
  validate_config(c);
  NetParams p = init_params(c, 0);
  p.stage = stage;
  for (auto& m : p.w_samp) read_f64s(in, m.data, path);
  for (auto& m : p.w_init) read_f64s(in, m.data, path);
  for (auto& b : p.b_init) read_f64s(in, b, path);
  for (auto& phase : p.deep)
    for (auto& l : phase) {
      read_f64s(in, l.w, path);
      read_f64s(in, l.b, path);
    }
  if (has_pinv) {
    auto counts = c.counts();
    for (int j = 0; j < k; ++j) {
      Matrix m(c.n(), counts[j]);
      read_f64s(in, m.data, path);
      p.pinv.push_back(std::move(m));
    }
  }
  if (in.peek() != EOF)
    throw std::runtime_error(path + ": trailing bytes in checkpoint");
  return p;
}

}  // namespace bcskit
