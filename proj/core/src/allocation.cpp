#include "bcskit/allocation.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace bcskit {

namespace {

using CMat = Eigen::MatrixXcd;

// Forward DFT matrix of order n; the inverse is conj / n.
const CMat& dft_matrix(int n) {
  static std::mutex mu;
  static std::map<int, std::unique_ptr<CMat>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    slot = std::make_unique<CMat>(n, n);
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        double a = -2.0 * std::numbers::pi * j * k / n;
        (*slot)(j, k) = std::complex<double>(std::cos(a), std::sin(a));
      }
  }
  return *slot;
}

CMat dft2(const Image& img) {
  Eigen::MatrixXd x(img.height, img.width);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) x(r, c) = img.at(r, c);
  return dft_matrix(img.height) * x * dft_matrix(img.width).transpose();
}

Eigen::MatrixXd idft2_magnitude_sq(const CMat& f) {
  CMat out = dft_matrix(static_cast<int>(f.rows())).conjugate() * f *
             dft_matrix(static_cast<int>(f.cols())).transpose().conjugate();
  out /= static_cast<double>(f.rows()) * static_cast<double>(f.cols());
  return out.cwiseAbs2();
}

// 3x3 box filter with clamped borders.
Eigen::MatrixXd box3(const Eigen::MatrixXd& x) {
  Eigen::Index h = x.rows(), w = x.cols();
  Eigen::MatrixXd out(h, w);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) {
      double acc = 0.0;
      for (Eigen::Index dr = -1; dr <= 1; ++dr)
        for (Eigen::Index dc = -1; dc <= 1; ++dc) {
          Eigen::Index rr = std::clamp<Eigen::Index>(r + dr, 0, h - 1);
          Eigen::Index cc = std::clamp<Eigen::Index>(c + dc, 0, w - 1);
          acc += x(rr, cc);
        }
      out(r, c) = acc / 9.0;
    }
  return out;
}

// Separable Gaussian blur; the kernel is renormalized over the in-bounds
// support so constants stay exactly constant.
Eigen::MatrixXd gauss_blur(const Eigen::MatrixXd& x, double sigma) {
  int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i)
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
  Eigen::Index h = x.rows(), w = x.cols();
  Eigen::MatrixXd tmp(h, w), out(h, w);
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) {
      double acc = 0.0, wsum = 0.0;
      for (int d = -radius; d <= radius; ++d) {
        Eigen::Index cc = c + d;
        if (cc < 0 || cc >= w) continue;
        acc += k[d + radius] * x(r, cc);
        wsum += k[d + radius];
      }
      tmp(r, c) = acc / wsum;
    }
  for (Eigen::Index r = 0; r < h; ++r)
    for (Eigen::Index c = 0; c < w; ++c) {
      double acc = 0.0, wsum = 0.0;
      for (int d = -radius; d <= radius; ++d) {
        Eigen::Index rr = r + d;
        if (rr < 0 || rr >= h) continue;
        acc += k[d + radius] * x(rr, c);
        wsum += k[d + radius];
      }
      out(r, c) = acc / wsum;
    }
  return out;
}

SaliencyMap uniform_map(int h, int w) {
  SaliencyMap map;
  map.height = h;
  map.width = w;
  map.data.assign(static_cast<std::size_t>(h) * w,
                  1.0 / (static_cast<double>(h) * w));
  return map;
}

SaliencyMap normalize_map(int h, int w, const Eigen::MatrixXd& m) {
  double total = m.sum();
  if (!(total > 0.0) || !std::isfinite(total)) return uniform_map(h, w);
  SaliencyMap map;
  map.height = h;
  map.width = w;
  map.data.resize(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c)
      map.data[static_cast<std::size_t>(r) * w + c] = m(r, c) / total;
  return map;
}

int snap_channel(const std::vector<double>& rates, double s) {
  int best = 0;
  for (std::size_t j = 1; j < rates.size(); ++j)
    if (std::abs(rates[j] - s) < std::abs(rates[best] - s))
      best = static_cast<int>(j);
  return best;
}

}  // namespace

SaliencyMap saliency(const Image& img) {
  if (img.height < 16 || img.width < 16)
    throw std::invalid_argument("saliency: image smaller than 16x16");
  CMat f = dft2(img);
  Eigen::MatrixXd amp = f.cwiseAbs();
  double peak = amp.maxCoeff();
  if (!(peak > 0.0)) return uniform_map(img.height, img.width);
  // log(|F| + eps) keeps the spectrum finite at zero amplitude; recombining as
  // F * exp(-box(L)) is exp(residual + i*phase) without extracting the phase.
  double eps = 1e-12 * peak;
  Eigen::MatrixXd logamp = (amp.array() + eps).log();
  Eigen::MatrixXd smoothed = box3(logamp);
  CMat recombined = f.cwiseProduct((-smoothed).array().exp().matrix());
  Eigen::MatrixXd sal = idft2_magnitude_sq(recombined);
  sal = gauss_blur(sal, 2.5);
  return normalize_map(img.height, img.width, sal);
}

Image resize_area(const Image& img, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0)
    throw std::invalid_argument("resize_area: output size must be positive");
  double sy = static_cast<double>(img.height) / out_h;
  double sx = static_cast<double>(img.width) / out_w;
  Image out(out_h, out_w);
  for (int r = 0; r < out_h; ++r) {
    double y0 = r * sy, y1 = (r + 1) * sy;
    int iy0 = static_cast<int>(std::floor(y0));
    int iy1 = std::min(static_cast<int>(std::ceil(y1)), img.height);
    for (int c = 0; c < out_w; ++c) {
      double x0 = c * sx, x1 = (c + 1) * sx;
      int ix0 = static_cast<int>(std::floor(x0));
      int ix1 = std::min(static_cast<int>(std::ceil(x1)), img.width);
      double acc = 0.0, area = 0.0;
      for (int y = iy0; y < iy1; ++y) {
        double hy = std::min<double>(y + 1, y1) - std::max<double>(y, y0);
        for (int x = ix0; x < ix1; ++x) {
          double wx = std::min<double>(x + 1, x1) - std::max<double>(x, x0);
          acc += hy * wx * img.at(y, x);
          area += hy * wx;
        }
      }
      out.at(r, c) = acc / area;
    }
  }
  return out;
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
  if (out_h <= 0 || out_w <= 0)
    throw std::invalid_argument("resize_bilinear: output size must be positive");
  double sy = static_cast<double>(img.height) / out_h;
  double sx = static_cast<double>(img.width) / out_w;
  Image out(out_h, out_w);
  for (int r = 0; r < out_h; ++r) {
    double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, img.height - 1.0);
    int y0 = static_cast<int>(std::floor(fy));
    int y1 = std::min(y0 + 1, img.height - 1);
    double wy = fy - y0;
    for (int c = 0; c < out_w; ++c) {
      double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, img.width - 1.0);
      int x0 = static_cast<int>(std::floor(fx));
      int x1 = std::min(x0 + 1, img.width - 1);
      double wx = fx - x0;
      out.at(r, c) = (1 - wy) * ((1 - wx) * img.at(y0, x0) + wx * img.at(y0, x1)) +
                     wy * ((1 - wx) * img.at(y1, x0) + wx * img.at(y1, x1));
    }
  }
  return out;
}

SaliencyMap presample(const Image& img) {
  if (img.height < 32 || img.width < 32)
    throw std::invalid_argument("presample: image smaller than 32x32");
  // 10% per side (1% of the pixels), but never below the saliency minimum.
  int small_h = std::max(16, static_cast<int>(std::lround(img.height * 0.1)));
  int small_w = std::max(16, static_cast<int>(std::lround(img.width * 0.1)));
  SaliencyMap small = saliency(resize_area(img, small_h, small_w));
  Image lifted(small_h, small_w);
  lifted.data = small.data;
  Image up = resize_bilinear(lifted, img.height, img.width);
  double total = 0.0;
  for (double v : up.data) total += v;
  SaliencyMap map;
  map.height = img.height;
  map.width = img.width;
  if (!(total > 0.0) || !std::isfinite(total))
    return uniform_map(img.height, img.width);
  map.data = std::move(up.data);
  for (auto& v : map.data) v /= total;
  return map;
}

std::vector<double> proportions(const SaliencyMap& map, int block_size) {
  if (block_size <= 0)
    throw std::invalid_argument("proportions: block size must be positive");
  if (map.height <= 0 || map.width <= 0)
    throw std::invalid_argument("proportions: empty map");
  int gr = (map.height + block_size - 1) / block_size;
  int gc = (map.width + block_size - 1) / block_size;
  std::vector<double> p(static_cast<std::size_t>(gr) * gc, 0.0);
  double total = 0.0;
  for (int r = 0; r < map.height; ++r)
    for (int c = 0; c < map.width; ++c) {
      p[static_cast<std::size_t>(r / block_size) * gc + c / block_size] += map.at(r, c);
      total += map.at(r, c);
    }
  if (total > 0.0)
    for (auto& v : p) v /= total;
  return p;
}

RateAssignment assign(const std::vector<double>& p, double target_rate,
                      const std::vector<double>& rates, int block_size) {
  if (p.empty()) throw std::invalid_argument("assign: no blocks");
  if (rates.empty()) throw std::invalid_argument("assign: no rates");
  double lo = rates.front(), hi = rates.back();
  if (target_rate < lo || target_rate > hi)
    throw std::invalid_argument("assign: target rate outside the channel range");
  int count = static_cast<int>(p.size());

  std::vector<int> ch(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    double raw = target_rate * p[i] * count;
    ch[i] = snap_channel(rates, std::clamp(raw, lo, hi));
  }

  // Greedy fine-tune: single-channel steps while some move strictly shrinks
  // the gap between the assigned total and count * target_rate. Tied moves
  // prefer the least salient block when stepping down and the most salient
  // when stepping up, then the lowest index; that keeps more salient blocks
  // at rates no lower than less salient ones. Gap comparisons use a small
  // tolerance so equal-by-construction moves tie despite rounding.
  double target_total = target_rate * count;
  double total = 0.0;
  for (int c : ch) total += rates[c];
  constexpr double kTieTol = 1e-9;
  int max_moves = count * static_cast<int>(rates.size());
  for (int move = 0; move < max_moves; ++move) {
    double gap = std::abs(total - target_total);
    auto move_gap = [&](int i, int dir) {
      int nc = ch[i] + dir;
      if (nc < 0 || nc >= static_cast<int>(rates.size())) return -1.0;
      return std::abs(total - rates[ch[i]] + rates[nc] - target_total);
    };
    double min_gap = gap;
    for (int i = 0; i < count; ++i)
      for (int dir : {-1, +1}) {
        double g = move_gap(i, dir);
        if (g >= 0.0 && g < min_gap) min_gap = g;
      }
    if (min_gap >= gap - kTieTol) break;
    int best_block = -1, best_dir = 0;
    double best_key = 0.0;
    for (int i = 0; i < count; ++i)
      for (int dir : {-1, +1}) {
        double g = move_gap(i, dir);
        if (g < 0.0 || g > min_gap + kTieTol) continue;
        double key = dir < 0 ? p[i] : -p[i];
        if (best_block < 0 || key < best_key) {
          best_block = i;
          best_dir = dir;
          best_key = key;
        }
      }
    total += rates[ch[best_block] + best_dir] - rates[ch[best_block]];
    ch[best_block] += best_dir;
  }

  RateAssignment a;
  a.channels = std::move(ch);
  a.target_rate = target_rate;
  auto counts = measurement_counts(rates, block_size);
  long measured = 0;
  for (int c : a.channels) measured += counts[c];
  a.achieved_rate = static_cast<double>(measured) /
                    (static_cast<double>(count) * block_size * block_size);
  return a;
}

RateAssignment assign(const std::vector<double>& p, double target_rate,
                      const ChannelBank& bank) {
  return assign(p, target_rate, bank.rates, bank.block_size);
}

}  // namespace bcskit
