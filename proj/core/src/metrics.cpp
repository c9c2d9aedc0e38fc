#include "bcskit/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace bcskit {

double psnr(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width)
    throw std::invalid_argument("psnr: shapes disagree");
  if (a.size() == 0) throw std::invalid_argument("psnr: empty image");
  double se = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double d = a.data[i] - b.data[i];
    se += d * d;
  }
  double mse = se / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim(const Image& a, const Image& b) {
  if (a.height != b.height || a.width != b.width)
    throw std::invalid_argument("ssim: shapes disagree");
  constexpr int kWin = 11;
  constexpr double kSigma = 1.5;
  if (a.height < kWin || a.width < kWin)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");

  static const std::vector<double> kernel = [] {
    std::vector<double> k(kWin * kWin);
    double sum = 0.0;
    for (int i = 0; i < kWin; ++i)
      for (int j = 0; j < kWin; ++j) {
        double di = i - (kWin - 1) / 2.0;
        double dj = j - (kWin - 1) / 2.0;
        k[i * kWin + j] = std::exp(-(di * di + dj * dj) / (2.0 * kSigma * kSigma));
        sum += k[i * kWin + j];
      }
    for (auto& v : k) v /= sum;
    return k;
  }();

  constexpr double kC1 = (0.01 * 255.0) * (0.01 * 255.0);
  constexpr double kC2 = (0.03 * 255.0) * (0.03 * 255.0);

  double total = 0.0;
  long count = 0;
  for (int r = 0; r + kWin <= a.height; ++r) {
    for (int c = 0; c + kWin <= a.width; ++c) {
      double mx = 0, my = 0, mxx = 0, myy = 0, mxy = 0;
      for (int i = 0; i < kWin; ++i)
        for (int j = 0; j < kWin; ++j) {
          double w = kernel[i * kWin + j];
          double x = a.at(r + i, c + j);
          double y = b.at(r + i, c + j);
          mx += w * x;
          my += w * y;
          mxx += w * x * x;
          myy += w * y * y;
          mxy += w * x * y;
        }
      double vx = mxx - mx * mx;
      double vy = myy - my * my;
      double cov = mxy - mx * my;
      double s = ((2.0 * mx * my + kC1) * (2.0 * cov + kC2)) /
                 ((mx * mx + my * my + kC1) * (vx + vy + kC2));
      total += s;
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double blockiness(const Image& img, int block_size) {
  if (block_size <= 0)
    throw std::invalid_argument("blockiness: block size must be positive");
  if (img.height < 2 * block_size || img.width < 2 * block_size)
    throw std::invalid_argument("blockiness: image smaller than two blocks");
  double bsum = 0.0, isum = 0.0;
  long bcount = 0, icount = 0;
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c + 1 < img.width; ++c) {
      double d = std::abs(img.at(r, c) - img.at(r, c + 1));
      if ((c + 1) % block_size == 0) {
        bsum += d;
        ++bcount;
      } else {
        isum += d;
        ++icount;
      }
    }
  for (int r = 0; r + 1 < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      double d = std::abs(img.at(r, c) - img.at(r + 1, c));
      if ((r + 1) % block_size == 0) {
        bsum += d;
        ++bcount;
      } else {
        isum += d;
        ++icount;
      }
    }
  return bsum / static_cast<double>(bcount) - isum / static_cast<double>(icount);
}

}  // namespace bcskit
