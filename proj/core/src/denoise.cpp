#include "bcskit/denoise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bcskit/transform.hpp"

namespace bcskit {

namespace {

Image threshold_dct(const Image& img, double level, bool soft) {
  Matrix coef = dct2(image_to_matrix(img));
  for (int r = 0; r < coef.rows; ++r)
    for (int c = 0; c < coef.cols; ++c) {
      if (r == 0 && c == 0) continue;  // DC carries the mean
      double& v = coef.at(r, c);
      if (soft) {
        double mag = std::abs(v) - level;
        v = mag > 0.0 ? (v > 0.0 ? mag : -mag) : 0.0;
      } else if (std::abs(v) < level) {
        v = 0.0;
      }
    }
  return matrix_to_image(idct2(coef));
}

// Classic patchwise non-local means over a square search window, replicate
// padding at the borders. Weight exp(-max(d2 - 2 sigma^2, 0) / h^2) with d2
// the mean squared patch difference.
Image nlm(const Image& img, double sigma, const DenoiserKind& kind) {
  int pr = kind.nlm_patch / 2;
  int wr = kind.nlm_window / 2;
  double h = kind.nlm_strength * sigma;
  double h2 = h * h;
  double norm = 1.0 / (kind.nlm_patch * kind.nlm_patch);
  auto pix = [&](int r, int c) {
    r = std::clamp(r, 0, img.height - 1);
    c = std::clamp(c, 0, img.width - 1);
    return img.at(r, c);
  };
  Image out(img.height, img.width);
  for (int r = 0; r < img.height; ++r)
    for (int c = 0; c < img.width; ++c) {
      double wsum = 0.0, acc = 0.0;
      for (int qr = r - wr; qr <= r + wr; ++qr)
        for (int qc = c - wr; qc <= c + wr; ++qc) {
          double d2 = 0.0;
          for (int dr = -pr; dr <= pr; ++dr)
            for (int dc = -pr; dc <= pr; ++dc) {
              double d = pix(r + dr, c + dc) - pix(qr + dr, qc + dc);
              d2 += d * d;
            }
          d2 *= norm;
          double w = std::exp(-std::max(d2 - 2.0 * sigma * sigma, 0.0) / h2);
          wsum += w;
          acc += w * pix(qr, qc);
        }
      out.at(r, c) = acc / wsum;
    }
  return out;
}

}  // namespace

Image denoise(const Image& img, double sigma, const DenoiserKind& kind) {
  if (img.height <= 0 || img.width <= 0)
    throw std::invalid_argument("denoise: empty image");
  if (sigma < 0.0) throw std::invalid_argument("denoise: negative sigma");
  if (sigma == 0.0) return img;
  switch (kind.variant) {
    case DenoiserVariant::HardDct:
      return threshold_dct(img, kind.tau * sigma, /*soft=*/false);
    case DenoiserVariant::SoftDct:
      return threshold_dct(img, kind.tau * sigma, /*soft=*/true);
    case DenoiserVariant::Nlm:
      return nlm(img, sigma, kind);
  }
  throw std::invalid_argument("denoise: unknown variant");
}

Image hard_threshold(const Image& img, double lambda) {
  if (img.height <= 0 || img.width <= 0)
    throw std::invalid_argument("hard_threshold: empty image");
  if (lambda < 0.0) throw std::invalid_argument("hard_threshold: negative lambda");
  return threshold_dct(img, lambda, /*soft=*/false);
}

double default_probe_eps(const Image& img) {
  double peak = 0.0;
  for (double v : img.data) peak = std::max(peak, std::abs(v));
  return peak * 1e-3 + 1e-6;
}

double divergence_mc(const std::function<Image(const Image&)>& denoiser,
                     const Image& img, int probes, double eps, Rng& rng) {
  if (probes <= 0) throw std::invalid_argument("divergence_mc: probes must be positive");
  if (!(eps > 0.0)) throw std::invalid_argument("divergence_mc: eps must be positive");
  Image base = denoiser(img);
  if (base.height != img.height || base.width != img.width)
    throw std::invalid_argument("divergence_mc: denoiser changed the shape");
  double total = 0.0;
  Image probe(img.height, img.width);
  for (int p = 0; p < probes; ++p) {
    std::vector<double> eta(img.size());
    for (auto& v : eta) v = rng.normal();
    for (std::size_t i = 0; i < img.size(); ++i)
      probe.data[i] = img.data[i] + eps * eta[i];
    Image shifted = denoiser(probe);
    double dot = 0.0;
    for (std::size_t i = 0; i < img.size(); ++i)
      dot += eta[i] * (shifted.data[i] - base.data[i]);
    total += dot / eps;
  }
  return total / probes;
}

double divergence_mc(const DenoiserKind& kind, const Image& img, double sigma,
                     int probes, double eps, Rng& rng) {
  return divergence_mc(
      [&](const Image& x) { return denoise(x, sigma, kind); }, img, probes, eps, rng);
}

}  // namespace bcskit
