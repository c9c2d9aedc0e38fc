#include "fixtures.hpp"

#include <cmath>

namespace fixtures {

using bcskit::Image;

namespace {

constexpr double kPi = 3.14159265358979323846;

// Orthonormal 1-D DCT-II basis function value.
double dct_basis(int n, int k, int i) {
  double scale = std::sqrt((k == 0 ? 1.0 : 2.0) / n);
  return scale * std::cos(kPi * k * (2 * i + 1) / (2.0 * n));
}

double gauss_bump(double r, double c, double cr, double cc, double sigma) {
  double dr = r - cr, dc = c - cc;
  return std::exp(-(dr * dr + dc * dc) / (2.0 * sigma * sigma));
}

}  // namespace

Image cosine_grid_96() {
  const int n = 96;
  struct Mode {
    int u, v;
    double amp;
  };
  // Frequencies divisible by 3 restrict to pure 32-point block modes.
  const Mode modes[] = {{0, 6, 2400.0}, {9, 0, 2400.0}, {6, 12, 2000.0}, {15, 9, 2000.0}};
  Image img(n, n, 128.0);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double v = img.at(r, c);
      for (const Mode& m : modes)
        v += m.amp * dct_basis(n, m.u, r) * dct_basis(n, m.v, c);
      img.at(r, c) = v;
    }
  return img;
}

std::vector<Image> piecewise_smooth_256() {
  const int n = 256;
  std::vector<Image> out;

  Image dunes(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double y = r / double(n), x = c / double(n);
      double v = 108.0 + 42.0 * std::sin(2.0 * kPi * y + 1.6 * std::sin(kPi * x)) +
                 24.0 * std::cos(2.0 * kPi * (1.4 * x + 0.3 * y) + 0.6) +
                 13.0 * std::sin(2.0 * kPi * (2.5 * y - 1.8 * x) + 1.2);
      if (r - 0.6 * c > 96.0) v += 11.0;
      if (r + 1.4 * c < 118.0) v -= 12.0;
      dunes.at(r, c) = v;
    }
  out.push_back(std::move(dunes));

  Image rollers(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double y = r / double(n), x = c / double(n);
      double v = 122.0 + 38.0 * std::sin(2.0 * kPi * (1.5 * y + 0.5 * x) + 0.8) +
                 24.0 * std::cos(2.0 * kPi * (0.8 * y + 2.2 * x) - 0.3) +
                 14.0 * std::sin(2.0 * kPi * (3.5 * y - 1.2 * x) + 2.1);
      double dr = r - 150.0, dc = c - 90.0;
      if (dr * dr + dc * dc < 52.0 * 52.0) v += 10.0;
      rollers.at(r, c) = v;
    }
  out.push_back(std::move(rollers));

  Image crests(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double y = r / double(n), x = c / double(n);
      double v = 114.0 + 36.0 * std::cos(2.0 * kPi * (2.2 * y + 1.1 * x) - 0.5) +
                 26.0 * std::sin(2.0 * kPi * (1.2 * y + 3.1 * x) + 1.7) +
                 13.0 * std::cos(2.0 * kPi * (4.2 * y + 2.4 * x) + 0.9);
      if (r >= 40 && r < 110 && c >= 150 && c < 235) v += 12.0;
      if (r + 0.9 * c < 95.0) v -= 9.0;
      crests.at(r, c) = v;
    }
  out.push_back(std::move(crests));

  return out;
}

Image bright_square_128() {
  const int n = 128;
  Image img(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) {
      double v = 50.0 + 25.0 * r / (n - 1.0) + 15.0 * c / (n - 1.0);
      if (r >= 32 && r < 64 && c >= 32 && c < 64) {
        v = 205.0 + 25.0 * std::cos(kPi * r) * std::cos(kPi * c) +
            12.0 * std::cos(2.0 * kPi * 3.0 * (r - 32) / 32.0);
      }
      img.at(r, c) = v;
    }
  return img;
}

Image uniform_texture_128() {
  const int n = 128;
  Image img(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      img.at(r, c) = 128.0 + 45.0 * std::cos(2.0 * kPi * 5.5 * r / n) *
                                 std::cos(2.0 * kPi * 3.5 * c / n) +
                     25.0 * std::cos(2.0 * kPi * 8.0 * (r + c) / n);
  return img;
}

Image saliency_square_128() {
  Image img(128, 128, 0.0);
  for (int r = 60; r < 68; ++r)
    for (int c = 60; c < 68; ++c) img.at(r, c) = 250.0;
  return img;
}

Image toy_image(int index) {
  const int n = 32;
  // Per-image gradient orientation, blob position and blob width.
  const double gr[] = {1.0, -0.6, 0.2, -1.0, 0.5};
  const double gc[] = {0.4, 1.0, -0.9, 0.3, -0.8};
  const double br[] = {9.0, 22.0, 16.0, 6.0, 20.0};
  const double bc[] = {10.0, 8.0, 24.0, 21.0, 18.0};
  const double bs[] = {5.0, 7.0, 4.5, 6.0, 5.5};
  int i = index % 5;
  Image img(n, n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c)
      img.at(r, c) = 110.0 + 40.0 * (gr[i] * r + gc[i] * c) / n +
                     90.0 * gauss_bump(r, c, br[i], bc[i], bs[i]);
  return img;
}

std::vector<Image> toy_training_set() {
  std::vector<Image> out;
  for (int i = 0; i < 4; ++i) out.push_back(toy_image(i));
  return out;
}

}  // namespace fixtures
