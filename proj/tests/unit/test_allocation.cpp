#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "bcskit/allocation.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace bcskit;

namespace {

const std::vector<double> kSevenRates = {0.01, 0.03, 0.05, 0.1, 0.2, 0.3, 0.4};

ChannelBank seven_rate_bank() {
  Rng rng = Rng::stream(1, Stream::Matrices);
  return build_channel_bank(rng, 32, kSevenRates, true);
}

}  // namespace

TEST_CASE("saliency of a constant image is the uniform map") {
  Image flat(32, 48, 77.0);
  SaliencyMap map = saliency(flat);
  REQUIRE(map.height == 32);
  REQUIRE(map.width == 48);
  double expect = 1.0 / (32.0 * 48.0);
  for (double v : map.data) CHECK(v == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("saliency normalizes to one and concentrates on the odd block") {
  Image img = fixtures::bright_square_128();
  SaliencyMap map = saliency(img);
  double total = std::accumulate(map.data.begin(), map.data.end(), 0.0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
  for (double v : map.data) CHECK(v >= 0.0);

  // The textured square lives in block (1, 1) of the 32-grid.
  std::vector<double> p = proportions(map, 32);
  REQUIRE(p.size() == 16);
  int star = 1 * 4 + 1;
  for (std::size_t i = 0; i < p.size(); ++i)
    if (static_cast<int>(i) != star) CHECK(p[star] > p[i]);
}

TEST_CASE("presample approximates full-resolution saliency block mass") {
  Image img = fixtures::bright_square_128();
  SaliencyMap coarse = presample(img);
  REQUIRE(coarse.height == img.height);
  REQUIRE(coarse.width == img.width);
  std::vector<double> pf = proportions(saliency(img), 32);
  std::vector<double> pc = proportions(coarse, 32);

  // Rank agreement between the two pipelines (Spearman on block sums).
  auto ranks = [](const std::vector<double>& v) {
    std::vector<int> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size(); ++i) r[idx[i]] = static_cast<double>(i);
    return r;
  };
  std::vector<double> ra = ranks(pf), rb = ranks(pc);
  double n = static_cast<double>(ra.size());
  double d2 = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i)
    d2 += (ra[i] - rb[i]) * (ra[i] - rb[i]);
  double rho = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
  CHECK(rho > 0.5);
}

TEST_CASE("resize helpers preserve constants and shapes") {
  Image flat(40, 60, 9.0);
  Image down = resize_area(flat, 16, 24);
  REQUIRE(down.height == 16);
  REQUIRE(down.width == 24);
  for (double v : down.data) CHECK(v == doctest::Approx(9.0).epsilon(1e-12));
  Image up = resize_bilinear(down, 40, 60);
  REQUIRE(up.height == 40);
  for (double v : up.data) CHECK(v == doctest::Approx(9.0).epsilon(1e-12));
}

TEST_CASE("proportions split mass by block") {
  SaliencyMap map;
  map.height = 64;
  map.width = 64;
  map.data.assign(64 * 64, 1.0 / (64.0 * 64.0));
  std::vector<double> p = proportions(map, 32);
  REQUIRE(p.size() == 4);
  for (double v : p) CHECK(v == doctest::Approx(0.25).epsilon(1e-12));

  // All mass inside one block.
  std::fill(map.data.begin(), map.data.end(), 0.0);
  map.data[33 * 64 + 40] = 1.0;  // block (1, 1)
  p = proportions(map, 32);
  CHECK(p[3] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p[0] == 0.0);

  double total = std::accumulate(p.begin(), p.end(), 0.0);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("assign reproduces the hand-executed golden case") {
  ChannelBank bank = seven_rate_bank();
  std::vector<double> p = {0.30, 0.20, 0.10, 0.10, 0.08, 0.08, 0.06, 0.05, 0.03};
  RateAssignment a = assign(p, 0.1, bank);
  CHECK(a.channels == std::vector<int>{5, 4, 3, 3, 2, 2, 2, 2, 0});
  CHECK(a.achieved_rate == doctest::Approx(930.0 / 9216.0).epsilon(1e-12));
  CHECK(std::abs(a.achieved_rate - 0.1) <= 0.01);

  // More salient blocks never get a lower rate.
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = 0; j < p.size(); ++j)
      if (p[i] > p[j]) CHECK(a.channels[i] >= a.channels[j]);

  // Deterministic.
  RateAssignment b = assign(p, 0.1, bank);
  CHECK(a.channels == b.channels);
}

TEST_CASE("assign degenerates to uniform at the extreme rates") {
  ChannelBank bank = seven_rate_bank();
  std::vector<double> p = {0.30, 0.20, 0.10, 0.10, 0.08, 0.08, 0.06, 0.05, 0.03};
  RateAssignment lo = assign(p, 0.01, bank);
  CHECK(lo.channels == std::vector<int>(9, 0));

  std::vector<double> uniform(9, 1.0 / 9.0);
  RateAssignment u = assign(uniform, 0.1, bank);
  CHECK(u.channels == std::vector<int>(9, 3));
  CHECK(u.achieved_rate == doctest::Approx(102.0 / 1024.0).epsilon(1e-12));

  CHECK_THROWS_AS(assign(p, 0.5, bank), std::invalid_argument);
  CHECK_THROWS_AS(assign(p, 0.005, bank), std::invalid_argument);
}

TEST_CASE("assign against a plain rate list matches the bank variant") {
  ChannelBank bank = seven_rate_bank();
  std::vector<double> p = {0.30, 0.20, 0.10, 0.10, 0.08, 0.08, 0.06, 0.05, 0.03};
  RateAssignment a = assign(p, 0.1, bank);
  RateAssignment b = assign(p, 0.1, kSevenRates, 32);
  CHECK(a.channels == b.channels);
  CHECK(a.achieved_rate == doctest::Approx(b.achieved_rate).epsilon(1e-12));
}

TEST_CASE("achieved rate stays within 0.01 of the target on fixtures") {
  ChannelBank bank = seven_rate_bank();
  std::vector<Image> images = fixtures::piecewise_smooth_256();
  images.push_back(fixtures::bright_square_128());
  images.push_back(fixtures::uniform_texture_128());
  for (const Image& img : images) {
    std::vector<double> p = proportions(presample(img), 32);
    for (double sr : {0.03, 0.05, 0.1, 0.2}) {
      RateAssignment a = assign(p, sr, bank);
      CHECK(std::abs(a.achieved_rate - sr) <= 0.01);
    }
  }
}
