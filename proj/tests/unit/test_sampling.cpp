#include <cmath>
#include <stdexcept>
#include <vector>

#include "bcskit/sampling.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace bcskit;

namespace {

const std::vector<double> kSevenRates = {0.01, 0.03, 0.05, 0.1, 0.2, 0.3, 0.4};

ChannelBank seven_rate_bank(bool orthonormal = true) {
  Rng rng = Rng::stream(1, Stream::Matrices);
  return build_channel_bank(rng, 32, kSevenRates, orthonormal);
}

}  // namespace

TEST_CASE("measurement_counts rounds rate times block area") {
  std::vector<int> counts = measurement_counts(kSevenRates, 32);
  CHECK(counts == std::vector<int>{10, 31, 51, 102, 205, 307, 410});

  // Tiny rates never drop to zero measurements.
  CHECK(measurement_counts({0.0001}, 8) == std::vector<int>{1});
}

TEST_CASE("build_channel_bank validates its inputs") {
  Rng rng(1);
  CHECK_THROWS_AS(build_channel_bank(rng, 32, {}, true), std::invalid_argument);
  CHECK_THROWS_AS(build_channel_bank(rng, 32, {0.3, 0.2}, true), std::invalid_argument);
  CHECK_THROWS_AS(build_channel_bank(rng, 32, {0.0, 0.5}, true), std::invalid_argument);
  CHECK_THROWS_AS(build_channel_bank(rng, 32, {0.5, 1.5}, true), std::invalid_argument);
  // Rates so close they share a measurement count: both round to 102 of 1024.
  CHECK_THROWS_AS(build_channel_bank(rng, 32, {0.09990, 0.09995}, true),
                  std::invalid_argument);
}

TEST_CASE("channel bank shapes, orthonormality, and cached pseudo-inverses") {
  ChannelBank bank = seven_rate_bank();
  REQUIRE(bank.k() == 7);
  CHECK(bank.n() == 1024);
  for (int j = 0; j < bank.k(); ++j) {
    CHECK(bank.matrices[j].cols == 1024);
    CHECK(bank.pinvs[j].rows == 1024);
    CHECK(bank.pinvs[j].cols == bank.m(j));

    // Orthonormal rows make the pseudo-inverse the transpose.
    Matrix gram = matmul(bank.matrices[j], transpose(bank.matrices[j]));
    CHECK(max_abs_diff(gram, Matrix::identity(bank.m(j))) < 1e-10);
    CHECK(max_abs_diff(bank.pinvs[j], transpose(bank.matrices[j])) < 1e-10);
  }
  CHECK(bank.m(3) == 102);
  CHECK(bank.m(6) == 410);
}

TEST_CASE("banks are deterministic per seed") {
  Rng a = Rng::stream(5, Stream::Matrices);
  Rng b = Rng::stream(5, Stream::Matrices);
  ChannelBank ba = build_channel_bank(a, 16, {0.1, 0.3}, true);
  ChannelBank bb = build_channel_bank(b, 16, {0.1, 0.3}, true);
  for (int j = 0; j < 2; ++j)
    CHECK(max_abs_diff(ba.matrices[j], bb.matrices[j]) == 0.0);
}

TEST_CASE("uniform_assignment picks the nearest channel, ties toward lower") {
  ChannelBank bank = seven_rate_bank();
  RateAssignment a = uniform_assignment(bank, 16, 0.1);
  CHECK(a.channels == std::vector<int>(16, 3));
  CHECK(a.achieved_rate == doctest::Approx(102.0 / 1024.0).epsilon(1e-12));
  CHECK(a.target_rate == 0.1);

  // 0.25 is midway between 0.2 and 0.3; the lower channel wins.
  RateAssignment tie = uniform_assignment(bank, 4, 0.25);
  CHECK(tie.channels == std::vector<int>(4, 4));
}

TEST_CASE("sample_block is the channel matrix applied to the block") {
  ChannelBank bank = seven_rate_bank();
  Image block(32, 32);
  for (std::size_t i = 0; i < block.data.size(); ++i)
    block.data[i] = std::sin(0.05 * static_cast<double>(i)) * 80.0 + 100.0;
  std::vector<double> y = sample_block(bank, 3, block);
  std::vector<double> ref = matvec(bank.matrices[3], block.data);
  REQUIRE(y.size() == ref.size());
  for (std::size_t q = 0; q < y.size(); ++q) CHECK(y[q] == ref[q]);

  CHECK_THROWS_AS(sample_block(bank, 9, block), std::invalid_argument);
  CHECK_THROWS_AS(sample_block(bank, 0, Image(16, 16)), std::invalid_argument);
}

TEST_CASE("sample_image covers the padded grid and keeps source dims") {
  ChannelBank bank = seven_rate_bank();
  Image img(100, 70);
  for (int r = 0; r < 100; ++r)
    for (int c = 0; c < 70; ++c) img.at(r, c) = (r * 7 + c * 3) % 251;
  RateAssignment a = uniform_assignment(bank, 4 * 3, 0.2);
  Measurements meas = sample_image(bank, a, img);
  CHECK(meas.grid_rows == 4);
  CHECK(meas.grid_cols == 3);
  CHECK(meas.image_height == 100);
  CHECK(meas.image_width == 70);
  REQUIRE(static_cast<int>(meas.entries.size()) == 12);
  for (const auto& e : meas.entries) {
    CHECK(e.channel == 4);
    CHECK(static_cast<int>(e.y.size()) == bank.m(4));
  }

  RateAssignment wrong = uniform_assignment(bank, 5, 0.2);
  CHECK_THROWS_AS(sample_image(bank, wrong, img), std::invalid_argument);
}

TEST_CASE("init_block is the cached least-squares estimate") {
  ChannelBank bank = seven_rate_bank();
  Image block(32, 32);
  for (std::size_t i = 0; i < block.data.size(); ++i)
    block.data[i] = static_cast<double>((i * 13) % 200);
  std::vector<double> y = sample_block(bank, 5, block);
  Image est = init_block(bank, 5, y);
  REQUIRE(est.height == 32);
  std::vector<double> ref = matvec(bank.pinvs[5], y);
  for (std::size_t i = 0; i < est.data.size(); ++i)
    CHECK(est.data[i] == doctest::Approx(ref[i]).epsilon(1e-14));
}

TEST_CASE("rate-1.0 orthonormal sampling inverts exactly through init_image") {
  Rng rng = Rng::stream(7, Stream::Matrices);
  ChannelBank bank = build_channel_bank(rng, 32, {1.0}, true);
  Image img = fixtures::cosine_grid_96();
  RateAssignment a = uniform_assignment(bank, 9, 1.0);
  Measurements meas = sample_image(bank, a, img);
  Image back = init_image(bank, meas);
  REQUIRE(back.height == 96);
  double worst = 0.0;
  for (std::size_t i = 0; i < img.data.size(); ++i)
    worst = std::max(worst, std::abs(back.data[i] - img.data[i]));
  CHECK(worst < 1e-9);
}
