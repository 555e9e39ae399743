#include "mixkry/errors.hpp"
#include "mixkry/testproblems.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace mixkry;

namespace {

constexpr double kPi = std::numbers::pi;

// Length of the semicircular arc inside the disc inscribed in [0, N]^2,
// by fine midpoint sampling.
double arc_length_inside(double N, Index n_angles, Index n_circles, Index row) {
  const Index a = row / n_circles;
  const Index j = row % n_circles;
  const double theta = a * (kPi / 2.0) / n_angles;
  const double c = N / 2.0;
  const double cx = c + c * std::cos(theta);
  const double cy = c + c * std::sin(theta);
  const double r = (j + 0.5) * N / n_circles;
  const int samples = 200000;
  double inside = 0.0;
  for (int s = 0; s < samples; ++s) {
    const double phi = theta + kPi / 2.0 + (s + 0.5) * kPi / samples;
    const double x = cx + r * std::cos(phi);
    const double y = cy + r * std::sin(phi);
    if ((x - c) * (x - c) + (y - c) * (y - c) <= c * c) inside += 1.0;
  }
  return inside / samples * kPi * r;
}

}  // namespace

TEST_CASE("spherical rows integrate arc length") {
  const Index size = 16;
  const TomoProblem p = spherical_tomo(size, 4, 6, 0);
  CHECK(p.matrix->rows() == 24);
  CHECK(p.matrix->cols() == 256);
  const Vector ones = Vector::Ones(size * size);
  const Vector b = p.A * ones;
  for (Index row = 0; row < 24; ++row) {
    // sampling at quarter-pixel steps loses at most a step at each crossing
    CHECK(std::abs(b[row] - arc_length_inside(16.0, 4, 6, row)) <= 1.0);
  }
  const Vector twice = p.A * (2.0 * p.s_true);
  CHECK(twice == 2.0 * p.b_clean);
}

TEST_CASE("spherical dimensions at 128 x 128") {
  const TomoProblem p = spherical_tomo(128, 64, 90, 0);
  CHECK(p.matrix->rows() == 5760);
  CHECK(p.matrix->cols() == 16384);
  CHECK_THROWS_AS(spherical_tomo(8, 4, 4, 0), ArgumentError);
}

TEST_CASE("training images") {
  const TrainingSet set = gen_training_images(49, 128, 5);
  CHECK(set.images.size() == 49);
  const Vector mask = circular_mask(128);
  for (const auto& img : set.images) {
    CHECK(img.minCoeff() >= 0.0);
    CHECK(img.maxCoeff() <= 1.0);
    CHECK((img.array() * (1.0 - mask.array())).abs().maxCoeff() == 0.0);
  }
  for (int f : set.freckles) {
    CHECK(f >= 0);
    CHECK(f <= 8);
  }
  const TrainingSet again = gen_training_images(49, 128, 5);
  for (std::size_t i = 0; i < 49; ++i) CHECK(again.images[i] == set.images[i]);
  CHECK_FALSE(gen_training_images(1, 128, 6).images[0] == set.images[0]);
}

TEST_CASE("segment cell lengths") {
  const auto h = segment_cell_lengths({0.0, 2.5}, {5.0, 2.5}, 5, 5);
  REQUIRE(h.size() == 5);
  for (Index i = 0; i < 5; ++i) {
    CHECK(h[static_cast<std::size_t>(i)].first == 2 * 5 + i);
    CHECK(h[static_cast<std::size_t>(i)].second == doctest::Approx(1.0).epsilon(1e-15));
  }
  const auto d = segment_cell_lengths({0.0, 0.3}, {7.0, 6.1}, 7, 7);
  double total = 0.0;
  for (const auto& [cell, len] : d) total += len;
  CHECK(total == doctest::Approx(std::hypot(7.0, 5.8)).epsilon(1e-12));
}

TEST_CASE("crosswell geometry") {
  const Index size = 32;
  const TomoProblem p = crosswell_tomo(size, 5, 8, 0);
  CHECK(p.matrix->rows() == 40);
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 8; ++j) {
      const double ys = (i + 0.5) * size / 5.0;
      const double yr = (j + 0.5) * size / 8.0;
      const Index row = i * 8 + j;
      const double sum = p.matrix->row(row).sum();
      CHECK(std::abs(sum - std::hypot(double(size), yr - ys)) <= 1e-12 * size);
      const auto nnz = p.matrix->row(row).nonZeros();
      CHECK(nnz >= size);
      CHECK(nnz <= 2 * size + 1);
    }
  CHECK(crosswell_tomo(64, 20, 50, 0).matrix->rows() == 1000);
  CHECK(p.s_true.minCoeff() == 0.0);
  CHECK(p.s_true.maxCoeff() == 1.0);
}

TEST_CASE("add_noise rescales exactly") {
  const TomoProblem p = spherical_tomo(16, 4, 6, 0);
  for (double level : {0.03, 0.01}) {
    const NoisyData n = add_noise(p.b_clean, level, 9);
    const double ratio = (n.d - p.b_clean).norm() / p.b_clean.norm();
    CHECK(std::abs(ratio - level) <= 1e-14);
    CHECK(n.sigma == doctest::Approx(level * p.b_clean.norm() / std::sqrt(24.0)));
  }
  CHECK(add_noise(p.b_clean, 0.03, 9).d == add_noise(p.b_clean, 0.03, 9).d);
  CHECK_THROWS_AS(add_noise(Vector::Zero(3), 0.1, 0), DegenerateDataError);
  CHECK_THROWS_AS(add_noise(p.b_clean, 0.0, 0), ParameterDomainError);
}

TEST_CASE("pgm output") {
  const auto path = std::filesystem::temp_directory_path() / "mixkry_test.pgm";
  const Vector img{{0.0, 0.5, 1.0, 2.0}};
  const auto [lo, hi] = write_pgm(path, img, 2, 2);
  CHECK(lo == 0.0);
  CHECK(hi == 2.0);
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string data = ss.str();
  CHECK(data.rfind("P5\n2 2\n65535\n", 0) == 0);
  CHECK(data.size() == 13 + 8);
  CHECK(static_cast<unsigned char>(data[data.size() - 2]) == 0xff);
  std::filesystem::remove(path);
}
