#pragma once

#include "mixkry/covariance.hpp"
#include "mixkry/linear_operator.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace mixkry {

/// Forward model, truth and clean data of a synthetic tomography problem.
/// Pixel (ix, iy) of a size x size image is entry iy * size + ix.
struct TomoProblem {
  std::shared_ptr<const SparseMatrix> matrix;
  LinearOperator A;
  Vector s_true;
  Vector b_clean;
  Grid grid;
  std::string meta;
};

struct TrainingSet {
  std::vector<Vector> images;
  std::uint64_t seed = 0;
  Index size = 0;
  /// Freckles drawn per image.
  std::vector<int> freckles;
};

/// 1 inside the inscribed disk of a size x size image, 0 outside.
Vector circular_mask(Index size);

/// Smooth sine-squared mixtures with up to 8 bright disks, masked to the
/// inscribed circle. Term t of an image is
///   c_t sin^2(pi (2 fx_t x + px_t / 128)) sin^2(pi (2 fy_t y + py_t / 128))
/// with x, y the pixel centres scaled to (0, 1), c_t ~ U[0.5, 1] and
/// fx, fy, px, py ~ U[0, 128] (frequencies divided by 128); the sum of four
/// terms is divided by sum c_t. Disk radii are 3 and 4 pixels at size 128
/// and scale with the image.
TrainingSet gen_training_images(Index count, Index size, std::uint64_t seed);

/// Spherical-means tomography: integrals along inward semicircles centred
/// on the mask boundary at angles a * 90 / n_angles degrees, radii
/// (j + 1/2) size / n_circles. Arcs are sampled every quarter pixel and
/// deposited bilinearly; samples outside the mask are dropped. Row a *
/// n_circles + j. The truth is one extra image from gen_training_images.
TomoProblem spherical_tomo(Index size, Index n_angles, Index n_circles,
                           std::uint64_t seed);

/// Cells crossed by the segment p0 -> p1 on an nx x ny grid of unit cells
/// covering [0, nx] x [0, ny], with the exact length inside each.
std::vector<std::pair<Index, double>> segment_cell_lengths(
    const Eigen::Vector2d& p0, const Eigen::Vector2d& p1, Index nx, Index ny);

/// Straight-ray crosswell tomography: sources on x = 0, receivers on
/// x = size, both uniformly spaced. Row i * n_receivers + j. The truth is a
/// seeded smooth layered field with two anomalies, scaled to [0, 1].
TomoProblem crosswell_tomo(Index size, Index n_sources, Index n_receivers,
                           std::uint64_t seed);

struct NoisyData {
  Vector d;
  /// Per-component noise standard deviation level ||b|| / sqrt(m).
  double sigma = 0.0;
};

/// Adds Gaussian white noise rescaled so that ||d - b|| = level ||b||.
NoisyData add_noise(const Vector& b_clean, double level, std::uint64_t seed);

/// Binary 16-bit PGM, min-max scaled. Returns the (min, max) mapped to
/// (0, 65535).
std::pair<double, double> write_pgm(const std::filesystem::path& path,
                                    const Vector& image, Index width,
                                    Index height);

/// Uniform double in [0, 1) from the top 53 bits of a 64-bit draw.
double uniform01(std::uint64_t bits);

}  // namespace mixkry
