#include "mixkry/testproblems.hpp"

#include "mixkry/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

namespace mixkry {

namespace {

constexpr double kPi = std::numbers::pi;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return uniform01(engine_()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  Index integer(Index lo, Index hi) {
    return lo + static_cast<Index>(uniform() * static_cast<double>(hi - lo + 1));
  }
  // Box-Muller; uses both uniforms for one draw to keep streams simple.
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
  }

 private:
  std::mt19937_64 engine_;
};

TomoProblem finish(std::vector<Eigen::Triplet<double>>& triplets, Index m,
                   Index size, Vector truth, std::string meta) {
  auto mat = std::make_shared<SparseMatrix>(m, size * size);
  mat->setFromTriplets(triplets.begin(), triplets.end());
  mat->makeCompressed();
  TomoProblem p;
  p.matrix = mat;
  p.A = make_sparse_operator(mat);
  p.s_true = std::move(truth);
  p.b_clean = (*mat) * p.s_true;
  p.grid = Grid::unit_square(size);
  p.meta = std::move(meta);
  return p;
}

bool inside_mask(double x, double y, double size) {
  const double c = 0.5 * size;
  return (x - c) * (x - c) + (y - c) * (y - c) <= c * c;
}

}  // namespace

double uniform01(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

Vector circular_mask(Index size) {
  Vector mask = Vector::Zero(size * size);
  for (Index iy = 0; iy < size; ++iy) {
    for (Index ix = 0; ix < size; ++ix) {
      if (inside_mask(static_cast<double>(ix) + 0.5, static_cast<double>(iy) + 0.5,
                      static_cast<double>(size))) {
        mask[iy * size + ix] = 1.0;
      }
    }
  }
  return mask;
}

TrainingSet gen_training_images(Index count, Index size, std::uint64_t seed) {
  if (count < 1) throw ArgumentError("gen_training_images: count must be >= 1");
  if (size < 1) throw ArgumentError("gen_training_images: size must be >= 1");
  TrainingSet set;
  set.seed = seed;
  set.size = size;
  const Vector mask = circular_mask(size);
  const double n = static_cast<double>(size);
  Rng rng(seed);
  for (Index img = 0; img < count; ++img) {
    Vector s = Vector::Zero(size * size);
    double csum = 0.0;
    for (int t = 0; t < 4; ++t) {
      const double c = rng.uniform(0.5, 1.0);
      const double fx = rng.uniform(0.0, 128.0) / 128.0;
      const double fy = rng.uniform(0.0, 128.0) / 128.0;
      const double px = rng.uniform(0.0, 128.0) / 128.0;
      const double py = rng.uniform(0.0, 128.0) / 128.0;
      csum += c;
      for (Index iy = 0; iy < size; ++iy) {
        const double y = (static_cast<double>(iy) + 0.5) / n;
        const double sy = std::sin(kPi * (2.0 * fy * y + py));
        for (Index ix = 0; ix < size; ++ix) {
          const double x = (static_cast<double>(ix) + 0.5) / n;
          const double sx = std::sin(kPi * (2.0 * fx * x + px));
          s[iy * size + ix] += c * sx * sx * sy * sy;
        }
      }
    }
    s /= csum;
    const auto freckles = static_cast<int>(rng.integer(0, 8));
    for (int f = 0; f < freckles; ++f) {
      const double cx = rng.uniform(0.0, n);
      const double cy = rng.uniform(0.0, n);
      const double radius = (f < 5 ? 3.0 : 4.0) * n / 128.0;
      for (Index iy = 0; iy < size; ++iy) {
        for (Index ix = 0; ix < size; ++ix) {
          const double dx = static_cast<double>(ix) + 0.5 - cx;
          const double dy = static_cast<double>(iy) + 0.5 - cy;
          if (dx * dx + dy * dy <= radius * radius) s[iy * size + ix] = 1.0;
        }
      }
    }
    set.images.push_back(s.cwiseProduct(mask).cwiseMax(0.0).cwiseMin(1.0));
    set.freckles.push_back(freckles);
  }
  return set;
}

TomoProblem spherical_tomo(Index size, Index n_angles, Index n_circles,
                           std::uint64_t seed) {
  if (size < 16) throw ArgumentError("spherical_tomo: size must be >= 16");
  if (n_angles < 1 || n_circles < 1) {
    throw ArgumentError("spherical_tomo: need at least one angle and circle");
  }
  const double n = static_cast<double>(size);
  const double half = 0.5 * n;
  const double step = 0.25;
  std::vector<Eigen::Triplet<double>> triplets;
  auto deposit = [&](Index row, double x, double y, double w) {
    const double u = x - 0.5;
    const double v = y - 0.5;
    const auto i0 = static_cast<Index>(std::floor(u));
    const auto j0 = static_cast<Index>(std::floor(v));
    const double fx = u - static_cast<double>(i0);
    const double fy = v - static_cast<double>(j0);
    const double wx[2] = {1.0 - fx, fx};
    const double wy[2] = {1.0 - fy, fy};
    for (int a = 0; a < 2; ++a) {
      for (int b = 0; b < 2; ++b) {
        const double weight = w * wx[a] * wy[b];
        if (weight == 0.0) continue;
        const Index ix = std::clamp<Index>(i0 + a, 0, size - 1);
        const Index iy = std::clamp<Index>(j0 + b, 0, size - 1);
        triplets.emplace_back(row, iy * size + ix, weight);
      }
    }
  };
  for (Index a = 0; a < n_angles; ++a) {
    const double theta = static_cast<double>(a) * (kPi / 2.0) / static_cast<double>(n_angles);
    const double cx = half + half * std::cos(theta);
    const double cy = half + half * std::sin(theta);
    for (Index j = 0; j < n_circles; ++j) {
      const Index row = a * n_circles + j;
      const double r = (static_cast<double>(j) + 0.5) * n / static_cast<double>(n_circles);
      const auto samples = static_cast<Index>(std::ceil(kPi * r / step));
      const double dphi = kPi / static_cast<double>(samples);
      const double ds = r * dphi;
      for (Index s = 0; s < samples; ++s) {
        const double phi = theta + kPi / 2.0 + (static_cast<double>(s) + 0.5) * dphi;
        const double x = cx + r * std::cos(phi);
        const double y = cy + r * std::sin(phi);
        if (inside_mask(x, y, n)) deposit(row, x, y, ds);
      }
    }
  }
  Vector truth = gen_training_images(1, size, seed).images.front();
  return finish(triplets, n_angles * n_circles, size, std::move(truth),
                "spherical size=" + std::to_string(size) + " angles=" +
                    std::to_string(n_angles) + " circles=" + std::to_string(n_circles));
}

std::vector<std::pair<Index, double>> segment_cell_lengths(
    const Eigen::Vector2d& p0, const Eigen::Vector2d& p1, Index nx, Index ny) {
  const Eigen::Vector2d d = p1 - p0;
  const double length = d.norm();
  std::vector<std::pair<Index, double>> out;
  if (length == 0.0) return out;
  std::vector<double> ts{0.0, 1.0};
  for (int axis = 0; axis < 2; ++axis) {
    if (d[axis] == 0.0) continue;
    const Index cells = axis == 0 ? nx : ny;
    for (Index line = 0; line <= cells; ++line) {
      const double t = (static_cast<double>(line) - p0[axis]) / d[axis];
      if (t > 0.0 && t < 1.0) ts.push_back(t);
    }
  }
  std::sort(ts.begin(), ts.end());
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    const double dt = ts[i + 1] - ts[i];
    if (dt <= 0.0) continue;
    const Eigen::Vector2d mid = p0 + 0.5 * (ts[i] + ts[i + 1]) * d;
    const auto ix = static_cast<Index>(std::floor(mid.x()));
    const auto iy = static_cast<Index>(std::floor(mid.y()));
    if (ix < 0 || ix >= nx || iy < 0 || iy >= ny) continue;
    const Index cell = iy * nx + ix;
    if (!out.empty() && out.back().first == cell) {
      out.back().second += dt * length;
    } else {
      out.emplace_back(cell, dt * length);
    }
  }
  return out;
}

TomoProblem crosswell_tomo(Index size, Index n_sources, Index n_receivers,
                           std::uint64_t seed) {
  if (size < 1 || n_sources < 1 || n_receivers < 1) {
    throw ArgumentError("crosswell_tomo: sizes must be positive");
  }
  const double n = static_cast<double>(size);
  std::vector<Eigen::Triplet<double>> triplets;
  for (Index i = 0; i < n_sources; ++i) {
    const Eigen::Vector2d src(0.0, (static_cast<double>(i) + 0.5) * n / static_cast<double>(n_sources));
    for (Index j = 0; j < n_receivers; ++j) {
      const Eigen::Vector2d rec(n, (static_cast<double>(j) + 0.5) * n / static_cast<double>(n_receivers));
      for (const auto& [cell, len] : segment_cell_lengths(src, rec, size, size)) {
        triplets.emplace_back(i * n_receivers + j, cell, len);
      }
    }
  }

  Rng rng(seed);
  struct Wave { double a, f, phase; };
  struct Blob { double a, x, y, w; };
  std::vector<Wave> layers;
  for (int l = 0; l < 3; ++l) {
    layers.push_back({rng.uniform(0.05, 0.15), rng.uniform(0.5, 2.0), rng.uniform(0.0, 2.0 * kPi)});
  }
  const double tilt = rng.uniform(-0.2, 0.2);
  std::vector<Blob> blobs;
  for (int b = 0; b < 4; ++b) {
    blobs.push_back({rng.uniform(-0.1, 0.1), rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0), 0.15});
  }
  for (int b = 0; b < 2; ++b) {
    blobs.push_back({0.5, rng.uniform(0.3, 0.7), rng.uniform(0.3, 0.7), 0.06});
  }
  Vector truth(size * size);
  for (Index iy = 0; iy < size; ++iy) {
    const double y = (static_cast<double>(iy) + 0.5) / n;
    for (Index ix = 0; ix < size; ++ix) {
      const double x = (static_cast<double>(ix) + 0.5) / n;
      double v = tilt * y + 0.05 * x;
      for (const auto& w : layers) v += w.a * std::sin(2.0 * kPi * w.f * y + w.phase);
      for (const auto& b : blobs) {
        const double r2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
        v += b.a * std::exp(-0.5 * r2 / (b.w * b.w));
      }
      truth[iy * size + ix] = v;
    }
  }
  const double lo = truth.minCoeff();
  const double hi = truth.maxCoeff();
  truth = (truth.array() - lo) / (hi - lo);

  return finish(triplets, n_sources * n_receivers, size, std::move(truth),
                "crosswell size=" + std::to_string(size) + " sources=" +
                    std::to_string(n_sources) + " receivers=" + std::to_string(n_receivers));
}

NoisyData add_noise(const Vector& b_clean, double level, std::uint64_t seed) {
  if (!(level > 0.0)) throw ParameterDomainError("add_noise: level must be positive");
  const double bnorm = b_clean.norm();
  if (bnorm == 0.0) throw DegenerateDataError("add_noise: clean data is zero");
  Rng rng(seed);
  Vector e(b_clean.size());
  for (Index i = 0; i < e.size(); ++i) e[i] = rng.normal();
  e *= level * bnorm / e.norm();
  NoisyData out;
  out.d = b_clean + e;
  out.sigma = level * bnorm / std::sqrt(static_cast<double>(b_clean.size()));
  return out;
}

std::pair<double, double> write_pgm(const std::filesystem::path& path,
                                    const Vector& image, Index width,
                                    Index height) {
  if (image.size() != width * height) {
    throw ArgumentError("write_pgm: image size does not match dimensions");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const double lo = image.minCoeff();
  const double hi = image.maxCoeff();
  const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;
  out << "P5\n" << width << ' ' << height << "\n65535\n";
  for (Index i = 0; i < image.size(); ++i) {
    const auto v = static_cast<std::uint16_t>(std::lround((image[i] - lo) * scale));
    const char bytes[2] = {static_cast<char>(v >> 8), static_cast<char>(v & 0xff)};
    out.write(bytes, 2);
  }
  if (!out) throw IoError("failed writing " + path.string());
  return {lo, hi};
}

}  // namespace mixkry
