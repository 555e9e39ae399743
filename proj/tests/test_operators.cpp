#include "mixkry/covariance.hpp"
#include "mixkry/errors.hpp"
#include "mixkry/kernels.hpp"
#include "mixkry/linear_operator.hpp"
#include "mixkry/matrix_market.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

using namespace mixkry;

TEST_CASE("kernel_eval basic values") {
  KernelSpec se{KernelFamily::SquaredExponential, 1.0};
  CHECK(kernel_eval(se, 0.0) == 1.0);

  KernelSpec mat{KernelFamily::Matern, 1.0, 0.5};
  CHECK(kernel_eval(mat, 1.0) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(detail::matern_bessel(0.5, 1.0, 1.0) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-12));

  KernelSpec sinc{KernelFamily::Sinc, 1.0, std::numbers::pi};
  CHECK(kernel_eval(sinc, 0.0) == 1.0);
  CHECK(kernel_eval(sinc, 1e-12) == doctest::Approx(1.0));

  KernelSpec rq{KernelFamily::RationalQuadratic, 0.1, 2.0};
  CHECK(kernel_eval(rq, 0.0) == 1.0);
}

TEST_CASE("matern closed forms agree with the Bessel form") {
  for (double nu : {0.5, 1.5, 2.5})
    for (double r : {0.01, 0.1, 0.5, 1.0, 3.0}) {
      const double a = detail::matern_half_integer(nu, 0.3, r);
      const double b = detail::matern_bessel(nu, 0.3, r);
      CHECK(a == doctest::Approx(b).epsilon(1e-10));
    }
  CHECK(detail::is_half_integer_matern(1.5));
  CHECK_FALSE(detail::is_half_integer_matern(2.0));
}

TEST_CASE("kernel ranges") {
  for (auto fam : {KernelFamily::SquaredExponential, KernelFamily::Matern,
                   KernelFamily::GammaExponential, KernelFamily::RationalQuadratic}) {
    KernelSpec s{fam, 0.2, 1.3, 1.5};
    for (double r = 0.0; r < 2.0; r += 0.07) {
      const double v = kernel_eval(s, r);
      CHECK(v > 0.0);
      CHECK(v <= 1.0);
    }
  }
  KernelSpec sinc{KernelFamily::Sinc, 0.1, 3.0};
  for (double r = 0.0; r < 2.0; r += 0.03) CHECK(std::abs(kernel_eval(sinc, r)) <= 1.0);
}

TEST_CASE("kernel parameter errors") {
  CHECK_THROWS_AS(kernel_eval(KernelSpec{KernelFamily::Matern, -1.0, 0.5}, 1.0),
                  ParameterDomainError);
  CHECK_THROWS_AS(kernel_eval(KernelSpec{KernelFamily::Matern, 1.0, 0.0}, 1.0),
                  ParameterDomainError);
  CHECK_THROWS_AS(kernel_eval(KernelSpec{KernelFamily::GammaExponential, 1.0, 1.0, 2.5}, 1.0),
                  ParameterDomainError);
  CHECK_THROWS_AS(kernel_eval(KernelSpec{}, -1.0), ParameterDomainError);
  CHECK(parse_kernel_family("rq") == KernelFamily::RationalQuadratic);
  CHECK(parse_kernel_family("matern") == KernelFamily::Matern);
  CHECK_THROWS(parse_kernel_family("bogus"));
}

TEST_CASE("kernel operator") {
  const KernelSpec mat{KernelFamily::Matern, 1.0, 0.5};
  const Matrix one = to_dense(build_kernel_operator(mat, Grid::unit_square(1)));
  CHECK(one.rows() == 1);
  CHECK(one(0, 0) == 1.0);

  Grid two{2, 1, 1.0, 1.0};
  const Matrix q = kernel_matrix(mat, two);
  CHECK(q(0, 0) == 1.0);
  CHECK(q(0, 1) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(q(1, 0) == q(0, 1));

  std::mt19937_64 rng(3);
  const auto grid = Grid::unit_square(6);
  const LinearOperator op = build_kernel_operator(KernelSpec{KernelFamily::SquaredExponential, 0.3}, grid);
  const Vector x = oracle::random_vector(grid.size(), rng);
  CHECK((op.apply(x) - op.apply_transpose(x)).norm() <= 1e-14 * x.norm());
  CHECK(to_dense(op).diagonal().isOnes(0.0));

  CHECK_THROWS_AS(kernel_matrix(mat, Grid::unit_square(10), 50), CapacityError);
}

TEST_CASE("sample covariance") {
  const Vector s{{1.0, 2.0, 3.0}};
  const std::vector<Vector> same(4, s);
  const SampleFactor z = sample_covariance(same);
  CHECK(z.S.isZero(0.0));
  CHECK(z.mean == s);

  const std::vector<Vector> pair{Vector{{1.0, 0.0}}, Vector{{-1.0, 0.0}}};
  const SampleFactor f = sample_covariance(pair);
  CHECK(f.mean.isZero(0.0));
  const Matrix qhat = f.S * f.S.transpose();
  CHECK(qhat(0, 0) == doctest::Approx(1.0));
  CHECK(qhat(0, 1) == 0.0);
  CHECK(qhat(1, 1) == 0.0);

  std::mt19937_64 rng(5);
  std::vector<Vector> samples;
  for (int i = 0; i < 5; ++i) samples.push_back(oracle::random_vector(4, rng));
  const SampleFactor g = sample_covariance(samples);
  const Matrix brute = oracle::brute_covariance(samples);
  CHECK((g.S * g.S.transpose() - brute).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(g.trace() == doctest::Approx(brute.trace()).epsilon(1e-12));
  CHECK(g.trace_of_square() == doctest::Approx((brute * brute).trace()).epsilon(1e-12));
  const Vector x = oracle::random_vector(4, rng);
  CHECK((g.apply(x) - brute * x).norm() <= 1e-12);

  CHECK_THROWS_AS(sample_covariance(std::vector<Vector>{}), ArgumentError);
  CHECK_THROWS_AS(sample_covariance(std::vector<Vector>{Vector(2), Vector(3)}), ArgumentError);
}

TEST_CASE("mixed_apply") {
  std::mt19937_64 rng(7);
  const Vector x = oracle::random_vector(2, rng);
  PriorSpec p;
  p.mean = Vector::Zero(2);
  p.q1 = make_diagonal_operator(Vector{{2.0, 2.0}});
  p.q2 = make_diagonal_operator(Vector{{0.0, 4.0}});
  CHECK(mixed_apply(p, 1.0, x) == p.q1.apply(x));
  const Vector y = mixed_apply(p, 0.5, Vector{{1.0, 1.0}});
  CHECK(y[0] == doctest::Approx(1.0));
  CHECK(y[1] == doctest::Approx(3.0));

  PriorSpec id;
  id.mean = Vector::Zero(2);
  id.q1 = make_identity_operator(2);
  id.q2 = make_identity_operator(2);
  CHECK((mixed_apply(id, 0.3, x) - x).norm() <= 1e-15);
  CHECK_THROWS_AS(mixed_apply(p, 0.5, Vector(3)), ArgumentError);
}

TEST_CASE("noise whitener") {
  const NoiseWhitener iso = noise_whitener(3, 4.0);
  CHECK((to_dense(iso.l_r) - 0.5 * Matrix::Identity(3, 3)).norm() <= 1e-15);

  const NoiseWhitener d = noise_whitener(Vector{{4.0, 9.0}});
  const Matrix l = to_dense(d.l_r);
  CHECK(l(0, 0) == doctest::Approx(0.5));
  CHECK(l(1, 1) == doctest::Approx(1.0 / 3.0));

  std::mt19937_64 rng(9);
  Vector var(6);
  for (int i = 0; i < 6; ++i) var[i] = 0.1 + std::abs(oracle::random_vector(1, rng)[0]);
  const NoiseWhitener w = noise_whitener(var);
  const Vector x = oracle::random_vector(6, rng);
  const Vector direct = x.cwiseQuotient(var);
  CHECK((w.l_r.apply_transpose(w.l_r.apply(x)) - direct).norm() <= 1e-12 * direct.norm());
  CHECK((w.r_inv.apply(x) - direct).norm() <= 1e-12 * direct.norm());

  CHECK_THROWS_AS(noise_whitener(Vector{{1.0, 0.0}}), DefinitenessError);
}

TEST_CASE("operators agree with dense products") {
  std::mt19937_64 rng(11);
  const Matrix a = oracle::random_matrix(5, 4, rng);
  const Vector x = oracle::random_vector(4, rng);
  const Vector y = oracle::random_vector(5, rng);
  const LinearOperator op = make_dense_operator(a);
  CHECK((op * x - a * x).norm() <= 1e-14);
  CHECK((op.apply_transpose(y) - a.transpose() * y).norm() <= 1e-14);
  CHECK((to_dense(op.transpose()) - a.transpose()).norm() <= 1e-14);

  const SparseMatrix s = a.sparseView();
  const LinearOperator sp = make_sparse_operator(s);
  CHECK((sp * x - a * x).norm() <= 1e-14);
  CHECK((sp.apply_transpose(y) - a.transpose() * y).norm() <= 1e-14);

  const LinearOperator c = make_combination(2.0, make_identity_operator(4), -1.0,
                                            make_dense_operator(Matrix(a.topRows(4))));
  CHECK((c * x - (2.0 * x - a.topRows(4) * x)).norm() <= 1e-13);
  CHECK(make_zero_operator(3, 4).is_zero());
  CHECK_THROWS_AS(op.apply(Vector(3)), ArgumentError);
}

TEST_CASE("matrix market round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "mixkry_mm_test";
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(13);
  const Matrix a = oracle::random_matrix(4, 3, rng);
  mm::write_dense(dir / "a.mtx", a);
  CHECK(mm::read_dense(dir / "a.mtx") == a);

  const Vector v = oracle::random_vector(7, rng);
  mm::write_vector(dir / "v.mtx", v);
  CHECK(mm::read_vector(dir / "v.mtx") == v);

  SparseMatrix s(3, 3);
  s.insert(0, 1) = 0.25;
  s.insert(2, 2) = -1.5;
  s.makeCompressed();
  mm::write_sparse(dir / "s.mtx", s);
  const SparseMatrix t = mm::read_sparse(dir / "s.mtx");
  CHECK(Matrix(t) == Matrix(s));

  CHECK_THROWS_AS(mm::read_dense(dir / "missing.mtx"), IoError);
  std::filesystem::remove_all(dir);
}
