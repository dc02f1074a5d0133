#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "infogeo/family.hpp"
#include "infogeo/fisher.hpp"
#include "oracles.hpp"

using namespace infogeo;

namespace {
Vectord vec(std::initializer_list<double> v) {
  Vectord out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}
}  // namespace

TEST_CASE("density examples") {
  const auto kg3 = Familyd::klein_gordon(3, 1.0);
  CHECK(density(kg3, vec({0, 0, 0})) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(density(kg3, vec({0.5, 0, 0})) == doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
  CHECK(density(kg3, vec({-0.5, 0, 0})) == doctest::Approx(0.367879441171).epsilon(1e-11));

  const auto g2 = Familyd::gaussian(2);
  CHECK(density(g2, vec({0, 0})) == doctest::Approx(1 / std::numbers::pi).epsilon(1e-14));

  CHECK_THROWS_AS(Familyd::klein_gordon(2, 1.0), DomainError);
  CHECK_THROWS_AS(Familyd::klein_gordon(1, 1.0), DomainError);
  CHECK_THROWS_AS(Familyd::klein_gordon(3, 0.0), DomainError);
  CHECK_THROWS_AS(density(kg3, vec({0, 0})), ArgumentError);
}

TEST_CASE("peak equals A^2 m^2") {
  for (int d = 3; d <= 6; ++d) {
    for (double m : {0.5, 1.0, 2.0}) {
      const auto fam = Familyd::klein_gordon(d, m, Vectord::Constant(d, 0.7));
      const double a = normalization_constant(d, m);
      CHECK(density(fam, fam.theta()) == doctest::Approx(a * a * m * m).epsilon(1e-14));
    }
  }
}

TEST_CASE("density stays finite far from the center") {
  const auto fam = Familyd::klein_gordon(3, 2.0);
  const double v = density(fam, vec({400, -300, 500}));
  CHECK(v == 0.0);
  CHECK(std::isfinite(log_density(fam, vec({400, -300, 500}))));
  CHECK(log_density(fam, vec({400, -300, 500})) == doctest::Approx(std::log(8.0) - 4 * 1200).epsilon(1e-14));
}

TEST_CASE("score examples") {
  const auto kg4 = Familyd::klein_gordon(4, 1.0);
  const Vectord s = score(kg4, vec({1, -2, 3, -4}));
  const double r2 = std::sqrt(2.0);
  CHECK(s(0) == doctest::Approx(r2));
  CHECK(s(1) == doctest::Approx(-r2));
  CHECK(s(2) == doctest::Approx(r2));
  CHECK(s(3) == doctest::Approx(-r2));

  const Vectord s3 = score(Familyd::klein_gordon(3, 1.0), vec({0, 1, -1}));
  CHECK(s3(0) == 0.0);
  CHECK(s3(1) == 2.0);
  CHECK(s3(2) == -2.0);

  const Vectord sg = score(Familyd::gaussian(2), vec({0.5, -0.5}));
  CHECK(sg(0) == 1.0);
  CHECK(sg(1) == -1.0);
}

TEST_CASE("marginal inverse CDF") {
  const auto kg = Familyd::klein_gordon(3, 0.5);  // Laplace scale b = 1
  CHECK(marginal_inverse_cdf(kg, 0, 0.5) == 0.0);
  const double x = marginal_inverse_cdf(kg, 0, 0.75);
  CHECK(x == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  // The marginal density is c exp(-2c|t|) with c = 0.5.
  const double mass_below = oracle::simpson_pieces([](double t) { return oracle::laplace_marginal(t, 0.5); },
                                                   {-80.0, 0.0, x});
  CHECK(std::abs(mass_below - 0.75) < 1e-8);

  const auto shifted = Familyd::klein_gordon(3, 1.0, vec({0.3, -1.2, 0}));
  CHECK(marginal_inverse_cdf(shifted, 1, 0.5) == -1.2);

  double prev = 0;
  for (double eps : {1e-2, 1e-4, 1e-8, 1e-12, 1e-15}) {
    const double v = marginal_inverse_cdf(kg, 0, 1 - eps);
    CHECK(v > prev);
    prev = v;
  }
  CHECK(prev > 30);

  CHECK_THROWS_AS(marginal_inverse_cdf(kg, 0, 0.0), ArgumentError);
  CHECK_THROWS_AS(marginal_inverse_cdf(kg, 0, 1.0), ArgumentError);
  CHECK_THROWS_AS(marginal_inverse_cdf(kg, 0, 1.5), ArgumentError);
  CHECK_THROWS_AS(marginal_inverse_cdf(kg, 3, 0.5), ArgumentError);
}

TEST_CASE("inverse CDF round trip") {
  const std::vector<Familyd> families = {Familyd::klein_gordon(4, 1.3, vec({0.2, -0.4, 1, 2})),
                                         Familyd::gaussian(2, vec({0.5, -3})),
                                         Familyd::laplace_product(vec({0.5, 3}), vec({1, -1}))};
  for (const auto& fam : families) {
    for (int axis = 0; axis < fam.dim(); ++axis) {
      for (int k = 1; k <= 99; ++k) {
        const double u = k / 100.0;
        CHECK(std::abs(marginal_cdf(fam, axis, marginal_inverse_cdf(fam, axis, u)) - u) < 1e-10);
      }
    }
  }
}

TEST_CASE("analytic metric") {
  CHECK(analytic_metric(Familyd::klein_gordon(4, 1.0))->g.isApprox(2 * Matrixd::Identity(4, 4)));
  CHECK(analytic_metric(Familyd::klein_gordon(3, 1.0))->g.isApprox(4 * Matrixd::Identity(3, 3)));
  CHECK(analytic_metric(Familyd::klein_gordon(6, 2.0))->g.isApprox(4 * Matrixd::Identity(6, 6)));
  for (int d = 1; d <= 5; ++d)
    CHECK(analytic_metric(Familyd::gaussian(d))->g.isApprox(2 * Matrixd::Identity(d, d)));
  const auto lp = analytic_metric(Familyd::laplace_product(vec({1, 2, 3}), Vectord::Zero(3)));
  CHECK(lp->g.diagonal().isApprox(vec({1, 4, 9})));
  CHECK(lp->method == MetricMethod::analytic);
  CHECK(lp->error.isZero());
}

TEST_CASE("normalization of every kind") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> shift(-5, 5);
  const std::vector<Familyd> families = {
      Familyd::klein_gordon(3, 1.0), Familyd::klein_gordon(5, 0.7), Familyd::gaussian(3),
      Familyd::laplace_product(vec({0.4, 1.5, 4.0}), Vectord::Zero(3))};
  for (const auto& base : families) {
    Vectord theta(base.dim());
    for (int a = 0; a < base.dim(); ++a) theta(a) = shift(rng);
    const auto fam = base.with_theta(theta);
    const auto spec = family_quadrature_spec(fam);
    const auto sep = expectation(fam, SeparableFunction<double>{});
    CHECK(std::abs(sep.value - 1) < 1e-6);
    if (fam.dim() <= 3) {
      const auto ten = integrate_rd_tensor<double>([&](const Vectord& x) { return density(fam, x); }, fam.dim(), spec);
      CHECK(std::abs(ten.value - 1) < 1e-6);
    }
  }
}

TEST_CASE("reflection symmetry and factorization") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0, 2);
  const std::vector<Familyd> families = {Familyd::klein_gordon(4, 1.7, vec({0.25, -0.5, 1, 0})),
                                         Familyd::gaussian(3, vec({0.5, 0.25, -1})),
                                         Familyd::laplace_product(vec({0.3, 2.5}), vec({-0.75, 2}))};
  for (const auto& fam : families) {
    const auto ps = *fam.product_structure();
    for (int i = 0; i < 1000; ++i) {
      Vectord v(fam.dim());
      for (int a = 0; a < fam.dim(); ++a) v(a) = normal(rng);
      const double plus = density(fam, (fam.theta() + v).eval());
      const double minus = density(fam, (fam.theta() - v).eval());
      CHECK(plus == doctest::Approx(minus).epsilon(1e-13));

      const Vectord x = fam.theta() + v;
      double product = 1;
      for (int a = 0; a < fam.dim(); ++a) product *= ps.factors[static_cast<std::size_t>(a)].density(x(a));
      CHECK(density(fam, x) == doctest::Approx(product).epsilon(1e-13));
    }
  }
}

TEST_CASE("long double instantiation") {
  const auto fam = Family<long double>::klein_gordon(3, 1.0L);
  Vector<long double> x = Vector<long double>::Zero(3);
  x(0) = 0.5L;
  CHECK(std::abs(density(fam, x) - std::exp(-1.0L)) < 1e-17L);
  CHECK(analytic_metric(fam)->g(0, 0) == 4.0L);
}
