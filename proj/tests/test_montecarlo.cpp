#include <doctest.h>

#include <cmath>
#include <cstring>

#include "infogeo/family.hpp"
#include "infogeo/fisher.hpp"
#include "infogeo/montecarlo.hpp"

using namespace infogeo;

namespace {
Vectord vec(std::initializer_list<double> v) {
  Vectord out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

bool bit_equal(double a, double b) { return std::memcmp(&a, &b, sizeof a) == 0; }
}  // namespace

TEST_CASE("counter RNG produces open-interval uniforms") {
  CounterRng rng(42, 0);
  double lo = 1, hi = 0, sum = 0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    lo = std::min(lo, u);
    hi = std::max(hi, u);
    sum += u;
  }
  CHECK(lo > 0);
  CHECK(hi < 1);
  CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));

  CounterRng a(42, 3), b(42, 3), c(42, 4);
  CHECK(a.next() == b.next());
  CHECK(a.next() != c.next());
}

TEST_CASE("constant integrand") {
  const auto kg = Familyd::klein_gordon(3, 1.0);
  MonteCarloSpec spec;
  spec.n_samples = 10000;
  const auto est = mc_expectation(kg, [](const Vectord&) { return 1.0; }, spec);
  CHECK(est.value == 1.0);
  CHECK(est.error_estimate == 0.0);
  CHECK(est.method == IntegrationMethod::montecarlo);
  CHECK(est.evaluations == 10000);
}

TEST_CASE("coordinate mean") {
  const auto kg = Familyd::klein_gordon(3, 1.0, vec({0.3, -1.2, 0}));
  MonteCarloSpec spec;
  spec.n_samples = 1'000'000;
  spec.seed = 20120402;
  for (int a = 0; a < 3; ++a) {
    const auto est = mc_expectation(kg, [a](const Vectord& x) { return x(a); }, spec);
    CHECK(std::abs(est.value - kg.theta()(a)) <= 4 * est.error_estimate);
  }
}

TEST_CASE("squared score is constant almost surely") {
  const auto kg = Familyd::klein_gordon(3, 1.0);
  MonteCarloSpec spec;
  spec.n_samples = 1000;
  const auto est = mc_expectation(kg, [&](const Vectord& x) {
    const Vectord s = score(kg, x);
    return s(0) * s(0);
  }, spec);
  const double rate = kg.rates()(0);
  CHECK(est.value == rate * rate);
  CHECK(est.value == 4.0);
  CHECK(est.error_estimate == 0.0);
}

TEST_CASE("zero-mean score") {
  for (const auto& fam : {Familyd::klein_gordon(4, 1.3, vec({0.5, -0.5, 1, 0})), Familyd::gaussian(2, vec({1, 2})),
                          Familyd::laplace_product(vec({0.5, 2.0, 1.0}), vec({0, 0.3, -0.3}))}) {
    MonteCarloSpec spec;
    spec.n_samples = 200'000;
    spec.seed = 9;
    for (int a = 0; a < fam.dim(); ++a) {
      const auto mc = mc_expectation(fam, [&](const Vectord& x) { return score(fam, x)(a); }, spec);
      CHECK(std::abs(mc.value) <= 4 * mc.error_estimate);

      const auto ps = *fam.product_structure();
      std::vector<std::function<double(double)>> factors;
      for (int i = 0; i < fam.dim(); ++i) {
        const auto f = ps.factors[static_cast<std::size_t>(i)];
        if (i == a)
          factors.emplace_back([f](double t) { return f.score(t) * f.density(t); });
        else
          factors.emplace_back([f](double t) { return f.density(t); });
      }
      const auto quad = integrate_rd_separable<double>(factors, family_quadrature_spec(fam));
      CHECK(std::abs(quad.value) < 1e-6);
    }
  }
}

TEST_CASE("results are independent of workers and chunking") {
  const auto kg = Familyd::klein_gordon(4, 0.8, vec({0.1, 0.2, 0.3, 0.4}));
  auto f = [](const Vectord& x) { return x(0) * x(1) + x(2) * x(2); };
  MonteCarloSpec spec;
  spec.n_samples = 100'003;
  spec.seed = 77;
  spec.workers = 1;
  spec.chunk_size = 65536;
  const auto ref = mc_expectation(kg, f, spec);
  for (int workers : {1, 2, 3, 8}) {
    for (std::int64_t chunk : {1, 4096, 10000, 1'000'000}) {
      spec.workers = workers;
      spec.chunk_size = chunk;
      const auto est = mc_expectation(kg, f, spec);
      CHECK(bit_equal(est.value, ref.value));
      CHECK(bit_equal(est.error_estimate, ref.error_estimate));
    }
  }
  spec.seed = 78;
  CHECK(!bit_equal(mc_expectation(kg, f, spec).value, ref.value));
}

TEST_CASE("Monte Carlo agrees with quadrature on 20 seeded trials") {
  const auto kg = Familyd::klein_gordon(3, 1.0, vec({0.3, -1.2, 0}));
  MomentSettings<double> quad;
  for (int axis = 0; axis < 3; ++axis) {
    const double first = coordinate_mean(kg, axis, quad).value;
    const double second = expectation(kg, coordinate_power<double>(3, axis, 2), quad).value;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      MonteCarloSpec spec;
      spec.n_samples = 20'000;
      spec.seed = seed;
      const auto m1 = mc_expectation(kg, [axis](const Vectord& x) { return x(axis); }, spec);
      const auto m2 = mc_expectation(kg, [axis](const Vectord& x) { return x(axis) * x(axis); }, spec);
      CHECK(std::abs(m1.value - first) <= 4 * m1.error_estimate);
      CHECK(std::abs(m2.value - second) <= 4 * m2.error_estimate);
    }
  }
}

TEST_CASE("moment accumulator merge matches a single pass") {
  MomentAccumulator<double> whole(1), left(1), right(1);
  Vectord v(1);
  for (int i = 0; i < 100; ++i) {
    v(0) = std::sin(i * 0.37) * 3 + 1;
    whole.push(v);
    (i < 37 ? left : right).push(v);
  }
  left.merge(right);
  CHECK(left.mean(0) == doctest::Approx(whole.mean(0)).epsilon(1e-14));
  CHECK(left.m2(0) == doctest::Approx(whole.m2(0)).epsilon(1e-12));
  CHECK(left.count == 100);
}

TEST_CASE("invalid Monte Carlo spec") {
  MonteCarloSpec spec;
  spec.n_samples = 0;
  CHECK_THROWS_AS(mc_expectation(Familyd::gaussian(1), [](const Vectord&) { return 1.0; }, spec), ArgumentError);
}
