#include <atomic>
#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "hettrim/errors.hpp"
#include "hettrim/normal.hpp"
#include "hettrim/parallel.hpp"
#include "hettrim/rng.hpp"

using namespace hettrim;

namespace {

// Inverts normal_cdf by bisection; independent of the rational approximation.
double bisect_quantile(double p) {
  double lo = -40.0;
  double hi = 40.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (normal_cdf(mid) < p ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("normal_quantile matches reference values") {
  CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-14));
  CHECK(normal_quantile(0.84) == doctest::Approx(0.994457883209753).epsilon(1e-14));
  CHECK(normal_quantile(0.5) == 0.0);
  CHECK(normal_quantile(1e-10) == doctest::Approx(-6.361340902404056).epsilon(1e-13));
  CHECK(normal_quantile(0.999999) == doctest::Approx(4.753424308817087).epsilon(1e-13));
}

TEST_CASE("normal_quantile agrees with bisection of the CDF to 1e-8") {
  for (double p = 0.001; p < 1.0; p += 0.0137) {
    CHECK(std::fabs(normal_quantile(p) - bisect_quantile(p)) < 1e-8);
  }
}

TEST_CASE("normal_quantile rejects p outside (0, 1)") {
  CHECK_THROWS_AS(normal_quantile(0.0), ValidationError);
  CHECK_THROWS_AS(normal_quantile(1.0), ValidationError);
  CHECK_THROWS_AS(normal_quantile(std::nan("")), ValidationError);
}

TEST_CASE("counter rng is a pure function of key and counter") {
  CounterRng a(42);
  CounterRng b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  CHECK(CounterRng::at(42, 7) == CounterRng::at(42, 7));
  CHECK(CounterRng::at(42, 7) != CounterRng::at(43, 7));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
}

TEST_CASE("uniform draws lie in (0, 1) and index draws in range") {
  CounterRng rng(9);
  double sum = 0.0;
  const int draws = 200000;
  for (int i = 0; i < draws; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / draws == doctest::Approx(0.5).epsilon(0.005));
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.index(7);
    REQUIRE(v < 7);
    seen.insert(v);
  }
  CHECK(seen.size() == 7);
}

TEST_CASE("parallel_for writes by index regardless of worker count") {
  for (unsigned threads : {1u, 3u, 8u}) {
    std::vector<int> out(1000, -1);
    parallel_for(out.size(), threads, [&](std::size_t i) { out[i] = static_cast<int>(i * i % 97); });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i * i % 97));
  }
}

TEST_CASE("parallel_for rethrows task failures") {
  CHECK_THROWS_AS(parallel_for(100, 4,
                               [](std::size_t i) {
                                 if (i == 37) throw NumericError("boom");
                               }),
                  NumericError);
}
