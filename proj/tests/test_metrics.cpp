#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "hycast/error.hpp"
#include "hycast/metrics.hpp"

using namespace hycast;

TEST_CASE("mae hand-computed cases") {
  CHECK(mae({1, 2, 3}, {1, 2, 3}) == 0.0);
  CHECK(mae({1, 2, 3}, {2, 2, 2}) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

  // Translation invariance.
  std::vector<double> a = {1.5, -2.0, 4.0};
  std::vector<double> p = {1.0, -1.0, 5.5};
  double base = mae(a, p);
  for (auto& v : a) v += 7.25;
  for (auto& v : p) v += 7.25;
  CHECK(mae(a, p) == doctest::Approx(base).epsilon(1e-15));
}

TEST_CASE("rmse hand-computed cases") {
  CHECK(rmse({0, 0}, {3, 4}) == doctest::Approx(std::sqrt(12.5)).epsilon(1e-15));
  CHECK(rmse({5, 6}, {5, 6}) == 0.0);
}

TEST_CASE("rmse dominates mae") {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> a(16), p(16);
    for (auto& v : a) v = dist(rng);
    for (auto& v : p) v = dist(rng);
    CHECK(rmse(a, p) >= mae(a, p) - 1e-12);
  }
  // Equality when all absolute errors are equal.
  CHECK(rmse({0, 0, 0}, {2, -2, 2}) == doctest::Approx(mae({0, 0, 0}, {2, -2, 2})));
}

TEST_CASE("mape hand-computed cases and zero policies") {
  MapeResult r = mape({100, 200}, {110, 180}, MapeZeroPolicy::kError);
  CHECK(r.value == doctest::Approx(0.10).epsilon(1e-15));
  CHECK(r.excluded == 0);

  CHECK(mape({3, 4}, {3, 4}, MapeZeroPolicy::kError).value == 0.0);

  CHECK_THROWS_WITH_AS(mape({100, 0, 50}, {1, 2, 3}, MapeZeroPolicy::kError),
                       doctest::Contains("[1]"), DomainError);

  MapeResult ex = mape({100, 0, 200}, {110, 5, 180},
                       MapeZeroPolicy::kExcludeWithCount);
  CHECK(ex.excluded == 1);
  CHECK(ex.value == doctest::Approx(0.10).epsilon(1e-15));

  CHECK_THROWS_AS(mape({0, 0}, {1, 1}, MapeZeroPolicy::kExcludeWithCount),
                  DomainError);
}

TEST_CASE("r_squared hand-computed cases") {
  CHECK(r_squared({1, 2, 3}, {1, 2, 3}) == 1.0);
  // Predicting the mean scores exactly zero.
  CHECK(r_squared({1, 2, 3}, {2, 2, 2}) == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(r_squared({1, 2, 3}, {1, 2, 4}) == doctest::Approx(0.5).epsilon(1e-15));

  CHECK_THROWS_AS(r_squared({5, 5, 5}, {1, 2, 3}), DomainError);
  CHECK_THROWS_AS(r_squared({1}, {1}), ContractError);
}

TEST_CASE("metrics reject mismatched or empty series") {
  CHECK_THROWS_AS(mae({1, 2}, {1}), ContractError);
  CHECK_THROWS_AS(rmse({}, {}), ContractError);
  CHECK_THROWS_AS(mape({1}, {1, 2}, MapeZeroPolicy::kError), ContractError);
}

TEST_CASE("metrics are invariant under identical reordering") {
  std::vector<double> a = {3, 1, 4, 1, 5};
  std::vector<double> p = {2, 2, 4, 0, 6};
  std::vector<double> a2 = {5, 1, 1, 4, 3};
  std::vector<double> p2 = {6, 0, 2, 4, 2};
  CHECK(mae(a, p) == doctest::Approx(mae(a2, p2)).epsilon(1e-15));
  CHECK(rmse(a, p) == doctest::Approx(rmse(a2, p2)).epsilon(1e-15));
  CHECK(mape(a, p, MapeZeroPolicy::kError).value ==
        doctest::Approx(mape(a2, p2, MapeZeroPolicy::kError).value));
  CHECK(r_squared(a, p) == doctest::Approx(r_squared(a2, p2)).epsilon(1e-15));
}

TEST_CASE("scaling behavior: absolute metrics scale, relative ones do not") {
  std::vector<double> a = {2, 4, 8, 16};
  std::vector<double> p = {3, 5, 6, 15};
  double c = 3.5;
  std::vector<double> ac = a, pc = p;
  for (auto& v : ac) v *= c;
  for (auto& v : pc) v *= c;

  CHECK(mae(ac, pc) == doctest::Approx(c * mae(a, p)).epsilon(1e-12));
  CHECK(rmse(ac, pc) == doctest::Approx(c * rmse(a, p)).epsilon(1e-12));
  CHECK(mape(ac, pc, MapeZeroPolicy::kError).value ==
        doctest::Approx(mape(a, p, MapeZeroPolicy::kError).value).epsilon(1e-12));
  CHECK(r_squared(ac, pc) == doctest::Approx(r_squared(a, p)).epsilon(1e-12));
}

TEST_CASE("evaluate_task bundles all four metrics") {
  TaskMetrics m = evaluate_task("volume", {1, 2, 3}, {1, 2, 4},
                                MapeZeroPolicy::kExcludeWithCount);
  CHECK(m.task == "volume");
  CHECK(m.n == 3);
  CHECK(m.mae == doctest::Approx(1.0 / 3.0));
  CHECK(m.r2 == doctest::Approx(0.5));
  CHECK(m.mape_excluded == 0);
  CHECK(m.rmse >= m.mae);
}
