#include <doctest.h>

#include <future>
#include <random>
#include <stdexcept>
#include <vector>

#include "frozen_values.hpp"
#include "qavg/engine.hpp"
#include "qavg/errors.hpp"

using namespace qavg;

namespace {

RecursionParams critical(std::uint32_t m) { return {m, Rational(1), MeanKind::arithmetic()}; }

template <typename Golden>
void check_prefix(const SequenceRun& run, const Golden& golden) {
  REQUIRE(run.size() == golden.size());
  for (std::size_t i = 0; i < golden.size(); ++i) CHECK(run.values[i] == golden[i]);
}

}  // namespace

TEST_CASE("engine: golden critical prefixes") {
  check_prefix(run(critical(1), 15), testing::kGoldenM1);
  check_prefix(run(critical(2), 16), testing::kGoldenM2);
  check_prefix(run(critical(3), 17), testing::kGoldenM3);
}

TEST_CASE("engine: subcritical runs are identically one") {
  auto r = run({4, Rational(BigInt(1), BigInt(2)), MeanKind::arithmetic()}, 100);
  REQUIRE(r.complete());
  for (auto v : r.values) CHECK(v == 1);
}

TEST_CASE("engine: subcritical freeze holds for random alpha < 1") {
  std::mt19937_64 rng(2024);
  for (int i = 0; i < 40; ++i) {
    std::uint64_t den = 2 + rng() % 49;
    std::uint64_t num = 1 + rng() % (den - 1);
    std::uint32_t m = 1 + rng() % 8;
    auto r = run({m, Rational(BigInt(num), BigInt(den)), MeanKind::arithmetic()}, 2000);
    REQUIRE(r.complete());
    for (auto v : r.values) {
      if (v != 1) {
        FAIL("non-one value for alpha=", num, "/", den, " m=", m);
      }
    }
  }
}

TEST_CASE("engine: step matches the known openings") {
  std::vector<std::uint64_t> h1 = {1};
  CHECK(std::get<std::uint64_t>(step(critical(1), h1, 2)) == 2);

  std::vector<std::uint64_t> h2 = {1, 1};
  CHECK(std::get<std::uint64_t>(step(critical(2), h2, 3)) == 2);

  std::vector<std::uint64_t> h3 = {1, 2, 2};
  CHECK(std::get<std::uint64_t>(step(critical(1), h3, 4)) == 3);
}

TEST_CASE("engine: step reports the smallest failing branch") {
  // Both branches point past the front; j = 1 must win.
  std::vector<std::uint64_t> history = {1, 6, 7};
  auto result = step({2, Rational(2), MeanKind::arithmetic()}, history, 4);
  auto broke = std::get<Breakdown>(result);
  CHECK(broke.step == 4);
  CHECK(broke.branch == 1);
  CHECK(broke.argument == -3);
}

TEST_CASE("engine: step validates its window") {
  std::vector<std::uint64_t> history = {1, 1};
  CHECK_THROWS_AS(step(critical(2), history, 2), std::invalid_argument);  // n <= m
  CHECK_THROWS_AS(step(critical(1), history, 5), std::invalid_argument);  // history short
}

TEST_CASE("engine: m=1 alpha=3/2 breaks at step 7 with a pinned prefix") {
  auto r = run({1, Rational(BigInt(3), BigInt(2)), MeanKind::arithmetic()}, 10'000);
  REQUIRE_FALSE(r.complete());
  CHECK(*r.breakdown == testing::kBreakdownM1Alpha3Over2);
  std::vector<std::uint64_t> expected = {1, 2, 2, 4, 2, 7};
  CHECK(r.values == expected);
  CHECK(r.size() == r.breakdown->step - 1);
}

TEST_CASE("engine: breakdown argument is never in [1, n-1]") {
  for (const Breakdown& b : {testing::kBreakdownM1Alpha5Over4, testing::kBreakdownM1Alpha3Over2,
                             testing::kBreakdownM1Alpha2}) {
    CHECK(b.argument < 1);
    CHECK(b.step > 1);
  }
}

TEST_CASE("engine: first differences") {
  auto diffs = first_differences(run(critical(1), 10));
  CHECK(diffs == std::vector<std::int64_t>{1, 0, 1, 0, 0, 1, 0, 0, 0});

  auto frozen = run({2, Rational(BigInt(9), BigInt(10)), MeanKind::arithmetic()}, 50);
  for (auto d : first_differences(frozen)) CHECK(d == 0);

  auto diffs3 = first_differences(run(critical(3), 6));
  CHECK(diffs3 == std::vector<std::int64_t>{0, 0, 1, 0, 1});

  SequenceRun tiny;
  tiny.values = {1};
  CHECK_THROWS_AS(first_differences(tiny), std::invalid_argument);
}

TEST_CASE("engine: critical runs are slow sequences") {
  for (std::uint32_t m = 1; m <= 8; ++m) {
    auto diffs = first_differences(run(critical(m), 200'000));
    for (auto d : diffs) {
      if (d != 0 && d != 1) {
        FAIL("difference ", d, " at m=", m);
      }
    }
  }
}

TEST_CASE("engine: argument safety on a completed run") {
  auto r = run(critical(3), 10'000);
  for (std::uint64_t n = 4; n <= r.size(); ++n) {
    for (std::uint32_t j = 1; j <= 3; ++j) {
      std::uint64_t arg = n - r.at(n - j);
      CHECK(arg >= 1);
      CHECK(arg <= n - 1);
    }
  }
}

TEST_CASE("engine: determinism across repeated and concurrent runs") {
  RecursionParams params{3, Rational(BigInt(5), BigInt(4)), MeanKind::arithmetic()};
  auto baseline = run(params, 50'000);
  CHECK(run(params, 50'000).values == baseline.values);

  auto f1 = std::async(std::launch::async, [&] { return run(params, 50'000); });
  auto f2 = std::async(std::launch::async, [&] { return run(params, 50'000); });
  CHECK(f1.get().values == baseline.values);
  CHECK(f2.get().values == baseline.values);
}

TEST_CASE("engine: parameter and capacity errors") {
  CHECK_THROWS_AS(run({0, Rational(1), MeanKind::arithmetic()}, 10), std::invalid_argument);
  CHECK_THROWS_AS(run({1, Rational(0), MeanKind::arithmetic()}, 10), std::invalid_argument);
  CHECK_THROWS_AS(run({1, Rational(-1), MeanKind::arithmetic()}, 10), std::invalid_argument);
  CHECK_THROWS_AS(run({4, Rational(1), MeanKind::arithmetic()}, 3), std::invalid_argument);
  CHECK_THROWS_AS(run(critical(1), 200, 100), CapacityError);
}

TEST_CASE("engine: value overflow is a hard error") {
  BigInt a = boost::multiprecision::pow(BigInt(2), 64);
  CHECK_THROWS_AS(run({1, Rational(a, BigInt(1)), MeanKind::arithmetic()}, 2), CapacityError);
}

TEST_CASE("engine: n_terms == m returns just the initial segment") {
  auto r = run(critical(5), 5);
  REQUIRE(r.complete());
  CHECK(r.values == std::vector<std::uint64_t>(5, 1));
}
