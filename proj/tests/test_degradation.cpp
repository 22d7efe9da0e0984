#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "microgrid/degradation.hpp"
#include "scu/errors.hpp"

using namespace microgrid::degradation;

TEST_SUITE("degradation") {

TEST_CASE("rainflow_4p condition") {
  const std::vector<double> closes{0, 1, 3, 2, 4};
  const std::vector<double> open{2, 5, 3, 4};
  const std::vector<double> flat{0, 0, 0, 0};
  CHECK(rainflow_4p(closes));
  CHECK_FALSE(rainflow_4p(open));
  CHECK(rainflow_4p(flat));
  const std::vector<double> short_r{1, 2, 3};
  CHECK_THROWS_AS(rainflow_4p(short_r), scu::ContractViolation);
}

TEST_CASE("hysteresis filter") {
  auto r = hysteresis_filter({1, 2, 3});
  CHECK(r.window == std::array<double, 3>{1, 3, 3});
  CHECK_FALSE(r.turning_point);

  r = hysteresis_filter({1, 3, 2});
  CHECK(r.window == std::array<double, 3>{3, 2, 2});
  CHECK(r.turning_point);

  r = hysteresis_filter({1, 2, 2});
  CHECK(r.window == std::array<double, 3>{1, 2, 2});
  CHECK_FALSE(r.turning_point);

  // Monotone windows never flag a turning point.
  CHECK_FALSE(hysteresis_filter({3, 2, 1}).turning_point);
  CHECK_FALSE(hysteresis_filter({0.1, 0.2, 0.3}).turning_point);
}

TEST_CASE("discretize rounds half away from zero") {
  CHECK(discretize(0.123, 0.01) == doctest::Approx(0.12).epsilon(1e-12));
  CHECK(discretize(0.125, 0.01) == doctest::Approx(0.13).epsilon(1e-12));
  CHECK(discretize(0.0, 0.01) == 0.0);
}

TEST_CASE("switching points") {
  const double w = 0.01;
  SUBCASE("monotone ramp keeps no interior turning point") {
    SwitchingBuffer b = seed_buffer(0.1, w);
    for (double x : {0.2, 0.3}) update_switching_points(b, x, w);
    REQUIRE(b.points.size() == 1);
    CHECK(b.points[0] == doctest::Approx(0.1));
  }
  SUBCASE("closed cycle is rained out") {
    SwitchingBuffer b = seed_buffer(0.1, w);
    for (double x : {0.5, 0.2, 0.6}) update_switching_points(b, x, w);
    REQUIRE(b.points.size() == 1);
    CHECK(b.points[0] == doctest::Approx(0.1));
  }
  SUBCASE("constant input") {
    SwitchingBuffer b = seed_buffer(0.4, w);
    for (int i = 0; i < 50; ++i) update_switching_points(b, 0.4, w);
    CHECK(b.points.size() == 1);
  }
  SUBCASE("entries are multiples of w and memory is capped") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    SwitchingBuffer b = seed_buffer(0.5, w);
    for (int i = 0; i < 20000; ++i) {
      update_switching_points(b, u(rng), w);
      CHECK(b.points.size() <= 102);
    }
    for (double p : b.points) CHECK(std::abs(p / w - std::round(p / w)) < 1e-9);
  }
}

TEST_CASE("cycle step cost") {
  const Params p;  // alpha_d 5, beta 1, w 0.01
  CHECK(std::abs(cycle_step_cost(0.5, 0.1, 0.4, p) - 5.0 * (std::exp(0.2) - std::exp(0.1))) < 1e-9);
  CHECK(cycle_step_cost(0.5, 0.0, 0.4, p) == 0.0);
  // Negative raw value falls back to the normalized linear form.
  CHECK(std::abs(cycle_step_cost(0.5, -0.1, 0.4, p) - 0.1 * 5.0 * std::expm1(0.01) / 0.01) < 1e-9);
  CHECK(std::abs(cycle_step_cost(0.5, -0.1, 0.4, p) - 0.50250835) < 1e-8);
}

TEST_CASE("linear cost") {
  CHECK(linear_step_cost(0.1, 5.0) == doctest::Approx(0.5));
  CHECK(linear_step_cost(0.0, 5.0) == 0.0);
  CHECK(linear_step_cost(-0.2, 5.0) == doctest::Approx(1.0));
}

TEST_CASE("offline oracle") {
  const Params p;
  std::vector<double> ramp;
  for (int i = 10; i <= 90; ++i) ramp.push_back(i / 100.0);
  // One half cycle of depth 0.8 at half of 2 alpha_d (e^0.8 - 1).
  CHECK(std::abs(offline_rainflow_oracle(ramp, p) - 5.0 * std::expm1(0.8)) < 1e-9);
  const auto online = online_step_costs(ramp, p);
  CHECK(std::accumulate(online.begin(), online.end(), 0.0) == doctest::Approx(offline_rainflow_oracle(ramp, p)));

  const std::vector<double> flat(100, 0.37);
  CHECK(offline_rainflow_oracle(flat, p) == 0.0);
  const auto flat_online = online_step_costs(flat, p);
  CHECK(std::accumulate(flat_online.begin(), flat_online.end(), 0.0) == 0.0);

  std::mt19937_64 rng(11);
  std::normal_distribution<double> n(0.0, 0.02);
  std::vector<double> walk{0.5};
  for (int i = 1; i < 200; ++i) walk.push_back(std::clamp(walk.back() + n(rng), 0.0, 1.0));
  const auto c = online_step_costs(walk, p);
  const double on = std::accumulate(c.begin(), c.end(), 0.0);
  const double off = offline_rainflow_oracle(walk, p);
  CHECK(std::abs(on - off) / off < 0.05);
  for (double x : c) CHECK(x >= 0.0);

  const std::vector<double> one{0.5};
  CHECK_THROWS(offline_rainflow_oracle(one, p));
}

TEST_CASE("parameter validation") {
  CHECK_NOTHROW(Params{}.validate());
  CHECK_THROWS(Params{-1.0, 1.0, 0.01}.validate());
  CHECK_THROWS(Params{5.0, 0.0, 0.01}.validate());
  CHECK_THROWS(Params{5.0, 1.0, 1.0}.validate());
}

}
