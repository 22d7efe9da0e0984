#include <doctest.h>

#include <cmath>
#include <numeric>
#include <sstream>

#include "microgrid/exogenous.hpp"

using namespace microgrid;

namespace {

ExogenousSeries parse(const std::string& text) {
  std::istringstream in(text);
  return parse_series(in, "t.csv");
}

}  // namespace

TEST_SUITE("exogenous") {

TEST_CASE("parse") {
  const auto s = parse("minute,demand_kw,wind_avail_kw\n0,320,272\n1,318,270\n2,321,268\n");
  CHECK(s.length() == 3);
  CHECK(s.at(1) == scu::Exogenous{318.0, 270.0});
  CHECK(s.at(4) == s.at(1));  // wraps
  CHECK(parse("0,320,272\n1,318,270\n2,321,268").length() == 3);
  CHECK(parse("10,320,272\r\n11,318,270\r\n").length() == 2);
}

TEST_CASE("parse errors carry the line") {
  try {
    parse("minute,demand_kw,wind_avail_kw\n0,320,272\n1,318,450\n");
    FAIL("expected a range error");
  } catch (const SeriesError& e) {
    CHECK(e.line() == 3);
    CHECK(std::string(e.what()).find("400") != std::string::npos);
  }
  try {
    parse("0,320,272\n1,318\n");
    FAIL("expected a parse error");
  } catch (const SeriesError& e) {
    CHECK(e.line() == 2);
  }
  CHECK_THROWS_AS(parse("0,320,272\n2,318,270\n"), SeriesError);
  CHECK_THROWS_AS(parse("0,-1,272\n"), SeriesError);
  CHECK_THROWS_AS(parse("0,abc,272\n"), SeriesError);
  CHECK_THROWS_AS(parse(""), SeriesError);
  CHECK_THROWS_AS(load_series("/nonexistent/series.csv"), SeriesError);
}

TEST_CASE("write and read back") {
  const auto s = synth_series(5, 1);
  std::stringstream buf;
  write_series(buf, s);
  CHECK(parse_series(buf) == s);
}

TEST_CASE("synthetic series") {
  const auto a = synth_series(42, 10);
  CHECK(a == synth_series(42, 10));
  CHECK_FALSE(a == synth_series(43, 10));
  CHECK(a.length() == 14400);
  const double mean = std::accumulate(a.demand.begin(), a.demand.end(), 0.0) / static_cast<double>(a.length());
  CHECK(std::abs(mean - 320.0) <= 25.0);
  for (std::size_t t = 0; t < a.length(); ++t) {
    CHECK(a.demand[t] >= 180.0);
    CHECK(a.demand[t] <= 540.0);
    CHECK(a.wind_avail[t] >= 0.0);
    CHECK(a.wind_avail[t] <= 400.0);
  }
  const auto adv = synth_series(42, 10, SynthProfile::Adversarial);
  const double wind_adv = std::accumulate(adv.wind_avail.begin(), adv.wind_avail.end(), 0.0);
  const double wind_nom = std::accumulate(a.wind_avail.begin(), a.wind_avail.end(), 0.0);
  CHECK(wind_adv < 0.5 * wind_nom);
  CHECK_THROWS(synth_series(1, 0));
}

TEST_CASE("forecasts") {
  const auto s = synth_series(1, 2);
  const Forecast f = forecast_at(s, 100, ForecastKind::Demand, 9, 0.0);
  for (int k = 1; k <= kForecastPoints; ++k) CHECK(f[k - 1] == s.at(100 + 15 * k).demand_kw);
  CHECK(forecast_at(s, 100, ForecastKind::Wind, 9, 30.0) == forecast_at(s, 100, ForecastKind::Wind, 9, 30.0));
  // Wraps past the end.
  CHECK(forecast_at(s, s.length() - 1, ForecastKind::Wind, 0, 0.0)[0] == s.at(14).wind_avail_kw);

  // Noise grows with lead time.
  double v1 = 0.0, v30 = 0.0;
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Forecast g = forecast_at(s, 500, ForecastKind::Demand, seed, 20.0);
    v1 += std::pow(g[0] - s.at(515).demand_kw, 2);
    v30 += std::pow(g[29] - s.at(500 + 450).demand_kw, 2);
  }
  CHECK(std::sqrt(v30 / 1000) > std::sqrt(v1 / 1000));
  CHECK_THROWS(forecast_at(s, 0, ForecastKind::Demand, 0, -1.0));
}

TEST_CASE("scenario extraction") {
  const auto s = parse("0,300,200\n1,320,150\n2,310,190\n");
  const RecoveryScenario r = scenario_from_series(s);
  CHECK(r.horizon == 9);
  CHECK(r.demand_high == 320.0);
  CHECK(r.demand_low == 300.0);
  CHECK(r.wind_low == 150.0);
  CHECK(r.demand_ramp == 20.0);
  CHECK(r.wind_ramp == 50.0);
}

}
