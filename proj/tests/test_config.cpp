#include <doctest.h>

#include <sstream>

#include "microgrid/config.hpp"

using namespace microgrid;

namespace {

Settings parse(const std::string& text) {
  std::istringstream in(text);
  return parse_settings(in);
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("defaults round-trip") {
  const Settings s = parse(default_settings_ini());
  const Settings d;
  CHECK(s.episode.battery == d.episode.battery);
  CHECK(s.episode.genset == d.episode.genset);
  CHECK(s.episode.alpha == d.episode.alpha);
  CHECK(s.episode.length == d.episode.length);
  CHECK(s.heuristic == d.heuristic);
  CHECK(apply_recovery_overrides(RecoveryScenario{}, s.recovery).horizon == 9);
  CHECK(parse("").episode.battery == d.episode.battery);
}

TEST_CASE("values are applied") {
  const Settings s = parse("[battery]\ncapacity_kwh = 500\n[degradation]\nw = 0.02\n[episode]\nalpha = 0.25\n"
                           "[heuristic]\nstart_minutes = 3\n[recovery]\ndemand_high = 600\nhorizon = 12\n");
  CHECK(s.episode.battery.capacity_kwh == 500.0);
  CHECK(s.episode.battery.degradation.w == 0.02);
  CHECK(s.episode.alpha == 0.25);
  CHECK(s.heuristic.start_minutes == 3);
  const RecoveryScenario r = apply_recovery_overrides(RecoveryScenario{}, s.recovery);
  CHECK(r.demand_high == 600.0);
  CHECK(r.horizon == 12);
}

TEST_CASE("bad input is rejected") {
  CHECK_THROWS_AS(parse("[battery]\ncolour = red\n"), ConfigError);
  CHECK_THROWS_AS(parse("[spaceship]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[episode]\nalpha = -1\n"), ConfigError);
  CHECK_THROWS_AS(parse("[battery]\nsoc_min = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse("[battery]\nsoc_min = 0.95\n"), ConfigError);
  CHECK_THROWS_AS(parse("[recovery]\nhorizon = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(load_settings("/nonexistent.ini"), ConfigError);
}

}
