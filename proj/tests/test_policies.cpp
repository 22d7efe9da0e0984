#include <doctest.h>

#include <array>

#include "microgrid/policies.hpp"

using namespace microgrid;
using scu::MicrogridAction;
using scu::StatusCommand;

namespace {

GensetState genset(GensetMode m) {
  GensetState g = make_genset(GensetParams{}, m);
  for (int i = 0; i < 200; ++i) g.history.push(120.0);
  return g;
}

struct Grid {
  BatteryState battery;
  WindTurbineState wind;
  GensetState g1, g2;
  MicrogridView view;
  Grid(double soc, GensetMode m1, GensetMode m2)
      : battery(make_battery(BatteryParams{}, soc)), g1(genset(m1)), g2(genset(m2)),
        view{&battery, &wind, {&g1, &g2}} {}
  Grid(const Grid&) = delete;
  PolicyContext ctx(double demand, double wind_kw) const { return {view, {demand, wind_kw}}; }
};

}  // namespace

TEST_SUITE("policies") {

TEST_CASE("random policy") {
  std::mt19937_64 a(7), b(7);
  std::array<int, 3> freq{};
  for (int i = 0; i < 10000; ++i) {
    const MicrogridAction x = random_policy(a);
    CHECK(x == random_policy(b));
    ++freq[static_cast<std::size_t>(x.delta_orch)];
    CHECK(x.p_batt_setpoint >= -600.0);
    CHECK(x.p_batt_setpoint <= 600.0);
  }
  for (int f : freq) CHECK(std::abs(f / 10000.0 - 1.0 / 3.0) <= 0.02);
}

TEST_CASE("fixed baselines") {
  CHECK(battery_greedy_policy() == MicrogridAction{StatusCommand::DoNothing, 0.0});
  CHECK(greedy_policy() == MicrogridAction{StatusCommand::Stop, 600.0});
  CHECK(fuel_greedy_policy({250.0, 300.0}) == MicrogridAction{StatusCommand::Stop, -600.0});
  CHECK(fuel_greedy_policy({320.0, 200.0}) == MicrogridAction{StatusCommand::Stop, 600.0});
  CHECK(fuel_greedy_policy({300.0, 300.0}) == MicrogridAction{StatusCommand::Stop, 600.0});
}

TEST_CASE("names") {
  CHECK(parse_policy("fuel-greedy") == PolicyKind::FuelGreedy);
  CHECK(parse_policy("battery_greedy") == PolicyKind::BatteryGreedy);
  CHECK(to_string(PolicyKind::Heuristic) == "heuristic");
  CHECK_THROWS_AS(parse_policy("sac"), std::invalid_argument);
}

TEST_CASE("heuristic starts after five overloaded minutes") {
  Grid g(0.5, {GensetStatus::On, 45}, {});
  HeuristicState st;
  const HeuristicParams hp;
  for (int minute = 1; minute <= 4; ++minute)
    CHECK(heuristic_policy(st, hp, g.ctx(365.0, 0.0)).delta_orch == StatusCommand::DoNothing);
  CHECK(heuristic_policy(st, hp, g.ctx(365.0, 0.0)).delta_orch == StatusCommand::Start);
}

TEST_CASE("heuristic starts at once above 100 %") {
  Grid g(0.5, {GensetStatus::On, 45}, {});
  HeuristicState st;
  CHECK(heuristic_policy(st, {}, g.ctx(405.0, 0.0)).delta_orch == StatusCommand::Start);
}

TEST_CASE("heuristic counter resets") {
  Grid g(0.5, {GensetStatus::On, 45}, {});
  HeuristicState st;
  for (int i = 0; i < 4; ++i) heuristic_policy(st, {}, g.ctx(365.0, 0.0));
  heuristic_policy(st, {}, g.ctx(300.0, 0.0));
  CHECK(st.over_counter == 0);
  for (int i = 0; i < 4; ++i) CHECK(heuristic_policy(st, {}, g.ctx(365.0, 0.0)).delta_orch == StatusCommand::DoNothing);
}

TEST_CASE("heuristic stops the second genset and never the last") {
  Grid two(0.5, {GensetStatus::On, 45}, {GensetStatus::On, 45});
  HeuristicState st;
  for (int i = 0; i < 4; ++i) CHECK(heuristic_policy(st, {}, two.ctx(250.0, 0.0)).delta_orch == StatusCommand::DoNothing);
  CHECK(heuristic_policy(st, {}, two.ctx(250.0, 0.0)).delta_orch == StatusCommand::Stop);

  Grid one(0.5, {GensetStatus::On, 45}, {});
  HeuristicState s1;
  for (int i = 0; i < 20; ++i) CHECK(heuristic_policy(s1, {}, one.ctx(150.0, 0.0)).delta_orch != StatusCommand::Stop);

  Grid none(0.5, {}, {});
  HeuristicState s0;
  CHECK(heuristic_policy(s0, {}, none.ctx(150.0, 0.0)).delta_orch == StatusCommand::Start);
}

TEST_CASE("heuristic battery modes") {
  Grid full(0.9, {GensetStatus::On, 45}, {});
  HeuristicState st;
  CHECK(heuristic_policy(st, {}, full.ctx(300.0, 350.0)).p_batt_setpoint == 600.0);
  CHECK(st.battery_mode == BatteryMode::Discharging);

  Grid empty(0.1, {GensetStatus::On, 45}, {});
  const MicrogridAction a = heuristic_policy(st, {}, empty.ctx(300.0, 350.0));
  CHECK(st.battery_mode == BatteryMode::Charging);
  CHECK(a.p_batt_setpoint == -50.0);  // only the wind excess

  Grid mid(0.5, {GensetStatus::On, 45}, {});
  HeuristicState ch;
  CHECK(heuristic_policy(ch, {}, mid.ctx(300.0, 100.0)).p_batt_setpoint == 0.0);
}

TEST_CASE("heuristic parameters") {
  CHECK_NOTHROW(HeuristicParams{}.validate());
  CHECK_THROWS(HeuristicParams{0.9, 0, 0.7, 5}.validate());
  CHECK_THROWS(HeuristicParams{1.5, 5, 0.7, 5}.validate());
}

TEST_CASE("policy objects") {
  for (PolicyKind k : {PolicyKind::Random, PolicyKind::BatteryGreedy, PolicyKind::FuelGreedy, PolicyKind::Greedy,
                       PolicyKind::Heuristic}) {
    Grid g(0.5, {GensetStatus::On, 45}, {});
    auto p = make_policy(k, 3);
    CHECK(p->kind() == k);
    const MicrogridAction a = p->act(g.ctx(300.0, 100.0));
    CHECK(std::abs(a.p_batt_setpoint) <= 600.0);
  }
}

}
