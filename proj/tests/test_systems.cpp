#include <doctest.h>

#include <cmath>

#include "microgrid/exogenous.hpp"
#include "microgrid/systems.hpp"
#include "scu/errors.hpp"

using namespace microgrid;
using scu::StatusCommand;

namespace {

GensetState genset(GensetMode m) {
  GensetState g = make_genset(GensetParams{}, m);
  for (int i = 0; i < 200; ++i) g.history.push(120.0);
  return g;
}

GensetMode on(int runtime) { return {GensetStatus::On, runtime}; }
const GensetMode off{};

struct Grid {
  BatteryState battery;
  WindTurbineState wind;
  GensetState g1, g2;
  Grid(double soc, GensetMode m1, GensetMode m2)
      : battery(make_battery(BatteryParams{}, soc)), g1(genset(m1)), g2(genset(m2)) {}
  MicrogridView view() const { return {&battery, &wind, {&g1, &g2}}; }
  GensetRefs refs() const { return {&g1, &g2}; }
};

scu::ScuNode node(double soc, GensetMode m1, GensetMode m2, const RecoveryScenario& sc = {}) {
  MicrogridSetup s;
  s.soc0 = soc;
  s.genset_modes = {m1, m2};
  s.scenario = sc;
  auto n = build_microgrid(s);
  // Long, light history so the 48 h cap never binds in these examples.
  for (std::size_t i : {0, 1}) {
    for (scu::Subsystem* sub : {&n.real(), &n.controller().dt}) {
      scu::ScuNode& orch = sub->children[kOrchestrator];
      for (scu::Subsystem* g : {&orch.real(), &orch.controller().dt}) {
        for (scu::Subsystem* d : {&g->children[i].real(), &g->children[i].controller().dt}) {
          auto& gs = std::get<GensetState>(*d->device);
          if (gs.history.size() == 0)
            for (int k = 0; k < 200; ++k) gs.history.push(120.0);
        }
      }
    }
  }
  return n;
}

}  // namespace

TEST_SUITE("systems") {

TEST_CASE("orchestrator commands follow the priority order") {
  Grid both_off(0.5, off, off);
  CHECK(orchestrator_commands(both_off.refs(), StatusCommand::Start) ==
        std::vector<StatusCommand>{StatusCommand::Start, StatusCommand::DoNothing});
  Grid one(0.5, on(30), off);
  CHECK(orchestrator_commands(one.refs(), StatusCommand::Stop) ==
        std::vector<StatusCommand>{StatusCommand::Stop, StatusCommand::DoNothing});
  CHECK(orchestrator_commands(one.refs(), StatusCommand::Start) ==
        std::vector<StatusCommand>{StatusCommand::DoNothing, StatusCommand::Start});
  Grid two(0.5, on(40), on(40));
  CHECK(orchestrator_commands(two.refs(), StatusCommand::Start) ==
        std::vector<StatusCommand>{StatusCommand::DoNothing, StatusCommand::DoNothing});
  CHECK(orchestrator_commands(two.refs(), StatusCommand::Stop) ==
        std::vector<StatusCommand>{StatusCommand::DoNothing, StatusCommand::Stop});
  // Genset 1 may not stop while genset 2 runs.
  Grid warming(0.5, on(40), {GensetStatus::WarmUp, 2});
  CHECK(orchestrator_commands(warming.refs(), StatusCommand::Stop) ==
        std::vector<StatusCommand>{StatusCommand::DoNothing, StatusCommand::DoNothing});
}

TEST_CASE("equal power fraction") {
  Grid two(0.5, on(40), on(40));
  const auto m2 = orchestrator_modes(two.refs(), StatusCommand::DoNothing);
  auto p = equal_power_fraction(two.refs(), m2, 400.0, false);
  CHECK(p == std::vector<double>{200.0, 200.0});
  p = equal_power_fraction(two.refs(), m2, 100.0, false);
  CHECK(p == std::vector<double>{120.0, 120.0});

  Grid warm(0.5, on(40), {GensetStatus::WarmUp, 2});
  p = equal_power_fraction(warm.refs(), orchestrator_modes(warm.refs(), StatusCommand::DoNothing), 300.0, false);
  CHECK(p == std::vector<double>{200.0, 100.0});
}

TEST_CASE("feasible range") {
  auto range = [](const Grid& g) { return orchestrator_feasible_range(g.refs(), StatusCommand::DoNothing, false); };
  PowerRange r = range(Grid(0.5, off, off));
  CHECK((r.min == 0.0 && r.max == 0.0));
  r = range(Grid(0.5, on(40), off));
  CHECK((r.min == 120.0 && r.max == 400.0));
  r = range(Grid(0.5, on(40), {GensetStatus::WarmUp, 2}));
  CHECK((r.min == 220.0 && r.max == 500.0));
  r = orchestrator_feasible_range(Grid(0.5, on(40), off).refs(), StatusCommand::DoNothing, true);
  CHECK(r.max == 440.0);
}

TEST_CASE("microgrid dispatch") {
  SUBCASE("genset floor excess charges the battery") {
    Grid g(0.5, on(40), off);
    const auto d = microgrid_dispatch(g.view(), {StatusCommand::DoNothing, 0.0}, {320.0, 272.0}, true);
    CHECK(d.orchestrator.p_setpoint == 120.0);
    CHECK(d.wind.p_setpoint == 272.0);
    CHECK(std::abs(d.battery.p_setpoint + 72.0) < 1e-9);
    CHECK(std::abs(d.balance) < 1e-9);
  }
  SUBCASE("full battery: wind is curtailed") {
    Grid g(0.9, on(40), off);
    const auto d = microgrid_dispatch(g.view(), {StatusCommand::DoNothing, 0.0}, {320.0, 272.0}, true);
    CHECK(d.battery.p_setpoint == 0.0);
    CHECK(std::abs(d.wind.p_setpoint - 200.0) < 1e-9);
  }
  SUBCASE("battery alone") {
    Grid g(0.11, off, off);
    const auto d = microgrid_dispatch(g.view(), {StatusCommand::DoNothing, 600.0}, {320.0, 0.0}, true);
    CHECK(std::abs(d.battery.p_setpoint - 320.0) < 1e-9);
    CHECK(d.orchestrator.p_setpoint == 0.0);
    CHECK(std::abs(d.balance) < 1e-9);
    CHECK_FALSE(d.reserve_used);
  }
  SUBCASE("all idle") {
    Grid g(0.5, off, off);
    const auto d = microgrid_dispatch(g.view(), {StatusCommand::DoNothing, 0.0}, {0.0, 0.0}, true);
    CHECK(d.battery.p_setpoint == 0.0);
    CHECK(d.wind.p_setpoint == 0.0);
    CHECK(d.orchestrator.p_setpoint == 0.0);
    CHECK(d.balance == 0.0);
  }
  SUBCASE("wind before fuel") {
    Grid g(0.5, on(40), off);
    const auto d = microgrid_dispatch(g.view(), {StatusCommand::DoNothing, 0.0}, {400.0, 150.0}, true);
    CHECK(d.wind.p_setpoint == 150.0);
    CHECK(d.orchestrator.p_setpoint == 250.0);
  }
  SUBCASE("reserves only when allowed") {
    Grid g(0.10, on(40), off);
    auto d = microgrid_dispatch(g.view(), {StatusCommand::DoNothing, 0.0}, {500.0, 0.0}, false);
    CHECK(d.balance < -1.0);
    d = microgrid_dispatch(g.view(), {StatusCommand::DoNothing, 0.0}, {500.0, 0.0}, true);
    CHECK(std::abs(d.balance) < 1e-9);
    CHECK(d.overload_used);
    CHECK(d.reserve_used);
  }
}

TEST_CASE("recovery shield") {
  SUBCASE("stop during a ramp is refused") {
    auto n = node(0.15, on(45), off);
    const auto dec = recovery_shield(n.controller().dt, {StatusCommand::Stop, 0.0}, {350.0, 0.0}, RecoveryScenario{});
    CHECK(dec.command == StatusCommand::DoNothing);
    CHECK(dec.intervened);
    CHECK(dec.failed_scenario != 0);
    CHECK_FALSE(dec.exhausted);
  }
  SUBCASE("ample margin keeps DoNothing") {
    ExogenousSeries flat;
    flat.demand.assign(1440, 300.0);
    flat.wind_avail.assign(1440, 50.0);
    const RecoveryScenario sc = scenario_from_series(flat);
    auto n = node(0.8, on(45), on(45), sc);
    const auto dec = recovery_shield(n.controller().dt, {StatusCommand::DoNothing, 0.0}, flat.at(0), sc);
    CHECK(dec.command == StatusCommand::DoNothing);
    CHECK_FALSE(dec.intervened);
    CHECK(dec.failed_scenario == 0);
  }
  SUBCASE("induction: a compliant step keeps DoNothing recoverable") {
    const RecoveryScenario sc;
    auto n = node(0.5, on(45), off, sc);
    const scu::Exogenous e{300.0, 100.0};
    auto dec = recovery_shield(n.controller().dt, {StatusCommand::DoNothing, 0.0}, e, sc);
    REQUIRE_FALSE(dec.intervened);
    scu::step(n, scu::MicrogridAction{StatusCommand::DoNothing, 0.0}, e);
    dec = recovery_shield(n.controller().dt, {StatusCommand::DoNothing, 0.0}, e, sc);
    CHECK(dec.command == StatusCommand::DoNothing);
    CHECK_FALSE(dec.intervened);
  }
  SUBCASE("starting a genset into unabsorbable surplus is avoided") {
    ExogenousSeries flat;
    flat.demand.assign(1440, 200.0);
    flat.wind_avail.assign(1440, 0.0);
    const RecoveryScenario sc = scenario_from_series(flat);
    auto n = node(0.9, on(45), off, sc);
    const auto dec = recovery_shield(n.controller().dt, {StatusCommand::Start, 0.0}, flat.at(0), sc);
    CHECK(dec.command == StatusCommand::DoNothing);
    CHECK(dec.intervened);
  }
  SUBCASE("rollouts never mutate the twin") {
    auto n = node(0.3, on(45), off);
    const auto h = scu::state_hash(n);
    recovery_shield(n.controller().dt, {StatusCommand::Stop, 600.0}, {450.0, 10.0}, RecoveryScenario{});
    CHECK(scu::state_hash(n) == h);
  }
}

TEST_CASE("scenario envelope") {
  const RecoveryScenario s;
  const auto w = s.worst_case({300.0, 100.0}, 3);
  CHECK(w.demand_kw == 330.0);
  CHECK(w.wind_avail_kw == 40.0);
  CHECK(s.worst_case({530.0, 10.0}, 5).demand_kw == 540.0);
  CHECK(s.worst_case({530.0, 10.0}, 5).wind_avail_kw == 0.0);
  CHECK(s.low_demand({300.0, 100.0}, 50).demand_kw == 180.0);
  RecoveryScenario bad;
  bad.demand_ramp = -1.0;
  CHECK_THROWS(bad.validate());
}

TEST_CASE("shielded steps keep zero balance") {
  auto n = node(0.5, on(45), off);
  for (int t = 0; t < 200; ++t) {
    const scu::Exogenous e{250.0 + 100.0 * std::sin(t / 20.0), 150.0 + 100.0 * std::cos(t / 15.0)};
    const StatusCommand cmd = static_cast<StatusCommand>((t * 7) % 3);
    scu::step(n, scu::MicrogridAction{cmd, 300.0 * std::sin(t / 7.0)}, e);
    CHECK(std::abs(realized_balance(view_of(n.real()), e.demand_kw)) < kBalanceTolerance);
  }
}

TEST_CASE("setup validation") {
  MicrogridSetup s;
  s.soc0 = 0.95;
  CHECK_THROWS_AS(build_microgrid(s), scu::ContractViolation);
  s.soc0 = 0.5;
  s.genset_modes = {off, on(3)};
  CHECK_THROWS_AS(build_microgrid(s), scu::ContractViolation);
}

}
