#include "microgrid/systems.hpp"

#include <algorithm>
#include <optional>
#include <cmath>
#include <limits>

#include "scu/errors.hpp"

namespace microgrid {

using scu::ActionBundle;
using scu::StatusCommand;

namespace {

constexpr double kDispatchTol = 1e-9;

template <class T>
const T& device_of(const scu::Subsystem& s, const char* what) {
  if (!s.device) throw scu::ContractViolation(std::string(what) + " twin holds no device");
  const T* d = std::get_if<T>(&*s.device);
  if (!d) throw scu::ContractViolation(std::string(what) + " twin holds the wrong device type");
  return *d;
}

template <class A>
const A& action_of(const ActionBundle& a, const char* what) {
  const A* p = std::get_if<A>(&a);
  if (!p) throw scu::ContractViolation(std::string(what) + " shield received a foreign action");
  return *p;
}

GensetRefs gensets_of(const scu::Subsystem& orchestrator) {
  GensetRefs refs;
  refs.reserve(orchestrator.children.size());
  for (const scu::ScuNode& g : orchestrator.children) refs.push_back(&device_of<GensetState>(g.real(), "genset"));
  return refs;
}

bool running_or_warming(GensetStatus s) { return s == GensetStatus::On || s == GensetStatus::WarmUp; }

}  // namespace

void RecoveryScenario::validate() const {
  if (horizon < 1) throw scu::ContractViolation("recovery horizon must be >= 1");
  if (surplus_horizon < 1) throw scu::ContractViolation("surplus horizon must be >= 1");
  if (!(demand_ramp >= 0.0) || !(wind_ramp >= 0.0))
    throw scu::ContractViolation("recovery ramps must be >= 0");
  if (!std::isfinite(demand_high) || !std::isfinite(wind_low) || !std::isfinite(demand_low))
    throw scu::ContractViolation("recovery extremes must be finite");
}

scu::Exogenous RecoveryScenario::worst_case(const scu::Exogenous& now, int tau) const {
  const double t = static_cast<double>(tau);
  scu::Exogenous e;
  e.demand_kw = std::max(now.demand_kw, std::min(demand_high, now.demand_kw + demand_ramp * t));
  e.wind_avail_kw = std::min(now.wind_avail_kw, std::max(wind_low, now.wind_avail_kw - wind_ramp * t));
  return e;
}

scu::Exogenous RecoveryScenario::low_demand(const scu::Exogenous& now, int tau) const {
  const double t = static_cast<double>(tau);
  return {std::min(now.demand_kw, std::max(demand_low, now.demand_kw - demand_ramp * t)), now.wind_avail_kw};
}

// ---------------------------------------------------------------- leaf shields

std::vector<ActionBundle> WindShield::dispatch(const scu::ControllerState& c, const ActionBundle& a,
                                               const scu::Exogenous&, scu::ShieldReport&) const {
  return {wind_shield(device_of<WindTurbineState>(c.dt, "wind"), action_of<scu::WindAction>(a, "wind"))};
}

std::vector<ActionBundle> BatteryShield::dispatch(const scu::ControllerState& c, const ActionBundle& a,
                                                  const scu::Exogenous&, scu::ShieldReport&) const {
  const auto& act = action_of<scu::BatteryAction>(a, "battery");
  const SocBand band = !enforce_ ? SocBand::Physical : act.reserve ? SocBand::Reserve : SocBand::Normal;
  return {battery_shield(device_of<BatteryState>(c.dt, "battery"), act, band)};
}

std::vector<ActionBundle> GensetShield::dispatch(const scu::ControllerState& c, const ActionBundle& a,
                                                 const scu::Exogenous&, scu::ShieldReport&) const {
  return {genset_shield(device_of<GensetState>(c.dt, "genset"), action_of<scu::GensetAction>(a, "genset"), enforce_)};
}

// ------------------------------------------------------------------ orchestrator

std::vector<StatusCommand> orchestrator_commands(const GensetRefs& g, StatusCommand delta) {
  std::vector<StatusCommand> cmds(g.size(), StatusCommand::DoNothing);
  if (delta == StatusCommand::Start) {
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (g[i]->mode.status == GensetStatus::Off) {
        bool ready = true;
        for (std::size_t j = 0; j < i; ++j) ready = ready && running_or_warming(g[j]->mode.status);
        if (ready) cmds[i] = StatusCommand::Start;
        break;
      }
    }
  } else if (delta == StatusCommand::Stop) {
    for (std::size_t i = g.size(); i-- > 0;) {
      const GensetStatus s = g[i]->mode.status;
      if (s == GensetStatus::WarmUp) break;  // a later genset is still starting
      if (s == GensetStatus::On) {
        cmds[i] = StatusCommand::Stop;
        break;
      }
    }
  }
  return cmds;
}

std::vector<GensetMode> orchestrator_modes(const GensetRefs& g, StatusCommand delta, bool enforce) {
  const auto cmds = orchestrator_commands(g, delta);
  std::vector<GensetMode> modes;
  modes.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto shielded = genset_shield(*g[i], {cmds[i], 0.0, false}, enforce);
    modes.push_back(mode_after_command(*g[i], shielded.delta));
  }
  return modes;
}

namespace {

struct Split {
  double routine = 0.0;
  int running = 0;
  double floor = 0.0;
  double cap = 0.0;  // tightest per-genset ceiling among running gensets
};

Split split_of(const GensetRefs& g, const std::vector<GensetMode>& modes, bool emergency, bool enforce) {
  if (modes.size() != g.size()) throw scu::ContractViolation("one mode per genset required");
  Split s;
  s.cap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto& p = g[i]->params;
    switch (modes[i].status) {
      case GensetStatus::WarmUp: s.routine += p.warmup_power; break;
      case GensetStatus::On: {
        ++s.running;
        const double floor = enforce ? p.p_min : 0.0;
        const double cap = enforce ? std::max(p.p_min, genset_available_power(*g[i], emergency)) : p.p_max;
        s.floor = std::max(s.floor, floor);
        s.cap = std::min(s.cap, cap);
        break;
      }
      default: break;
    }
  }
  if (s.running == 0) s.cap = 0.0;
  return s;
}

}  // namespace

PowerRange orchestrator_feasible_range(const GensetRefs& g, const std::vector<GensetMode>& modes, bool emergency,
                                       bool enforce) {
  const Split s = split_of(g, modes, emergency, enforce);
  const double n = static_cast<double>(s.running);
  return {s.routine + n * s.floor, s.routine + n * std::max(s.floor, s.cap)};
}

PowerRange orchestrator_feasible_range(const GensetRefs& g, StatusCommand delta, bool emergency, bool enforce) {
  return orchestrator_feasible_range(g, orchestrator_modes(g, delta, enforce), emergency, enforce);
}

std::vector<double> equal_power_fraction(const GensetRefs& g, const std::vector<GensetMode>& modes,
                                         double p_setpoint, bool emergency, bool enforce) {
  const Split s = split_of(g, modes, emergency, enforce);
  std::vector<double> out(g.size(), 0.0);
  const double share =
      s.running == 0 ? 0.0
                     : std::clamp((p_setpoint - s.routine) / static_cast<double>(s.running), s.floor,
                                  std::max(s.floor, s.cap));
  for (std::size_t i = 0; i < g.size(); ++i) {
    switch (modes[i].status) {
      case GensetStatus::WarmUp: out[i] = g[i]->params.warmup_power; break;
      case GensetStatus::On: out[i] = share; break;
      default: out[i] = 0.0; break;
    }
  }
  return out;
}

std::vector<scu::GensetAction> orchestrator_dispatch(const GensetRefs& g, const scu::OrchestratorAction& a,
                                                     bool enforce) {
  const auto cmds = orchestrator_commands(g, a.delta);
  std::vector<GensetMode> modes;
  std::vector<StatusCommand> applied;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const auto shielded = genset_shield(*g[i], {cmds[i], 0.0, false}, enforce);
    applied.push_back(shielded.delta);
    modes.push_back(mode_after_command(*g[i], shielded.delta));
  }
  const auto powers = equal_power_fraction(g, modes, a.p_setpoint, a.emergency, enforce);
  std::vector<scu::GensetAction> out;
  out.reserve(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) out.push_back({applied[i], powers[i], a.emergency});
  return out;
}

std::vector<ActionBundle> OrchestratorShield::dispatch(const scu::ControllerState& c, const ActionBundle& a,
                                                       const scu::Exogenous&, scu::ShieldReport&) const {
  const auto acts = orchestrator_dispatch(gensets_of(c.dt), action_of<scu::OrchestratorAction>(a, "orchestrator"),
                                          enforce_);
  return {acts.begin(), acts.end()};
}

// --------------------------------------------------------------------- microgrid

MicrogridView view_of(const scu::Subsystem& mg) {
  if (mg.children.size() != 3) throw scu::ContractViolation("microgrid must have battery, wind and orchestrator");
  MicrogridView v;
  v.battery = &device_of<BatteryState>(mg.children[kBattery].real(), "battery");
  v.wind = &device_of<WindTurbineState>(mg.children[kWind].real(), "wind");
  v.gensets = gensets_of(mg.children[kOrchestrator].real());
  return v;
}

MicrogridDispatch microgrid_dispatch(const MicrogridView& v, const scu::MicrogridAction& action,
                                     const scu::Exogenous& exo, bool reserves_allowed, bool enforce) {
  const auto modes = orchestrator_modes(v.gensets, action.delta_orch, enforce);
  const PowerRange range = orchestrator_feasible_range(v.gensets, modes, false, enforce);
  const BatteryLimits lim = battery_limits(*v.battery, enforce ? SocBand::Normal : SocBand::Physical);
  const double demand = exo.demand_kw;
  const double wind_avail = std::max(0.0, exo.wind_avail_kw);

  double b = std::clamp(action.p_batt_setpoint, -lim.max_charge_kw, lim.max_discharge_kw);
  const double rho = demand - b;
  double w = std::clamp(rho, 0.0, wind_avail);
  double o = std::clamp(rho - w, range.min, range.max);
  auto balance = [&] { return b + w + o - demand; };

  MicrogridDispatch d;
  if (balance() > kDispatchTol) {
    b = std::max(b - balance(), -lim.max_charge_kw);
    if (balance() > kDispatchTol) w = std::max(w - balance(), 0.0);
  }
  if (balance() < -kDispatchTol) {
    b = std::min(b - balance(), lim.max_discharge_kw);
    if (balance() < -kDispatchTol && reserves_allowed && enforce) {
      const PowerRange over = orchestrator_feasible_range(v.gensets, modes, true, enforce);
      const double o_new = std::min(o - balance(), over.max);
      if (o_new > range.max + kDispatchTol) {
        o = o_new;
        d.overload_used = true;
      }
      if (balance() < -kDispatchTol) {
        const BatteryLimits res = battery_limits(*v.battery, SocBand::Reserve);
        const double b_new = std::min(b - balance(), res.max_discharge_kw);
        if (b_new > lim.max_discharge_kw + kDispatchTol) {
          b = b_new;
          d.reserve_used = true;
        }
      }
    }
  }
  d.battery = {b + 0.0, d.reserve_used};  // no negative zero in logs
  d.wind = {w};
  d.orchestrator = {action.delta_orch, o, d.overload_used};
  d.balance = balance();
  return d;
}

double realized_balance(const MicrogridView& v, double demand_kw) {
  double gen = v.battery->p_out + v.wind->p_out;
  for (const GensetState* g : v.gensets) gen += g->p_out;
  return gen - demand_kw;
}

// ------------------------------------------------------------- recovery shield

std::shared_ptr<const MicrogridShield> MicrogridShield::rollout_shield(Rollout which, bool enforce_devices) {
  auto make = [](bool reserves, bool enforce) {
    Options o;
    o.shields = {enforce, false};
    o.reserves_allowed = reserves;
    return std::make_shared<const MicrogridShield>(o);
  };
  static const std::shared_ptr<const MicrogridShield> shields[2][2] = {
      {make(false, false), make(false, true)},
      {make(true, false), make(true, true)},
  };
  return shields[which == Rollout::WorstCase ? 1 : 0][enforce_devices ? 1 : 0];
}

namespace {

// Largest total forced genset output (floors and warm-up power) reachable
// when `first` is applied now and nothing is started afterwards.
double forced_output_bound(const MicrogridView& v, scu::StatusCommand first, bool enforce) {
  const auto modes = orchestrator_modes(v.gensets, first, enforce);
  double bound = 0.0;
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const auto& p = v.gensets[i]->params;
    if (modes[i].status == GensetStatus::On || modes[i].status == GensetStatus::WarmUp)
      bound += std::max(enforce ? p.p_min : 0.0, p.warmup_power);
  }
  return bound;
}

}  // namespace

RolloutResult recovery_rollout(const scu::TwinState& twin, const scu::MicrogridAction& first,
                               const scu::Exogenous& now, const RecoveryScenario& scenario, Rollout which,
                               bool enforce_devices, bool stop_at_first) {
  const bool surplus = which == Rollout::Surplus;
  const auto n = static_cast<std::size_t>(surplus ? scenario.surplus_horizon : scenario.horizon);
  const double batt_kw = which == Rollout::WorstCase ? view_of(twin).battery->params.nominal_kw : 0.0;
  const StatusCommand then = surplus ? StatusCommand::DoNothing : StatusCommand::Start;
  std::vector<ActionBundle> actions;
  std::vector<scu::Exogenous> exo;
  actions.reserve(n);
  exo.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    actions.emplace_back(t == 0 ? first : scu::MicrogridAction{then, batt_kw});
    const int tau = static_cast<int>(t);
    exo.push_back(which == Rollout::WorstCase ? scenario.worst_case(now, tau)
                  : surplus                   ? scenario.low_demand(now, tau)
                                              : now);
  }
  // The agent may fill the battery at any time, so surplus is judged with no
  // charging headroom.
  std::optional<scu::TwinState> full;
  if (surplus) {
    full = twin;
    scu::ScuNode& b = full->children[kBattery];
    for (scu::Subsystem* sub : {&b.real(), &b.controller().dt}) {
      auto& st = std::get<BatteryState>(*sub->device);
      st.soc = st.params.soc_max;
    }
  }
  RolloutResult res;
  scu::simulate_visit(full ? *full : twin, MicrogridShield::rollout_shield(which, enforce_devices), actions, exo,
                      [&](std::size_t t, const scu::ScuNode& node) {
                        const double bal = realized_balance(view_of(node.real()), exo[t].demand_kw);
                        if (bal < -kBalanceTolerance) {
                          res.shortfall_kwh += -bal / 60.0;
                          if (stop_at_first) return false;
                        } else if (bal > kBalanceTolerance) {
                          res.surplus_kwh += bal / 60.0;
                          if (stop_at_first && surplus) return false;
                        }
                        return true;
                      });
  return res;
}

RecoveryDecision recovery_shield(const scu::TwinState& twin, const scu::MicrogridAction& requested,
                                 const scu::Exogenous& now, const RecoveryScenario& scenario, bool enforce_devices) {
  std::vector<StatusCommand> candidates;
  for (StatusCommand c : {requested.delta_orch, StatusCommand::DoNothing, StatusCommand::Start, StatusCommand::Stop})
    if (std::find(candidates.begin(), candidates.end(), c) == candidates.end()) candidates.push_back(c);

  const MicrogridView view = view_of(twin);
  const std::size_t none = candidates.size();
  std::size_t first_recoverable = none;
  std::vector<double> worst(candidates.size(), 0.0);
  RecoveryDecision dec;

  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const scu::MicrogridAction act{candidates[k], requested.p_batt_setpoint};
    const double s1 = recovery_rollout(twin, act, now, scenario, Rollout::WorstCase, enforce_devices).shortfall_kwh;
    worst[k] = s1;
    const bool need_s2 = k == 0 || s1 == 0.0;
    const double s2 =
        need_s2 ? recovery_rollout(twin, act, now, scenario, Rollout::Constant, enforce_devices).shortfall_kwh : 0.0;
    if (k == 0) dec.failed_scenario = (s1 > 0.0 ? 1 : 0) | (s2 > 0.0 ? 2 : 0);
    if (s1 > 0.0 || s2 > 0.0) continue;
    if (first_recoverable == none) first_recoverable = k;
    // Unabsorbable surplus needs forced genset output above the demand.
    const bool surplus_possible = forced_output_bound(view, candidates[k], enforce_devices) >
                                  scenario.low_demand(now, scenario.surplus_horizon - 1).demand_kw;
    if (!surplus_possible ||
        recovery_rollout(twin, act, now, scenario, Rollout::Surplus, enforce_devices).surplus_kwh == 0.0) {
      dec.command = candidates[k];
      dec.intervened = k != 0;
      return dec;
    }
  }
  if (first_recoverable != none) {
    dec.command = candidates[first_recoverable];
    dec.intervened = first_recoverable != 0;
    return dec;
  }

  // No candidate is recoverable in both scenarios: prefer the worst-case-safe
  // one, else the smallest worst-case shortage.
  dec.exhausted = true;
  std::size_t best = 0;
  double best_short = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const scu::MicrogridAction act{candidates[k], requested.p_batt_setpoint};
    const double full = worst[k] == 0.0 ? 0.0
                                        : recovery_rollout(twin, act, now, scenario, Rollout::WorstCase,
                                                           enforce_devices, /*stop_at_first=*/false)
                                              .shortfall_kwh;
    if (full < best_short) {
      best_short = full;
      best = k;
    }
  }
  dec.command = candidates[best];
  dec.intervened = best != 0;
  return dec;
}

MicrogridShield::MicrogridShield(Options options) : options_(options) { options_.scenario.validate(); }

std::vector<ActionBundle> MicrogridShield::dispatch(const scu::ControllerState& c, const ActionBundle& a,
                                                    const scu::Exogenous& exo, scu::ShieldReport& report) const {
  scu::MicrogridAction act = action_of<scu::MicrogridAction>(a, "microgrid");
  if (!std::isfinite(act.p_batt_setpoint)) throw scu::ContractViolation("battery setpoint must be finite");
  report.requested = act.delta_orch;
  if (options_.shields.recovery) {
    const RecoveryDecision dec = recovery_shield(c.dt, act, exo, options_.scenario, options_.shields.device);
    act.delta_orch = dec.command;
    report.intervened = dec.intervened;
    report.failed_scenario = dec.failed_scenario;
    report.recovery_exhausted = dec.exhausted;
  }
  report.applied = act.delta_orch;
  const MicrogridDispatch d =
      microgrid_dispatch(view_of(c.dt), act, exo, options_.reserves_allowed, options_.shields.device);
  report.reserve_used = d.reserve_used;
  report.overload_used = d.overload_used;
  report.planned_balance = d.balance;
  return {d.battery, d.wind, d.orchestrator};
}

scu::ScuNode build_microgrid(const MicrogridSetup& s) {
  const bool enforce = s.shields.device;
  if (enforce && !(s.soc0 >= s.battery.soc_min && s.soc0 <= s.battery.soc_max))
    throw scu::ContractViolation("initial SoC outside the operating band");
  if (!(s.soc0 >= 0.0 && s.soc0 <= 1.0)) throw scu::ContractViolation("initial SoC outside [0, 1]");
  if (enforce && s.genset_modes[1].status != GensetStatus::Off && s.genset_modes[0].status == GensetStatus::Off)
    throw scu::ContractViolation("genset 2 cannot run while genset 1 is off");
  for (const GensetMode& m : s.genset_modes) {
    const bool ok = m.counter >= 0 &&
                    (m.status != GensetStatus::WarmUp || (m.counter >= 1 && m.counter <= s.genset.warmup_minutes)) &&
                    (m.status != GensetStatus::CoolDown || (m.counter >= 1 && m.counter <= s.genset.cooldown_minutes));
    if (!ok) throw scu::ContractViolation("invalid initial genset status " + format_mode(m));
  }

  std::vector<scu::ScuNode> gensets;
  const auto genset_shield_ptr = std::make_shared<const GensetShield>(enforce);
  for (std::size_t i = 0; i < s.genset_modes.size(); ++i)
    gensets.push_back(scu::ScuNode::device("genset" + std::to_string(i + 1), make_genset(s.genset, s.genset_modes[i]),
                                           genset_shield_ptr));

  WindTurbineState wind;
  wind.params = s.wind;

  std::vector<scu::ScuNode> children;
  children.push_back(scu::ScuNode::device("battery", make_battery(s.battery, s.soc0),
                                          std::make_shared<const BatteryShield>(enforce)));
  children.push_back(scu::ScuNode::device("wind", wind, std::make_shared<const WindShield>()));
  children.push_back(scu::ScuNode::system("orchestrator", std::move(gensets),
                                          std::make_shared<const OrchestratorShield>(enforce)));

  MicrogridShield::Options opt;
  opt.shields = s.shields;
  opt.reserves_allowed = true;
  opt.scenario = s.scenario;
  return scu::ScuNode::system("microgrid", std::move(children), std::make_shared<const MicrogridShield>(opt));
}

}  // namespace microgrid
