#include "microgrid/policies.hpp"

#include <algorithm>
#include <stdexcept>

#include "scu/errors.hpp"

namespace microgrid {

using scu::MicrogridAction;
using scu::StatusCommand;

namespace {
constexpr double kSetpointLimit = 600.0;
constexpr double kSocTol = 1e-6;
}  // namespace

std::string_view to_string(PolicyKind k) {
  switch (k) {
    case PolicyKind::Random: return "random";
    case PolicyKind::BatteryGreedy: return "battery_greedy";
    case PolicyKind::FuelGreedy: return "fuel_greedy";
    case PolicyKind::Greedy: return "greedy";
    case PolicyKind::Heuristic: return "heuristic";
  }
  return "?";
}

PolicyKind parse_policy(std::string_view name) {
  std::string n(name);
  std::replace(n.begin(), n.end(), '-', '_');
  for (PolicyKind k : {PolicyKind::Random, PolicyKind::BatteryGreedy, PolicyKind::FuelGreedy, PolicyKind::Greedy,
                       PolicyKind::Heuristic})
    if (n == to_string(k)) return k;
  throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

MicrogridAction random_policy(std::mt19937_64& rng) {
  static constexpr StatusCommand kCmds[] = {StatusCommand::Start, StatusCommand::Stop, StatusCommand::DoNothing};
  const StatusCommand cmd = kCmds[rng() % 3];
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return {cmd, -kSetpointLimit + 2.0 * kSetpointLimit * u};
}

MicrogridAction battery_greedy_policy() { return {StatusCommand::DoNothing, 0.0}; }

MicrogridAction fuel_greedy_policy(const scu::Exogenous& exo) {
  return {StatusCommand::Stop, exo.wind_avail_kw > exo.demand_kw ? -kSetpointLimit : kSetpointLimit};
}

MicrogridAction greedy_policy() { return {StatusCommand::Stop, kSetpointLimit}; }

void HeuristicParams::validate() const {
  if (!(start_load > 0.0 && start_load <= 1.0) || !(stop_load > 0.0 && stop_load <= 1.0) || start_minutes < 1 ||
      stop_minutes < 1)
    throw scu::ContractViolation("heuristic loads must be in (0, 1] and counts >= 1");
}

double heuristic_available_power(const GensetState& g) {
  return std::min(g.params.p_nominal, genset_power_cap_48h(g));
}

MicrogridAction heuristic_policy(HeuristicState& st, const HeuristicParams& hp, const PolicyContext& ctx) {
  if (!ctx.view.battery || ctx.view.gensets.empty()) throw scu::ContractViolation("heuristic needs a microgrid view");
  const MicrogridView& v = ctx.view;
  const BatteryState& bat = *v.battery;
  const double demand = ctx.exo.demand_kw;
  const double wind = ctx.exo.wind_avail_kw;

  // Battery mode machine.
  if (st.battery_mode == BatteryMode::Charging && bat.soc >= bat.params.soc_max - kSocTol)
    st.battery_mode = BatteryMode::Discharging;
  else if (st.battery_mode == BatteryMode::Discharging && bat.soc <= bat.params.soc_min + kSocTol)
    st.battery_mode = BatteryMode::Charging;

  double p_batt = 0.0;
  if (st.battery_mode == BatteryMode::Charging) {
    const double lim = battery_limits(bat, SocBand::Normal).max_charge_kw;
    p_batt = -std::min(std::max(0.0, wind - demand), lim);  // wind excess only
  } else {
    p_batt = kSetpointLimit;
  }
  const double batt_out = p_batt > 0.0 ? battery_limits(bat, SocBand::Normal).max_discharge_kw : p_batt;
  const double need = std::max(0.0, demand - wind - std::max(0.0, batt_out));

  // Genset machine over the priority order.
  const auto& g = v.gensets;
  std::size_t on = 0;
  std::size_t active = 0;  // On or warming up
  for (const GensetState* gs : g) {
    on += gs->mode.status == GensetStatus::On;
    active += gs->mode.status == GensetStatus::On || gs->mode.status == GensetStatus::WarmUp;
  }

  StatusCommand cmd = StatusCommand::DoNothing;
  if (active == 0) {
    cmd = StatusCommand::Start;
    st.over_counter = st.under_counter = 0;
  } else if (active == on) {
    double avail = 0.0;
    for (const GensetState* gs : g)
      if (gs->mode.status == GensetStatus::On) avail += heuristic_available_power(*gs);
    const double load = avail > 0.0 ? need / avail : 2.0;
    st.over_counter = load > hp.start_load ? st.over_counter + 1 : 0;
    const bool can_start = on < g.size();
    if (can_start && (load > 1.0 || st.over_counter >= hp.start_minutes)) {
      cmd = StatusCommand::Start;
      st.over_counter = 0;
      st.under_counter = 0;
    } else if (on >= 2) {
      // Could the gensets other than the last running one carry the load?
      double remaining = 0.0;
      std::size_t counted = 0;
      for (const GensetState* gs : g)
        if (gs->mode.status == GensetStatus::On && ++counted < on) remaining += heuristic_available_power(*gs);
      st.under_counter = need <= hp.stop_load * remaining ? st.under_counter + 1 : 0;
      if (st.under_counter >= hp.stop_minutes) {
        cmd = StatusCommand::Stop;
        st.under_counter = 0;
      }
    } else {
      st.under_counter = 0;
    }
  } else {
    st.over_counter = st.under_counter = 0;  // a genset is warming up
  }
  return {cmd, p_batt};
}

namespace {

class RandomPolicy final : public Policy {
 public:
  explicit RandomPolicy(std::uint64_t seed) : rng_(seed) {}
  MicrogridAction act(const PolicyContext&) override { return random_policy(rng_); }
  PolicyKind kind() const override { return PolicyKind::Random; }

 private:
  std::mt19937_64 rng_;
};

class FixedPolicy final : public Policy {
 public:
  explicit FixedPolicy(PolicyKind k) : kind_(k) {}
  MicrogridAction act(const PolicyContext& ctx) override {
    switch (kind_) {
      case PolicyKind::BatteryGreedy: return battery_greedy_policy();
      case PolicyKind::FuelGreedy: return fuel_greedy_policy(ctx.exo);
      default: return greedy_policy();
    }
  }
  PolicyKind kind() const override { return kind_; }

 private:
  PolicyKind kind_;
};

class HeuristicPolicy final : public Policy {
 public:
  explicit HeuristicPolicy(const HeuristicParams& p) : params_(p) { params_.validate(); }
  MicrogridAction act(const PolicyContext& ctx) override { return heuristic_policy(state_, params_, ctx); }
  PolicyKind kind() const override { return PolicyKind::Heuristic; }

 private:
  HeuristicParams params_;
  HeuristicState state_;
};

}  // namespace

std::unique_ptr<Policy> make_policy(PolicyKind kind, std::uint64_t seed, const HeuristicParams& params) {
  switch (kind) {
    case PolicyKind::Random: return std::make_unique<RandomPolicy>(seed);
    case PolicyKind::Heuristic: return std::make_unique<HeuristicPolicy>(params);
    default: return std::make_unique<FixedPolicy>(kind);
  }
}

}  // namespace microgrid
