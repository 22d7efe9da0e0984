#include "microgrid/devices.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "scu/errors.hpp"

namespace microgrid {

using scu::StatusCommand;

// ---------------------------------------------------------------- wind turbine

scu::WindAction wind_shield(const WindTurbineState&, const scu::WindAction& action) {
  return action;
}

double wind_step(WindTurbineState& state, const scu::WindAction& action, double p_avail) {
  state.p_avail = p_avail;
  state.p_out = std::clamp(action.p_setpoint, 0.0, std::max(0.0, p_avail));
  return state.p_out;
}

// --------------------------------------------------------------------- battery

BatteryState make_battery(const BatteryParams& params, double soc0) {
  params.degradation.validate();
  BatteryState b;
  b.params = params;
  b.soc = soc0;
  b.rainflow = degradation::seed_buffer(soc0, params.degradation.w);
  return b;
}

BatteryLimits battery_limits(const BatteryState& s, SocBand band) {
  const auto& p = s.params;
  double floor = p.soc_min;
  double top = p.soc_max;
  if (band == SocBand::Reserve) floor = p.soc_reserve;
  if (band == SocBand::Physical) {
    floor = 0.0;
    top = 1.0;
  }
  BatteryLimits lim;
  lim.max_discharge_kw = std::min(p.nominal_kw, std::max(0.0, s.soc - floor) * p.capacity_kwh * p.eta * 60.0);
  lim.max_charge_kw = std::min(p.nominal_kw, std::max(0.0, top - s.soc) * p.capacity_kwh / p.eta * 60.0);
  return lim;
}

scu::BatteryAction battery_shield(const BatteryState& s, const scu::BatteryAction& a, SocBand band) {
  const BatteryLimits lim = battery_limits(s, band);
  return {std::clamp(a.p_setpoint, -lim.max_charge_kw, lim.max_discharge_kw), a.reserve};
}

scu::BatteryAction battery_shield(const BatteryState& s, const scu::BatteryAction& a, bool allow_reserve) {
  return battery_shield(s, a, allow_reserve ? SocBand::Reserve : SocBand::Normal);
}

BatteryStepResult battery_step(BatteryState& s, const scu::BatteryAction& a) {
  const auto& p = s.params;
  const double kw = a.p_setpoint;
  const double energy_kwh = std::abs(kw) / 60.0;
  double next = s.soc;
  if (kw > 0.0) {
    next = s.soc - energy_kwh / (p.eta * p.capacity_kwh);
  } else if (kw < 0.0) {
    next = s.soc + energy_kwh * p.eta / p.capacity_kwh;
  }
  if (!(next >= -1e-12 && next <= 1.0 + 1e-12))
    throw scu::InvariantFailure("battery SoC left [0, 1]: " + std::to_string(next));
  next = std::clamp(next, 0.0, 1.0);

  const double delta = next - s.soc;
  degradation::update_switching_points(s.rainflow, next, p.degradation.w);
  const double d_b = degradation::cycle_step_cost(s.soc, delta, s.rainflow, p.degradation);

  s.soc = next;
  s.p_out = kw;
  s.d_b = d_b;
  s.reserve = a.reserve;
  return {kw, delta, d_b};
}

// --------------------------------------------------------------------- genset

std::string_view to_string(GensetStatus s) {
  switch (s) {
    case GensetStatus::Off: return "Off";
    case GensetStatus::WarmUp: return "WarmUp";
    case GensetStatus::On: return "On";
    case GensetStatus::CoolDown: return "CoolDown";
  }
  return "?";
}

std::string format_mode(GensetMode m) {
  if (m.status == GensetStatus::Off) return "Off";
  return std::string(to_string(m.status)) + ":" + std::to_string(m.counter);
}

GensetMode parse_mode(const std::string& text) {
  if (text == "Off") return {GensetStatus::Off, 0};
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw std::invalid_argument("bad genset status '" + text + "'");
  const std::string name = text.substr(0, colon);
  std::size_t used = 0;
  int counter = 0;
  try {
    counter = std::stoi(text.substr(colon + 1), &used);
  } catch (const std::exception&) {
    throw std::invalid_argument("bad genset status counter in '" + text + "'");
  }
  if (used != text.size() - colon - 1 || counter < 0)
    throw std::invalid_argument("bad genset status counter in '" + text + "'");
  if (name == "WarmUp") return {GensetStatus::WarmUp, counter};
  if (name == "On") return {GensetStatus::On, counter};
  if (name == "CoolDown") return {GensetStatus::CoolDown, counter};
  throw std::invalid_argument("bad genset status '" + text + "'");
}

GensetState make_genset(const GensetParams& params, GensetMode mode) {
  GensetState g;
  g.params = params;
  g.mode = mode;
  g.last_minute = mode;
  g.history = PowerHistory(static_cast<std::size_t>(params.window_minutes), params.p_min);
  return g;
}

GensetMode mode_after_command(const GensetState& s, StatusCommand cmd) {
  if (cmd == StatusCommand::Start && s.mode.status == GensetStatus::Off)
    return {GensetStatus::WarmUp, s.params.warmup_minutes};
  if (cmd == StatusCommand::Stop && s.mode.status == GensetStatus::On)
    return {GensetStatus::CoolDown, s.params.cooldown_minutes};
  return s.mode;
}

double genset_power_cap_48h(const GensetState& s) {
  const auto& p = s.params;
  const auto& h = s.history;
  const double avg = p.avg_cap();
  const auto window = static_cast<double>(h.capacity());
  const auto n = static_cast<double>(h.size());

  const double next_sample = h.full() ? avg * window - (h.sum() - h.oldest()) : avg * (n + 1.0) - h.sum();
  double cap = std::min(std::max(0.0, next_sample), p.p_max);

  // Later windows, assuming p_min afterwards: x <= avg·N − p_min·(N−1) − P_m,
  // P_m = Σ (s − p_min) over the m newest samples, m < N. The excess sum
  // bounds every P_m from above, so the scan only runs near the limit.
  const double base = avg * window - p.p_min * (window - 1.0);
  if (base - h.excess_sum() < cap) {
    const std::size_t span = std::min(h.size(), h.capacity() - 1);
    std::size_t seen = 0;
    double running = 0.0;
    double worst = 0.0;
    h.visit_newest_first([&](double x) {
      if (seen++ == span) return false;
      running += x - p.p_min;
      worst = std::max(worst, running);
      return true;
    });
    cap = std::min(cap, std::max(0.0, base - worst));
  }
  return cap;
}

double genset_available_power(const GensetState& s, bool emergency) {
  const double rating = emergency ? s.params.p_max : s.params.p_nominal;
  return std::min(rating, genset_power_cap_48h(s));
}

scu::GensetAction genset_shield(const GensetState& s, const scu::GensetAction& a, bool enforce) {
  StatusCommand cmd = a.delta;
  if (cmd == StatusCommand::Start && s.mode.status != GensetStatus::Off) cmd = StatusCommand::DoNothing;
  if (cmd == StatusCommand::Stop) {
    const bool on = s.mode.status == GensetStatus::On;
    const bool ran_long_enough = s.mode.counter >= s.params.min_runtime;
    if (!on || (enforce && !ran_long_enough)) cmd = StatusCommand::DoNothing;
  }

  const GensetMode mode = mode_after_command(s, cmd);
  double p = 0.0;
  switch (mode.status) {
    case GensetStatus::Off:
    case GensetStatus::CoolDown: p = 0.0; break;
    case GensetStatus::WarmUp: p = s.params.warmup_power; break;
    case GensetStatus::On:
      p = enforce ? std::clamp(a.p_setpoint, s.params.p_min, std::max(s.params.p_min, genset_available_power(s, a.emergency)))
                  : std::clamp(a.p_setpoint, 0.0, s.params.p_max);
      break;
  }
  return {cmd, p, a.emergency};
}

double genset_fuel(const GensetParams& p, GensetStatus status, double p_kw) {
  if (status == GensetStatus::Off) return 0.0;
  return p_kw * p.fuel_rate / 60.0 + p.fuel_idle / 60.0;
}

GensetStepResult genset_step(GensetState& s, const scu::GensetAction& a) {
  const GensetMode mode = mode_after_command(s, a.delta);
  double p = 0.0;
  switch (mode.status) {
    case GensetStatus::Off:
    case GensetStatus::CoolDown: p = 0.0; break;
    case GensetStatus::WarmUp: p = s.params.warmup_power; break;
    case GensetStatus::On: p = std::clamp(a.p_setpoint, 0.0, s.params.p_max); break;
  }
  const double fuel = genset_fuel(s.params, mode.status, p);
  if (mode.status != GensetStatus::Off) s.history.push(p);

  s.last_minute = mode;
  s.p_out = p;
  s.fuel_l = fuel;
  switch (mode.status) {
    case GensetStatus::Off: s.mode = mode; break;
    case GensetStatus::WarmUp:
      s.mode = mode.counter <= 1 ? GensetMode{GensetStatus::On, 0} : GensetMode{GensetStatus::WarmUp, mode.counter - 1};
      break;
    case GensetStatus::On: s.mode = {GensetStatus::On, mode.counter + 1}; break;
    case GensetStatus::CoolDown:
      s.mode = mode.counter <= 1 ? GensetMode{GensetStatus::Off, 0} : GensetMode{GensetStatus::CoolDown, mode.counter - 1};
      break;
  }
  return {p, fuel};
}

}  // namespace microgrid
