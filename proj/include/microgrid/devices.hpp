#pragma once

#include <cstdint>
#include <string>

#include "microgrid/degradation.hpp"
#include "microgrid/power_history.hpp"
#include "scu/actions.hpp"

namespace microgrid {

// ---------------------------------------------------------------- wind turbine

struct WindParams {
  double rated_kw = 400.0;
  bool operator==(const WindParams&) const = default;
};

struct WindTurbineState {
  WindParams params;
  double p_avail = 0.0;
  double p_out = 0.0;
  bool operator==(const WindTurbineState&) const = default;
};

/// No operational constraint applies to the turbine: the shield relays the
/// action unchanged.
scu::WindAction wind_shield(const WindTurbineState& state, const scu::WindAction& action);

/// Output is the setpoint clipped to [0, p_avail].
double wind_step(WindTurbineState& state, const scu::WindAction& action, double p_avail);

// --------------------------------------------------------------------- battery

struct BatteryParams {
  double capacity_kwh = 672.0;
  double nominal_kw = 600.0;
  double eta = 0.95;  // one-way efficiency
  double soc_min = 0.10;
  double soc_reserve = 0.05;
  double soc_max = 0.90;
  degradation::Params degradation;
  bool operator==(const BatteryParams&) const = default;
};

struct BatteryState {
  BatteryParams params;
  double soc = 0.5;
  double p_out = 0.0;    // last minute, > 0 discharge
  double d_b = 0.0;      // degradation of the last minute
  bool reserve = false;  // last minute was authorized below soc_min
  degradation::SwitchingBuffer rainflow;
  bool operator==(const BatteryState&) const = default;
};

BatteryState make_battery(const BatteryParams& params, double soc0);

/// Which SoC floor a setpoint is checked against.
enum class SocBand : std::uint8_t {
  Normal,    ///< [soc_min, soc_max]
  Reserve,   ///< [soc_reserve, soc_max]
  Physical,  ///< [0, 1], used only with device shields disabled
};

struct BatteryLimits {
  double max_discharge_kw = 0.0;  // >= 0
  double max_charge_kw = 0.0;     // >= 0, magnitude
};

/// Largest one-minute discharge and charge powers keeping the SoC in band.
BatteryLimits battery_limits(const BatteryState& state, SocBand band);

/// Clips the setpoint to the nominal power and the SoC-feasible band.
scu::BatteryAction battery_shield(const BatteryState& state, const scu::BatteryAction& action,
                                  bool allow_reserve);
scu::BatteryAction battery_shield(const BatteryState& state, const scu::BatteryAction& action,
                                  SocBand band);

struct BatteryStepResult {
  double p_out = 0.0;
  double soc_delta = 0.0;
  double d_b = 0.0;
};

/// One-minute battery dynamics for an already shielded action. Throws
/// scu::InvariantFailure if the resulting SoC leaves [0, 1].
BatteryStepResult battery_step(BatteryState& state, const scu::BatteryAction& action);

// --------------------------------------------------------------------- genset

enum class GensetStatus : std::uint8_t { Off, WarmUp, On, CoolDown };

std::string_view to_string(GensetStatus s);

/// Status plus its counter: remaining minutes for routines, minutes spent On
/// for On, unused for Off.
struct GensetMode {
  GensetStatus status = GensetStatus::Off;
  int counter = 0;
  bool operator==(const GensetMode&) const = default;
};

std::string format_mode(GensetMode m);  // "Off", "WarmUp:3", "On:12", "CoolDown:5"
GensetMode parse_mode(const std::string& text);

struct GensetParams {
  double p_min = 120.0;
  double p_nominal = 400.0;
  double p_max = 440.0;
  int warmup_minutes = 3;
  double warmup_power = 100.0;
  int cooldown_minutes = 5;
  int min_runtime = 30;
  double avg_cap_fraction = 0.7;  // of p_nominal over the window
  int window_minutes = 2880;      // 48 h of operation
  double fuel_rate = 0.25;        // l/kWh
  double fuel_idle = 10.0;        // l/h while not Off
  double avg_cap() const { return avg_cap_fraction * p_nominal; }
  bool operator==(const GensetParams&) const = default;
};

struct GensetState {
  GensetParams params;
  GensetMode mode;         // state at the start of the next minute
  GensetMode last_minute;  // status during the minute just simulated
  double p_out = 0.0;
  double fuel_l = 0.0;
  PowerHistory history;
  bool operator==(const GensetState&) const = default;
};

GensetState make_genset(const GensetParams& params, GensetMode mode);

/// Status the genset will have during the coming minute once `cmd` is applied
/// (the command is assumed already shielded).
GensetMode mode_after_command(const GensetState& state, scu::StatusCommand cmd);

inline bool in_routine(GensetStatus s) {
  return s == GensetStatus::WarmUp || s == GensetStatus::CoolDown;
}

/// Largest power for the coming minute keeping the 48 h average of operating
/// minutes at or below avg_cap. With n samples of sum S this is
/// avg_cap·(n+1) − S (window not full) or avg_cap·N − (S − oldest) (full),
/// tightened so that running at p_min stays admissible in every later minute,
/// and clipped to p_max.
double genset_power_cap_48h(const GensetState& state);

/// Power ceiling for an On genset this minute: nominal (or p_max with
/// emergency) and the 48 h cap.
double genset_available_power(const GensetState& state, bool emergency);

/// Command and setpoint correction. With `enforce` false only the physical
/// state machine and the p_max rating are applied (unsafe ablations).
scu::GensetAction genset_shield(const GensetState& state, const scu::GensetAction& action,
                                bool enforce = true);

struct GensetStepResult {
  double p_out = 0.0;
  double fuel_l = 0.0;
};

GensetStepResult genset_step(GensetState& state, const scu::GensetAction& action);

/// Fuel for one minute at power p with the given status.
double genset_fuel(const GensetParams& params, GensetStatus status, double p_kw);

}  // namespace microgrid
