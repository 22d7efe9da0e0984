#pragma once

#include <cstdint>
#include <string_view>
#include <variant>

namespace scu {

enum class StatusCommand : std::uint8_t { Start, Stop, DoNothing };

std::string_view to_string(StatusCommand c);

/// Action accepted by the top-level microgrid SCU (the agent's action).
struct MicrogridAction {
  StatusCommand delta_orch = StatusCommand::DoNothing;
  double p_batt_setpoint = 0.0;  // kW, > 0 discharges
  bool operator==(const MicrogridAction&) const = default;
};

/// `emergency` is the overload authorization; only the microgrid grants it.
struct OrchestratorAction {
  StatusCommand delta = StatusCommand::DoNothing;
  double p_setpoint = 0.0;
  bool emergency = false;
  bool operator==(const OrchestratorAction&) const = default;
};

struct GensetAction {
  StatusCommand delta = StatusCommand::DoNothing;
  double p_setpoint = 0.0;
  bool emergency = false;
  bool operator==(const GensetAction&) const = default;
};

/// `reserve` lets the battery discharge below the normal SoC floor.
struct BatteryAction {
  double p_setpoint = 0.0;
  bool reserve = false;
  bool operator==(const BatteryAction&) const = default;
};

struct WindAction {
  double p_setpoint = 0.0;
  bool operator==(const WindAction&) const = default;
};

using ActionBundle =
    std::variant<MicrogridAction, OrchestratorAction, GensetAction, BatteryAction, WindAction>;

/// Level of an SCU in the tree, one per ActionBundle alternative.
enum class Level : std::uint8_t { Microgrid, Orchestrator, Genset, Battery, Wind };

inline Level level_of(const ActionBundle& a) { return static_cast<Level>(a.index()); }

std::string_view to_string(Level l);

/// Exogenous inputs for one minute.
struct Exogenous {
  double demand_kw = 0.0;
  double wind_avail_kw = 0.0;
  bool operator==(const Exogenous&) const = default;
};

}  // namespace scu
