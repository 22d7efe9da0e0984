#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "microgrid/devices.hpp"
#include "scu/core.hpp"

namespace microgrid {

/// Balance tolerance, kW. Anything below -kBalanceTolerance is a shortage.
inline constexpr double kBalanceTolerance = 1e-6;

/// Child order of the microgrid SCU.
enum MicrogridChild : std::size_t { kBattery = 0, kWind = 1, kOrchestrator = 2 };

struct ShieldConfig {
  bool device = true;    // device and orchestrator constraint shields
  bool recovery = true;  // predictive recovery shield on the status command
};

/// Exogenous envelope used by the recovery rollouts.
struct RecoveryScenario {
  int horizon = 9;  // minutes: current step + worst 8-minute genset blockage
  double demand_high = 540.0;
  double demand_low = 180.0;  // surplus rollout only
  double wind_low = 0.0;
  double demand_ramp = 10.0;  // kW/min
  double wind_ramp = 20.0;    // kW/min
  int surplus_horizon = 33;   // minutes: warm-up plus minimum runtime
  void validate() const;

  /// Worst-case demand and wind for rollout minute tau (0 = now).
  scu::Exogenous worst_case(const scu::Exogenous& now, int tau) const;
  /// Demand falling toward demand_low at demand_ramp; wind held.
  scu::Exogenous low_demand(const scu::Exogenous& now, int tau) const;
};

// ---------------------------------------------------------------- leaf shields

class WindShield final : public scu::Shield {
 public:
  scu::Level level() const override { return scu::Level::Wind; }
  std::vector<scu::ActionBundle> dispatch(const scu::ControllerState&, const scu::ActionBundle&,
                                          const scu::Exogenous&, scu::ShieldReport&) const override;
};

class BatteryShield final : public scu::Shield {
 public:
  explicit BatteryShield(bool enforce = true) : enforce_(enforce) {}
  scu::Level level() const override { return scu::Level::Battery; }
  std::vector<scu::ActionBundle> dispatch(const scu::ControllerState&, const scu::ActionBundle&,
                                          const scu::Exogenous&, scu::ShieldReport&) const override;

 private:
  bool enforce_;
};

class GensetShield final : public scu::Shield {
 public:
  explicit GensetShield(bool enforce = true) : enforce_(enforce) {}
  scu::Level level() const override { return scu::Level::Genset; }
  std::vector<scu::ActionBundle> dispatch(const scu::ControllerState&, const scu::ActionBundle&,
                                          const scu::Exogenous&, scu::ShieldReport&) const override;

 private:
  bool enforce_;
};

// ------------------------------------------------------------------ orchestrator

using GensetRefs = std::vector<const GensetState*>;

/// Priority-order state machine. Start goes to the first Off genset whose
/// predecessors are all On or warming up; Stop goes to the last genset that is
/// On when every genset after it is Off or cooling down. Anything else, or an
/// inapplicable command, becomes DoNothing everywhere.
std::vector<scu::StatusCommand> orchestrator_commands(const GensetRefs& gensets, scu::StatusCommand delta);

/// Status of each genset during the coming minute under `delta`, after the
/// orchestrator state machine and the genset shields.
std::vector<GensetMode> orchestrator_modes(const GensetRefs& gensets, scu::StatusCommand delta,
                                           bool enforce = true);

struct PowerRange {
  double min = 0.0;
  double max = 0.0;
};

/// Achievable total genset power this minute for the given modes.
PowerRange orchestrator_feasible_range(const GensetRefs& gensets, const std::vector<GensetMode>& modes,
                                       bool emergency, bool enforce = true);
PowerRange orchestrator_feasible_range(const GensetRefs& gensets, scu::StatusCommand delta,
                                       bool emergency, bool enforce = true);

/// Routine gensets keep their forced power; the remaining target is shared so
/// every On genset runs at the same fraction of nominal power, bounded by the
/// minimum power and the tightest available cap.
std::vector<double> equal_power_fraction(const GensetRefs& gensets, const std::vector<GensetMode>& modes,
                                         double p_setpoint, bool emergency, bool enforce = true);

std::vector<scu::GensetAction> orchestrator_dispatch(const GensetRefs& gensets,
                                                     const scu::OrchestratorAction& action,
                                                     bool enforce = true);

class OrchestratorShield final : public scu::Shield {
 public:
  explicit OrchestratorShield(bool enforce = true) : enforce_(enforce) {}
  scu::Level level() const override { return scu::Level::Orchestrator; }
  std::vector<scu::ActionBundle> dispatch(const scu::ControllerState&, const scu::ActionBundle&,
                                          const scu::Exogenous&, scu::ShieldReport&) const override;

 private:
  bool enforce_;
};

// --------------------------------------------------------------------- microgrid

/// Read-only access to the device states inside a microgrid subsystem (real
/// or twin).
struct MicrogridView {
  const BatteryState* battery = nullptr;
  const WindTurbineState* wind = nullptr;
  GensetRefs gensets;
};

MicrogridView view_of(const scu::Subsystem& microgrid);

struct MicrogridDispatch {
  scu::BatteryAction battery;
  scu::WindAction wind;
  scu::OrchestratorAction orchestrator;
  double balance = 0.0;
  bool reserve_used = false;
  bool overload_used = false;
};

/// Zero-balance resolution for one minute: agent battery setpoint first, then
/// wind, then gensets. Genset floor excess goes to battery charging, then wind
/// curtailment; a shortage first overrides the battery toward discharge, then
/// (when allowed) uses the genset overload and the battery reserve.
MicrogridDispatch microgrid_dispatch(const MicrogridView& view, const scu::MicrogridAction& action,
                                     const scu::Exogenous& exo, bool reserves_allowed, bool enforce = true);

/// Realized balance of a stepped microgrid subsystem.
double realized_balance(const MicrogridView& view, double demand_kw);

struct RecoveryDecision {
  scu::StatusCommand command = scu::StatusCommand::DoNothing;
  bool intervened = false;
  int failed_scenario = 0;  // of the requested command: 1, 2 or 3 (both)
  bool exhausted = false;   // no candidate passed both scenarios
};

enum class Rollout {
  WorstCase = 1,  ///< demand ramps up, wind ramps down, battery at full discharge, reserves allowed
  Constant = 2,   ///< exogenous values held, battery idle, no reserves
  Surplus = 3,    ///< demand ramps down, DoNothing afterwards: unabsorbable generation
};

struct RolloutResult {
  double shortfall_kwh = 0.0;
  double surplus_kwh = 0.0;
};

/// Rolls the microgrid twin forward from `first` (the action about to be
/// executed). WorstCase and Constant follow it with Start for the rest of the
/// horizon; Surplus follows it with DoNothing for `surplus_horizon` minutes.
/// With stop_at_first the rollout ends at the first shortage.
RolloutResult recovery_rollout(const scu::TwinState& microgrid_twin, const scu::MicrogridAction& first,
                               const scu::Exogenous& now, const RecoveryScenario& scenario, Rollout which,
                               bool enforce_devices = true, bool stop_at_first = true);

/// Predictive recovery shield. A candidate status command, executed now with
/// the agent's battery setpoint, must keep the balance non-negative in both
/// the WorstCase and the Constant rollout. Candidates are tried in the order
/// requested, DoNothing, Start, Stop; among recoverable ones the first that
/// also avoids unabsorbable surplus is preferred. If none is recoverable the
/// decision is marked exhausted and the candidate passing WorstCase (else the
/// one with the smallest worst-case shortage) is used.
RecoveryDecision recovery_shield(const scu::TwinState& microgrid_twin, const scu::MicrogridAction& requested,
                                 const scu::Exogenous& now, const RecoveryScenario& scenario,
                                 bool enforce_devices = true);

class MicrogridShield final : public scu::Shield {
 public:
  struct Options {
    ShieldConfig shields;
    bool reserves_allowed = true;
    RecoveryScenario scenario;
  };

  explicit MicrogridShield(Options options);

  scu::Level level() const override { return scu::Level::Microgrid; }
  std::vector<scu::ActionBundle> dispatch(const scu::ControllerState& controller, const scu::ActionBundle& action,
                                          const scu::Exogenous& exo, scu::ShieldReport& report) const override;

  const Options& options() const { return options_; }

  /// Rollout dispatcher: no recovery; reserves only in the WorstCase rollout.
  static std::shared_ptr<const MicrogridShield> rollout_shield(Rollout which, bool enforce_devices);

 private:
  Options options_;
};

struct MicrogridSetup {
  BatteryParams battery;
  double soc0 = 0.5;
  WindParams wind;
  GensetParams genset;
  std::array<GensetMode, 2> genset_modes{GensetMode{GensetStatus::On, 30}, GensetMode{}};
  ShieldConfig shields;
  RecoveryScenario scenario;
};

/// microgrid → {battery, wind, orchestrator → {genset1, genset2}}.
scu::ScuNode build_microgrid(const MicrogridSetup& setup);

}  // namespace microgrid
