#pragma once

// Hierarchical shielded controller units.
//
// An SCU binds a shielded controller to a real subsystem: either a single
// device or an ordered list of child SCUs. The controller holds a dispatcher
// (the shield) and a digital twin of the subsystem. For composite SCUs the
// twin is a full copy of every child SCU, i.e. the child's device twin *and*
// the child's own controller, so a parent can roll its children forward with
// all of their shields in the loop.
//
// The real subsystem and the twin share one type (Subsystem). With exact
// state estimation the two are equal field for field after every step.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "microgrid/devices.hpp"
#include "scu/actions.hpp"

namespace scu {

using DeviceState =
    std::variant<microgrid::WindTurbineState, microgrid::BatteryState, microgrid::GensetState>;

/// What a dispatcher did with the action it received in the last step.
struct ShieldReport {
  bool intervened = false;  // recovery shield replaced the status command
  StatusCommand requested = StatusCommand::DoNothing;
  StatusCommand applied = StatusCommand::DoNothing;
  int failed_scenario = 0;  // 0 none, 1 worst case, 2 constant, 3 both
  bool recovery_exhausted = false;
  bool reserve_used = false;
  bool overload_used = false;
  double planned_balance = 0.0;
  bool operator==(const ShieldReport&) const = default;
};

/// Controller-internal state s^SC.
struct ScState {
  std::uint64_t steps = 0;
  bool operator==(const ScState&) const = default;
};

class ScuNode;

/// A device, or the ordered child SCUs of a composite system.
struct Subsystem {
  std::optional<DeviceState> device;
  std::vector<ScuNode> children;
  bool is_device() const { return device.has_value(); }
  bool operator==(const Subsystem&) const;
};

using TwinState = Subsystem;

struct ControllerState {
  ScState sc;
  TwinState dt;
  bool operator==(const ControllerState&) const;
};

/// State measured after a step. Devices report their full state; systems
/// report one part per child, in child order.
struct Observation {
  std::optional<DeviceState> device;
  std::vector<Observation> parts;
};

/// Shield dispatcher of one SCU level.
class Shield {
 public:
  virtual ~Shield() = default;
  virtual Level level() const = 0;
  /// Returns one compliant action per component (exactly one for devices),
  /// using the controller's digital twin.
  virtual std::vector<ActionBundle> dispatch(const ControllerState& controller,
                                             const ActionBundle& action, const Exogenous& exo,
                                             ShieldReport& report) const = 0;
};

/// State-estimation hooks; an empty function means exact copy.
struct Hooks {
  std::function<DeviceState(const DeviceState& previous, const DeviceState& measured)> state_estim;
  std::function<ScState(const ScState& previous, const Observation& obs)> controller_state;
};

class ScuNode {
 public:
  ScuNode() = default;

  static ScuNode device(std::string id, DeviceState device, std::shared_ptr<const Shield> shield,
                        std::shared_ptr<const Hooks> hooks = nullptr);
  /// Throws ContractViolation if `children` is empty or two children share an id.
  static ScuNode system(std::string id, std::vector<ScuNode> children,
                        std::shared_ptr<const Shield> shield,
                        std::shared_ptr<const Hooks> hooks = nullptr);

  const std::string& id() const { return id_; }
  bool is_device() const { return system_.is_device(); }
  const Subsystem& real() const { return system_; }
  Subsystem& real() { return system_; }
  const ControllerState& controller() const { return controller_; }
  ControllerState& controller() { return controller_; }
  const Shield& shield() const { return *shield_; }
  const std::shared_ptr<const Shield>& shield_ptr() const { return shield_; }
  const Hooks* hooks() const { return hooks_.get(); }
  const std::shared_ptr<const Hooks>& hooks_ptr() const { return hooks_; }

  /// Dispatch report of the last step. Not part of the controller state:
  /// twins never see it.
  const ShieldReport& last_report() const { return report_; }
  void set_last_report(const ShieldReport& r) { report_ = r; }

  /// Wraps a twin into a live node so it can be stepped.
  static ScuNode from_twin(std::string id, const TwinState& twin,
                           std::shared_ptr<const Shield> shield,
                           std::shared_ptr<const Hooks> hooks = nullptr);

  /// Replaces the dispatcher (used to run rollouts under scenario-specific
  /// shields).
  void set_shield(std::shared_ptr<const Shield> shield) { shield_ = std::move(shield); }

  bool operator==(const ScuNode& other) const;

 private:
  std::string id_;
  std::shared_ptr<const Shield> shield_;
  std::shared_ptr<const Hooks> hooks_;
  Subsystem system_;
  ControllerState controller_;
  ShieldReport report_;
};

/// One SCU step: shield, advance the subsystem, update the controller.
/// Returns the new state estimate (the controller's twin).
const TwinState& step(ScuNode& node, const ActionBundle& action, const Exogenous& exo);

/// Updates s^SC through the hook and the twin through update_dt.
void update_controller(ControllerState& controller, const Observation& obs, const Hooks* hooks);
ControllerState updated_controller(ControllerState controller, const Observation& obs,
                                   const Hooks* hooks);

/// Device twins take the StateEstim hook; system twins disaggregate the
/// observation by child order and update each child's twin and controller.
/// Throws ContractViolation on an arity mismatch.
void update_dt(TwinState& dt, const Observation& obs, const Hooks* hooks);
TwinState updated_dt(TwinState dt, const Observation& obs, const Hooks* hooks);

/// Observation a parent sees for a child's returned state estimate.
Observation observe(const TwinState& estimate);

/// Rolls a copy of `dt` forward under `shield` for actions.size() minutes.
/// Returns the projected state estimate after each minute.
/// Throws ContractViolation if actions and exo differ in length.
std::vector<TwinState> simulate(const TwinState& dt, std::shared_ptr<const Shield> shield,
                                const std::vector<ActionBundle>& actions,
                                const std::vector<Exogenous>& exo,
                                std::shared_ptr<const Hooks> hooks = nullptr);

/// Rollout variant calling visit(minute, node) after each simulated minute; a
/// false return ends the rollout early.
void simulate_visit(const TwinState& dt, std::shared_ptr<const Shield> shield,
                    const std::vector<ActionBundle>& actions, const std::vector<Exogenous>& exo,
                    const std::function<bool(std::size_t, const ScuNode&)>& visit,
                    std::shared_ptr<const Hooks> hooks = nullptr);

/// Advances a device by one minute under an already compliant action.
void advance_device(DeviceState& device, const ActionBundle& action, const Exogenous& exo);

/// Throws ContractViolation if any id appears twice in the tree or a node's
/// kind and contents disagree.
void check_tree(const ScuNode& root);

/// Order-sensitive digest of the whole tree state, real parts and twins.
std::uint64_t state_hash(const ScuNode& node);

}  // namespace scu
