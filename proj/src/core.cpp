#include "scu/core.hpp"

#include <bit>
#include <set>
#include <sstream>

#include "scu/errors.hpp"

namespace scu {

bool Subsystem::operator==(const Subsystem& other) const {
  return device == other.device && children == other.children;
}

bool ControllerState::operator==(const ControllerState& other) const {
  return sc == other.sc && dt == other.dt;
}

bool ScuNode::operator==(const ScuNode& other) const {
  return id_ == other.id_ && system_ == other.system_ && controller_ == other.controller_;
}

ScuNode ScuNode::device(std::string id, DeviceState device, std::shared_ptr<const Shield> shield,
                        std::shared_ptr<const Hooks> hooks) {
  if (!shield) throw ContractViolation("SCU '" + id + "' has no shield");
  ScuNode n;
  n.id_ = std::move(id);
  n.shield_ = std::move(shield);
  n.hooks_ = std::move(hooks);
  n.system_.device = std::move(device);
  n.controller_.dt = n.system_;
  return n;
}

ScuNode ScuNode::system(std::string id, std::vector<ScuNode> children,
                        std::shared_ptr<const Shield> shield, std::shared_ptr<const Hooks> hooks) {
  if (!shield) throw ContractViolation("SCU '" + id + "' has no shield");
  if (children.empty()) throw ContractViolation("system SCU '" + id + "' needs at least one child");
  ScuNode n;
  n.id_ = std::move(id);
  n.shield_ = std::move(shield);
  n.hooks_ = std::move(hooks);
  n.system_.children = std::move(children);
  n.controller_.dt = n.system_;
  check_tree(n);
  return n;
}

ScuNode ScuNode::from_twin(std::string id, const TwinState& twin, std::shared_ptr<const Shield> shield,
                           std::shared_ptr<const Hooks> hooks) {
  if (!shield) throw ContractViolation("rollout node '" + id + "' has no shield");
  ScuNode n;
  n.id_ = std::move(id);
  n.shield_ = std::move(shield);
  n.hooks_ = std::move(hooks);
  n.system_ = twin;
  n.controller_.dt = twin;
  return n;
}

void advance_device(DeviceState& device, const ActionBundle& action, const Exogenous& exo) {
  std::visit(
      [&](auto& dev) {
        using D = std::decay_t<decltype(dev)>;
        if constexpr (std::is_same_v<D, microgrid::WindTurbineState>) {
          const auto* a = std::get_if<WindAction>(&action);
          if (!a) throw ContractViolation("wind turbine expects a WindAction");
          microgrid::wind_step(dev, *a, exo.wind_avail_kw);
        } else if constexpr (std::is_same_v<D, microgrid::BatteryState>) {
          const auto* a = std::get_if<BatteryAction>(&action);
          if (!a) throw ContractViolation("battery expects a BatteryAction");
          microgrid::battery_step(dev, *a);
        } else {
          const auto* a = std::get_if<GensetAction>(&action);
          if (!a) throw ContractViolation("genset expects a GensetAction");
          microgrid::genset_step(dev, *a);
        }
      },
      device);
}

Observation observe(const TwinState& estimate) {
  Observation obs;
  if (estimate.is_device()) {
    obs.device = estimate.device;
    return obs;
  }
  obs.parts.reserve(estimate.children.size());
  for (const ScuNode& child : estimate.children) obs.parts.push_back(observe(child.controller().dt));
  return obs;
}

void update_dt(TwinState& dt, const Observation& obs, const Hooks* hooks) {
  if (dt.is_device()) {
    if (!obs.device) throw ContractViolation("device twin updated with a system observation");
    if (hooks && hooks->state_estim)
      dt.device = hooks->state_estim(*dt.device, *obs.device);
    else
      dt.device = obs.device;
    return;
  }
  if (obs.parts.size() != dt.children.size()) {
    std::ostringstream msg;
    msg << "observation has " << obs.parts.size() << " parts for " << dt.children.size() << " child SCUs";
    throw ContractViolation(msg.str());
  }
  for (std::size_t j = 0; j < dt.children.size(); ++j) {
    ScuNode& child = dt.children[j];
    update_dt(child.real(), obs.parts[j], child.hooks());
    update_controller(child.controller(), obs.parts[j], child.hooks());
  }
}

TwinState updated_dt(TwinState dt, const Observation& obs, const Hooks* hooks) {
  update_dt(dt, obs, hooks);
  return dt;
}

void update_controller(ControllerState& controller, const Observation& obs, const Hooks* hooks) {
  if (hooks && hooks->controller_state)
    controller.sc = hooks->controller_state(controller.sc, obs);
  else
    ++controller.sc.steps;
  update_dt(controller.dt, obs, hooks);
}

ControllerState updated_controller(ControllerState controller, const Observation& obs, const Hooks* hooks) {
  update_controller(controller, obs, hooks);
  return controller;
}

const TwinState& step(ScuNode& node, const ActionBundle& action, const Exogenous& exo) {
  if (level_of(action) != node.shield().level()) {
    throw ContractViolation("SCU '" + node.id() + "' at level " + std::string(to_string(node.shield().level())) +
                            " received a " + std::string(to_string(level_of(action))) + " action");
  }
  ShieldReport report;
  const std::vector<ActionBundle> compliant = node.shield().dispatch(node.controller(), action, exo, report);

  Observation obs;
  Subsystem& sys = node.real();
  if (sys.is_device()) {
    if (compliant.size() != 1) throw ContractViolation("device shield must emit exactly one action");
    advance_device(*sys.device, compliant.front(), exo);
    obs.device = sys.device;
  } else {
    if (compliant.size() != sys.children.size())
      throw ContractViolation("shield of '" + node.id() + "' emitted the wrong number of actions");
    obs.parts.reserve(sys.children.size());
    for (std::size_t i = 0; i < sys.children.size(); ++i)
      obs.parts.push_back(observe(step(sys.children[i], compliant[i], exo)));
  }

  node.set_last_report(report);
  update_controller(node.controller(), obs, node.hooks());
  return node.controller().dt;
}

void simulate_visit(const TwinState& dt, std::shared_ptr<const Shield> shield,
                    const std::vector<ActionBundle>& actions, const std::vector<Exogenous>& exo,
                    const std::function<bool(std::size_t, const ScuNode&)>& visit,
                    std::shared_ptr<const Hooks> hooks) {
  if (actions.size() != exo.size()) throw ContractViolation("simulate: actions and exogenous lengths differ");
  if (actions.empty()) return;
  ScuNode node = ScuNode::from_twin("rollout", dt, std::move(shield), std::move(hooks));
  for (std::size_t t = 0; t < actions.size(); ++t) {
    step(node, actions[t], exo[t]);
    if (!visit(t, node)) return;
  }
}

std::vector<TwinState> simulate(const TwinState& dt, std::shared_ptr<const Shield> shield,
                                const std::vector<ActionBundle>& actions, const std::vector<Exogenous>& exo,
                                std::shared_ptr<const Hooks> hooks) {
  std::vector<TwinState> projected;
  projected.reserve(actions.size());
  simulate_visit(
      dt, std::move(shield), actions, exo,
      [&projected](std::size_t, const ScuNode& n) {
        projected.push_back(n.controller().dt);
        return true;
      },
      std::move(hooks));
  return projected;
}

namespace {

void collect_ids(const ScuNode& n, std::set<std::string>& seen) {
  if (!seen.insert(n.id()).second) throw ContractViolation("SCU id '" + n.id() + "' appears twice in the tree");
  const Subsystem& s = n.real();
  if (s.is_device() == !s.children.empty())
    throw ContractViolation("SCU '" + n.id() + "' must hold either a device or child SCUs");
  for (const ScuNode& c : s.children) collect_ids(c, seen);
}

struct Hasher {
  std::uint64_t h = 1469598103934665603ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= b[i];
      h *= 1099511628211ULL;
    }
  }
  void f(double x) { u(std::bit_cast<std::uint64_t>(x)); }
  void u(std::uint64_t x) { bytes(&x, sizeof x); }
  void s(const std::string& x) { bytes(x.data(), x.size()); }

  void device(const DeviceState& d) {
    u(d.index());
    std::visit(
        [this](const auto& dev) {
          using D = std::decay_t<decltype(dev)>;
          if constexpr (std::is_same_v<D, microgrid::WindTurbineState>) {
            f(dev.p_avail);
            f(dev.p_out);
          } else if constexpr (std::is_same_v<D, microgrid::BatteryState>) {
            f(dev.soc);
            f(dev.p_out);
            f(dev.d_b);
            u(dev.reserve);
            for (double x : dev.rainflow.points) f(x);
            for (double x : dev.rainflow.window) f(x);
          } else {
            u(static_cast<std::uint64_t>(dev.mode.status));
            u(static_cast<std::uint64_t>(dev.mode.counter));
            u(static_cast<std::uint64_t>(dev.last_minute.status));
            u(static_cast<std::uint64_t>(dev.last_minute.counter));
            f(dev.p_out);
            f(dev.fuel_l);
            u(dev.history.size());
            dev.history.visit_newest_first([this](double x) {
              f(x);
              return true;
            });
          }
        },
        d);
  }
  void subsystem(const Subsystem& s) {
    if (s.device) device(*s.device);
    u(s.children.size());
    for (const ScuNode& c : s.children) node(c);
  }
  void node(const ScuNode& n) {
    s(n.id());
    subsystem(n.real());
    u(n.controller().sc.steps);
    subsystem(n.controller().dt);
  }
};

}  // namespace

void check_tree(const ScuNode& root) {
  std::set<std::string> seen;
  collect_ids(root, seen);
}

std::uint64_t state_hash(const ScuNode& node) {
  Hasher h;
  h.node(node);
  return h.h;
}

}  // namespace scu
