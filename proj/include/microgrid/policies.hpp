#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <string_view>

#include "microgrid/systems.hpp"
#include "scu/actions.hpp"

namespace microgrid {

enum class PolicyKind { Random, BatteryGreedy, FuelGreedy, Greedy, Heuristic };

std::string_view to_string(PolicyKind k);
/// Accepts random, battery_greedy, fuel_greedy, greedy, heuristic (and the
/// dashed spellings). Throws std::invalid_argument otherwise.
PolicyKind parse_policy(std::string_view name);

/// What a baseline sees before choosing the action of minute t: the state
/// estimate after minute t-1 and this minute's exogenous values.
struct PolicyContext {
  MicrogridView view;  // pointers into the environment's tree, valid until the next step
  scu::Exogenous exo;
};

scu::MicrogridAction random_policy(std::mt19937_64& rng);
scu::MicrogridAction battery_greedy_policy();
scu::MicrogridAction fuel_greedy_policy(const scu::Exogenous& exo);
scu::MicrogridAction greedy_policy();

struct HeuristicParams {
  double start_load = 0.90;  // lead genset share of available power, strict >
  int start_minutes = 5;
  double stop_load = 0.70;   // of the remaining genset's available power, <=
  int stop_minutes = 5;
  void validate() const;
  bool operator==(const HeuristicParams&) const = default;
};

enum class BatteryMode { Charging, Discharging };

struct HeuristicState {
  BatteryMode battery_mode = BatteryMode::Charging;
  int over_counter = 0;   // consecutive minutes above start_load
  int under_counter = 0;  // consecutive minutes within stop_load of one genset
  bool operator==(const HeuristicState&) const = default;
};

/// "Available power" of a genset for the heuristic: min(nominal, 48 h cap).
double heuristic_available_power(const GensetState& g);

/// Industry heuristic: keeps one genset on, starts the next one when the lead
/// genset is overloaded, stops it when the other genset could carry the load,
/// and alternates the battery between wind-only charging and full discharge.
scu::MicrogridAction heuristic_policy(HeuristicState& state, const HeuristicParams& params,
                                      const PolicyContext& ctx);

class Policy {
 public:
  virtual ~Policy() = default;
  virtual scu::MicrogridAction act(const PolicyContext& ctx) = 0;
  virtual PolicyKind kind() const = 0;
};

std::unique_ptr<Policy> make_policy(PolicyKind kind, std::uint64_t seed, const HeuristicParams& params = {});

}  // namespace microgrid
