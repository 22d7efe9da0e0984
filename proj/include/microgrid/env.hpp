#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "microgrid/exogenous.hpp"
#include "microgrid/policies.hpp"
#include "microgrid/systems.hpp"
#include "scu/core.hpp"

namespace microgrid {

struct InitState {
  double soc = 0.5;
  std::array<GensetMode, 2> gensets{GensetMode{GensetStatus::On, 30}, GensetMode{}};
  bool operator==(const InitState&) const = default;
};

struct EpisodeConfig {
  std::size_t start_minute = 0;
  std::size_t length = 1440;
  double alpha = 1.0;                 // degradation weight in the reward
  double intervention_penalty = 0.0;  // subtracted when the recovery shield intervenes
  std::optional<InitState> init;      // sampled from `seed` when empty
  std::uint64_t seed = 0;
  double forecast_sigma_demand = 0.0;  // kW at the 30th lead
  double forecast_sigma_wind = 0.0;
  ShieldConfig shields;
  std::optional<RecoveryScenario> scenario;  // derived from the series when empty
  BatteryParams battery;
  GensetParams genset;
  WindParams wind;

  /// Throws scu::ContractViolation on a malformed configuration.
  void validate() const;
};

/// Episode accounting. Counts are minutes, energies kWh.
struct MetricsRecord {
  std::uint64_t steps = 0;
  double fuel_l = 0.0;
  double degradation = 0.0;
  double reward = 0.0;
  std::uint64_t neg_balance_steps = 0;
  double neg_balance_kwh = 0.0;
  double pos_balance_kwh = 0.0;
  std::uint64_t shield_interventions = 0;
  std::uint64_t recovery_exhausted = 0;
  std::uint64_t battery_reserve_minutes = 0;
  std::uint64_t genset_overload_minutes = 0;

  MetricsRecord& operator+=(const MetricsRecord& o);
  bool operator==(const MetricsRecord&) const = default;
};

/// One row of the trajectory log.
struct StepRecord {
  std::size_t minute = 0;  // index into the series
  double demand = 0.0;
  double wind_avail = 0.0;
  double p_wind = 0.0;
  double p_batt = 0.0;
  double soc = 0.0;  // after the minute
  double p_gen1 = 0.0;
  double p_gen2 = 0.0;
  GensetMode status1;  // during the minute
  GensetMode status2;
  double fuel_l = 0.0;
  double deg = 0.0;
  double reward = 0.0;
  double balance = 0.0;
  scu::ShieldReport report;
};

inline constexpr int kObservationVersion = 1;

/// Fixed observation layout (version 1):
///   [0] episode minute, [1] demand, [2] wind available   (minute to decide)
///   [3..6]   battery soc, p_out, d_b, reserve flag
///   [7..8]   wind p_avail, p_out (last minute)
///   [9..20]  per genset: status code (Off 0, WarmUp 1, On 2, CoolDown 3),
///            counter, p_out, fuel_l, available power min(400, cap48), cap48
///   [21]     last realized balance
///   [22..51] demand forecast, [52..81] wind forecast
///   [82]     rainflow buffer length, [83..] buffer padded with 0 to
///            ceil(1/w) + 2 slots.
std::size_t rainflow_slots(double w);
std::size_t observation_size(double w);
std::vector<std::string> observation_names(double w);

struct StepResult {
  std::vector<double> observation;
  double reward = 0.0;
  bool done = false;
  MetricsRecord delta;
  StepRecord record;
};

class Env {
 public:
  Env(std::shared_ptr<const ExogenousSeries> series, EpisodeConfig config);

  /// Builds the tree from the configuration and returns the first
  /// observation. A fixed initial state that cannot be recovered from throws
  /// scu::ContractViolation; sampled ones are redrawn.
  std::vector<double> reset();
  StepResult step(const scu::MicrogridAction& action);

  bool done() const { return t_ >= config_.length; }
  std::size_t elapsed() const { return t_; }
  const EpisodeConfig& config() const { return config_; }
  const MetricsRecord& metrics() const { return metrics_; }
  const scu::ScuNode& tree() const;
  const RecoveryScenario& scenario() const { return scenario_; }
  const InitState& initial_state() const { return init_; }

  /// State estimate of the top-level SCU (its twin).
  MicrogridView view() const;
  scu::Exogenous current_exogenous() const;
  PolicyContext policy_context() const;
  std::vector<double> observation() const;

 private:
  std::shared_ptr<const ExogenousSeries> series_;
  EpisodeConfig config_;
  RecoveryScenario scenario_;
  InitState init_;
  std::optional<scu::ScuNode> root_;
  std::size_t t_ = 0;
  double last_balance_ = 0.0;
  MetricsRecord metrics_;
};

/// Draws an initial state consistent with the priority order.
InitState sample_init(std::uint64_t seed, std::uint64_t attempt);

/// Runs the policy to the end of the episode (resetting first); `sink`, when
/// given, receives every trajectory row.
MetricsRecord run_episode(Env& env, Policy& policy, const std::function<void(const StepRecord&)>& sink = {});

// ------------------------------------------------------------------ outputs

inline constexpr const char* kTrajectoryHeader =
    "minute,demand,wind_avail,p_wind,p_batt,soc,p_gen1,p_gen2,status1,status2,fuel_l,deg,reward,balance,"
    "intervention,battery_reserve,genset_overload,recovery_exhausted";

/// "-" when the recovery shield kept the command, else
/// "<requested>><applied>:<failed scenario code>".
std::string format_intervention(const scu::ShieldReport& r);

/// Shortest round-trip decimal form.
std::string format_double(double x);

class TrajectoryWriter {
 public:
  explicit TrajectoryWriter(std::ostream& out);
  void write(const StepRecord& r);

 private:
  std::ostream& out_;
};

std::string metrics_json(const MetricsRecord& m, int indent = 2);

}  // namespace microgrid
