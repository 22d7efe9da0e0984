#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>

#include "microgrid/env.hpp"
#include "microgrid/policies.hpp"

namespace microgrid {

/// Flat INI file with one section per module:
/// [battery] [degradation] [genset] [wind] [recovery] [episode] [heuristic].
/// Every key is optional; unknown sections or keys are errors.
struct Settings {
  EpisodeConfig episode;
  HeuristicParams heuristic;
  /// [recovery] keys given in the file; applied over the series-derived
  /// scenario once the series is known.
  std::map<std::string, double> recovery;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Settings load_settings(const std::string& path);
Settings parse_settings(std::istream& in, const std::string& source = "<config>");

RecoveryScenario apply_recovery_overrides(RecoveryScenario base, const std::map<std::string, double>& overrides);

/// The defaults as an INI document (round-trips through parse_settings).
std::string default_settings_ini();

}  // namespace microgrid
