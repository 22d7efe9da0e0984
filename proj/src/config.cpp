#include "microgrid/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>
#include <vector>

#include "scu/errors.hpp"

namespace microgrid {

namespace {

namespace pt = boost::property_tree;

struct Key {
  const char* section;
  const char* name;
  std::function<double(const Settings&)> get;
  std::function<void(Settings&, double)> set;
  bool integer = false;
};

template <class T>
void set_int(T& field, double v, const std::string& key) {
  if (v != std::floor(v)) throw ConfigError(key + " must be an integer");
  field = static_cast<T>(v);
}

const std::vector<Key>& keys() {
#define DKEY(sec, name, expr)                                                  \
  Key { sec, name, [](const Settings& s) { return static_cast<double>(s.expr); }, \
        [](Settings& s, double v) { s.expr = v; }, false }
#define IKEY(sec, name, expr)                                                                         \
  Key { sec, name, [](const Settings& s) { return static_cast<double>(s.expr); },                      \
        [](Settings& s, double v) { set_int(s.expr, v, std::string(sec) + "." + name); }, true }
  static const std::vector<Key> k = {
      DKEY("battery", "capacity_kwh", episode.battery.capacity_kwh),
      DKEY("battery", "nominal_kw", episode.battery.nominal_kw),
      DKEY("battery", "eta", episode.battery.eta),
      DKEY("battery", "soc_min", episode.battery.soc_min),
      DKEY("battery", "soc_reserve", episode.battery.soc_reserve),
      DKEY("battery", "soc_max", episode.battery.soc_max),
      DKEY("degradation", "alpha_d", episode.battery.degradation.alpha_d),
      DKEY("degradation", "beta", episode.battery.degradation.beta),
      DKEY("degradation", "w", episode.battery.degradation.w),
      DKEY("genset", "p_min", episode.genset.p_min),
      DKEY("genset", "p_nominal", episode.genset.p_nominal),
      DKEY("genset", "p_max", episode.genset.p_max),
      IKEY("genset", "warmup_minutes", episode.genset.warmup_minutes),
      DKEY("genset", "warmup_power", episode.genset.warmup_power),
      IKEY("genset", "cooldown_minutes", episode.genset.cooldown_minutes),
      IKEY("genset", "min_runtime", episode.genset.min_runtime),
      DKEY("genset", "avg_cap_fraction", episode.genset.avg_cap_fraction),
      IKEY("genset", "window_minutes", episode.genset.window_minutes),
      DKEY("genset", "fuel_rate", episode.genset.fuel_rate),
      DKEY("genset", "fuel_idle", episode.genset.fuel_idle),
      DKEY("wind", "rated_kw", episode.wind.rated_kw),
      DKEY("episode", "alpha", episode.alpha),
      DKEY("episode", "intervention_penalty", episode.intervention_penalty),
      DKEY("episode", "forecast_sigma_demand", episode.forecast_sigma_demand),
      DKEY("episode", "forecast_sigma_wind", episode.forecast_sigma_wind),
      DKEY("heuristic", "start_load", heuristic.start_load),
      IKEY("heuristic", "start_minutes", heuristic.start_minutes),
      DKEY("heuristic", "stop_load", heuristic.stop_load),
      IKEY("heuristic", "stop_minutes", heuristic.stop_minutes),
  };
#undef DKEY
#undef IKEY
  return k;
}

constexpr const char* kRecoveryKeys[] = {"horizon", "demand_high", "demand_low", "wind_low", "demand_ramp",
                                         "wind_ramp", "surplus_horizon"};

double to_double(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ConfigError(key + ": '" + text + "' is not a number");
  }
  while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
  if (used != text.size() || !std::isfinite(v)) throw ConfigError(key + ": '" + text + "' is not a number");
  return v;
}

}  // namespace

Settings parse_settings(std::istream& in, const std::string& source) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  Settings s;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw ConfigError(source + ": key '" + section + "' outside a section");
    for (const auto& [name, value] : body) {
      const std::string key = section + "." + name;
      const double v = to_double(value.data(), source + ": " + key);
      if (section == "recovery") {
        bool known = false;
        for (const char* r : kRecoveryKeys) known = known || name == r;
        if (!known) throw ConfigError(source + ": unknown key '" + key + "'");
        s.recovery[name] = v;
        continue;
      }
      bool found = false;
      for (const Key& k : keys()) {
        if (section == k.section && name == k.name) {
          k.set(s, v);
          found = true;
          break;
        }
      }
      if (!found) throw ConfigError(source + ": unknown key '" + key + "'");
    }
  }
  try {
    s.episode.validate();
    s.heuristic.validate();
    apply_recovery_overrides(RecoveryScenario{}, s.recovery).validate();
  } catch (const std::exception& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return s;
}

Settings load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  return parse_settings(in, path);
}

RecoveryScenario apply_recovery_overrides(RecoveryScenario base, const std::map<std::string, double>& o) {
  for (const auto& [k, v] : o) {
    if (k == "horizon") {
      if (v != std::floor(v)) throw ConfigError("recovery.horizon must be an integer");
      base.horizon = static_cast<int>(v);
    } else if (k == "surplus_horizon") {
      if (v != std::floor(v)) throw ConfigError("recovery.surplus_horizon must be an integer");
      base.surplus_horizon = static_cast<int>(v);
    } else if (k == "demand_low") {
      base.demand_low = v;
    } else if (k == "demand_high") {
      base.demand_high = v;
    } else if (k == "wind_low") {
      base.wind_low = v;
    } else if (k == "demand_ramp") {
      base.demand_ramp = v;
    } else if (k == "wind_ramp") {
      base.wind_ramp = v;
    } else {
      throw ConfigError("unknown recovery key '" + k + "'");
    }
  }
  return base;
}

std::string default_settings_ini() {
  const Settings s;
  std::ostringstream out;
  out.precision(17);
  std::string section;
  for (const Key& k : keys()) {
    if (section != k.section) {
      if (!section.empty()) out << '\n';
      section = k.section;
      out << '[' << section << "]\n";
    }
    out << k.name << " = " << k.get(s) << '\n';
  }
  out << "\n; Recovery envelope; omitted keys are derived from the series\n"
         "; (extremes and largest one-minute changes).\n[recovery]\nhorizon = 9\n";
  return out.str();
}

}  // namespace microgrid
