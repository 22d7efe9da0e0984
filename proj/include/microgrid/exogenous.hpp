#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "microgrid/systems.hpp"
#include "scu/actions.hpp"

namespace microgrid {

inline constexpr double kWindMaxKw = 400.0;

/// Per-minute demand and available wind power.
struct ExogenousSeries {
  std::vector<double> demand;
  std::vector<double> wind_avail;

  std::size_t length() const { return demand.size(); }
  /// Minute t, wrapping around the end of the series.
  scu::Exogenous at(std::size_t t) const;
  bool operator==(const ExogenousSeries&) const = default;
};

/// Parse or range error in a series file; `line` is 1-based (0 if unknown).
class SeriesError : public std::runtime_error {
 public:
  SeriesError(const std::string& source, std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// CSV with header `minute,demand_kw,wind_avail_kw`; minutes start anywhere
/// and increase by exactly 1. A file without the header is accepted.
ExogenousSeries load_series(const std::string& path);
ExogenousSeries parse_series(std::istream& in, const std::string& source = "<stream>");
void write_series(std::ostream& out, const ExogenousSeries& series);

enum class SynthProfile {
  Nominal,      ///< demand 180–540 kW around 320, wind around 272
  Adversarial,  ///< low wind, steep demand ramps
};

/// Deterministic synthetic series of days·1440 minutes.
ExogenousSeries synth_series(std::uint64_t seed, int days, SynthProfile profile = SynthProfile::Nominal);

enum class ForecastKind { Demand, Wind };

inline constexpr int kForecastPoints = 30;
inline constexpr int kForecastInterval = 15;  // minutes
using Forecast = std::array<double, kForecastPoints>;

/// True values at t + 15k (k = 1..30, wrapping) plus zero-mean Gaussian noise
/// whose standard deviation grows as sigma·sqrt(k/30); sigma = 0 gives
/// perfect foresight. Deterministic in (noise_seed, t, kind).
Forecast forecast_at(const ExogenousSeries& series, std::size_t t, ForecastKind kind, std::uint64_t noise_seed,
                     double sigma);

/// Recovery envelope from the series: extremes and the largest one-minute
/// changes.
RecoveryScenario scenario_from_series(const ExogenousSeries& series, int horizon = 9);

}  // namespace microgrid
