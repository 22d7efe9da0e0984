#include "microgrid/exogenous.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "scu/errors.hpp"

namespace microgrid {

namespace {

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string trim(std::string s) {
  const auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && ws(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && ws(static_cast<unsigned char>(s[i]))) ++i;
  return s.substr(i);
}

template <class T>
bool parse_number(const std::string& text, T& out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* end = t.data() + t.size();
  auto [ptr, ec] = std::from_chars(t.data(), end, out);
  return ec == std::errc() && ptr == end;
}

// Bounded Gaussian increments from a seeded engine; std::normal_distribution
// is avoided so the series are identical across standard libraries.
struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  double uniform() { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }
};

}  // namespace

scu::Exogenous ExogenousSeries::at(std::size_t t) const {
  if (demand.empty()) throw scu::ContractViolation("empty exogenous series");
  const std::size_t i = t % demand.size();
  return {demand[i], wind_avail[i]};
}

SeriesError::SeriesError(const std::string& source, std::size_t line, const std::string& what)
    : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " + what), line_(line) {}

ExogenousSeries parse_series(std::istream& in, const std::string& source) {
  ExogenousSeries s;
  std::string line;
  std::size_t lineno = 0;
  long long prev_minute = 0;
  bool first_row = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    if (lineno == 1 && trim(line) == "minute,demand_kw,wind_avail_kw") continue;

    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (!line.empty() && line.back() == ',') cols.emplace_back();
    if (cols.size() != 3)
      throw SeriesError(source, lineno, "expected 3 columns (minute,demand_kw,wind_avail_kw), got " +
                                            std::to_string(cols.size()));
    long long minute = 0;
    double demand = 0.0;
    double wind = 0.0;
    if (!parse_number(cols[0], minute)) throw SeriesError(source, lineno, "bad minute '" + cols[0] + "'");
    if (!parse_number(cols[1], demand) || !std::isfinite(demand))
      throw SeriesError(source, lineno, "bad demand '" + cols[1] + "'");
    if (!parse_number(cols[2], wind) || !std::isfinite(wind))
      throw SeriesError(source, lineno, "bad wind '" + cols[2] + "'");
    if (!first_row && minute != prev_minute + 1)
      throw SeriesError(source, lineno, "minute " + std::to_string(minute) + " does not follow " +
                                            std::to_string(prev_minute));
    if (demand < 0.0) throw SeriesError(source, lineno, "demand " + cols[1] + " kW is negative");
    if (wind < 0.0 || wind > kWindMaxKw)
      throw SeriesError(source, lineno, "wind " + trim(cols[2]) + " kW outside [0, 400]");
    prev_minute = minute;
    first_row = false;
    s.demand.push_back(demand);
    s.wind_avail.push_back(wind);
  }
  if (s.demand.empty()) throw SeriesError(source, 0, "no data rows");
  return s;
}

ExogenousSeries load_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SeriesError(path, 0, "cannot open file");
  return parse_series(in, path);
}

void write_series(std::ostream& out, const ExogenousSeries& s) {
  out << "minute,demand_kw,wind_avail_kw\n";
  char buf[64];
  for (std::size_t t = 0; t < s.length(); ++t) {
    out << t << ',';
    auto r = std::to_chars(buf, buf + sizeof buf, s.demand[t]);
    out.write(buf, r.ptr - buf) << ',';
    r = std::to_chars(buf, buf + sizeof buf, s.wind_avail[t]);
    out.write(buf, r.ptr - buf) << '\n';
  }
}

ExogenousSeries synth_series(std::uint64_t seed, int days, SynthProfile profile) {
  if (days < 1) throw scu::ContractViolation("synth_series: days must be >= 1");
  const bool adv = profile == SynthProfile::Adversarial;
  // Demand: diurnal sinusoid (trough at 04:00) + AR(1) walk; wind: AR(1)
  // around its mean with occasional gust fronts.
  const double diurnal = adv ? 150.0 : 110.0;
  const double walk_sigma = adv ? 9.0 : 3.0;
  const double walk_keep = adv ? 0.97 : 0.995;
  const double walk_bound = adv ? 120.0 : 60.0;
  const double wind_mean = adv ? 40.0 : 272.0;
  const double wind_sigma = adv ? 9.0 : 6.0;
  const double wind_revert = adv ? 0.01 : 0.002;

  Rng rng(splitmix(seed) ^ (adv ? 0xad5e5a11ULL : 0x5eedULL));
  const std::size_t n = static_cast<std::size_t>(days) * 1440;
  ExogenousSeries s;
  s.demand.resize(n);
  s.wind_avail.resize(n);
  double walk = 0.0;
  double wind = wind_mean;
  for (std::size_t t = 0; t < n; ++t) {
    const double phase = 2.0 * std::numbers::pi * static_cast<double>(t % 1440) / 1440.0;
    walk = std::clamp(walk_keep * walk + walk_sigma * rng.normal(), -walk_bound, walk_bound);
    s.demand[t] = std::clamp(320.0 - diurnal * std::cos(phase - 2.0 * std::numbers::pi * 4.0 / 24.0) + walk,
                             180.0, 540.0);
    wind += wind_revert * (wind_mean - wind) + wind_sigma * rng.normal();
    wind = std::clamp(wind, 0.0, kWindMaxKw);
    s.wind_avail[t] = wind;
  }
  return s;
}

Forecast forecast_at(const ExogenousSeries& s, std::size_t t, ForecastKind kind, std::uint64_t noise_seed,
                     double sigma) {
  if (s.length() == 0) throw scu::ContractViolation("forecast_at: empty series");
  if (!(sigma >= 0.0)) throw scu::ContractViolation("forecast_at: sigma must be >= 0");
  Forecast f{};
  const bool demand = kind == ForecastKind::Demand;
  Rng rng(splitmix(splitmix(noise_seed) ^ (static_cast<std::uint64_t>(t) * 2 + (demand ? 0 : 1))));
  for (int k = 1; k <= kForecastPoints; ++k) {
    const scu::Exogenous e = s.at(t + static_cast<std::size_t>(k * kForecastInterval));
    double v = demand ? e.demand_kw : e.wind_avail_kw;
    if (sigma > 0.0) {
      v += sigma * std::sqrt(static_cast<double>(k) / kForecastPoints) * rng.normal();
      v = demand ? std::max(0.0, v) : std::clamp(v, 0.0, kWindMaxKw);
    }
    f[static_cast<std::size_t>(k - 1)] = v;
  }
  return f;
}

RecoveryScenario scenario_from_series(const ExogenousSeries& s, int horizon) {
  if (s.length() == 0) throw scu::ContractViolation("scenario_from_series: empty series");
  RecoveryScenario r;
  r.horizon = horizon;
  r.demand_high = *std::max_element(s.demand.begin(), s.demand.end());
  r.demand_low = *std::min_element(s.demand.begin(), s.demand.end());
  r.wind_low = *std::min_element(s.wind_avail.begin(), s.wind_avail.end());
  r.demand_ramp = 0.0;
  r.wind_ramp = 0.0;
  for (std::size_t t = 1; t < s.length(); ++t) {
    r.demand_ramp = std::max(r.demand_ramp, std::abs(s.demand[t] - s.demand[t - 1]));
    r.wind_ramp = std::max(r.wind_ramp, std::abs(s.wind_avail[t] - s.wind_avail[t - 1]));
  }
  r.validate();
  return r;
}

}  // namespace microgrid
