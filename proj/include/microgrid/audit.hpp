#pragma once

// Row-by-row constraint checks over a trajectory CSV. Deliberately shares no
// code with the shields or device models: it re-derives every rule from the
// logged columns so that simulator bugs show up as violations.

#include <cstddef>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

namespace microgrid {

struct AuditLimits {
  double balance_tol = 1e-6;  // kW
  double tol = 1e-6;          // kW / SoC slack on bounds
  double soc_min = 0.10;
  double soc_reserve = 0.05;
  double soc_max = 0.90;
  double capacity_kwh = 672.0;
  double eta = 0.95;
  double battery_kw = 600.0;
  double wind_max = 400.0;
  double gen_min = 120.0;
  double gen_nominal = 400.0;
  double gen_max = 440.0;
  int warmup_minutes = 3;
  double warmup_power = 100.0;
  int cooldown_minutes = 5;
  int min_runtime = 30;
  double avg_cap = 280.0;
  std::size_t window = 2880;
  double fuel_rate = 0.25;
  double fuel_idle = 10.0;
  double equal_fraction_tol = 1e-9;
};

struct AuditReport {
  std::size_t rows = 0;
  /// Violation counts in a fixed order, one entry per constraint.
  std::vector<std::pair<std::string, std::size_t>> counts;
  /// First few violations, "line N: constraint: detail".
  std::vector<std::string> examples;

  std::size_t total() const;
  std::size_t count(const std::string& name) const;
};

/// Throws std::runtime_error on malformed input (with the line number).
AuditReport audit_trajectory(std::istream& in, const AuditLimits& limits = {});
AuditReport audit_file(const std::string& path, const AuditLimits& limits = {});

std::string format_report(const AuditReport& r);

}  // namespace microgrid
