#include "microgrid/audit.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>

namespace microgrid {

namespace {

enum Rule {
  kBalance,
  kWind,
  kSocBounds,
  kSocFloor,
  kSocDynamics,
  kBatteryPower,
  kTransition,
  kMinRuntime,
  kRoutinePower,
  kMinPower,
  kNominalCap,
  kMaxPower,
  kAverage48h,
  kPriority,
  kEqualFraction,
  kFuel,
  kRuleCount
};

constexpr std::array<const char*, kRuleCount> kRuleNames = {
    "balance",         "wind_bounds", "soc_bounds",    "soc_floor",     "soc_dynamics", "battery_power",
    "genset_transition", "min_runtime", "routine_power", "min_power",     "nominal_cap",  "max_power",
    "average_48h",     "priority_order", "equal_fraction", "fuel"};

enum class St { Off, WarmUp, On, CoolDown };

struct Status {
  St st = St::Off;
  int n = 0;
};

Status parse_status(const std::string& s, std::size_t line) {
  if (s == "Off") return {};
  const auto c = s.find(':');
  if (c == std::string::npos) throw std::runtime_error("line " + std::to_string(line) + ": bad status '" + s + "'");
  const std::string name = s.substr(0, c);
  int n = 0;
  const char* b = s.data() + c + 1;
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(b, e, n);
  if (ec != std::errc() || p != e) throw std::runtime_error("line " + std::to_string(line) + ": bad status '" + s + "'");
  if (name == "WarmUp") return {St::WarmUp, n};
  if (name == "On") return {St::On, n};
  if (name == "CoolDown") return {St::CoolDown, n};
  throw std::runtime_error("line " + std::to_string(line) + ": bad status '" + s + "'");
}

double parse_num(const std::string& s, std::size_t line, const char* col) {
  double x = 0.0;
  const char* e = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), e, x);
  if (ec != std::errc() || p != e)
    throw std::runtime_error("line " + std::to_string(line) + ": bad " + col + " '" + s + "'");
  return x;
}

struct GensetTrack {
  std::optional<Status> prev;
  std::deque<double> window;
  double sum = 0.0;
};

}  // namespace

std::size_t AuditReport::total() const {
  std::size_t t = 0;
  for (const auto& [_, n] : counts) t += n;
  return t;
}

std::size_t AuditReport::count(const std::string& name) const {
  for (const auto& [k, n] : counts)
    if (k == name) return n;
  throw std::out_of_range("no audit rule '" + name + "'");
}

AuditReport audit_trajectory(std::istream& in, const AuditLimits& L) {
  AuditReport rep;
  std::array<std::size_t, kRuleCount> cnt{};
  std::string line;
  std::size_t lineno = 0;
  std::map<std::string, std::size_t> col;
  auto flag = [&](Rule r, const std::string& detail) {
    ++cnt[r];
    if (rep.examples.size() < 20)
      rep.examples.push_back("line " + std::to_string(lineno) + ": " + kRuleNames[r] + ": " + detail);
  };

  std::optional<double> prev_soc;
  std::array<GensetTrack, 2> gen;
  static const char* kRequired[] = {"minute", "demand", "wind_avail", "p_wind", "p_batt", "soc", "p_gen1",
                                    "p_gen2", "status1", "status2", "fuel_l", "balance"};

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (col.empty()) {
      for (std::size_t i = 0; i < cells.size(); ++i) col[cells[i]] = i;
      for (const char* r : kRequired)
        if (!col.count(r)) throw std::runtime_error("line 1: missing column '" + std::string(r) + "'");
      continue;
    }
    if (cells.size() != col.size())
      throw std::runtime_error("line " + std::to_string(lineno) + ": expected " + std::to_string(col.size()) +
                               " columns, got " + std::to_string(cells.size()));
    auto num = [&](const char* name) { return parse_num(cells[col.at(name)], lineno, name); };
    auto flag_col = [&](const char* name) {
      auto it = col.find(name);
      return it != col.end() && cells[it->second] == "1";
    };
    ++rep.rows;

    const double demand = num("demand");
    const double wind_avail = num("wind_avail");
    const double p_wind = num("p_wind");
    const double p_batt = num("p_batt");
    const double soc = num("soc");
    const std::array<double, 2> p = {num("p_gen1"), num("p_gen2")};
    const std::array<Status, 2> s = {parse_status(cells[col.at("status1")], lineno),
                                     parse_status(cells[col.at("status2")], lineno)};
    const double fuel = num("fuel_l");
    const double logged_balance = num("balance");
    const bool reserve = flag_col("battery_reserve");
    const bool overload = flag_col("genset_overload");

    // Balance, recomputed from the power columns.
    const double bal = p_wind + p_batt + p[0] + p[1] - demand;
    if (std::abs(bal) > L.balance_tol || std::abs(logged_balance) > L.balance_tol)
      flag(kBalance, "generation - demand = " + std::to_string(bal) + " kW");

    if (p_wind < -L.tol || p_wind > wind_avail + L.tol || wind_avail > L.wind_max + L.tol)
      flag(kWind, "p_wind " + std::to_string(p_wind) + " of " + std::to_string(wind_avail));

    // Battery.
    if (soc < L.soc_reserve - L.tol || soc > L.soc_max + L.tol) flag(kSocBounds, "soc " + std::to_string(soc));
    if (p_batt > 0.0 && soc < L.soc_min - L.tol && !reserve)
      flag(kSocFloor, "discharged to soc " + std::to_string(soc) + " without reserve authorization");
    if (std::abs(p_batt) > L.battery_kw + L.tol) flag(kBatteryPower, "p_batt " + std::to_string(p_batt));
    if (prev_soc) {
      const double e = std::abs(p_batt) / 60.0;
      const double expect = p_batt > 0.0   ? *prev_soc - e / (L.eta * L.capacity_kwh)
                            : p_batt < 0.0 ? *prev_soc + e * L.eta / L.capacity_kwh
                                           : *prev_soc;
      if (std::abs(expect - soc) > 1e-9) flag(kSocDynamics, "soc " + std::to_string(soc) + " expected " + std::to_string(expect));
    }
    prev_soc = soc;

    // Gensets.
    double expect_fuel = 0.0;
    for (int i = 0; i < 2; ++i) {
      const Status& st = s[static_cast<std::size_t>(i)];
      const double pi = p[static_cast<std::size_t>(i)];
      GensetTrack& tr = gen[static_cast<std::size_t>(i)];
      const std::string who = "genset" + std::to_string(i + 1) + " ";

      if (tr.prev) {
        const Status& q = *tr.prev;
        bool ok = false;
        bool runtime_violation = false;
        switch (q.st) {
          case St::Off: ok = st.st == St::Off || (st.st == St::WarmUp && st.n == L.warmup_minutes); break;
          case St::WarmUp:
            ok = q.n > 1 ? (st.st == St::WarmUp && st.n == q.n - 1) : (st.st == St::On && st.n == 0);
            break;
          case St::On:
            ok = (st.st == St::On && st.n == q.n + 1) || (st.st == St::CoolDown && st.n == L.cooldown_minutes);
            runtime_violation = st.st == St::CoolDown && q.n + 1 < L.min_runtime;
            break;
          case St::CoolDown:
            // Off at the start of the next minute, where a Start applies at once.
            ok = q.n > 1 ? (st.st == St::CoolDown && st.n == q.n - 1)
                         : st.st == St::Off || (st.st == St::WarmUp && st.n == L.warmup_minutes);
            break;
        }
        if (!ok) flag(kTransition, who + "illegal transition");
        if (runtime_violation) flag(kMinRuntime, who + "stopped after " + std::to_string(q.n + 1) + " min");
      } else {
        const bool ok = st.st == St::Off || (st.st == St::WarmUp && st.n >= 1 && st.n <= L.warmup_minutes) ||
                        (st.st == St::On && st.n >= 0) ||
                        (st.st == St::CoolDown && st.n >= 1 && st.n <= L.cooldown_minutes);
        if (!ok) flag(kTransition, who + "invalid initial status");
      }
      tr.prev = st;

      switch (st.st) {
        case St::Off:
        case St::CoolDown:
          if (std::abs(pi) > L.tol) flag(kRoutinePower, who + "produces " + std::to_string(pi) + " kW");
          break;
        case St::WarmUp:
          if (std::abs(pi - L.warmup_power) > L.tol) flag(kRoutinePower, who + "warm-up at " + std::to_string(pi) + " kW");
          break;
        case St::On:
          if (pi < L.gen_min - L.tol) flag(kMinPower, who + std::to_string(pi) + " kW");
          if (pi > L.gen_nominal + L.tol && !overload) flag(kNominalCap, who + std::to_string(pi) + " kW without overload");
          if (pi > L.gen_max + L.tol) flag(kMaxPower, who + std::to_string(pi) + " kW");
          break;
      }
      if (st.st != St::Off) {
        expect_fuel += pi * L.fuel_rate / 60.0 + L.fuel_idle / 60.0;
        tr.window.push_back(pi);
        tr.sum += pi;
        if (tr.window.size() > L.window) {
          tr.sum -= tr.window.front();
          tr.window.pop_front();
        }
        // Re-add from scratch periodically so the running sum cannot drift.
        if (lineno % 1024 == 0) {
          tr.sum = 0.0;
          for (double x : tr.window) tr.sum += x;
        }
        const double avg = tr.sum / static_cast<double>(tr.window.size());
        if (avg > L.avg_cap + L.tol) flag(kAverage48h, who + "average " + std::to_string(avg) + " kW");
      }
    }
    if (std::abs(fuel - expect_fuel) > 1e-9) flag(kFuel, "fuel " + std::to_string(fuel) + " expected " + std::to_string(expect_fuel));

    const bool second_running = s[1].st == St::On || s[1].st == St::WarmUp;
    if (second_running && s[0].st == St::Off) flag(kPriority, "genset2 runs while genset1 is off");
    if (s[0].st == St::On && s[1].st == St::On &&
        std::abs(p[0] / L.gen_nominal - p[1] / L.gen_nominal) >= L.equal_fraction_tol)
      flag(kEqualFraction, std::to_string(p[0]) + " vs " + std::to_string(p[1]) + " kW");
  }

  for (int r = 0; r < kRuleCount; ++r) rep.counts.emplace_back(kRuleNames[static_cast<std::size_t>(r)], cnt[static_cast<std::size_t>(r)]);
  return rep;
}

AuditReport audit_file(const std::string& path, const AuditLimits& limits) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return audit_trajectory(in, limits);
}

std::string format_report(const AuditReport& r) {
  std::ostringstream out;
  out << "rows " << r.rows << '\n';
  for (const auto& [name, n] : r.counts) out << name << ' ' << n << '\n';
  out << "total " << r.total() << '\n';
  for (const auto& e : r.examples) out << "  " << e << '\n';
  return out.str();
}

}  // namespace microgrid
