#include <doctest.h>

#include <sstream>

#include "microgrid/audit.hpp"
#include "microgrid/env.hpp"

using namespace microgrid;

namespace {

std::string shielded_trajectory(PolicyKind kind, std::uint64_t seed) {
  auto series = std::make_shared<const ExogenousSeries>(synth_series(seed, 1));
  EpisodeConfig c;
  c.seed = seed;
  Env env(series, c);
  auto p = make_policy(kind, seed);
  std::ostringstream out;
  TrajectoryWriter w(out);
  run_episode(env, *p, [&](const StepRecord& r) { w.write(r); });
  return out.str();
}

AuditReport audit(const std::string& text) {
  std::istringstream in(text);
  return audit_trajectory(in);
}

// Replaces column `col` of data row `row` (0-based, after the header).
std::string corrupt(const std::string& text, std::size_t row, std::size_t col, const std::string& value) {
  std::istringstream in(text);
  std::ostringstream out;
  std::string line;
  std::size_t i = 0;
  while (std::getline(in, line)) {
    if (i++ == row + 1) {
      std::vector<std::string> cells;
      std::stringstream ss(line);
      std::string c;
      while (std::getline(ss, c, ',')) cells.push_back(c);
      cells[col] = value;
      line.clear();
      for (std::size_t k = 0; k < cells.size(); ++k) line += (k ? "," : "") + cells[k];
    }
    out << line << '\n';
  }
  return out.str();
}

}  // namespace

TEST_SUITE("audit") {

TEST_CASE("shielded runs are clean") {
  for (PolicyKind k : {PolicyKind::Random, PolicyKind::Greedy, PolicyKind::Heuristic}) {
    const AuditReport r = audit(shielded_trajectory(k, 6));
    CHECK(r.rows == 1440);
    CHECK_MESSAGE(r.total() == 0, format_report(r));
  }
}

TEST_CASE("injected faults are caught") {
  const std::string clean = shielded_trajectory(PolicyKind::Heuristic, 9);
  SUBCASE("soc above the band") {
    const AuditReport r = audit(corrupt(clean, 100, 5, "0.95"));
    CHECK(r.count("soc_bounds") == 1);
  }
  SUBCASE("balance") {
    const AuditReport r = audit(corrupt(clean, 10, 1, "9999"));
    CHECK(r.count("balance") == 1);
  }
  SUBCASE("priority order") {
    const AuditReport r = audit(corrupt(corrupt(clean, 0, 8, "Off"), 0, 9, "On:50"));
    CHECK(r.count("priority_order") >= 1);
  }
  SUBCASE("min power") {
    const AuditReport r = audit(corrupt(clean, 50, 8, "On:500"));
    CHECK(r.count("genset_transition") >= 1);
  }
}

TEST_CASE("empty and malformed input") {
  const AuditReport r = audit("");
  CHECK(r.rows == 0);
  CHECK(r.total() == 0);
  CHECK_THROWS(audit("minute,demand\n0,1\n"));
  CHECK_THROWS(audit(std::string(kTrajectoryHeader) + "\n1,2,3\n"));
}

}
