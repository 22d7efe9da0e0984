// Command-line front end: run, audit, gen-data, rainflow, print-config.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "microgrid/audit.hpp"
#include "microgrid/config.hpp"
#include "microgrid/degradation.hpp"
#include "microgrid/env.hpp"
#include "microgrid/exogenous.hpp"
#include "microgrid/policies.hpp"
#include "scu/errors.hpp"

namespace fs = std::filesystem;
using namespace microgrid;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

SynthProfile parse_profile(const std::string& p) {
  if (p == "nominal") return SynthProfile::Nominal;
  if (p == "adversarial") return SynthProfile::Adversarial;
  throw UsageError("unknown profile '" + p + "' (nominal, adversarial)");
}

struct RunOptions {
  std::string policy;
  std::string data;
  std::vector<std::uint64_t> seeds{0};
  std::string profile = "nominal";
  int days = 1;
  std::optional<double> alpha;
  std::optional<double> penalty;
  std::string config;
  std::string out = "out";
  int jobs = 1;
  bool no_recovery = false;
  bool no_device = false;
  bool unsafe = false;
  std::optional<double> init_soc;
  std::string init_gensets;
};

struct RunResult {
  std::uint64_t seed = 0;
  MetricsRecord metrics;
  InitState init;
  RecoveryScenario scenario;
  std::string csv;
  std::string error;
  bool invariant = false;
};

nlohmann::ordered_json scenario_json(const RecoveryScenario& s) {
  nlohmann::ordered_json j;
  j["horizon"] = s.horizon;
  j["demand_high"] = s.demand_high;
  j["wind_low"] = s.wind_low;
  j["demand_ramp"] = s.demand_ramp;
  j["wind_ramp"] = s.wind_ramp;
  return j;
}

RunResult run_one(const RunOptions& o, const Settings& settings, std::uint64_t seed) {
  RunResult res;
  res.seed = seed;
  try {
    auto series = std::make_shared<const ExogenousSeries>(
        o.data.empty() ? synth_series(seed, o.days, parse_profile(o.profile)) : load_series(o.data));
    EpisodeConfig cfg = settings.episode;
    cfg.seed = seed;
    cfg.length = o.data.empty() ? series->length() : std::min<std::size_t>(series->length(), static_cast<std::size_t>(o.days) * 1440);
    if (o.alpha) cfg.alpha = *o.alpha;
    if (o.penalty) cfg.intervention_penalty = *o.penalty;
    cfg.shields.device = !o.no_device;
    cfg.shields.recovery = !o.no_recovery && !o.no_device;
    cfg.scenario = apply_recovery_overrides(scenario_from_series(*series), settings.recovery);
    if (o.init_soc || !o.init_gensets.empty()) {
      InitState init;
      if (o.init_soc) init.soc = *o.init_soc;
      if (!o.init_gensets.empty()) {
        const auto comma = o.init_gensets.find(',');
        if (comma == std::string::npos) throw UsageError("--init-gensets expects STATUS1,STATUS2");
        init.gensets = {parse_mode(o.init_gensets.substr(0, comma)), parse_mode(o.init_gensets.substr(comma + 1))};
      }
      cfg.init = init;
    }

    Env env(series, cfg);
    auto policy = make_policy(parse_policy(o.policy), seed, settings.heuristic);
    const std::string stem = o.policy + "_s" + std::to_string(seed);
    res.csv = (fs::path(o.out) / (stem + ".csv")).string();
    std::ofstream csv(res.csv, std::ios::binary);
    if (!csv) throw UsageError("cannot write " + res.csv);
    TrajectoryWriter writer(csv);
    res.metrics = run_episode(env, *policy, [&writer](const StepRecord& r) { writer.write(r); });
    res.init = env.initial_state();
    res.scenario = env.scenario();
    csv.close();
    if (!csv) throw UsageError("failed writing " + res.csv);
  } catch (const scu::InvariantFailure& e) {
    res.error = e.what();
    res.invariant = true;
  } catch (const std::exception& e) {
    res.error = e.what();
  }
  return res;
}

int cmd_run(const RunOptions& o) {
  if (o.no_device && !o.unsafe) throw UsageError("--no-device-shields requires --unsafe");
  if (o.days < 1) throw UsageError("--days must be >= 1");
  if (o.jobs < 1) throw UsageError("--jobs must be >= 1");
  parse_policy(o.policy);
  parse_profile(o.profile);
  const Settings settings = o.config.empty() ? Settings{} : load_settings(o.config);
  fs::create_directories(o.out);

  std::vector<RunResult> results(o.seeds.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < o.seeds.size(); i = next++) results[i] = run_one(o, settings, o.seeds[i]);
  };
  std::vector<std::thread> pool;
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(o.jobs), o.seeds.size());
  for (std::size_t i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  int code = kExitOk;
  nlohmann::ordered_json summary;
  summary["policy"] = o.policy;
  summary["days"] = o.days;
  summary["shields"] = {{"device", !o.no_device}, {"recovery", !o.no_recovery && !o.no_device}};
  MetricsRecord total;
  summary["runs"] = nlohmann::ordered_json::array();
  for (const RunResult& r : results) {
    nlohmann::ordered_json j;
    j["seed"] = r.seed;
    if (!r.error.empty()) {
      j["error"] = r.error;
      std::cerr << "seed " << r.seed << ": " << r.error << '\n';
      code = std::max(code, r.invariant ? kExitInvariant : kExitUsage);
      if (r.invariant) code = kExitInvariant;
    } else {
      total += r.metrics;
      j["trajectory"] = r.csv;
      j["initial_state"] = {{"soc", r.init.soc},
                            {"genset1", format_mode(r.init.gensets[0])},
                            {"genset2", format_mode(r.init.gensets[1])}};
      j["recovery_scenario"] = scenario_json(r.scenario);
      j["metrics"] = nlohmann::ordered_json::parse(metrics_json(r.metrics));
      std::ofstream(fs::path(r.csv).replace_extension(".json")) << j.dump(2) << '\n';
    }
    summary["runs"].push_back(j);
  }
  summary["total"] = nlohmann::ordered_json::parse(metrics_json(total));
  std::ofstream(fs::path(o.out) / "summary.json") << summary.dump(2) << '\n';
  std::cout << metrics_json(total) << '\n';
  return code;
}

AuditLimits limits_from(const Settings& s) {
  AuditLimits l;
  const auto& b = s.episode.battery;
  const auto& g = s.episode.genset;
  l.soc_min = b.soc_min;
  l.soc_reserve = b.soc_reserve;
  l.soc_max = b.soc_max;
  l.capacity_kwh = b.capacity_kwh;
  l.eta = b.eta;
  l.battery_kw = b.nominal_kw;
  l.wind_max = s.episode.wind.rated_kw;
  l.gen_min = g.p_min;
  l.gen_nominal = g.p_nominal;
  l.gen_max = g.p_max;
  l.warmup_minutes = g.warmup_minutes;
  l.warmup_power = g.warmup_power;
  l.cooldown_minutes = g.cooldown_minutes;
  l.min_runtime = g.min_runtime;
  l.avg_cap = g.avg_cap_fraction * g.p_nominal;
  l.window = static_cast<std::size_t>(g.window_minutes);
  l.fuel_rate = g.fuel_rate;
  l.fuel_idle = g.fuel_idle;
  return l;
}

int cmd_audit(const std::string& path, const std::string& config) {
  const Settings settings = config.empty() ? Settings{} : load_settings(config);
  const AuditReport rep = audit_file(path, limits_from(settings));
  std::cout << format_report(rep);
  return rep.total() == 0 ? kExitOk : kExitInvariant;
}

int cmd_gen_data(std::uint64_t seed, int days, const std::string& profile, const std::string& out) {
  if (days < 1) throw UsageError("--days must be >= 1");
  const ExogenousSeries s = synth_series(seed, days, parse_profile(profile));
  if (out == "-") {
    write_series(std::cout, s);
    return kExitOk;
  }
  std::ofstream f(out, std::ios::binary);
  if (!f) throw UsageError("cannot write " + out);
  write_series(f, s);
  return kExitOk;
}

int cmd_rainflow(const std::string& path, const degradation::Params& p, bool quiet) {
  p.validate();
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  std::vector<double> trace;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::size_t used = 0;
    double x = 0.0;
    try {
      x = std::stod(line, &used);
    } catch (const std::exception&) {
      throw UsageError(path + ":" + std::to_string(lineno) + ": not a number");
    }
    if (!(x >= 0.0 && x <= 1.0)) throw UsageError(path + ":" + std::to_string(lineno) + ": SoC outside [0, 1]");
    trace.push_back(x);
  }
  if (trace.size() < 2) throw UsageError("trace needs at least two samples");
  const auto costs = degradation::online_step_costs(trace, p);
  double online = 0.0;
  if (!quiet) std::cout << "step,soc,cost\n";
  for (std::size_t i = 0; i < costs.size(); ++i) {
    online += costs[i];
    if (!quiet) std::cout << i + 1 << ',' << format_double(trace[i + 1]) << ',' << format_double(costs[i]) << '\n';
  }
  const double oracle = degradation::offline_rainflow_oracle(trace, p);
  const double gap = oracle > 0.0 ? std::abs(online - oracle) / oracle : (online == 0.0 ? 0.0 : INFINITY);
  std::cout << "online_total " << format_double(online) << '\n'
            << "oracle_total " << format_double(oracle) << '\n'
            << "relative_gap " << format_double(gap) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shielded microgrid simulator"};
  app.require_subcommand(1);

  RunOptions run;
  auto* r = app.add_subcommand("run", "Run a policy over one or more synthetic seeds or a data file");
  r->add_option("--policy", run.policy, "random | battery_greedy | fuel_greedy | greedy | heuristic")->required();
  r->add_option("--data", run.data, "CSV series (minute,demand_kw,wind_avail_kw)");
  r->add_option("--synth-seed,--seed", run.seeds, "Synthetic series / policy seeds")->delimiter(',');
  r->add_option("--profile", run.profile, "Synthetic profile: nominal | adversarial");
  r->add_option("--days", run.days, "Episode length in days");
  r->add_option("--alpha", run.alpha, "Degradation weight in the reward");
  r->add_option("--intervention-penalty", run.penalty, "Reward penalty per recovery intervention");
  r->add_option("--config", run.config, "INI configuration file");
  r->add_option("--out", run.out, "Output directory");
  r->add_option("--jobs", run.jobs, "Parallel seeds");
  r->add_option("--init-soc", run.init_soc, "Fixed initial SoC");
  r->add_option("--init-gensets", run.init_gensets, "Fixed initial genset statuses, e.g. On:30,Off");
  r->add_flag("--no-recovery-shield", run.no_recovery, "Disable the predictive recovery shield");
  r->add_flag("--no-device-shields", run.no_device, "Disable device and orchestrator shields (needs --unsafe)");
  r->add_flag("--unsafe", run.unsafe, "Allow unsafe ablations");

  std::string audit_path;
  std::string audit_config;
  auto* a = app.add_subcommand("audit", "Check every constraint on a trajectory CSV");
  a->add_option("trajectory", audit_path, "Trajectory CSV")->required();
  a->add_option("--config", audit_config, "INI configuration file");

  std::uint64_t gen_seed = 0;
  int gen_days = 1;
  std::string gen_profile = "nominal";
  std::string gen_out = "-";
  auto* g = app.add_subcommand("gen-data", "Write a synthetic demand/wind series");
  g->add_option("--seed", gen_seed);
  g->add_option("--days", gen_days);
  g->add_option("--profile", gen_profile, "nominal | adversarial");
  g->add_option("--out", gen_out, "Output file, - for stdout");

  std::string rf_path;
  degradation::Params rf_params;
  bool rf_quiet = false;
  auto* rf = app.add_subcommand("rainflow", "Online vs offline degradation of a SoC trace");
  rf->add_option("trace", rf_path, "One SoC fraction per line")->required();
  rf->add_option("--w", rf_params.w, "Discretization window");
  rf->add_option("--alpha-d", rf_params.alpha_d);
  rf->add_option("--beta", rf_params.beta);
  rf->add_flag("--quiet", rf_quiet, "Only print totals");

  app.add_subcommand("print-config", "Print the default configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*r) return cmd_run(run);
    if (*a) return cmd_audit(audit_path, audit_config);
    if (*g) return cmd_gen_data(gen_seed, gen_days, gen_profile, gen_out);
    if (*rf) return cmd_rainflow(rf_path, rf_params, rf_quiet);
    std::cout << default_settings_ini();
    return kExitOk;
  } catch (const scu::InvariantFailure& e) {
    std::cerr << "invariant failure: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
}
