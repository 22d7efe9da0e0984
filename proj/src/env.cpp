#include "microgrid/env.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <random>

#include "json.hpp"
#include "scu/errors.hpp"

namespace microgrid {

namespace {

constexpr int kMaxInitAttempts = 1000;

double status_code(GensetStatus s) { return static_cast<double>(static_cast<int>(s)); }

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

void EpisodeConfig::validate() const {
  if (length < 1) throw scu::ContractViolation("episode length must be >= 1");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw scu::ContractViolation("alpha must be >= 0");
  if (!(intervention_penalty >= 0.0)) throw scu::ContractViolation("intervention penalty must be >= 0");
  if (!(forecast_sigma_demand >= 0.0) || !(forecast_sigma_wind >= 0.0))
    throw scu::ContractViolation("forecast noise must be >= 0");
  if (!shields.device && shields.recovery)
    throw scu::ContractViolation("the recovery shield requires the device shields");
  battery.degradation.validate();
  const BatteryParams& b = battery;
  if (!(b.capacity_kwh > 0.0) || !(b.nominal_kw > 0.0) || !(b.eta > 0.0 && b.eta <= 1.0))
    throw scu::ContractViolation("battery capacity, power and efficiency must be positive (eta <= 1)");
  if (!(0.0 <= b.soc_reserve && b.soc_reserve <= b.soc_min && b.soc_min < b.soc_max && b.soc_max <= 1.0))
    throw scu::ContractViolation("battery SoC limits must satisfy 0 <= reserve <= min < max <= 1");
  const GensetParams& g = genset;
  if (!(0.0 < g.p_min && g.p_min <= g.p_nominal && g.p_nominal <= g.p_max) || g.warmup_power < 0.0)
    throw scu::ContractViolation("genset powers must satisfy 0 < p_min <= p_nominal <= p_max");
  if (g.warmup_minutes < 1 || g.cooldown_minutes < 1 || g.min_runtime < 0 || g.window_minutes < 1)
    throw scu::ContractViolation("genset routine lengths must be >= 1 minute");
  if (!(g.avg_cap_fraction * g.p_nominal >= g.p_min) || g.fuel_rate < 0.0 || g.fuel_idle < 0.0)
    throw scu::ContractViolation("genset average cap must admit p_min; fuel rates must be >= 0");
  if (!(wind.rated_kw > 0.0)) throw scu::ContractViolation("wind rating must be positive");
  if (scenario) scenario->validate();
}

MetricsRecord& MetricsRecord::operator+=(const MetricsRecord& o) {
  steps += o.steps;
  fuel_l += o.fuel_l;
  degradation += o.degradation;
  reward += o.reward;
  neg_balance_steps += o.neg_balance_steps;
  neg_balance_kwh += o.neg_balance_kwh;
  pos_balance_kwh += o.pos_balance_kwh;
  shield_interventions += o.shield_interventions;
  recovery_exhausted += o.recovery_exhausted;
  battery_reserve_minutes += o.battery_reserve_minutes;
  genset_overload_minutes += o.genset_overload_minutes;
  return *this;
}

// -------------------------------------------------------------- observation

std::size_t rainflow_slots(double w) {
  return static_cast<std::size_t>(std::ceil(1.0 / w - 1e-9)) + 2;
}

namespace {
constexpr std::size_t kHeadFields = 22;
constexpr std::size_t kForecastStart = kHeadFields;
constexpr std::size_t kRainflowLen = kForecastStart + 2 * kForecastPoints;
}  // namespace

std::size_t observation_size(double w) { return kRainflowLen + 1 + rainflow_slots(w); }

std::vector<std::string> observation_names(double w) {
  std::vector<std::string> n = {"minute", "demand", "wind_avail", "soc", "p_batt", "d_b", "battery_reserve",
                                "wind_p_avail", "p_wind"};
  for (int g = 1; g <= 2; ++g)
    for (const char* f : {"status", "counter", "p_out", "fuel_l", "available", "cap48"})
      n.push_back("gen" + std::to_string(g) + "_" + f);
  n.push_back("balance");
  for (int k = 1; k <= kForecastPoints; ++k) n.push_back("demand_fc_" + std::to_string(k));
  for (int k = 1; k <= kForecastPoints; ++k) n.push_back("wind_fc_" + std::to_string(k));
  n.push_back("rainflow_len");
  for (std::size_t i = 0; i < rainflow_slots(w); ++i) n.push_back("rainflow_" + std::to_string(i));
  return n;
}

// ---------------------------------------------------------------------- env

Env::Env(std::shared_ptr<const ExogenousSeries> series, EpisodeConfig config)
    : series_(std::move(series)), config_(std::move(config)) {
  if (!series_ || series_->length() == 0) throw scu::ContractViolation("environment needs a non-empty series");
  config_.validate();
  scenario_ = config_.scenario ? *config_.scenario : scenario_from_series(*series_);
}

InitState sample_init(std::uint64_t seed, std::uint64_t attempt) {
  std::mt19937_64 rng(mix(mix(seed) + attempt));
  auto uni = [&rng] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  auto pick = [&rng](int lo, int hi) { return lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1)); };
  InitState s;
  s.soc = 0.10 + 0.80 * uni();
  const double u1 = uni();
  GensetMode g1;
  if (u1 < 0.20) g1 = {GensetStatus::Off, 0};
  else if (u1 < 0.30) g1 = {GensetStatus::WarmUp, pick(1, 3)};
  else if (u1 < 0.90) g1 = {GensetStatus::On, pick(0, 120)};
  else g1 = {GensetStatus::CoolDown, pick(1, 5)};
  GensetMode g2;
  const double u2 = uni();
  if (g1.status == GensetStatus::On || g1.status == GensetStatus::WarmUp) {
    if (u2 < 0.55) g2 = {GensetStatus::Off, 0};
    else if (u2 < 0.65) g2 = {GensetStatus::WarmUp, pick(1, 3)};
    else if (u2 < 0.90 && g1.status == GensetStatus::On) g2 = {GensetStatus::On, pick(0, 120)};
    else g2 = {GensetStatus::CoolDown, pick(1, 5)};
  } else if (u2 < 0.2 && g1.status == GensetStatus::CoolDown && g1.counter > 1) {
    // Stops go in reverse priority order, so genset 2 finishes cooling first.
    g2 = {GensetStatus::CoolDown, pick(1, g1.counter - 1)};
  }
  s.gensets = {g1, g2};
  return s;
}

std::vector<double> Env::reset() {
  const bool check = config_.shields.device && config_.shields.recovery;
  const scu::Exogenous first = series_->at(config_.start_minute);
  for (int attempt = 0; attempt < kMaxInitAttempts; ++attempt) {
    const InitState init = config_.init ? *config_.init : sample_init(config_.seed, static_cast<std::uint64_t>(attempt));
    MicrogridSetup setup;
    setup.battery = config_.battery;
    setup.soc0 = init.soc;
    setup.wind = config_.wind;
    setup.genset = config_.genset;
    setup.genset_modes = init.gensets;
    setup.shields = config_.shields;
    setup.scenario = scenario_;
    scu::ScuNode root = build_microgrid(setup);  // rejects out-of-band states
    if (check && recovery_shield(root.controller().dt, {scu::StatusCommand::DoNothing, 0.0}, first, scenario_).exhausted) {
      if (config_.init) throw scu::ContractViolation("initial state cannot be recovered in the first minute");
      continue;
    }
    root_ = std::move(root);
    init_ = init;
    t_ = 0;
    last_balance_ = 0.0;
    metrics_ = {};
    return observation();
  }
  throw scu::ContractViolation("no recoverable initial state found");
}

const scu::ScuNode& Env::tree() const {
  if (!root_) throw scu::ContractViolation("environment not reset");
  return *root_;
}

MicrogridView Env::view() const { return view_of(tree().controller().dt); }

scu::Exogenous Env::current_exogenous() const { return series_->at(config_.start_minute + t_); }

PolicyContext Env::policy_context() const {
  return {view(), current_exogenous()};
}

std::vector<double> Env::observation() const {
  const MicrogridView v = view();
  const scu::Exogenous now = current_exogenous();
  const double w = config_.battery.degradation.w;
  std::vector<double> o;
  o.reserve(observation_size(w));
  o.push_back(static_cast<double>(t_));
  o.push_back(now.demand_kw);
  o.push_back(now.wind_avail_kw);
  o.push_back(v.battery->soc);
  o.push_back(v.battery->p_out);
  o.push_back(v.battery->d_b);
  o.push_back(v.battery->reserve ? 1.0 : 0.0);
  o.push_back(v.wind->p_avail);
  o.push_back(v.wind->p_out);
  for (const GensetState* g : v.gensets) {
    const double cap = genset_power_cap_48h(*g);
    o.push_back(status_code(g->mode.status));
    o.push_back(static_cast<double>(g->mode.counter));
    o.push_back(g->p_out);
    o.push_back(g->fuel_l);
    o.push_back(std::min(g->params.p_nominal, cap));
    o.push_back(cap);
  }
  o.push_back(last_balance_);
  const std::size_t t = config_.start_minute + t_;
  for (double x : forecast_at(*series_, t, ForecastKind::Demand, config_.seed, config_.forecast_sigma_demand))
    o.push_back(x);
  for (double x : forecast_at(*series_, t, ForecastKind::Wind, config_.seed, config_.forecast_sigma_wind))
    o.push_back(x);
  const auto& r = v.battery->rainflow.points;
  const std::size_t slots = rainflow_slots(w);
  if (r.size() > slots) throw scu::InvariantFailure("rainflow buffer exceeds its bound");
  o.push_back(static_cast<double>(r.size()));
  for (std::size_t i = 0; i < slots; ++i) o.push_back(i < r.size() ? r[i] : 0.0);
  return o;
}

StepResult Env::step(const scu::MicrogridAction& action) {
  if (!root_) throw scu::ContractViolation("environment not reset");
  if (done()) throw scu::ContractViolation("step after the episode ended");

  const std::size_t minute = config_.start_minute + t_;
  const scu::Exogenous exo = series_->at(minute);
  scu::step(*root_, action, exo);
  const scu::ShieldReport& rep = root_->last_report();

  const MicrogridView v = view_of(root_->real());
  StepResult res;
  StepRecord& r = res.record;
  r.minute = minute;
  r.demand = exo.demand_kw;
  r.wind_avail = exo.wind_avail_kw;
  r.p_wind = v.wind->p_out;
  r.p_batt = v.battery->p_out;
  r.soc = v.battery->soc;
  r.p_gen1 = v.gensets[0]->p_out;
  r.p_gen2 = v.gensets[1]->p_out;
  r.status1 = v.gensets[0]->last_minute;
  r.status2 = v.gensets[1]->last_minute;
  r.fuel_l = v.gensets[0]->fuel_l + v.gensets[1]->fuel_l;
  r.deg = v.battery->d_b;
  r.balance = realized_balance(v, exo.demand_kw);
  r.report = rep;
  r.reward = -(r.fuel_l + config_.alpha * r.deg) - (rep.intervened ? config_.intervention_penalty : 0.0);

  MetricsRecord& d = res.delta;
  d.steps = 1;
  d.fuel_l = r.fuel_l;
  d.degradation = r.deg;
  d.reward = r.reward;
  if (r.balance < -kBalanceTolerance) {
    d.neg_balance_steps = 1;
    d.neg_balance_kwh = -r.balance / 60.0;
  } else if (r.balance > kBalanceTolerance) {
    d.pos_balance_kwh = r.balance / 60.0;
  }
  d.shield_interventions = rep.intervened ? 1 : 0;
  d.recovery_exhausted = rep.recovery_exhausted ? 1 : 0;
  d.battery_reserve_minutes = rep.reserve_used ? 1 : 0;
  d.genset_overload_minutes = rep.overload_used ? 1 : 0;
  metrics_ += d;

  last_balance_ = r.balance;
  ++t_;
  res.reward = r.reward;
  res.done = done();
  res.observation = observation();
  return res;
}

MetricsRecord run_episode(Env& env, Policy& policy, const std::function<void(const StepRecord&)>& sink) {
  env.reset();
  while (!env.done()) {
    const scu::MicrogridAction a = policy.act(env.policy_context());
    const StepResult r = env.step(a);
    if (sink) sink(r.record);
  }
  return env.metrics();
}

// ------------------------------------------------------------------ outputs

std::string format_double(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x + 0.0);  // no "-0"
  return std::string(buf, r.ptr);
}

std::string format_intervention(const scu::ShieldReport& r) {
  if (!r.intervened) return "-";
  return std::string(scu::to_string(r.requested)) + ">" + std::string(scu::to_string(r.applied)) + ":" +
         std::to_string(r.failed_scenario);
}

TrajectoryWriter::TrajectoryWriter(std::ostream& out) : out_(out) { out_ << kTrajectoryHeader << '\n'; }

void TrajectoryWriter::write(const StepRecord& r) {
  char buf[64];
  auto num = [&](double x) {
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    out_.write(buf, res.ptr - buf);
    out_.put(',');
  };
  out_ << r.minute << ',';
  num(r.demand);
  num(r.wind_avail);
  num(r.p_wind);
  num(r.p_batt);
  num(r.soc);
  num(r.p_gen1);
  num(r.p_gen2);
  out_ << format_mode(r.status1) << ',' << format_mode(r.status2) << ',';
  num(r.fuel_l);
  num(r.deg);
  num(r.reward);
  num(r.balance);
  out_ << format_intervention(r.report) << ',' << (r.report.reserve_used ? 1 : 0) << ','
       << (r.report.overload_used ? 1 : 0) << ',' << (r.report.recovery_exhausted ? 1 : 0) << '\n';
}

std::string metrics_json(const MetricsRecord& m, int indent) {
  nlohmann::ordered_json j;
  j["steps"] = m.steps;
  j["fuel_l"] = m.fuel_l;
  j["degradation"] = m.degradation;
  j["reward"] = m.reward;
  j["neg_balance_steps"] = m.neg_balance_steps;
  j["neg_balance_kwh"] = m.neg_balance_kwh;
  j["pos_balance_kwh"] = m.pos_balance_kwh;
  j["shield_interventions"] = m.shield_interventions;
  j["recovery_exhausted"] = m.recovery_exhausted;
  j["battery_reserve_minutes"] = m.battery_reserve_minutes;
  j["genset_overload_minutes"] = m.genset_overload_minutes;
  return j.dump(indent);
}

}  // namespace microgrid
