#include "microgrid/degradation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "scu/errors.hpp"

namespace microgrid::degradation {

void Params::validate() const {
  if (!(alpha_d > 0.0)) throw std::invalid_argument("degradation: alpha_d must be > 0");
  if (!(beta > 0.0)) throw std::invalid_argument("degradation: beta must be > 0");
  if (!(w > 0.0 && w < 1.0)) throw std::invalid_argument("degradation: w must lie in (0, 1)");
}

double discretize(double x, double w) {
  // x / w is rarely exact in binary (0.125 / 0.01 = 12.4999...), so a tie is
  // detected with a small relative slack before rounding away from zero.
  const double q = x / w;
  const double mag = std::abs(q);
  const double n = std::floor(mag + 0.5 + 1e-9 * std::max(1.0, mag));
  return std::copysign(n, q) * w;
}

SwitchingBuffer seed_buffer(double soc0, double w) {
  const double q = discretize(soc0, w);
  SwitchingBuffer buf;
  buf.points.push_back(q);
  buf.window = {q, q, q};
  return buf;
}

bool rainflow_4p(std::span<const double> r) {
  if (r.size() < 4) throw scu::ContractViolation("rainflow_4p needs at least 4 points");
  const std::size_t n = r.size();
  const double a = r[n - 4], b = r[n - 3], c = r[n - 2], d = r[n - 1];
  return std::min(a, d) <= std::min(b, c) && std::max(b, c) <= std::max(a, d);
}

FilterResult hysteresis_filter(std::array<double, 3> f) {
  const auto shift = [&f] {
    f[0] = f[1];
    f[1] = f[2];
  };
  const auto skip = [&f] { f[1] = f[2]; };

  bool tp = false;
  if (f[2] < f[1]) {
    if (f[0] >= f[1]) {
      skip();
    } else {
      tp = true;
      shift();
    }
  } else if (f[2] > f[1]) {
    if (f[0] <= f[1]) {
      skip();
    } else {
      tp = true;
      shift();
    }
  } else {
    f[1] = f[0] > f[1] ? std::min(f[1], f[2]) : std::max(f[1], f[2]);
  }
  return {f, tp};
}

void update_switching_points(SwitchingBuffer& buf, double x, double w) {
  buf.window[2] = discretize(x, w);
  const FilterResult filtered = hysteresis_filter(buf.window);
  buf.window = filtered.window;
  auto& r = buf.points;
  if (filtered.turning_point) r.push_back(discretize(buf.window[0], w));
  r.push_back(discretize(x, w));

  while (r.size() >= 4 && rainflow_4p(r)) {
    r[r.size() - 3] = r.back();
    r.resize(r.size() - 2);
  }
  r.pop_back();  // provisional point
}

SwitchingBuffer updated_switching_points(SwitchingBuffer buffer, double x, double w) {
  update_switching_points(buffer, x, w);
  return buffer;
}

double cycle_step_cost(double soc, double delta, double anchor, const Params& p) {
  const double raw = p.alpha_d * std::exp(p.beta * std::abs(soc + delta - anchor)) -
                     p.alpha_d * std::exp(p.beta * std::abs(soc - anchor));
  if (raw >= 0.0) return raw;
  const double normalized = p.alpha_d * (std::exp(p.beta * std::abs(p.w)) - 1.0);
  return std::abs(delta) * normalized / p.w;
}

double cycle_step_cost(double soc, double delta, const SwitchingBuffer& buffer, const Params& p) {
  if (buffer.points.empty()) throw scu::ContractViolation("cycle_step_cost: empty switching buffer");
  return cycle_step_cost(soc, delta, buffer.points.back(), p);
}

double linear_step_cost(double delta, double alpha_d) { return alpha_d * std::abs(delta); }

double full_cycle_cost(double amplitude, const Params& p) {
  return 2.0 * p.alpha_d * (std::exp(p.beta * amplitude) - 1.0);
}

RainflowCycles count_cycles(std::span<const double> trace, double w) {
  // Reversals of the discretized trace, first and last sample included.
  std::vector<double> rev;
  for (double x : trace) {
    const double q = discretize(x, w);
    if (!rev.empty() && q == rev.back()) continue;
    if (rev.size() >= 2) {
      const double a = rev[rev.size() - 2], b = rev.back();
      if ((b - a) * (q - b) > 0.0) {  // same direction: b is not a reversal
        rev.back() = q;
        continue;
      }
    }
    rev.push_back(q);
  }

  RainflowCycles out;
  std::vector<double> stack;
  for (double x : rev) {
    stack.push_back(x);
    while (stack.size() >= 4) {
      const std::size_t n = stack.size();
      const double a = stack[n - 4], b = stack[n - 3], c = stack[n - 2], d = stack[n - 1];
      if (!(std::min(a, d) <= std::min(b, c) && std::max(b, c) <= std::max(a, d))) break;
      out.full.push_back(std::abs(b - c));
      stack[n - 3] = d;
      stack.resize(n - 2);
    }
  }
  for (std::size_t i = 1; i < stack.size(); ++i) out.half.push_back(std::abs(stack[i] - stack[i - 1]));
  return out;
}

double offline_rainflow_oracle(std::span<const double> trace, const Params& p) {
  if (trace.size() < 2) throw scu::ContractViolation("offline_rainflow_oracle needs >= 2 samples");
  const RainflowCycles cycles = count_cycles(trace, p.w);
  double total = 0.0;
  for (double a : cycles.full) total += full_cycle_cost(a, p);
  for (double a : cycles.half) total += 0.5 * full_cycle_cost(a, p);
  return total;
}

std::vector<double> online_step_costs(std::span<const double> trace, const Params& p) {
  std::vector<double> costs;
  if (trace.empty()) return costs;
  costs.reserve(trace.size() - 1);
  SwitchingBuffer buf = seed_buffer(trace[0], p.w);
  for (std::size_t i = 1; i < trace.size(); ++i) {
    update_switching_points(buf, trace[i], p.w);
    costs.push_back(cycle_step_cost(trace[i - 1], trace[i] - trace[i - 1], buf, p));
  }
  return costs;
}

}  // namespace microgrid::degradation
