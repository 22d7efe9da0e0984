#pragma once

#include <array>
#include <span>
#include <vector>

namespace microgrid::degradation {

/// Cycle-based degradation parameters. SoC values are fractions in [0, 1].
struct Params {
  double alpha_d = 5.0;  ///< degradation rate
  double beta = 1.0;     ///< sensitivity to SoC excursions (per SoC fraction)
  double w = 0.01;       ///< discretization window of the switching points

  /// Throws std::invalid_argument unless alpha_d > 0, beta > 0 and 0 < w < 1.
  void validate() const;
  bool operator==(const Params&) const = default;
};

/// Online rainflow memory: the retained turning points R and the 3-slot
/// hysteresis window F. Every entry of `points` is a multiple of w.
struct SwitchingBuffer {
  std::vector<double> points;
  std::array<double, 3> window{};
  bool operator==(const SwitchingBuffer&) const = default;
};

/// Buffer for an episode starting at `soc0`: R = [q], F = [q, q, q] with
/// q = discretize(soc0, w), so that R.back() is always defined.
SwitchingBuffer seed_buffer(double soc0, double w);

/// Rounds x to the nearest multiple of w, ties away from zero.
double discretize(double x, double w);

/// 4-point rainflow condition on the last four points of R.
/// Throws scu::ContractViolation if R holds fewer than four points.
bool rainflow_4p(std::span<const double> points);

struct FilterResult {
  std::array<double, 3> window;
  bool turning_point = false;
};

FilterResult hysteresis_filter(std::array<double, 3> window);

/// Feeds the next SoC sample into the buffer (in place).
void update_switching_points(SwitchingBuffer& buffer, double x, double w);

/// Value-returning form of update_switching_points.
SwitchingBuffer updated_switching_points(SwitchingBuffer buffer, double x, double w);

/// Per-step exponential cost anchored at the latest switching point.
/// Negative raw values (discretization artifacts next to a switching point)
/// are replaced by |delta| * alpha_d * (exp(beta * w) - 1) / w.
double cycle_step_cost(double soc, double delta, double anchor, const Params& params);
double cycle_step_cost(double soc, double delta, const SwitchingBuffer& buffer,
                       const Params& params);

double linear_step_cost(double delta, double alpha_d);

/// Cost of one full cycle of depth `amplitude`; a half cycle costs half of it.
/// Φ(A) = 2 alpha_d (exp(beta A) - 1), the value the per-step costs telescope
/// to over a closed cycle.
double full_cycle_cost(double amplitude, const Params& params);

struct RainflowCycles {
  std::vector<double> full;  ///< amplitudes of closed cycles
  std::vector<double> half;  ///< amplitudes of residual half cycles
};

/// Classical offline 4-point rainflow count over the discretized trace.
RainflowCycles count_cycles(std::span<const double> trace, double w);

/// Total degradation of a trace by offline rainflow counting. Reference for
/// the online per-step sum; requires at least two samples.
double offline_rainflow_oracle(std::span<const double> trace, const Params& params);

/// Runs the online algorithm over a trace (trace[0] seeds the buffer) and
/// returns the per-step costs, trace.size() - 1 entries.
std::vector<double> online_step_costs(std::span<const double> trace, const Params& params);

}  // namespace microgrid::degradation
