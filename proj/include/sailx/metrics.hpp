#ifndef SAILX_METRICS_HPP
#define SAILX_METRICS_HPP

#include <optional>
#include <vector>

#include "sailx/core.hpp"
#include "sailx/policy.hpp"
#include "sailx/scheduler.hpp"

namespace sailx {

struct Outcome {
  bool success = false;
  double duration = 0.0;
};

struct SparcParams {
  int pad_factor = 4;
  double omega_max = 20.0;  // Hz
  double threshold = 0.05;
  double sample_interval = 0.02;
};

template <typename T>
struct Measured {
  std::optional<T> value;
  int count = 0;
};

struct MetricReport {
  Measured<double> sr, tpr, atr, sod, con, wed, sparc, ldlj;
};

double tpr(const std::vector<Outcome>& outcomes, double t_max);

/// Negative arc length of the DC-normalized, zero-padded magnitude spectrum.
double sparc(const std::vector<double>& speed, const SparcParams& params = {});

/// ln of the dimensionless integrated squared jerk of a speed profile; lower
/// is smoother.
double ldlj(const std::vector<double>& speed, double dt);

/// Position gap at the transition: next[h_f] versus prev[h_e + h_f].
double con(const ActionChunk& next_chunk, const ActionChunk& prev_chunk, int h_e, int h_f);
double con(const std::vector<Vector3>& next, const std::vector<Vector3>& prev, int offset, int h_f);

/// sum_i decay^i |next[i] - prev[offset + i]| over the first `overlap` steps.
double wed(const ActionChunk& next_chunk, const ActionChunk& prev_chunk, int overlap,
           double decay = 0.9, int offset = 0);
double wed(const std::vector<Vector3>& next, const std::vector<Vector3>& prev, int overlap,
           double decay = 0.9, int offset = 0);

/// Executed positions resampled at `rate` Hz, then finite-difference speed.
std::vector<double> speed_profile(const RolloutLog& log, double rate = 50.0);

struct RolloutMetrics {
  std::optional<double> con, wed, sparc, ldlj;
};

/// Chunk-transition and smoothness metrics of one rollout.
RolloutMetrics rollout_metrics(const RolloutLog& log, int h_c, double decay = 0.9,
                               double rate = 50.0);

/// Aggregate table over rollouts; ATR and SOD use successes only.
MetricReport aggregate(const std::vector<RolloutLog>& logs, double mean_demo_duration, int h_c,
                       double decay = 0.9);

}  // namespace sailx

#endif  // SAILX_METRICS_HPP
