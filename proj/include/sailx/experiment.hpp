#ifndef SAILX_EXPERIMENT_HPP
#define SAILX_EXPERIMENT_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sailx/io.hpp"
#include "sailx/metrics.hpp"
#include "sailx/policy.hpp"
#include "sailx/scheduler.hpp"
#include "sailx/speedmod.hpp"

namespace sailx {

enum class Method { kSail, kDp, kDpFast, kAggActions, kReplay };

Method parse_method(const std::string& name);
std::string method_name(Method m);

struct ExperimentConfig {
  TaskSpec task;
  DemoScript script;
  DynamicsParams dynamics = DemoScript{}.dynamics;
  PolicyConfig policy;
  RetrievalWeights weights;
  LabelParams labels;
  ExecutorConfig executor;
  int demos = 50;
  int trials = 100;
  int jobs = 1;
  std::uint64_t seed = 0;
  Method method = Method::kSail;
  std::vector<double> c_values{1.0, 0.5, 0.33, 0.2, 0.1};
  std::vector<double> noise_scales{0.0, 0.002, 0.005, 0.01};
  double agg_threshold = 0.0005;  // m
  double agg_min_dot = 0.25;
  double wed_decay = 0.9;
  int ood_samples = 64;
  int knn_k = 8;
  // Reset trials run the executed steps under this controller.
  GainProfile ood_gains = low_gain();
  bool ood_gravity_compensation = true;
  std::optional<bool> use_eag;  // overrides the method default for sail

  void validate() const;
};

/// Plain-text key = value file with [task], [policy], [executor], [labels],
/// [demos] and [experiment] sections. Unknown keys are rejected.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(std::istream& in);

/// Merges consecutive deltas while their sum stays short and they keep a
/// common direction; the sum of outputs equals the sum of inputs.
std::vector<Vector3> aggregate_actions(const std::vector<Vector3>& deltas, double threshold = 0.0005,
                                       double min_dot = 0.25);

/// Applies aggregate_actions to the waypoint deltas of a chunk, starting at `origin`.
ActionChunk aggregate_chunk(const ActionChunk& chunk, const Vector3& origin, double threshold,
                            double min_dot);

struct MethodSetup {
  ExecutorConfig executor;
  PolicyConfig policy;
  bool aggregate = false;
};

/// Executor and policy settings realizing a method at speed factor c.
MethodSetup method_setup(Method m, double c, const ExperimentConfig& cfg);

/// Per-trial seed; identical for every method so comparisons are paired.
std::uint64_t trial_seed(std::uint64_t seed, int trial);

/// Object start drawn from the demo workspace box for a trial.
TaskSpec trial_task(const ExperimentConfig& cfg, int trial);

/// Demo library with critical labels, shared by every policy rollout.
std::vector<Demonstration> build_library(const ExperimentConfig& cfg);
double mean_demo_duration(const std::vector<Demonstration>& demos);

/// Closed-loop rollout of a policy method.
RolloutLog run_method_trial(const ExperimentConfig& cfg, const std::vector<Demonstration>& library,
                            Method m, double c, int trial);

struct ReplaySpec {
  TargetMode target = TargetMode::kReached;
  GainProfile gains = high_gain();
  double c = 1.0;
  double noise = 0.0;  // per-axis reference position noise, m
  std::uint64_t seed = 0;
};

/// Open-loop replay of one demonstration's targets at interval c * delta_star.
RolloutLog run_replay(const Demonstration& demo, const ReplaySpec& spec, const TaskSpec& task,
                      const DynamicsParams& dynamics);

/// Runs f(i) for i in [0, n) on `jobs` threads; results keep index order.
template <typename T>
std::vector<T> parallel_map(int n, int jobs, const std::function<T(int)>& f);

struct OodTrial {
  double c = 1.0;
  int trial = 0;
  double e_pos = 0.0;
  double knn = 0.0;
  double kde = 0.0;
  double mmd = 0.0;
};

/// Single-step reset trial: from a demo state, execute H_e steps at c, then
/// score the conditioning tail against unconditional samples.
OodTrial run_ood_trial(const ExperimentConfig& cfg, const MockPolicy& policy, double c, int trial);

// Sweeps write CSV with a header row; all return the number of rows written.
int sweep_speed(const ExperimentConfig& cfg, const std::vector<Method>& methods, std::ostream& out);
int sweep_gain_replay(const ExperimentConfig& cfg, std::ostream& out);
int sweep_noise(const ExperimentConfig& cfg, std::ostream& out);
int diagnose(const ExperimentConfig& cfg, std::ostream& out);
int metrics_csv(const std::vector<RolloutLog>& logs, const std::vector<std::string>& names,
                double demo_duration, int h_c, std::ostream& out);
int report(std::istream& sweep_csv, std::ostream& out);

std::string format_number(double v);

}  // namespace sailx

#include "sailx/experiment_impl.hpp"

#endif  // SAILX_EXPERIMENT_HPP
