#ifndef SAILX_SCHEDULER_HPP
#define SAILX_SCHEDULER_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sailx/controller.hpp"
#include "sailx/policy.hpp"
#include "sailx/sim.hpp"

namespace sailx {

enum class TrackingMode {
  kPhysics,  // controller in the loop at physics_dt
  kIdeal,    // robot placed exactly on the reference at every event
};

struct ExecutorConfig {
  double delta_star = 0.05;
  double delta_delay = 0.02;
  double delay_jitter = 0.0;  // uniform extra latency in [0, jitter]
  double c_slow = 1.0;
  double c_fast = 1.0;
  double safety_margin = 0.05;
  int horizon_prediction = 32;
  int horizon_execution = 8;
  int horizon_condition = 4;
  GainProfile gains = high_gain();
  DynamicsParams dynamics;
  TrackingMode mode = TrackingMode::kPhysics;
  bool use_eag = true;
  bool adaptive_speed = true;
  bool gripper_event_flags = true;
  int event_window = 2;
  std::optional<double> interval_override;  // forces every step interval
  std::optional<int> max_cycles;
  // Applied to every inferred chunk; receives the reference pose at t_o.
  std::function<ActionChunk(const ActionChunk&, const Pose&)> postprocess;

  void validate() const;
};

/// delta_delay / (H_p - H_c); the interval must exceed this to avoid exhaustion.
double lower_bound_interval(double delta_delay, int horizon_prediction, int horizon_condition);

/// max(c * delta_star, (1 + margin) * lower bound).
double effective_interval(double c, const ExecutorConfig& cfg);

/// k = 1 -> c_slow, k = 0 -> c_fast.
double speed_factor(int k, const ExecutorConfig& cfg);

struct ScheduledWaypoint {
  double time = 0.0;
  ChunkWaypoint waypoint;
  int chunk = 0;
  int index = 0;
};

struct PendingInference {
  double t_o = 0.0;
  double t_a = 0.0;
  int offset = 0;  // new[i] continues superseded[offset + i]
  EagResult result;
};

struct ScheduleState {
  std::vector<ScheduledWaypoint> plan;
  std::optional<PendingInference> pending;
  double next_splice_time = 0.0;
  int stall_count = 0;
};

struct LogEvent {
  double time = 0.0;
  std::string tag;  // splice, stall, grasp, release, latency, fault
};

struct ChunkRecord {
  double t_o = 0.0;
  double t_a = 0.0;
  int offset = 0;   // into the previous record's positions
  int skipped = 0;  // leading waypoints dropped as outdated
  int source_demo = -1;
  int source_index = -1;
  bool guidance_applied = false;
  TrackingError error;
  std::vector<Vector3> positions;
};

struct RolloutLog {
  std::vector<TraceSample> samples;
  std::vector<LogEvent> events;
  std::vector<ChunkRecord> chunks;
  bool success = false;
  bool fault = false;
  double duration = 0.0;
  double t_max = 0.0;
  int stall_count = 0;
  int splice_count = 0;
  double physics_dt = 0.002;
};

/// Latency-aware receding-horizon rollout. Inference runs on the
/// observation snapshot at t_o and is delivered at t_a = t_o + delay; the
/// previous plan keeps executing in between. Single-threaded event loop.
RolloutLog run_rollout(const ExecutorConfig& cfg, const MockPolicy& policy, const WorldState& world,
                       const TaskSpec& spec, std::uint64_t seed);

}  // namespace sailx

#endif  // SAILX_SCHEDULER_HPP
