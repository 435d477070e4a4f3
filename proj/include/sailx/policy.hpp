#ifndef SAILX_POLICY_HPP
#define SAILX_POLICY_HPP

#include <cstdint>
#include <random>
#include <vector>

#include "sailx/core.hpp"
#include "sailx/demo.hpp"
#include "sailx/sim.hpp"

namespace sailx {

struct ChunkWaypoint {
  Pose pose;
  GripperState gripper;
  int critical = 0;
};

/// One policy prediction: H_p timed waypoints plus observation/ready times.
struct ActionChunk {
  std::vector<ChunkWaypoint> waypoints;
  double t_o = 0.0;
  double t_a = 0.0;
  int source_demo = -1;
  int source_index = -1;

  std::size_t size() const { return waypoints.size(); }
};

enum class TargetMode { kReached, kCommanded };

struct PolicyConfig {
  int horizon_prediction = 32;  // H_p
  int horizon_execution = 8;    // H_e
  int horizon_condition = 4;    // H_c
  double cfg_weight = 1.0;
  double rho_pos = 0.02;
  double rho_ori = 0.05;
  double noise_sigma = 0.001;
  double p_branch = 0.2;
  TargetMode target_mode = TargetMode::kReached;
  int branch_candidates = 3;
  int condition_window = 24;  // start-index search radius for conditional retrieval
  bool object_relative = true;  // shift pre-grasp waypoints by the observed object offset
  int shift_fade = 20;          // steps after the grasp over which the shift fades out

  void validate() const;
};

struct RetrievalWeights {
  double position = 1.0;
  double orientation = 0.01;
  double gripper = 0.01;
  double object = 4.0;
  // Among states within this distance of the best match the latest wins, so
  // a robot at rest in a dwell keeps making progress.
  double progress_tolerance = 1e-6;
  // A match inside a stationary stretch of a demo moves toward its end, by at
  // most one execution horizon.
  double dwell_radius = 0.003;
};

struct EagResult {
  ActionChunk chunk;
  bool guidance_applied = false;
  TrackingError error;
};

/// Demonstration-retrieval stand-in for a generative policy. Immutable after
/// construction; each inference call draws from its own RNG stream derived
/// from (seed, stream).
class MockPolicy {
 public:
  MockPolicy(std::vector<Demonstration> library, PolicyConfig config,
             RetrievalWeights weights = {}, std::uint64_t seed = 0, double grasp_radius = 0.02);

  /// Unconditional draw anchored at the observed state.
  ActionChunk infer_unconditional(const WorldState& obs, std::uint64_t stream) const;

  /// Conditional draw continuing `tail` (the conditioning segment of the
  /// previous plan). An empty tail degenerates to the nearest demonstration.
  ActionChunk infer_conditional(const WorldState& obs, const std::vector<ChunkWaypoint>& tail,
                                std::uint64_t stream) const;

  /// Error-adaptive guidance: conditioning on prev[offset, offset + H_c) only
  /// when the tracking error is within both thresholds.
  EagResult infer_eag(const WorldState& obs, const ActionChunk& prev_chunk,
                      const Pose& current_desired, const Pose& current_state,
                      std::uint64_t stream, int offset) const;
  EagResult infer_eag(const WorldState& obs, const ActionChunk& prev_chunk,
                      const Pose& current_desired, const Pose& current_state,
                      std::uint64_t stream) const {
    return infer_eag(obs, prev_chunk, current_desired, current_state, stream,
                     config_.horizon_execution);
  }

  const PolicyConfig& config() const { return config_; }
  const std::vector<Demonstration>& library() const { return library_; }

  /// Nearest state index per demonstration, ranked by distance (closest first).
  struct Match {
    int demo = 0;
    int index = 0;
    double distance = 0.0;
    double fraction = 0.0;  // progress toward index + 1, in [0, 1)
  };
  std::vector<Match> rank(const WorldState& obs) const;

 private:
  struct Shift {
    Vector3 offset = Vector3::Zero();
    double ref_weight = 0.0;
  };
  Shift shift_for(const WorldState& obs, int demo, int index) const;
  Pose target(int demo, int index, const Shift& shift) const;
  ActionChunk unconditional_from(const std::vector<Match>& ranked, const WorldState& obs,
                                 std::uint64_t stream) const;
  ActionChunk conditional_from(const std::vector<Match>& ranked, const WorldState& obs,
                               const std::vector<ChunkWaypoint>& tail, std::uint64_t stream) const;
  Pose target_at(int demo, double phase, const Shift& shift) const;
  ActionChunk extract(int demo, double first, const Shift& shift, std::mt19937_64& rng) const;

  std::vector<Demonstration> library_;
  std::vector<std::vector<Vector3>> objects_;
  std::vector<std::vector<double>> shift_weights_;
  std::vector<std::vector<int>> dwell_end_;
  PolicyConfig config_;
  RetrievalWeights weights_;
  std::uint64_t seed_;
};

bool guidance_gate(const TrackingError& e, const PolicyConfig& config);

/// guided = uncond + w (cond - uncond), waypoint-wise. Orientations move along
/// the geodesic with parameter w; grippers are clamped to [0, 1].
ActionChunk cfg_blend(const ActionChunk& uncond, const ActionChunk& cond, double w);

std::mt19937_64 split_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t lane);

}  // namespace sailx

#endif  // SAILX_POLICY_HPP
