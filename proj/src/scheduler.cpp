#include "sailx/scheduler.hpp"

#include <algorithm>
#include <limits>
#include <random>

#include "sailx/speedmod.hpp"

namespace sailx {

void ExecutorConfig::validate() const {
  if (!(delta_star > 0.0)) throw ConfigError("delta_star must be positive");
  if (!(delta_delay >= 0.0) || !(delay_jitter >= 0.0)) throw ConfigError("latency must be non-negative");
  if (!(c_fast > 0.0 && c_fast <= 1.0 && c_slow > 0.0 && c_slow <= 1.0)) {
    throw ConfigError("speed factors must lie in (0, 1]");
  }
  if (c_slow < c_fast) throw ConfigError("c_slow must not be smaller than c_fast");
  if (!(safety_margin >= 0.0)) throw ConfigError("safety margin must be non-negative");
  if (horizon_prediction <= horizon_condition) throw ConfigError("H_p must exceed H_c");
  if (horizon_execution < 1 || horizon_execution > horizon_prediction) {
    throw ConfigError("H_e must lie in [1, H_p]");
  }
  if (interval_override && !(*interval_override > 0.0)) throw ConfigError("interval must be positive");
  gains.validate();
  dynamics.validate();
}

double lower_bound_interval(double delta_delay, int horizon_prediction, int horizon_condition) {
  if (horizon_prediction <= horizon_condition) {
    throw ConfigError("prediction horizon must exceed conditioning horizon");
  }
  if (!(delta_delay >= 0.0)) throw ConfigError("latency must be non-negative");
  return delta_delay / static_cast<double>(horizon_prediction - horizon_condition);
}

double effective_interval(double c, const ExecutorConfig& cfg) {
  const double lb = lower_bound_interval(cfg.delta_delay, cfg.horizon_prediction, cfg.horizon_condition);
  return std::max(c * cfg.delta_star, (1.0 + cfg.safety_margin) * lb);
}

double speed_factor(int k, const ExecutorConfig& cfg) { return k ? cfg.c_slow : cfg.c_fast; }

namespace {

class Executor {
 public:
  Executor(const ExecutorConfig& cfg, const MockPolicy& policy, const WorldState& world,
           const TaskSpec& spec, std::uint64_t seed)
      : cfg_(cfg), policy_(policy), spec_(spec), seed_(seed), world_(world),
        jitter_rng_(split_rng(seed, 0, 7)) {
    log_.t_max = spec.t_max;
    log_.physics_dt = cfg.dynamics.physics_dt;
    hold_ = ReferenceTrack({world.sim_time, world.sim_time + 1.0},
                           {world.robot.pose, world.robot.pose},
                           {world.robot.gripper.command(), world.robot.gripper.command()});
    ref_ = hold_;
  }

  RolloutLog run() {
    try {
      loop();
    } catch (const SimFault& fault) {
      log_.fault = true;
      log_.success = false;
      log_.events.push_back({world_.sim_time, "fault"});
    }
    log_.stall_count = state_.stall_count;
    if (!log_.success) log_.duration = std::min(world_.sim_time, spec_.t_max);
    return std::move(log_);
  }

 private:
  void loop() {
    const double t0 = world_.sim_time;
    observe(t0, /*has_plan=*/false);
    int cycles = 0;
    while (true) {
      const double next = state_.pending ? state_.pending->t_a : state_.next_splice_time;
      const double until = std::min(next, spec_.t_max);
      advance(until);
      if (done()) return;
      if (until >= spec_.t_max) return;
      if (state_.pending) {
        splice();
        ++cycles;
        if (cfg_.max_cycles && cycles >= *cfg_.max_cycles) return;
      } else {
        observe(world_.sim_time, /*has_plan=*/true);
      }
    }
  }

  bool done() {
    if (success(world_, spec_)) {
      log_.success = true;
      log_.duration = last_release_ > 0.0 ? last_release_ : world_.sim_time;
      return true;
    }
    return false;
  }

  // Moves the world to `until` following the current reference.
  void advance(double until) {
    if (until <= world_.sim_time) return;
    if (cfg_.mode == TrackingMode::kPhysics) {
      TrackResult r = track(world_, ref_, cfg_.gains, cfg_.dynamics, until);
      world_ = std::move(r.world);
      log_.samples.insert(log_.samples.end(), r.trace.begin(), r.trace.end());
      for (const auto& [t, ev] : r.events) record_gripper_event(t, ev);
    } else {
      const ReferenceSample s = ref_.evaluate(until);
      world_ = place_robot(world_, s.pose, s.twist);
      StepResult g = set_gripper(world_, s.gripper);
      world_ = std::move(g.world);
      world_.sim_time = until;
      record_gripper_event(until, g.event);
      TraceSample sample;
      sample.time = until;
      sample.reference = s.pose;
      sample.state = world_.robot.pose;
      sample.error = tracking_error(s.pose, world_.robot.pose);
      sample.gripper = world_.robot.gripper.command();
      log_.samples.push_back(sample);
    }
  }

  void record_gripper_event(double t, GripperEvent ev) {
    if (ev == GripperEvent::kGrasp) log_.events.push_back({t, "grasp"});
    if (ev == GripperEvent::kRelease) {
      log_.events.push_back({t, "release"});
      last_release_ = t;
    }
  }

  // Number of active-plan waypoints scheduled at or before t.
  int executed_by(double t) const {
    int n = 0;
    for (const auto& wp : state_.plan) {
      if (wp.time <= t + 1e-12) ++n;
    }
    return n;
  }

  void observe(double t_o, bool has_plan) {
    PendingInference p;
    p.t_o = t_o;
    const std::uint64_t stream = (seed_ << 20) + static_cast<std::uint64_t>(inference_count_++);
    const int hc = cfg_.horizon_condition;
    const Pose desired = ref_.evaluate(t_o).pose;

    bool tail_ok = false;
    if (has_plan) {
      // Offset of the first superseded waypoint still ahead at expected arrival.
      p.offset = executed_by(t_o + cfg_.delta_delay);
      tail_ok = p.offset + hc <= static_cast<int>(active_.size());
      if (!tail_ok) {
        ++state_.stall_count;
        stalled_this_cycle_ = true;
        log_.events.push_back({t_o, "stall"});
      }
    }
    if (cfg_.use_eag && has_plan && tail_ok) {
      p.result = policy_.infer_eag(world_, active_, desired, world_.robot.pose, stream, p.offset);
    } else {
      p.result.chunk = policy_.infer_unconditional(world_, stream);
      p.result.error = tracking_error(desired, world_.robot.pose);
      p.result.guidance_applied = false;
    }
    if (cfg_.postprocess) p.result.chunk = cfg_.postprocess(p.result.chunk, desired);
    double latency = cfg_.delta_delay;
    if (cfg_.delay_jitter > 0.0) {
      latency += std::uniform_real_distribution<double>(0.0, cfg_.delay_jitter)(jitter_rng_);
    }
    p.t_a = t_o + latency;
    if (latency > cfg_.delta_delay) log_.events.push_back({t_o, "latency"});
    state_.pending = std::move(p);
  }

  double interval_for(int k) const {
    if (cfg_.interval_override) return *cfg_.interval_override;
    return effective_interval(speed_factor(cfg_.adaptive_speed ? k : 0, cfg_), cfg_);
  }

  void splice() {
    PendingInference p = std::move(*state_.pending);
    state_.pending.reset();
    const double t_a = p.t_a;
    ActionChunk chunk = std::move(p.result.chunk);
    chunk.t_o = p.t_o;
    chunk.t_a = t_a;

    int skip = 0;
    if (!state_.plan.empty()) {
      const int m = executed_by(t_a);
      if (state_.plan.back().time < t_a && !stalled_this_cycle_) {
        ++state_.stall_count;
        log_.events.push_back({t_a, "stall"});
      }
      skip = std::max(0, m - p.offset);
    }
    stalled_this_cycle_ = false;
    skip = std::min<int>(skip, static_cast<int>(chunk.size()) - 1);

    std::vector<int> flags(chunk.size(), 0);
    if (cfg_.adaptive_speed) {
      std::vector<int> events;
      if (cfg_.gripper_event_flags) events = gripper_event_flags(chunk, cfg_.event_window);
      for (std::size_t i = 0; i < chunk.size(); ++i) {
        flags[i] = chunk.waypoints[i].critical || (!events.empty() && events[i]);
      }
    }

    ChunkRecord rec;
    rec.t_o = p.t_o;
    rec.t_a = t_a;
    rec.offset = p.offset + prev_skip_;
    rec.skipped = skip;
    rec.source_demo = chunk.source_demo;
    rec.source_index = chunk.source_index;
    prev_skip_ = skip;
    rec.guidance_applied = p.result.guidance_applied;
    rec.error = p.result.error;
    for (const auto& wp : chunk.waypoints) rec.positions.push_back(wp.pose.position());
    log_.chunks.push_back(std::move(rec));

    // Outdated actions of the superseded plan are dropped; the new chunk
    // starts one interval after t_a.
    const ReferenceSample start = ref_.evaluate(t_a);
    std::vector<double> times{t_a};
    std::vector<Pose> poses{start.pose};
    std::vector<double> grippers{start.gripper};
    state_.plan.clear();
    double t = t_a;
    const int chunk_id = static_cast<int>(log_.chunks.size()) - 1;
    for (std::size_t i = static_cast<std::size_t>(skip);
         i < chunk.size(); ++i) {
      t += interval_for(flags[i]);
      state_.plan.push_back({t, chunk.waypoints[i], chunk_id, static_cast<int>(i)});
      times.push_back(t);
      poses.push_back(chunk.waypoints[i].pose);
      grippers.push_back(chunk.waypoints[i].gripper.command());
    }
    // Plan indices relative to the stored chunk; keep only what is scheduled.
    active_.waypoints.clear();
    for (const auto& wp : state_.plan) active_.waypoints.push_back(wp.waypoint);
    active_.t_o = chunk.t_o;
    active_.t_a = chunk.t_a;
    ref_ = ReferenceTrack(std::move(times), std::move(poses), std::move(grippers));
    log_.events.push_back({t_a, "splice"});
    ++log_.splice_count;

    // Next observation: after H_e executed steps (fewer if the conditioning
    // tail would not fit), early enough that the result lands by then.
    const int plan_size = static_cast<int>(state_.plan.size());
    const int he = std::max(1, std::min(cfg_.horizon_execution, plan_size - cfg_.horizon_condition));
    const double target = state_.plan[he - 1].time;
    state_.next_splice_time = std::max(t_a, target - cfg_.delta_delay);
  }

  const ExecutorConfig& cfg_;
  const MockPolicy& policy_;
  const TaskSpec& spec_;
  std::uint64_t seed_;
  WorldState world_;
  std::mt19937_64 jitter_rng_;
  ScheduleState state_;
  ActionChunk active_;
  ReferenceTrack hold_;
  ReferenceTrack ref_;
  RolloutLog log_;
  int inference_count_ = 0;
  int prev_skip_ = 0;
  double last_release_ = 0.0;
  bool stalled_this_cycle_ = false;
};

}  // namespace

RolloutLog run_rollout(const ExecutorConfig& cfg, const MockPolicy& policy, const WorldState& world,
                       const TaskSpec& spec, std::uint64_t seed) {
  cfg.validate();
  spec.validate();
  return Executor(cfg, policy, world, spec, seed).run();
}

}  // namespace sailx
