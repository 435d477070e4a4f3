#include "sailx/experiment.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "sailx/controller.hpp"
#include "sailx/diagnostics.hpp"

namespace sailx {

Method parse_method(const std::string& name) {
  if (name == "sail") return Method::kSail;
  if (name == "dp") return Method::kDp;
  if (name == "dp-fast") return Method::kDpFast;
  if (name == "agg-actions") return Method::kAggActions;
  if (name == "replay") return Method::kReplay;
  throw ConfigError("unknown method '" + name + "'");
}

std::string method_name(Method m) {
  switch (m) {
    case Method::kSail: return "sail";
    case Method::kDp: return "dp";
    case Method::kDpFast: return "dp-fast";
    case Method::kAggActions: return "agg-actions";
    case Method::kReplay: return "replay";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  if (trials < 1) throw ConfigError("trials must be at least 1");
  if (demos < 1) throw ConfigError("need at least one demonstration");
  if (jobs < 1) throw ConfigError("jobs must be at least 1");
  for (double c : c_values) {
    if (!(c > 0.0 && c <= 1.0)) throw ConfigError("speed factors must lie in (0, 1]");
  }
  for (double n : noise_scales) {
    if (!(n >= 0.0)) throw ConfigError("noise scales must be non-negative");
  }
  if (ood_samples < knn_k || knn_k < 1) throw ConfigError("need at least k unconditional samples");
  task.validate();
  dynamics.validate();
  policy.validate();
  labels.validate();
}

namespace {

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    while (used < item.size() && std::isspace(static_cast<unsigned char>(item[used]))) ++used;
    if (used != item.size()) throw std::invalid_argument(item);
    out.push_back(v);
  }
  if (out.empty()) throw std::invalid_argument("empty list");
  return out;
}

using Setter = std::function<void(ExperimentConfig&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  auto num = [](auto member) {
    return [member](ExperimentConfig& c, const std::string& v) { member(c) = std::stod(v); };
  };
  auto integer = [](auto member) {
    return [member](ExperimentConfig& c, const std::string& v) { member(c) = std::stoi(v); };
  };
  static const std::map<std::string, Setter> table = {
      {"task.t_max", num([](ExperimentConfig& c) -> double& { return c.task.t_max; })},
      {"task.grasp_radius", num([](ExperimentConfig& c) -> double& { return c.task.grasp_radius; })},
      {"task.place_tolerance", num([](ExperimentConfig& c) -> double& { return c.task.place_tolerance; })},
      {"task.goal_x", num([](ExperimentConfig& c) -> double& { return c.task.goal_position.x(); })},
      {"task.goal_y", num([](ExperimentConfig& c) -> double& { return c.task.goal_position.y(); })},
      {"task.goal_z", num([](ExperimentConfig& c) -> double& { return c.task.goal_position.z(); })},
      {"task.gravity", [](ExperimentConfig& c, const std::string& v) {
         c.dynamics.gravity = std::stod(v);
         c.script.dynamics.gravity = c.dynamics.gravity;
       }},
      {"task.physics_dt", [](ExperimentConfig& c, const std::string& v) {
         c.dynamics.physics_dt = std::stod(v);
         c.script.dynamics.physics_dt = c.dynamics.physics_dt;
       }},
      {"policy.horizon_prediction", integer([](ExperimentConfig& c) -> int& { return c.policy.horizon_prediction; })},
      {"policy.horizon_execution", integer([](ExperimentConfig& c) -> int& { return c.policy.horizon_execution; })},
      {"policy.horizon_condition", integer([](ExperimentConfig& c) -> int& { return c.policy.horizon_condition; })},
      {"policy.cfg_weight", num([](ExperimentConfig& c) -> double& { return c.policy.cfg_weight; })},
      {"policy.rho_pos", num([](ExperimentConfig& c) -> double& { return c.policy.rho_pos; })},
      {"policy.rho_ori", num([](ExperimentConfig& c) -> double& { return c.policy.rho_ori; })},
      {"policy.noise_sigma", num([](ExperimentConfig& c) -> double& { return c.policy.noise_sigma; })},
      {"policy.p_branch", num([](ExperimentConfig& c) -> double& { return c.policy.p_branch; })},
      {"policy.branch_candidates", integer([](ExperimentConfig& c) -> int& { return c.policy.branch_candidates; })},
      {"executor.delta_star", [](ExperimentConfig& c, const std::string& v) {
         c.executor.delta_star = std::stod(v);
         c.script.delta_star = c.executor.delta_star;
       }},
      {"executor.delta_delay", num([](ExperimentConfig& c) -> double& { return c.executor.delta_delay; })},
      {"executor.delay_jitter", num([](ExperimentConfig& c) -> double& { return c.executor.delay_jitter; })},
      {"executor.safety_margin", num([](ExperimentConfig& c) -> double& { return c.executor.safety_margin; })},
      {"executor.event_window", integer([](ExperimentConfig& c) -> int& { return c.executor.event_window; })},
      {"executor.use_eag", [](ExperimentConfig& c, const std::string& v) {
         if (v != "true" && v != "false") throw std::invalid_argument(v);
         c.use_eag = v == "true";
       }},
      {"executor.gains", [](ExperimentConfig& c, const std::string& v) { c.executor.gains = gain_preset(v); }},
      {"labels.tau", num([](ExperimentConfig& c) -> double& { return c.labels.tau; })},
      {"labels.eps", num([](ExperimentConfig& c) -> double& { return c.labels.eps; })},
      {"labels.min_pts", integer([](ExperimentConfig& c) -> int& { return c.labels.min_pts; })},
      {"demos.count", integer([](ExperimentConfig& c) -> int& { return c.demos; })},
      {"demos.timing_jitter", num([](ExperimentConfig& c) -> double& { return c.script.timing_jitter; })},
      {"demos.align_step", num([](ExperimentConfig& c) -> double& { return c.script.align_step; })},
      {"demos.teleop_gains", [](ExperimentConfig& c, const std::string& v) { c.script.teleop_gains = gain_preset(v); }},
      {"experiment.trials", integer([](ExperimentConfig& c) -> int& { return c.trials; })},
      {"experiment.jobs", integer([](ExperimentConfig& c) -> int& { return c.jobs; })},
      {"experiment.seed", [](ExperimentConfig& c, const std::string& v) { c.seed = std::stoull(v); }},
      {"experiment.method", [](ExperimentConfig& c, const std::string& v) { c.method = parse_method(v); }},
      {"experiment.c_values", [](ExperimentConfig& c, const std::string& v) { c.c_values = parse_list(v); }},
      {"experiment.noise_scales", [](ExperimentConfig& c, const std::string& v) { c.noise_scales = parse_list(v); }},
      {"experiment.wed_decay", num([](ExperimentConfig& c) -> double& { return c.wed_decay; })},
      {"experiment.ood_samples", integer([](ExperimentConfig& c) -> int& { return c.ood_samples; })},
      {"experiment.ood_gains", [](ExperimentConfig& c, const std::string& v) { c.ood_gains = gain_preset(v); }},
      {"experiment.ood_gravity_compensation", [](ExperimentConfig& c, const std::string& v) {
         if (v != "true" && v != "false") throw std::invalid_argument(v);
         c.ood_gravity_compensation = v == "true";
       }},
      {"experiment.knn_k", integer([](ExperimentConfig& c) -> int& { return c.knn_k; })},
  };
  return table;
}

}  // namespace

ExperimentConfig parse_config(std::istream& in) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(e.what());
  }
  ExperimentConfig cfg;
  for (const auto& [section, body] : tree) {
    if (body.empty()) throw ConfigError("key '" + section + "' outside a section");
    for (const auto& [key, value] : body) {
      const std::string name = section + "." + key;
      const auto it = setters().find(name);
      if (it == setters().end()) throw ConfigError("unknown config key '" + name + "'");
      try {
        it->second(cfg, value.get_value<std::string>());
      } catch (const ConfigError&) {
        throw;
      } catch (const std::exception&) {
        throw ConfigError("bad value for '" + name + "'");
      }
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  return parse_config(in);
}

namespace {

struct Group {
  Vector3 sum;
  std::size_t count;
};

std::vector<Group> aggregate_groups(const std::vector<Vector3>& deltas, double threshold,
                                    double min_dot) {
  std::vector<Group> out;
  if (deltas.empty()) return out;
  Group curr{deltas.front(), 1};
  for (std::size_t i = 1; i < deltas.size(); ++i) {
    const Vector3& a = deltas[i];
    const double na = a.norm(), nc = curr.sum.norm();
    // Directions are compared on unit vectors; a zero vector has none and merges.
    const double dot = (na > 0.0 && nc > 0.0) ? a.dot(curr.sum) / (na * nc) : 1.0;
    if (nc > threshold || dot < min_dot) {
      out.push_back(curr);
      curr = {a, 1};
    } else {
      curr.sum += a;
      ++curr.count;
    }
  }
  out.push_back(curr);
  return out;
}

}  // namespace

std::vector<Vector3> aggregate_actions(const std::vector<Vector3>& deltas, double threshold,
                                       double min_dot) {
  std::vector<Vector3> out;
  for (const Group& g : aggregate_groups(deltas, threshold, min_dot)) out.push_back(g.sum);
  return out;
}

ActionChunk aggregate_chunk(const ActionChunk& chunk, const Vector3& origin, double threshold,
                            double min_dot) {
  if (chunk.size() == 0) return chunk;
  std::vector<Vector3> deltas;
  Vector3 prev = origin;
  for (const auto& wp : chunk.waypoints) {
    deltas.push_back(wp.pose.position() - prev);
    prev = wp.pose.position();
  }
  ActionChunk out = chunk;
  out.waypoints.clear();
  // Each merged action takes orientation and gripper from its last constituent.
  Vector3 pos = origin;
  std::size_t end = 0;
  for (const Group& g : aggregate_groups(deltas, threshold, min_dot)) {
    pos += g.sum;
    end += g.count;
    ChunkWaypoint wp = chunk.waypoints[end - 1];
    wp.pose = Pose(pos, wp.pose.orientation());
    out.waypoints.push_back(wp);
  }
  return out;
}

MethodSetup method_setup(Method m, double c, const ExperimentConfig& cfg) {
  MethodSetup s;
  s.policy = cfg.policy;
  s.executor = cfg.executor;
  s.executor.dynamics = cfg.dynamics;
  s.executor.horizon_prediction = cfg.policy.horizon_prediction;
  s.executor.horizon_execution = cfg.policy.horizon_execution;
  s.executor.horizon_condition = cfg.policy.horizon_condition;
  s.executor.delta_star = cfg.script.delta_star;
  switch (m) {
    case Method::kSail:
    case Method::kReplay:
      s.executor.gains = high_gain();
      s.policy.target_mode = TargetMode::kReached;
      s.executor.use_eag = m == Method::kSail && cfg.use_eag.value_or(true);
      s.executor.adaptive_speed = m == Method::kSail;
      s.executor.c_fast = c;
      s.executor.c_slow = m == Method::kSail ? std::min(1.0, 2.0 * c) : c;
      break;
    case Method::kDp:
    case Method::kAggActions:
      c = 1.0;
      [[fallthrough]];
    case Method::kDpFast:
      s.executor.gains = low_gain();
      s.policy.target_mode = TargetMode::kCommanded;
      s.executor.use_eag = false;
      s.executor.adaptive_speed = false;
      s.executor.c_fast = s.executor.c_slow = c;
      s.aggregate = m == Method::kAggActions;
      break;
  }
  if (s.aggregate) {
    const double thr = cfg.agg_threshold, dot = cfg.agg_min_dot;
    s.executor.postprocess = [thr, dot](const ActionChunk& chunk, const Pose& at) {
      return aggregate_chunk(chunk, at.position(), thr, dot);
    };
  }
  return s;
}

std::uint64_t trial_seed(std::uint64_t seed, int trial) {
  // splitmix64 finalizer
  std::uint64_t z = seed * 0x9E3779B97F4A7C15ULL + static_cast<std::uint64_t>(trial) + 1;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

TaskSpec trial_task(const ExperimentConfig& cfg, int trial) {
  auto rng = split_rng(cfg.seed, static_cast<std::uint64_t>(trial), 3);
  std::uniform_real_distribution<double> ux(cfg.script.box_min.x(), cfg.script.box_max.x());
  std::uniform_real_distribution<double> uy(cfg.script.box_min.y(), cfg.script.box_max.y());
  std::uniform_real_distribution<double> uz(cfg.script.box_min.z(), cfg.script.box_max.z());
  TaskSpec t = cfg.task;
  const double x = ux(rng), y = uy(rng);
  t.object_start = Pose(Vector3(x, y, uz(rng)));
  return t;
}

std::vector<Demonstration> build_library(const ExperimentConfig& cfg) {
  std::vector<Demonstration> demos = generate_demos(cfg.task, cfg.demos, cfg.seed, cfg.script);
  for (auto& d : demos) {
    std::vector<Pose> cmd;
    for (const auto& r : d.records) cmd.push_back(r.commanded);
    const std::vector<int> k = label_critical(cmd, cfg.labels);
    for (std::size_t i = 0; i < k.size(); ++i) d.records[i].k = k[i];
  }
  return demos;
}

double mean_demo_duration(const std::vector<Demonstration>& demos) {
  if (demos.empty()) return 0.0;
  double s = 0.0;
  for (const auto& d : demos) s += d.duration();
  return s / static_cast<double>(demos.size());
}

RolloutLog run_method_trial(const ExperimentConfig& cfg, const std::vector<Demonstration>& library,
                            Method m, double c, int trial) {
  if (m == Method::kReplay) {
    const Demonstration& demo = library[static_cast<std::size_t>(trial) % library.size()];
    ReplaySpec spec;
    spec.c = c;
    spec.seed = trial_seed(cfg.seed, trial);
    return run_replay(demo, spec, task_for_demo(cfg.task, demo), cfg.dynamics);
  }
  const MethodSetup setup = method_setup(m, c, cfg);
  const std::uint64_t seed = trial_seed(cfg.seed, trial);
  const MockPolicy policy(library, setup.policy, cfg.weights, seed, cfg.task.grasp_radius);
  const TaskSpec task = trial_task(cfg, trial);
  return run_rollout(setup.executor, policy, initial_world(task), task, seed);
}

RolloutLog run_replay(const Demonstration& demo, const ReplaySpec& spec, const TaskSpec& task,
                      const DynamicsParams& dynamics) {
  if (!(spec.c > 0.0)) throw InvalidInput("replay speed factor must be positive");
  if (demo.size() < 2) throw InvalidInput("demonstration too short to replay");
  auto rng = split_rng(spec.seed, 0, 9);
  std::normal_distribution<double> noise(0.0, spec.noise);
  const double interval = spec.c * demo.delta_star;
  std::vector<double> times;
  std::vector<Pose> poses;
  std::vector<double> grippers;
  for (std::size_t i = 0; i < demo.size(); ++i) {
    const auto& r = demo.records[i];
    const Pose& p = spec.target == TargetMode::kReached ? r.reached : r.commanded;
    Vector3 x = p.position();
    if (spec.noise > 0.0 && i > 0) x += Vector3(noise(rng), noise(rng), noise(rng));
    times.push_back(static_cast<double>(i) * interval);
    poses.emplace_back(x, p.orientation());
    grippers.push_back(r.gripper);
  }
  const ReferenceTrack ref(times, poses, grippers);

  RolloutLog log;
  log.t_max = task.t_max;
  log.physics_dt = dynamics.physics_dt;
  WorldState world = initial_world(task);
  world.robot.pose = poses.front();
  const double settle = 1.0;
  const double end = std::min(task.t_max, times.back() + settle);
  double released = 0.0;
  for (double t = interval; ; t += interval) {
    const double until = std::min(t, end);
    try {
      TrackResult r = track(world, ref, spec.gains, dynamics, until);
      world = std::move(r.world);
      log.samples.insert(log.samples.end(), r.trace.begin(), r.trace.end());
      for (const auto& [time, ev] : r.events) {
        if (ev == GripperEvent::kGrasp) log.events.push_back({time, "grasp"});
        if (ev == GripperEvent::kRelease) {
          log.events.push_back({time, "release"});
          released = time;
        }
      }
    } catch (const SimFault&) {
      log.fault = true;
      break;
    }
    if (success(world, task)) {
      log.success = true;
      log.duration = released > 0.0 ? released : world.sim_time;
      return log;
    }
    if (until >= end) break;
  }
  log.duration = std::min(world.sim_time, task.t_max);
  return log;
}

OodTrial run_ood_trial(const ExperimentConfig& cfg, const MockPolicy& policy, double c, int trial) {
  const auto& lib = policy.library();
  const PolicyConfig& pc = policy.config();
  auto rng = split_rng(cfg.seed, static_cast<std::uint64_t>(trial), 13);
  const int d = std::uniform_int_distribution<int>(0, static_cast<int>(lib.size()) - 1)(rng);
  const Demonstration& demo = lib[d];
  const int n = static_cast<int>(demo.size());
  const int hi = n - pc.horizon_prediction - 2;
  if (hi < 2) throw InvalidInput("demonstration too short for a reset trial");
  const int i = std::uniform_int_distribution<int>(1, hi)(rng);

  // Reset to the recorded state, moving at the recorded speed scaled by 1/c.
  const std::vector<Vector3> objects = derive_object_track(demo, cfg.task.grasp_radius);
  const auto& rec = demo.records[i];
  WorldState world = initial_world(task_for_demo(cfg.task, demo));
  world.sim_time = 0.0;
  world.robot.pose = rec.reached;
  world.robot.twist.linear =
      (demo.records[i + 1].reached.position() - demo.records[i - 1].reached.position()) /
      (2.0 * demo.delta_star * c);
  world.robot.gripper = GripperState(rec.gripper);
  world.object_pose = Pose(objects[i]);
  if (rec.gripper >= 0.5 && (objects[i] - rec.reached.position()).norm() < cfg.task.grasp_radius + 1e-9 &&
      objects[i] != demo.object_start.position()) {
    world.attached = true;
    const Eigen::Quaterniond inv = rec.reached.orientation().conjugate();
    world.grasp_offset = Pose(inv * (objects[i] - rec.reached.position()));
  }

  const std::uint64_t base = trial_seed(cfg.seed, trial) << 8;
  const ActionChunk chunk = policy.infer_unconditional(world, base);
  const double interval = c * demo.delta_star;
  std::vector<double> times{0.0};
  const Pose& start_target = pc.target_mode == TargetMode::kReached ? rec.reached : rec.commanded;
  std::vector<Pose> poses{start_target};
  std::vector<double> grippers{rec.gripper};
  for (std::size_t j = 0; j < chunk.size(); ++j) {
    times.push_back(static_cast<double>(j + 1) * interval);
    poses.push_back(chunk.waypoints[j].pose);
    grippers.push_back(chunk.waypoints[j].gripper.command());
  }
  const ReferenceTrack ref(times, poses, grippers);
  const double t_obs = pc.horizon_execution * interval;
  DynamicsParams dynamics = cfg.dynamics;
  if (cfg.ood_gravity_compensation) dynamics.gravity = 0.0;
  world = track(world, ref, cfg.ood_gains, dynamics, t_obs).world;

  OodTrial out;
  out.c = c;
  out.trial = trial;
  out.e_pos = tracking_error(ref.evaluate(t_obs).pose, world.robot.pose).e_pos;
  std::vector<Vector3> tail;
  for (int j = 0; j < pc.horizon_condition; ++j) {
    tail.push_back(chunk.waypoints[pc.horizon_execution + j].pose.position());
  }
  const Eigen::VectorXd query = flatten(tail);
  Eigen::MatrixXd rows(cfg.ood_samples, query.size());
  for (int s = 0; s < cfg.ood_samples; ++s) {
    const ActionChunk sample = policy.infer_unconditional(world, base + 1 + s);
    std::vector<Vector3> head;
    for (int j = 0; j < pc.horizon_condition; ++j) head.push_back(sample.waypoints[j].pose.position());
    rows.row(s) = flatten(head).transpose();
  }
  const SampleSet set(rows);
  out.knn = knn_distance(set, query, cfg.knn_k);
  out.kde = kde_score(set, query).score;
  out.mmd = mmd(set, query, 0.5);
  return out;
}

}  // namespace sailx
