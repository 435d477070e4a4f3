#include "sailx/policy.hpp"

#include <algorithm>
#include <limits>

namespace sailx {

namespace {
constexpr int kPhaseSteps = 4;  // sub-step resolution of the conditional start search
}  // namespace

void PolicyConfig::validate() const {
  if (!(horizon_condition >= 0 && horizon_condition < horizon_execution &&
        horizon_execution < horizon_prediction)) {
    throw ConfigError("horizons must satisfy H_c < H_e < H_p");
  }
  if (!(cfg_weight >= 0.0)) throw ConfigError("guidance weight must be non-negative");
  if (!(rho_pos > 0.0) || !(rho_ori > 0.0)) throw ConfigError("guidance thresholds must be positive");
  if (!(noise_sigma >= 0.0) || !(p_branch >= 0.0 && p_branch <= 1.0)) {
    throw ConfigError("noise and branch probability out of range");
  }
  if (branch_candidates < 1 || condition_window < 0) throw ConfigError("bad retrieval parameters");
}

std::mt19937_64 split_rng(std::uint64_t seed, std::uint64_t stream, std::uint64_t lane) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                    static_cast<std::uint32_t>(lane)};
  return std::mt19937_64(seq);
}

MockPolicy::MockPolicy(std::vector<Demonstration> library, PolicyConfig config,
                       RetrievalWeights weights, std::uint64_t seed, double grasp_radius)
    : library_(std::move(library)), config_(config), weights_(weights), seed_(seed) {
  if (library_.empty()) throw ConfigError("demonstration library is empty");
  config_.validate();
  for (const auto& d : library_) {
    if (d.records.empty()) throw ConfigError("demonstration without records");
    objects_.push_back(derive_object_track(d, grasp_radius));
    std::vector<double> w(d.size(), 0.0);
    if (config_.object_relative) {
      std::size_t grasp = 0;
      while (grasp < d.size() && d.records[grasp].gripper < 0.5) ++grasp;
      for (std::size_t i = 0; i < d.size(); ++i) {
        if (i <= grasp) {
          w[i] = 1.0;
        } else if (config_.shift_fade > 0) {
          w[i] = std::max(0.0, 1.0 - static_cast<double>(i - grasp) / config_.shift_fade);
        }
      }
    }
    shift_weights_.push_back(std::move(w));
    // Stationary runs: same gripper command, within dwell_radius of the run start.
    std::vector<int> end(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      std::size_t j = i;
      while (j + 1 < d.size() && d.records[j + 1].gripper == d.records[i].gripper &&
             (d.records[j + 1].reached.position() - d.records[i].reached.position()).norm() <=
                 weights_.dwell_radius) {
        ++j;
      }
      end[i] = static_cast<int>(j);
    }
    dwell_end_.push_back(std::move(end));
  }
}

// The observed object offset at the matched index is that index's share of
// the full shift, so later waypoints scale it by their weight ratio.
MockPolicy::Shift MockPolicy::shift_for(const WorldState& obs, int demo, int index) const {
  Shift s;
  s.ref_weight = shift_weights_[demo][index];
  if (s.ref_weight > 0.0) s.offset = obs.object_pose.position() - objects_[demo][index];
  return s;
}

Pose MockPolicy::target(int demo, int index, const Shift& shift) const {
  const auto& rec = library_[demo].records[index];
  const Pose& p = config_.target_mode == TargetMode::kReached ? rec.reached : rec.commanded;
  if (shift.ref_weight <= 0.0) return p;
  const double w = std::min(1.0, shift_weights_[demo][index] / shift.ref_weight);
  if (w <= 0.0) return p;
  return Pose(p.position() + w * shift.offset, p.orientation());
}

std::vector<MockPolicy::Match> MockPolicy::rank(const WorldState& obs) const {
  std::vector<Match> out;
  out.reserve(library_.size());
  const Vector3& p = obs.robot.pose.position();
  const Vector3& o = obs.object_pose.position();
  const double g = obs.robot.gripper.command();
  std::vector<double> dist;
  for (std::size_t d = 0; d < library_.size(); ++d) {
    Match best{static_cast<int>(d), 0, std::numeric_limits<double>::infinity()};
    const auto& recs = library_[d].records;
    dist.resize(recs.size());
    for (std::size_t i = 0; i < recs.size(); ++i) {
      // 4 (1 - <q1,q2>^2) = 4 sin^2(angle / 2), close to angle^2 for small angles.
      const double dot = recs[i].reached.orientation().dot(obs.robot.pose.orientation());
      // Compared against the demo state as shifted onto the observed object.
      const Vector3 shifted =
          recs[i].reached.position() + shift_weights_[d][i] * (o - objects_[d][i]);
      dist[i] = weights_.position * (shifted - p).squaredNorm() +
                weights_.orientation * 4.0 * (1.0 - dot * dot) +
                weights_.gripper * (recs[i].gripper - g) * (recs[i].gripper - g) +
                weights_.object * (objects_[d][i] - o).squaredNorm();
      if (dist[i] < best.distance) best = {static_cast<int>(d), static_cast<int>(i), dist[i]};
    }
    const int nearest = best.index;
    const double limit = best.distance + weights_.progress_tolerance;
    for (std::size_t i = recs.size(); i-- > static_cast<std::size_t>(best.index);) {
      if (dist[i] <= limit) {
        best.index = static_cast<int>(i);
        break;
      }
    }
    best.index = std::min(dwell_end_[d][best.index], best.index + config_.horizon_execution);
    // Sub-step phase from projecting onto the adjacent demo segment.
    auto shifted = [&](int i) {
      return Vector3(recs[i].reached.position() + shift_weights_[d][i] * (o - objects_[d][i]));
    };
    auto project = [&](int i) {
      const Vector3 a = shifted(i), seg = shifted(i + 1) - a;
      const double len2 = seg.squaredNorm();
      return len2 > 1e-12 ? std::clamp((p - a).dot(seg) / len2, 0.0, 1.0) : 0.0;
    };
    const int n = static_cast<int>(recs.size());
    if (best.index + 1 < n) best.fraction = project(best.index);
    if (best.fraction == 0.0 && best.index == nearest && best.index > 0) {
      const double f = project(best.index - 1);
      if (f > 0.0 && f < 1.0) {
        --best.index;
        best.fraction = f;
      }
    }
    out.push_back(best);
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const Match& a, const Match& b) { return a.distance < b.distance; });
  return out;
}

Pose MockPolicy::target_at(int demo, double phase, const Shift& shift) const {
  const int n = static_cast<int>(library_[demo].records.size());
  phase = std::clamp(phase, 0.0, static_cast<double>(n - 1));
  const int i = std::min(static_cast<int>(phase), n - 1);
  const double t = phase - i;
  if (t <= 0.0 || i + 1 >= n) return target(demo, i, shift);
  return interpolate_pose(target(demo, i, shift), target(demo, i + 1, shift), t);
}

ActionChunk MockPolicy::extract(int demo, double first, const Shift& shift,
                                std::mt19937_64& rng) const {
  const auto& recs = library_[demo].records;
  const int n = static_cast<int>(recs.size());
  ActionChunk chunk;
  chunk.source_demo = demo;
  chunk.source_index = std::min(static_cast<int>(first), n - 1);
  std::normal_distribution<double> noise(0.0, config_.noise_sigma);
  for (int j = 0; j < config_.horizon_prediction; ++j) {
    const double phase = std::clamp(first + j, 0.0, static_cast<double>(n - 1));
    const int lo = static_cast<int>(phase);
    const int hi = std::min(lo + 1, n - 1);
    const double t = phase - lo;
    ChunkWaypoint wp;
    wp.pose = target_at(demo, phase, shift);
    if (config_.noise_sigma > 0.0) {
      const Vector3 offset(noise(rng), noise(rng), noise(rng));
      wp.pose = Pose(wp.pose.position() + offset, wp.pose.orientation());
    }
    wp.gripper = GripperState(recs[lo].gripper + t * (recs[hi].gripper - recs[lo].gripper));
    wp.critical = recs[t < 0.5 ? lo : hi].k.value_or(0);
    chunk.waypoints.push_back(wp);
  }
  return chunk;
}

ActionChunk MockPolicy::infer_unconditional(const WorldState& obs, std::uint64_t stream) const {
  return unconditional_from(rank(obs), obs, stream);
}

ActionChunk MockPolicy::unconditional_from(const std::vector<Match>& ranked, const WorldState& obs,
                                           std::uint64_t stream) const {
  auto rng = split_rng(seed_, stream, 0);
  std::size_t pick = 0;
  if (config_.p_branch > 0.0 && ranked.size() > 1) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    if (u(rng) < config_.p_branch) {
      const std::size_t alternatives =
          std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(config_.branch_candidates)) - 1;
      if (alternatives > 0) {
        std::uniform_int_distribution<std::size_t> which(1, alternatives);
        pick = which(rng);
      }
    }
  }
  const Shift shift = shift_for(obs, ranked[pick].demo, ranked[pick].index);
  ActionChunk chunk =
      extract(ranked[pick].demo, ranked[pick].index + ranked[pick].fraction + 1.0, shift, rng);
  chunk.t_o = obs.sim_time;
  chunk.t_a = obs.sim_time;
  return chunk;
}

ActionChunk MockPolicy::infer_conditional(const WorldState& obs,
                                          const std::vector<ChunkWaypoint>& tail,
                                          std::uint64_t stream) const {
  return conditional_from(rank(obs), obs, tail, stream);
}

ActionChunk MockPolicy::conditional_from(const std::vector<Match>& ranked, const WorldState& obs,
                                         const std::vector<ChunkWaypoint>& tail,
                                         std::uint64_t stream) const {
  auto rng = split_rng(seed_, stream, 1);
  const std::size_t candidates =
      std::min<std::size_t>(ranked.size(), static_cast<std::size_t>(config_.branch_candidates));

  int best_demo = ranked.front().demo;
  double best_start = ranked.front().index + ranked.front().fraction + 1.0;
  Shift best_shift = shift_for(obs, best_demo, ranked.front().index);
  if (!tail.empty()) {
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < candidates; ++c) {
      const int d = ranked[c].demo;
      const Shift shift = shift_for(obs, d, ranked[c].index);
      const int n = static_cast<int>(library_[d].records.size());
      const int lo = std::max(0, ranked[c].index - config_.condition_window);
      const int hi = std::min(n - 1, ranked[c].index + config_.condition_window);
      for (int s = lo; s <= hi; ++s) {
        for (int q = 0; q < kPhaseSteps; ++q) {
          const double start = s + static_cast<double>(q) / kPhaseSteps;
          double cost = 0.0;
          for (std::size_t j = 0; j < tail.size(); ++j) {
            cost += (target_at(d, start + j, shift).position() - tail[j].pose.position()).squaredNorm();
          }
          if (cost < best_cost) {
            best_cost = cost;
            best_demo = d;
            best_start = start;
            best_shift = shift;
          }
        }
      }
    }
  }
  ActionChunk chunk = extract(best_demo, best_start, best_shift, rng);
  chunk.t_o = obs.sim_time;
  chunk.t_a = obs.sim_time;
  return chunk;
}

bool guidance_gate(const TrackingError& e, const PolicyConfig& config) {
  return e.e_pos <= config.rho_pos && e.e_ori <= config.rho_ori;
}

EagResult MockPolicy::infer_eag(const WorldState& obs, const ActionChunk& prev_chunk,
                                const Pose& current_desired, const Pose& current_state,
                                std::uint64_t stream, int offset) const {
  const int hc = config_.horizon_condition;
  if (offset < 0 || static_cast<int>(prev_chunk.size()) < offset + hc) {
    throw InvalidInput("previous chunk too short for the conditioning tail");
  }
  EagResult out;
  out.error = tracking_error(current_desired, current_state);
  const auto ranked = rank(obs);
  ActionChunk uncond = unconditional_from(ranked, obs, stream);
  if (!guidance_gate(out.error, config_)) {
    out.chunk = std::move(uncond);
    out.guidance_applied = false;
    return out;
  }
  const std::vector<ChunkWaypoint> tail(prev_chunk.waypoints.begin() + offset,
                                        prev_chunk.waypoints.begin() + offset + hc);
  const ActionChunk cond = conditional_from(ranked, obs, tail, stream);
  out.chunk = cfg_blend(uncond, cond, config_.cfg_weight);
  out.guidance_applied = true;
  return out;
}

ActionChunk cfg_blend(const ActionChunk& uncond, const ActionChunk& cond, double w) {
  if (uncond.size() != cond.size()) throw InvalidInput("chunk lengths differ");
  if (w == 0.0) return uncond;
  if (w == 1.0) return cond;
  ActionChunk out = uncond;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& u = uncond.waypoints[i];
    const auto& c = cond.waypoints[i];
    const Vector3 p = u.pose.position() + w * (c.pose.position() - u.pose.position());
    const Eigen::Quaterniond q = geodesic(u.pose.orientation(), c.pose.orientation(), w);
    out.waypoints[i].pose = Pose::normalized(p, q);
    out.waypoints[i].gripper = GripperState(u.gripper.command() +
                                            w * (c.gripper.command() - u.gripper.command()));
    out.waypoints[i].critical = w < 0.5 ? u.critical : c.critical;
  }
  if (w >= 0.5) {
    out.source_demo = cond.source_demo;
    out.source_index = cond.source_index;
  }
  return out;
}

std::vector<Vector3> derive_object_track(const Demonstration& demo, double grasp_radius) {
  std::vector<Vector3> out;
  out.reserve(demo.size());
  Vector3 object = demo.object_start.position();
  const double table = object.z();
  bool attached = false;
  Vector3 offset = Vector3::Zero();
  double prev_grip = 0.0;
  for (const auto& rec : demo.records) {
    const Vector3& hand = rec.reached.position();
    if (attached) object = hand + offset;
    if (!attached && prev_grip < 0.5 && rec.gripper >= 0.5 && (hand - object).norm() < grasp_radius) {
      attached = true;
      offset = object - hand;
    } else if (attached && prev_grip >= 0.5 && rec.gripper < 0.5) {
      attached = false;
      object.z() = table;
    }
    prev_grip = rec.gripper;
    out.push_back(object);
  }
  return out;
}

}  // namespace sailx
