#include "sailx/speedmod.hpp"

#include <algorithm>

namespace sailx {

void LabelParams::validate() const {
  if (!(tau > 0.0) || !(eps > 0.0) || min_pts < 1) throw InvalidInput("label parameters must be positive");
}

double point_segment_distance(const Vector3& p, const Vector3& a, const Vector3& b) {
  const Vector3 ab = b - a;
  const double len2 = ab.squaredNorm();
  if (len2 == 0.0) return (p - a).norm();
  const double s = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  return (p - (a + s * ab)).norm();
}

WaypointSet extract_waypoints(const std::vector<Vector3>& traj, double tau) {
  if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
  if (traj.size() < 2) throw InvalidInput("trajectory needs at least two points");
  const int n = static_cast<int>(traj.size());
  std::vector<char> keep(n, 0);
  keep[0] = keep[n - 1] = 1;
  std::vector<std::pair<int, int>> stack{{0, n - 1}};
  while (!stack.empty()) {
    auto [lo, hi] = stack.back();
    stack.pop_back();
    double worst = -1.0;
    int split = -1;
    for (int i = lo + 1; i < hi; ++i) {
      const double d = point_segment_distance(traj[i], traj[lo], traj[hi]);
      if (d > worst) {
        worst = d;
        split = i;
      }
    }
    if (split < 0 || worst <= tau) continue;
    keep[split] = 1;
    stack.push_back({split, hi});
    stack.push_back({lo, split});
  }
  WaypointSet out;
  for (int i = 0; i < n; ++i) {
    if (keep[i]) {
      out.indices.push_back(i);
      out.positions.push_back(traj[i]);
    }
  }
  return out;
}

WaypointSet extract_waypoints(const std::vector<Pose>& traj, double tau) {
  std::vector<Vector3> p;
  p.reserve(traj.size());
  for (const auto& x : traj) p.push_back(x.position());
  return extract_waypoints(p, tau);
}

std::vector<int> dbscan(const std::vector<Vector3>& points, double eps, int min_pts) {
  if (!(eps > 0.0) || min_pts < 1) throw InvalidInput("dbscan parameters must be positive");
  const int n = static_cast<int>(points.size());
  const double eps2 = eps * eps;
  std::vector<std::vector<int>> nbrs(n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if ((points[i] - points[j]).squaredNorm() <= eps2) nbrs[i].push_back(j);
    }
  }
  constexpr int kUnvisited = -2;
  std::vector<int> label(n, kUnvisited);
  int cluster = 0;
  for (int i = 0; i < n; ++i) {
    if (label[i] != kUnvisited) continue;
    if (static_cast<int>(nbrs[i].size()) < min_pts) {
      label[i] = -1;
      continue;
    }
    label[i] = cluster;
    std::vector<int> queue(nbrs[i].begin(), nbrs[i].end());
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const int j = queue[q];
      if (label[j] == -1) label[j] = cluster;  // border point
      if (label[j] != kUnvisited) continue;
      label[j] = cluster;
      if (static_cast<int>(nbrs[j].size()) >= min_pts) {
        queue.insert(queue.end(), nbrs[j].begin(), nbrs[j].end());
      }
    }
    ++cluster;
  }
  return label;
}

std::vector<int> label_critical(const std::vector<Pose>& traj, const LabelParams& params) {
  params.validate();
  std::vector<int> k(traj.size(), 0);
  if (traj.size() < 2) return k;
  const WaypointSet w = extract_waypoints(traj, params.tau);
  const std::vector<int> c = dbscan(w.positions, params.eps, params.min_pts);
  for (std::size_t i = 0; i + 1 < w.indices.size(); ++i) {
    if (c[i] < 0 || c[i + 1] < 0) continue;
    for (int t = w.indices[i]; t <= w.indices[i + 1]; ++t) k[t] = 1;
  }
  return k;
}

std::vector<int> gripper_event_flags(const std::vector<double>& gripper, int window) {
  if (window < 0) throw InvalidInput("window must be non-negative");
  const int n = static_cast<int>(gripper.size());
  std::vector<int> k(n, 0);
  for (int t = 1; t < n; ++t) {
    if ((gripper[t] >= 0.5) == (gripper[t - 1] >= 0.5)) continue;
    for (int s = std::max(0, t - window); s <= std::min(n - 1, t + window); ++s) k[s] = 1;
  }
  return k;
}

std::vector<int> gripper_event_flags(const ActionChunk& chunk, int window) {
  std::vector<double> g;
  g.reserve(chunk.size());
  for (const auto& wp : chunk.waypoints) g.push_back(wp.gripper.command());
  return gripper_event_flags(g, window);
}

}  // namespace sailx
