#ifndef SAILX_TESTS_ORACLES_HPP
#define SAILX_TESTS_ORACLES_HPP

// Reference implementations written independently of the library, used by
// the unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "sailx/metrics.hpp"
#include "sailx/speedmod.hpp"

namespace sailx::oracle {

inline constexpr double kPi = 3.14159265358979323846;

// Straightforward recursive split at the farthest point.
inline void rdp(const std::vector<Vector3>& p, int a, int b, double tau, std::vector<int>& keep) {
  double worst = -1.0;
  int at = -1;
  for (int i = a + 1; i < b; ++i) {
    const Vector3 ab = p[b] - p[a];
    const double l2 = ab.squaredNorm();
    const double s = l2 > 0.0 ? std::clamp((p[i] - p[a]).dot(ab) / l2, 0.0, 1.0) : 0.0;
    const double d = (p[i] - (p[a] + s * ab)).norm();
    if (d > worst) {
      worst = d;
      at = i;
    }
  }
  if (at < 0 || worst <= tau) return;
  keep[at] = 1;
  rdp(p, a, at, tau, keep);
  rdp(p, at, b, tau, keep);
}

inline std::vector<int> waypoint_indices(const std::vector<Vector3>& p, double tau) {
  std::vector<int> keep(p.size(), 0);
  keep.front() = keep.back() = 1;
  rdp(p, 0, static_cast<int>(p.size()) - 1, tau, keep);
  std::vector<int> idx;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (keep[i]) idx.push_back(static_cast<int>(i));
  }
  return idx;
}

// Per-step labels: a waypoint is clustered when it is a core point or lies
// within eps of one; spans between consecutive clustered waypoints are set.
inline std::vector<int> critical_labels(const std::vector<Vector3>& p, const LabelParams& params) {
  const std::vector<int> idx = waypoint_indices(p, params.tau);
  const int m = static_cast<int>(idx.size());
  std::vector<int> core(m, 0), member(m, 0);
  for (int a = 0; a < m; ++a) {
    int c = 0;
    for (int b = 0; b < m; ++b) c += (p[idx[a]] - p[idx[b]]).norm() <= params.eps;
    core[a] = c >= params.min_pts;
  }
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      member[a] = member[a] || (core[b] && (p[idx[a]] - p[idx[b]]).norm() <= params.eps);
    }
  }
  std::vector<int> out(p.size(), 0);
  for (int a = 0; a + 1 < m; ++a) {
    if (member[a] && member[a + 1]) {
      for (int t = idx[a]; t <= idx[a + 1]; ++t) out[t] = 1;
    }
  }
  return out;
}

// Straight runs joined by jittery dwells.
inline std::vector<Vector3> dwell_fixture(std::uint64_t seed, int dwells) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> jitter(0.0, 0.007);
  std::uniform_real_distribution<double> dir(-1.0, 1.0);
  std::vector<Vector3> out;
  Vector3 p(0.3, 0.0, 0.2);
  for (int d = 0; d <= dwells; ++d) {
    const Vector3 v = Vector3(dir(rng), dir(rng), 0.3 * dir(rng)).normalized() * 0.01;
    for (int i = 0; i < 15; ++i) out.push_back(p += v);
    if (d == dwells) break;
    const Vector3 centre = p;
    for (int i = 0; i < 25; ++i) {
      p = centre + Vector3(jitter(rng), jitter(rng), jitter(rng));
      out.push_back(p);
    }
  }
  return out;
}

// Arc length of a normalized magnitude curve sampled at df up to the last
// bin above threshold, within the frequency cap.
inline double arc_of(const std::vector<double>& mag, double df, const SparcParams& p) {
  std::size_t top = 1;
  while (top + 1 < mag.size() && (top + 1) * df <= p.omega_max) ++top;
  std::size_t last = 1;
  for (std::size_t k = 1; k <= top; ++k) {
    if (mag[k] >= p.threshold) last = k;
  }
  const double wc = last * df;
  double arc = 0.0;
  for (std::size_t k = 1; k <= last; ++k) arc += std::hypot(df / wc, mag[k] - mag[k - 1]);
  return -arc;
}

inline double sparc_direct(const std::vector<double>& v, const SparcParams& p) {
  const std::size_t m = v.size() * p.pad_factor;
  std::vector<double> mag(m / 2 + 1);
  double dc = 0.0;
  for (double x : v) dc += x;
  for (std::size_t k = 0; k < mag.size(); ++k) {
    std::complex<double> s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      s += v[i] * std::polar(1.0, -2.0 * kPi * static_cast<double>((k * i) % m) / m);
    }
    mag[k] = std::abs(s) / dc;
  }
  return arc_of(mag, 1.0 / (m * p.sample_interval), p);
}

// Gaussian speed bell with optional multiplicative ripple.
inline std::vector<double> bell(int n, double ripple = 0.0, double cycles = 12.0) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / (n - 1);
    v[i] = std::exp(-std::pow((s - 0.5) / 0.15, 2)) * (1.0 + ripple * std::sin(2 * kPi * cycles * s));
  }
  return v;
}

}  // namespace sailx::oracle

#endif  // SAILX_TESTS_ORACLES_HPP
