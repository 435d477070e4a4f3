#include "sailx/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sailx {

SampleSet::SampleSet(Eigen::MatrixXd rows) : rows_(std::move(rows)) {
  if (rows_.rows() < 1 || rows_.cols() < 1) throw InvalidInput("empty sample set");
  if (!rows_.allFinite()) throw InvalidInput("non-finite samples");
}

Eigen::VectorXd flatten(const std::vector<Vector3>& positions) {
  Eigen::VectorXd v(3 * positions.size());
  for (std::size_t i = 0; i < positions.size(); ++i) v.segment<3>(3 * i) = positions[i];
  return v;
}

namespace {
void check_query(const SampleSet& s, const Eigen::VectorXd& q) {
  if (q.size() != s.dim()) throw InvalidInput("query dimension mismatch");
}
}  // namespace

KdeResult kde_score(const SampleSet& samples, const Eigen::VectorXd& query) {
  check_query(samples, query);
  const int n = samples.size();
  const int d = samples.dim();
  if (n < 2) throw InvalidInput("KDE needs at least two samples");
  const Eigen::MatrixXd& x = samples.rows();
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::RowVectorXd sd =
      ((x.rowwise() - mean).array().square().colwise().sum() / (n - 1)).sqrt();
  const double factor = std::pow(static_cast<double>(n), -1.0 / (d + 4));
  KdeResult out;
  Eigen::RowVectorXd h = sd * factor;
  for (int j = 0; j < d; ++j) {
    if (h(j) < 1e-9) {
      h(j) = 1e-9;
      out.bandwidth_floored = true;
    }
  }
  const double log_norm = -0.5 * d * std::log(2.0 * M_PI) - h.array().log().sum();
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z2 = ((x.row(i) - query.transpose()).array() / h.array()).square().sum();
    sum += std::exp(log_norm - 0.5 * z2);
  }
  out.score = sum / n;
  return out;
}

double knn_distance(const SampleSet& samples, const Eigen::VectorXd& query, int k) {
  check_query(samples, query);
  if (k < 1 || k > samples.size()) throw InvalidInput("k must lie in [1, N]");
  std::vector<double> d(samples.size());
  for (int i = 0; i < samples.size(); ++i) d[i] = (samples.rows().row(i) - query.transpose()).norm();
  std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
  std::sort(d.begin(), d.begin() + k);
  return std::accumulate(d.begin(), d.begin() + k, 0.0) / k;
}

double mmd(const SampleSet& samples, const Eigen::VectorXd& query, double bandwidth) {
  check_query(samples, query);
  if (!(bandwidth > 0.0)) throw InvalidInput("bandwidth must be positive");
  const Eigen::MatrixXd& x = samples.rows();
  const int n = samples.size();
  const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
  double kxx = 0.0, kxq = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) kxx += std::exp(-(x.row(i) - x.row(j)).squaredNorm() * inv);
    kxq += std::exp(-(x.row(i) - query.transpose()).squaredNorm() * inv);
  }
  const double m2 = kxx / (static_cast<double>(n) * n) - 2.0 * kxq / n + 1.0;
  return std::sqrt(std::max(0.0, m2));
}

namespace {
std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t t = i; t <= j; ++t) r[idx[t]] = avg;
    i = j + 1;
  }
  return r;
}
}  // namespace

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvalidInput("need two equal-length series");
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const Eigen::Map<const Eigen::VectorXd> a(rx.data(), rx.size());
  const Eigen::Map<const Eigen::VectorXd> b(ry.data(), ry.size());
  const Eigen::VectorXd ca = a.array() - a.mean();
  const Eigen::VectorXd cb = b.array() - b.mean();
  const double denom = ca.norm() * cb.norm();
  if (!(denom > 0.0)) throw UndefinedMetric("correlation of a constant series");
  return ca.dot(cb) / denom;
}

}  // namespace sailx
