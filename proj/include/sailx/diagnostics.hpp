#ifndef SAILX_DIAGNOSTICS_HPP
#define SAILX_DIAGNOSTICS_HPP

#include <Eigen/Dense>
#include <vector>

#include "sailx/core.hpp"

namespace sailx {

/// N flattened position sequences, one per row.
class SampleSet {
 public:
  explicit SampleSet(Eigen::MatrixXd rows);

  int size() const { return static_cast<int>(rows_.rows()); }
  int dim() const { return static_cast<int>(rows_.cols()); }
  const Eigen::MatrixXd& rows() const { return rows_; }

 private:
  Eigen::MatrixXd rows_;
};

/// Concatenates positions into one vector.
Eigen::VectorXd flatten(const std::vector<Vector3>& positions);

struct KdeResult {
  double score = 0.0;
  bool bandwidth_floored = false;
};

/// Gaussian KDE density at the query with per-dimension Scott bandwidth.
KdeResult kde_score(const SampleSet& samples, const Eigen::VectorXd& query);

/// Mean distance to the k nearest samples.
double knn_distance(const SampleSet& samples, const Eigen::VectorXd& query, int k = 8);

/// Square root of the MMD^2 between the samples and a Dirac at the query.
double mmd(const SampleSet& samples, const Eigen::VectorXd& query, double bandwidth = 0.5);

/// Rank correlation with average ranks for ties.
double spearman(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sailx

#endif  // SAILX_DIAGNOSTICS_HPP
