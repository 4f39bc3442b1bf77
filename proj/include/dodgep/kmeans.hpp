#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "dodgep/embedding.hpp"

namespace dodgep {

struct Clustering {
  int requested_clusters = 0;
  /// Cluster index per input record.
  std::vector<int> assignments;
  /// p x C raw means (not normalized).
  Eigen::MatrixXd centroids;
  /// Within-cluster sum of squared distances after each sweep.
  std::vector<double> objective_history;

  int cluster_count() const noexcept { return static_cast<int>(centroids.cols()); }
  std::vector<std::size_t> members(int cluster) const;
  double objective() const { return objective_history.empty() ? 0.0 : objective_history.back(); }
};

inline constexpr int kMaxLloydSweeps = 300;

/// Within-cluster sum of squared distances for a given assignment.
double within_cluster_ss(const Eigen::MatrixXd& points, const std::vector<int>& assignments,
                         const Eigen::MatrixXd& centroids);

/// Lloyd's algorithm with k-means++ seeding. Runs until no assignment
/// changes or kMaxLloydSweeps. Clusters never come out empty; when
/// clusters > points.size() the effective count is points.size().
Clustering kmeans(const EmbeddingSet& points, int clusters, std::uint64_t seed);
Clustering kmeans(const Eigen::MatrixXd& points, int clusters, std::uint64_t seed);

}  // namespace dodgep
