#include "dodgep/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

#include "dodgep/rng.hpp"

namespace dodgep {

namespace {

using Eigen::Index;

Eigen::MatrixXd plus_plus_seeding(const Eigen::MatrixXd& points, int clusters, Rng& rng) {
  const Index n = points.cols();
  Eigen::MatrixXd centroids(points.rows(), clusters);
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);

  std::uniform_int_distribution<Index> first(0, n - 1);
  Index pick = first(rng);
  centroids.col(0) = points.col(pick);
  chosen[static_cast<std::size_t>(pick)] = true;

  Eigen::ArrayXd nearest = (points.colwise() - points.col(pick)).colwise().squaredNorm().transpose();
  for (int c = 1; c < clusters; ++c) {
    const double total = nearest.sum();
    if (total > 0.0) {
      std::uniform_real_distribution<double> u(0.0, total);
      const double r = u(rng);
      double acc = 0.0;
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        acc += nearest(i);
        if (r < acc && nearest(i) > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      // Every point coincides with a centroid: take the first unused index.
      pick = 0;
      while (chosen[static_cast<std::size_t>(pick)]) ++pick;
    }
    chosen[static_cast<std::size_t>(pick)] = true;
    centroids.col(c) = points.col(pick);
    nearest = nearest.min((points.colwise() - points.col(pick)).colwise().squaredNorm().transpose().array());
  }
  return centroids;
}

int nearest_centroid(const Eigen::VectorXd& p, const Eigen::MatrixXd& centroids) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (Index c = 0; c < centroids.cols(); ++c) {
    const double d = (centroids.col(c) - p).squaredNorm();
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(c);
    }
  }
  return best;
}

// Moves the point farthest from its centroid (taken from a cluster with at
// least two members) into each empty cluster.
void repair_empty(const Eigen::MatrixXd& points, std::vector<int>& assignments,
                  Eigen::MatrixXd& centroids) {
  const int k = static_cast<int>(centroids.cols());
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int a : assignments) ++counts[static_cast<std::size_t>(a)];
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] > 0) continue;
    Index far = -1;
    double far_d = -1.0;
    for (Index i = 0; i < points.cols(); ++i) {
      const int owner = assignments[static_cast<std::size_t>(i)];
      if (counts[static_cast<std::size_t>(owner)] < 2) continue;
      const double d = (points.col(i) - centroids.col(owner)).squaredNorm();
      if (d > far_d) {
        far_d = d;
        far = i;
      }
    }
    const int owner = assignments[static_cast<std::size_t>(far)];
    --counts[static_cast<std::size_t>(owner)];
    ++counts[static_cast<std::size_t>(c)];
    assignments[static_cast<std::size_t>(far)] = c;
    centroids.col(c) = points.col(far);
  }
}

Eigen::MatrixXd cluster_means(const Eigen::MatrixXd& points, const std::vector<int>& assignments,
                              int k) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(points.rows(), k);
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
  for (Index i = 0; i < points.cols(); ++i) {
    const int a = assignments[static_cast<std::size_t>(i)];
    sums.col(a) += points.col(i);
    counts(a) += 1.0;
  }
  for (int c = 0; c < k; ++c) sums.col(c) /= counts(c);
  return sums;
}

}  // namespace

std::vector<std::size_t> Clustering::members(int cluster) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == cluster) out.push_back(i);
  }
  return out;
}

double within_cluster_ss(const Eigen::MatrixXd& points, const std::vector<int>& assignments,
                         const Eigen::MatrixXd& centroids) {
  double total = 0.0;
  for (Index i = 0; i < points.cols(); ++i) {
    total += (points.col(i) - centroids.col(assignments[static_cast<std::size_t>(i)])).squaredNorm();
  }
  return total;
}

Clustering kmeans(const Eigen::MatrixXd& points, int clusters, std::uint64_t seed) {
  if (clusters < 1) throw ConfigError("k-means needs at least one cluster");
  if (points.cols() == 0) throw ConfigError("k-means needs at least one point");
  if (!points.allFinite()) throw NumericError("k-means: non-finite point");

  Clustering out;
  out.requested_clusters = clusters;
  const int k = static_cast<int>(std::min<Index>(clusters, points.cols()));

  Rng rng = make_rng(seed, {0x6b6d65616e73ULL});
  Eigen::MatrixXd centroids = plus_plus_seeding(points, k, rng);
  std::vector<int> assignments(static_cast<std::size_t>(points.cols()), -1);

  for (int sweep = 0; sweep < kMaxLloydSweeps; ++sweep) {
    std::vector<int> next(assignments.size());
    for (Index i = 0; i < points.cols(); ++i) {
      next[static_cast<std::size_t>(i)] = nearest_centroid(points.col(i), centroids);
    }
    repair_empty(points, next, centroids);
    const bool changed = next != assignments;
    assignments = std::move(next);
    centroids = cluster_means(points, assignments, k);
    out.objective_history.push_back(within_cluster_ss(points, assignments, centroids));
    if (!changed) break;
  }
  out.assignments = std::move(assignments);
  out.centroids = std::move(centroids);
  return out;
}

Clustering kmeans(const EmbeddingSet& points, int clusters, std::uint64_t seed) {
  if (points.empty()) throw ConfigError("k-means needs at least one point");
  return kmeans(points.matrix(), clusters, seed);
}

}  // namespace dodgep
