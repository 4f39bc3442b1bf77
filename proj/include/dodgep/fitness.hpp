#pragma once

#include <Eigen/Dense>

#include "dodgep/embedding.hpp"

namespace dodgep {

struct FitnessParams {
  Threshold th1{1.055};  // match side
  Threshold th2{1.055};  // dodge side
  double alpha = 0.99;
  double beta = 0.99;
  double gamma = 0.9;

  /// Throws ConfigError when a weight falls outside [0, 1].
  void validate() const;
};

/// Normalized mix of the count of members farther than th and the summed
/// distance to the members:
///   (weight * #{s : d(a,s) > th} + (1 - weight) * sum d(a,s)) / |S|.
/// `members` holds one member per column. An empty set yields 0.
double dp_loss(const Eigen::Ref<const Eigen::VectorXd>& a,
               const Eigen::Ref<const Eigen::MatrixXd>& members, Threshold th, double weight);

double dp_loss(const Eigen::Ref<const Eigen::VectorXd>& a, const EmbeddingSet& members,
               Threshold th, double weight);

/// gamma * dp_loss(x, match, th1, alpha) - (1 - gamma) * dp_loss(x, dodge, th2, beta).
/// Lower is better.
double dodgepersonation_fitness(const Eigen::Ref<const Eigen::VectorXd>& x,
                                const Eigen::Ref<const Eigen::MatrixXd>& match_cluster,
                                const Eigen::Ref<const Eigen::MatrixXd>& dodge_set,
                                const FitnessParams& params);

double dodgepersonation_fitness(const Eigen::Ref<const Eigen::VectorXd>& x,
                                const EmbeddingSet& match_cluster, const EmbeddingSet& dodge_set,
                                const FitnessParams& params);

/// Fitness bound to one match cluster and the dodge set, as evaluated by
/// the search engine.
class DodgePersonationObjective {
 public:
  DodgePersonationObjective(Eigen::MatrixXd match_cluster, Eigen::MatrixXd dodge_set,
                            FitnessParams params);

  double operator()(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    return dodgepersonation_fitness(x, match_, dodge_, params_);
  }

  const FitnessParams& params() const noexcept { return params_; }

 private:
  Eigen::MatrixXd match_;
  Eigen::MatrixXd dodge_;
  FitnessParams params_;
};

}  // namespace dodgep
