#include "dodgep/fitness.hpp"

#include <string>

namespace dodgep {

namespace {

void require_weight(double w, const char* name) {
  if (!(w >= 0.0 && w <= 1.0)) {
    throw ConfigError(std::string(name) + " must lie in [0, 1], got " + std::to_string(w));
  }
}

}  // namespace

void FitnessParams::validate() const {
  require_weight(alpha, "alpha");
  require_weight(beta, "beta");
  require_weight(gamma, "gamma");
}

double dp_loss(const Eigen::Ref<const Eigen::VectorXd>& a,
               const Eigen::Ref<const Eigen::MatrixXd>& members, Threshold th, double weight) {
  require_weight(weight, "dp_loss weight");
  if (members.cols() == 0) return 0.0;
  if (members.rows() != a.size()) {
    throw DimensionError("dp_loss: point of dimension " + std::to_string(a.size()) +
                         " against members of dimension " + std::to_string(members.rows()));
  }
  if (!a.allFinite() || !members.allFinite()) throw NumericError("dp_loss: non-finite input");

  const Eigen::ArrayXd dist = (members.colwise() - a).colwise().norm().transpose().array();
  const double beyond = static_cast<double>((dist > th.value()).count());
  const double total = dist.sum();
  return (weight * beyond + (1.0 - weight) * total) / static_cast<double>(members.cols());
}

double dp_loss(const Eigen::Ref<const Eigen::VectorXd>& a, const EmbeddingSet& members,
               Threshold th, double weight) {
  if (members.empty()) return 0.0;
  return dp_loss(a, members.matrix(), th, weight);
}

double dodgepersonation_fitness(const Eigen::Ref<const Eigen::VectorXd>& x,
                                const Eigen::Ref<const Eigen::MatrixXd>& match_cluster,
                                const Eigen::Ref<const Eigen::MatrixXd>& dodge_set,
                                const FitnessParams& params) {
  const double match_loss = dp_loss(x, match_cluster, params.th1, params.alpha);
  const double dodge_loss = dp_loss(x, dodge_set, params.th2, params.beta);
  return params.gamma * match_loss + (1.0 - params.gamma) * (-dodge_loss);
}

double dodgepersonation_fitness(const Eigen::Ref<const Eigen::VectorXd>& x,
                                const EmbeddingSet& match_cluster, const EmbeddingSet& dodge_set,
                                const FitnessParams& params) {
  const Eigen::MatrixXd empty(x.size(), 0);
  return dodgepersonation_fitness(x, match_cluster.empty() ? empty : match_cluster.matrix(),
                                  dodge_set.empty() ? empty : dodge_set.matrix(), params);
}

DodgePersonationObjective::DodgePersonationObjective(Eigen::MatrixXd match_cluster,
                                                     Eigen::MatrixXd dodge_set,
                                                     FitnessParams params)
    : match_(std::move(match_cluster)), dodge_(std::move(dodge_set)), params_(params) {
  params_.validate();
}

}  // namespace dodgep
