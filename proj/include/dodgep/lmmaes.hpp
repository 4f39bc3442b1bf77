#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <vector>

#include "dodgep/embedding.hpp"

namespace dodgep {

struct EsConfig {
  int population = 100;
  int generations = 1000;
  /// 0 = take the dimension from the initial mean.
  int dimension = 0;
  double sigma0 = 0.3;
  /// 0 = 4 + floor(3 ln p).
  int memory_size = 0;
  std::uint64_t seed = 0;
  /// L2-normalize every sampled individual before evaluation.
  bool sphere_projection = true;
  /// Replace the worst offspring with the best-ever individual before selection.
  bool reinject_best = false;
  /// Record the best-so-far individual every N generations (0 = never).
  int snapshot_interval = 0;
  int threads = 1;

  void validate() const;
};

struct EsSnapshot {
  int generation = 0;
  EmbeddingVector best;
};

struct EsTrace {
  /// Best fitness seen so far, one entry per generation.
  std::vector<double> best_fitness;
  /// Best fitness within each generation's offspring.
  std::vector<double> generation_best;
  std::vector<double> mean_fitness;
  std::vector<double> sigma;
  std::vector<EsSnapshot> snapshots;
};

struct EsResult {
  EmbeddingVector best;
  double best_fitness = 0.0;
  EsTrace trace;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Strategy constants derived from (population, dimension, memory).
struct LmMaEsParameters {
  int lambda = 0;
  int mu = 0;
  Eigen::VectorXd weights;
  double mu_eff = 0.0;
  double c_sigma = 0.0;
  Eigen::VectorXd c_d;
  Eigen::VectorXd c_c;

  static LmMaEsParameters make(int population, int dimension, int memory_size);
};

int default_memory_size(int dimension);

/// Limited-memory matrix adaptation ES. Minimizes `objective` starting
/// from `init_mean` and returns the lowest-fitness individual ever
/// evaluated. Throws NumericError if the objective returns a non-finite
/// value.
EsResult minimize(const Objective& objective, const Eigen::VectorXd& init_mean,
                  const EsConfig& config);

}  // namespace dodgep
