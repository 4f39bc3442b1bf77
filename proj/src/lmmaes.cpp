#include "dodgep/lmmaes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "dodgep/parallel.hpp"
#include "dodgep/rng.hpp"

namespace dodgep {

void EsConfig::validate() const {
  if (population < 2) throw ConfigError("population must be at least 2");
  if (generations < 1) throw ConfigError("generations must be at least 1");
  if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw ConfigError("sigma0 must be positive");
  if (memory_size < 0) throw ConfigError("memory_size must be non-negative");
  if (dimension < 0) throw ConfigError("dimension must be non-negative");
  if (snapshot_interval < 0) throw ConfigError("snapshot_interval must be non-negative");
}

int default_memory_size(int dimension) {
  return 4 + static_cast<int>(std::floor(3.0 * std::log(static_cast<double>(dimension))));
}

LmMaEsParameters LmMaEsParameters::make(int population, int dimension, int memory_size) {
  LmMaEsParameters p;
  const double n = dimension;
  p.lambda = population;
  p.mu = population / 2;
  p.weights.resize(p.mu);
  for (int i = 0; i < p.mu; ++i) p.weights(i) = std::log(p.mu + 0.5) - std::log(i + 1.0);
  p.weights /= p.weights.sum();
  p.mu_eff = 1.0 / p.weights.squaredNorm();

  // 2*lambda/n is meant for lambda << n; past 1 the path update is no
  // longer a contraction, so fall back to the CSA rate.
  p.c_sigma = 2.0 * population / n;
  if (p.c_sigma >= 1.0) p.c_sigma = (p.mu_eff + 2.0) / (n + p.mu_eff + 5.0);

  p.c_d.resize(memory_size);
  p.c_c.resize(memory_size);
  for (int j = 0; j < memory_size; ++j) {
    p.c_d(j) = 1.0 / (std::pow(1.5, j) * n);
    p.c_c(j) = std::min(1.0, population / (std::pow(4.0, j) * n));
  }
  return p;
}

EsResult minimize(const Objective& objective, const Eigen::VectorXd& init_mean,
                  const EsConfig& config) {
  config.validate();
  const int n = static_cast<int>(init_mean.size());
  if (n < 1) throw DimensionError("minimize: empty initial mean");
  if (config.dimension != 0 && config.dimension != n) {
    throw DimensionError("minimize: initial mean has dimension " + std::to_string(n) +
                         ", config says " + std::to_string(config.dimension));
  }
  if (!init_mean.allFinite()) throw NumericError("minimize: non-finite initial mean");

  const int memory = config.memory_size > 0 ? config.memory_size : default_memory_size(n);
  const auto params = LmMaEsParameters::make(config.population, n, memory);
  const int lambda = params.lambda;

  Eigen::VectorXd mean = config.sphere_projection ? l2_normalize(init_mean) : init_mean;
  double sigma = config.sigma0;
  Eigen::VectorXd path = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd directions = Eigen::MatrixXd::Zero(n, memory);  // one memory vector per column

  // Degrees of freedom of the evolution path.
  const double path_dof = config.sphere_projection ? std::max(n - 1, 1) : n;

  Eigen::MatrixXd z(n, lambda);
  Eigen::MatrixXd d(n, lambda);
  Eigen::MatrixXd x(n, lambda);
  std::vector<double> f(static_cast<std::size_t>(lambda));
  std::vector<int> order(static_cast<std::size_t>(lambda));

  EsResult result;
  result.best = mean;
  result.best_fitness = std::numeric_limits<double>::infinity();
  bool have_best = false;

  for (int gen = 0; gen < config.generations; ++gen) {
    const int active = std::min(gen, memory);
    parallel_for(static_cast<std::size_t>(lambda), config.threads, [&](std::size_t i) {
      const auto col = static_cast<Eigen::Index>(i);
      Rng rng = make_rng(config.seed, {static_cast<std::uint64_t>(gen), i});
      std::normal_distribution<double> normal;
      for (int k = 0; k < n; ++k) z(k, col) = normal(rng);
      // On the sphere the radial direction is not neutral under selection
      // (it rescales the tangential step), so sampling is kept tangent.
      if (config.sphere_projection) z.col(col) -= z.col(col).dot(mean) * mean;
      Eigen::VectorXd di = z.col(col);
      for (int j = 0; j < active; ++j) {
        di = (1.0 - params.c_d(j)) * di +
             params.c_d(j) * directions.col(j) * directions.col(j).dot(di);
      }
      if (config.sphere_projection) di -= di.dot(mean) * mean;
      d.col(col) = di;
      Eigen::VectorXd xi = mean + sigma * di;
      if (config.sphere_projection) xi = l2_normalize(xi);
      x.col(col) = xi;
      f[i] = objective(xi);
    });

    if (config.reinject_best && have_best) {
      const auto worst = std::max_element(f.begin(), f.end()) - f.begin();
      x.col(worst) = result.best;
      f[static_cast<std::size_t>(worst)] = result.best_fitness;
      // z and d keep the sampled values; the re-injected point only competes
      // in selection and mean recombination.
    }

    for (int i = 0; i < lambda; ++i) {
      if (!std::isfinite(f[static_cast<std::size_t>(i)])) {
        std::ostringstream msg;
        msg << "objective returned " << f[static_cast<std::size_t>(i)] << " at generation " << gen
            << ", individual " << i << " (sigma " << sigma << ")";
        throw NumericError(msg.str());
      }
    }

    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return f[static_cast<std::size_t>(a)] < f[static_cast<std::size_t>(b)];
    });

    const int top = order.front();
    if (!have_best || f[static_cast<std::size_t>(top)] < result.best_fitness) {
      result.best_fitness = f[static_cast<std::size_t>(top)];
      result.best = x.col(top);
      have_best = true;
    }

    Eigen::VectorXd z_step = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd d_step = Eigen::VectorXd::Zero(n);
    for (int k = 0; k < params.mu; ++k) {
      const int idx = order[static_cast<std::size_t>(k)];
      z_step += params.weights(k) * z.col(idx);
      d_step += params.weights(k) * d.col(idx);
    }

    path = (1.0 - params.c_sigma) * path +
           std::sqrt(params.mu_eff * params.c_sigma * (2.0 - params.c_sigma)) * z_step;
    for (int j = 0; j < memory; ++j) {
      directions.col(j) = (1.0 - params.c_c(j)) * directions.col(j) +
                          std::sqrt(params.mu_eff * params.c_c(j) * (2.0 - params.c_c(j))) * z_step;
    }
    mean += sigma * d_step;
    if (config.sphere_projection) {
      // Evaluation only sees directions, so (mean, sigma) -> (mean, sigma) / r
      // leaves the sampled distribution unchanged. Rescaling keeps the mean
      // on the sphere and sigma in tangent units.
      const double r = mean.norm();
      if (r > 0.0) {
        mean /= r;
        sigma /= r;
      } else {
        mean = x.col(top);
      }
    }
    sigma *= std::exp(0.5 * params.c_sigma * (path.squaredNorm() / path_dof - 1.0));

    double sum = 0.0;
    for (double v : f) sum += v;
    result.trace.best_fitness.push_back(result.best_fitness);
    result.trace.generation_best.push_back(f[static_cast<std::size_t>(top)]);
    result.trace.mean_fitness.push_back(sum / lambda);
    result.trace.sigma.push_back(sigma);
    if (config.snapshot_interval > 0 && (gen + 1) % config.snapshot_interval == 0) {
      result.trace.snapshots.push_back({gen + 1, result.best});
    }
  }
  return result;
}

}  // namespace dodgep
