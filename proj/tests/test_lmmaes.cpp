#include <doctest.h>

#include <random>

#include "dodgep/lmmaes.hpp"
#include "oracles.hpp"

using namespace dodgep;

TEST_CASE("strategy parameters") {
  const auto p = LmMaEsParameters::make(100, 16, 0);
  CHECK(p.mu == 50);
  CHECK(p.weights.size() == 50);
  CHECK(p.weights.sum() == doctest::Approx(1.0));
  for (Eigen::Index i = 1; i < p.weights.size(); ++i) CHECK(p.weights[i] < p.weights[i - 1]);
  CHECK(default_memory_size(16) == 4 + static_cast<int>(std::floor(3.0 * std::log(16.0))));
  CHECK(p.c_d.size() == 0);
  const auto q = LmMaEsParameters::make(100, 16, default_memory_size(16));
  CHECK(q.c_d.size() == default_memory_size(16));
  for (Eigen::Index j = 0; j < q.c_d.size(); ++j) {
    CHECK(q.c_d[j] == doctest::Approx(1.0 / (std::pow(1.5, static_cast<double>(j)) * 16)));
    CHECK(q.c_c[j] <= 1.0);
  }
  CHECK(p.c_sigma < 1.0);
}

TEST_CASE("config validation") {
  EsConfig c;
  c.population = 1;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.sigma0 = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.generations = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("unconstrained sphere quadratic") {
  const int p = 16;
  std::mt19937_64 rng(1);
  const Eigen::VectorXd opt = oracle::random_unit(p, rng);
  EsConfig cfg;
  cfg.population = 100;
  cfg.generations = 300;
  cfg.sphere_projection = false;
  cfg.seed = 3;
  const auto r = minimize([&](const Eigen::VectorXd& v) { return (v - opt).squaredNorm(); },
                          Eigen::VectorXd::Zero(p), cfg);
  CHECK(r.best_fitness <= 1e-6);
  CHECK(r.trace.best_fitness.size() == 300);
  for (std::size_t g = 1; g < r.trace.best_fitness.size(); ++g) {
    CHECK(r.trace.best_fitness[g] <= r.trace.best_fitness[g - 1]);
  }
}

TEST_CASE("distance to a unit target on the sphere") {
  const int p = 16;
  std::mt19937_64 rng(2);
  const Eigen::VectorXd target = oracle::random_unit(p, rng);
  EsConfig cfg;
  cfg.population = 100;
  cfg.generations = 200;
  cfg.seed = 5;
  const auto r = minimize([&](const Eigen::VectorXd& v) { return (v - target).norm(); },
                          oracle::random_unit(p, rng), cfg);
  CHECK(r.best_fitness <= 1e-3);
  CHECK(r.best.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("identical seeds give bit-identical runs") {
  const int p = 10;
  std::mt19937_64 rng(3);
  const Eigen::VectorXd target = oracle::random_unit(p, rng);
  auto f = [&](const Eigen::VectorXd& v) { return (v - target).norm(); };
  EsConfig cfg;
  cfg.population = 20;
  cfg.generations = 50;
  cfg.seed = 99;
  cfg.snapshot_interval = 10;
  const auto a = minimize(f, Eigen::VectorXd::Unit(p, 0), cfg);
  cfg.threads = 3;
  const auto b = minimize(f, Eigen::VectorXd::Unit(p, 0), cfg);
  CHECK(a.best == b.best);
  CHECK(a.trace.best_fitness == b.trace.best_fitness);
  CHECK(a.trace.sigma == b.trace.sigma);
  CHECK(a.trace.snapshots.size() == 5);
  cfg.seed = 100;
  const auto c = minimize(f, Eigen::VectorXd::Unit(p, 0), cfg);
  CHECK(c.trace.best_fitness != a.trace.best_fitness);
}

TEST_CASE("non-finite fitness is a numeric error") {
  EsConfig cfg;
  cfg.population = 10;
  cfg.generations = 3;
  CHECK_THROWS_AS(minimize([](const Eigen::VectorXd&) { return std::nan(""); },
                           Eigen::VectorXd::Unit(4, 0), cfg),
                  NumericError);
}

TEST_CASE("sphere projection needs a non-zero start") {
  EsConfig cfg;
  cfg.population = 10;
  cfg.generations = 3;
  CHECK_THROWS_AS(minimize([](const Eigen::VectorXd& v) { return v.sum(); }, Eigen::VectorXd::Zero(4), cfg),
                  NumericError);
}
