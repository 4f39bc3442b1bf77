#pragma once

// Independent reference implementations used by the tests. They share no
// code with the library: plain loops over std::vector.

#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline double dist(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

inline double dp_loss(const Eigen::VectorXd& a, const std::vector<Eigen::VectorXd>& set, double th,
                      double m) {
  if (set.empty()) return 0.0;
  double count = 0.0;
  double total = 0.0;
  for (const auto& s : set) {
    const double d = dist(a, s);
    if (d > th) count += 1.0;
    total += d;
  }
  return (m * count + (1.0 - m) * total) / static_cast<double>(set.size());
}

inline double fitness(const Eigen::VectorXd& x, const std::vector<Eigen::VectorXd>& match,
                      const std::vector<Eigen::VectorXd>& dodge, double th1, double th2,
                      double alpha, double beta, double gamma) {
  return gamma * dp_loss(x, match, th1, alpha) - (1.0 - gamma) * dp_loss(x, dodge, th2, beta);
}

/// Number of targets within th of at least one attack vector.
inline std::size_t covered(const std::vector<Eigen::VectorXd>& attack,
                           const std::vector<Eigen::VectorXd>& targets, double th) {
  std::size_t n = 0;
  for (const auto& t : targets) {
    bool hit = false;
    for (const auto& a : attack) hit = hit || dist(a, t) <= th;
    if (hit) ++n;
  }
  return n;
}

inline Eigen::VectorXd random_unit(int p, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Eigen::VectorXd v(p);
  for (auto& x : v) x = n(rng);
  return v / v.norm();
}

}  // namespace oracle
