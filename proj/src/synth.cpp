#include <charconv>
#include <cmath>
#include <limits>
#include <random>

#include "dodgep/rng.hpp"
#include "dodgep/scenario.hpp"

namespace dodgep {

namespace {

constexpr int kRepulsionSteps = 5000;

EmbeddingVector random_unit(int dimension, Rng& rng) {
  std::normal_distribution<double> normal;
  EmbeddingVector v(dimension);
  do {
    for (int i = 0; i < dimension; ++i) v(i) = normal(rng);
  } while (v.norm() == 0.0);
  return v.normalized();
}

// Unit vector at chordal distance `chord` from the unit vector `center`.
EmbeddingVector point_at_chord(const EmbeddingVector& center, double chord, Rng& rng) {
  EmbeddingVector tangent;
  do {
    tangent = random_unit(static_cast<int>(center.size()), rng);
    tangent -= tangent.dot(center) * center;
  } while (tangent.norm() < 1e-8);
  tangent.normalize();
  const double angle = 2.0 * std::asin(chord / 2.0);
  return (std::cos(angle) * center + std::sin(angle) * tangent).normalized();
}

double min_pair_distance(const Eigen::MatrixXd& centers) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < centers.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < centers.cols(); ++j) {
      best = std::min(best, (centers.col(i) - centers.col(j)).norm());
    }
  }
  return best;
}

// Random centers; when random draws are too close (separations near the
// sphere's diameter are vanishingly rare in high dimension) they are spread
// by Coulomb repulsion on the sphere until the separation holds.
Eigen::MatrixXd place_centers(const SynthSpec& spec, Rng& rng) {
  Eigen::MatrixXd centers(spec.dimension, spec.clusters);
  for (int c = 0; c < spec.clusters; ++c) centers.col(c) = random_unit(spec.dimension, rng);
  if (spec.clusters < 2 || min_pair_distance(centers) >= spec.min_center_separation) return centers;

  Eigen::MatrixXd force(spec.dimension, spec.clusters);
  for (int it = 0; it < kRepulsionSteps; ++it) {
    force.setZero();
    for (int i = 0; i < spec.clusters; ++i) {
      for (int j = 0; j < spec.clusters; ++j) {
        if (i == j) continue;
        const Eigen::VectorXd diff = centers.col(i) - centers.col(j);
        const double d = std::max(diff.norm(), 1e-12);
        force.col(i) += diff / (d * d * d);
      }
    }
    const double step = 0.1 / (1.0 + 0.01 * it);
    for (int i = 0; i < spec.clusters; ++i) {
      Eigen::VectorXd f = force.col(i);
      f -= f.dot(centers.col(i)) * centers.col(i);
      const double fn = f.norm();
      if (fn > 0.0) centers.col(i) = (centers.col(i) + step * f / fn).normalized();
    }
    if (min_pair_distance(centers) >= spec.min_center_separation) return centers;
  }
  throw ConfigError("cannot place " + std::to_string(spec.clusters) + " cap centers at separation " +
                    std::to_string(spec.min_center_separation) + " in dimension " +
                    std::to_string(spec.dimension));
}

}  // namespace

void SynthSpec::validate() const {
  if (clusters < 1) throw ConfigError("synthetic data needs at least one cluster");
  if (count < 1) throw ConfigError("synthetic data needs at least one point");
  if (dimension < 2) throw ConfigError("synthetic data needs dimension >= 2");
  if (!(radius >= 0.0 && radius < 2.0)) throw ConfigError("cap radius must lie in [0, 2)");
  if (!(min_center_separation >= 0.0 && min_center_separation <= 2.0)) {
    throw ConfigError("center separation must lie in [0, 2]");
  }
}

SynthDataset synth_dataset_with_centers(const SynthSpec& spec) {
  spec.validate();
  Rng rng = make_rng(spec.seed, {0x73796e74ULL});

  Eigen::MatrixXd centers = place_centers(spec, rng);

  std::uniform_real_distribution<double> chord(0.0, spec.radius);
  SynthDataset out{EmbeddingSet(spec.role, spec.dimension), centers};
  for (int i = 0; i < spec.count; ++i) {
    const int cap = i % spec.clusters;
    const std::string name = spec.prefix + "c" + std::to_string(cap) + "_" + std::to_string(i);
    out.set.add(name, name, point_at_chord(centers.col(cap), chord(rng), rng));
  }
  return out;
}

EmbeddingSet synth_dataset(const SynthSpec& spec) { return synth_dataset_with_centers(spec).set; }

int synth_cluster_of(std::string_view label) {
  const auto underscore = label.rfind('_');
  if (underscore == std::string_view::npos || underscore == 0) return -1;
  const auto c = label.rfind('c', underscore - 1);
  if (c == std::string_view::npos) return -1;
  int cap = -1;
  const auto res = std::from_chars(label.data() + c + 1, label.data() + underscore, cap);
  if (res.ec != std::errc() || res.ptr != label.data() + underscore) return -1;
  return cap;
}

ImageTensor random_image(int side, std::uint64_t seed) {
  Rng rng = make_rng(seed, {0x696d67ULL});
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd values(3LL * side * side);
  for (auto& v : values) v = u(rng);
  return ImageTensor(side, std::move(values));
}

}  // namespace dodgep
