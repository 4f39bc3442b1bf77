#include "dodgep/inversion.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "dodgep/rng.hpp"

namespace dodgep {

Cropper identity_cropper() {
  return [](const ImageTensor& x) { return x; };
}

CropResult crop_stabilize(const ImageTensor& x, const Cropper& cropper, int max_applications) {
  if (max_applications < 1) throw ConfigError("max_applications must be at least 1");
  ImageTensor current = x;
  for (int applied = 1; applied <= max_applications; ++applied) {
    ImageTensor next = cropper(current);
    if (next == current) return {std::move(current), applied};
    current = std::move(next);
  }
  throw CropperDivergenceError("cropper reached no fixed point within " +
                               std::to_string(max_applications) + " applications");
}

void InversionConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 2.0)) throw ConfigError("epsilon must lie in [0, 2]");
  if (iterations < 0) throw ConfigError("iterations must be non-negative");
  if (!(step_size > 0.0)) throw ConfigError("Adam step size must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0, 1)");
  }
  if (!(adam_epsilon > 0.0)) throw ConfigError("Adam epsilon must be positive");
  if (max_crop_applications < 1) throw ConfigError("max_crop_applications must be at least 1");
}

namespace {

// Per-pixel bounds of the feasible box. Rounding in x0 +/- eps may land one
// ulp outside the ball, so the bounds are pulled back until
// |bound - x0| <= eps holds in floating point.
void feasible_box(const Eigen::VectorXd& x0, double eps, Eigen::VectorXd& lo, Eigen::VectorXd& hi) {
  lo.resize(x0.size());
  hi.resize(x0.size());
  for (Eigen::Index i = 0; i < x0.size(); ++i) {
    double l = std::max(x0(i) - eps, -1.0);
    double h = std::min(x0(i) + eps, 1.0);
    while (x0(i) - l > eps) l = std::nextafter(l, x0(i));
    while (h - x0(i) > eps) h = std::nextafter(h, x0(i));
    lo(i) = l;
    hi(i) = h;
  }
}

}  // namespace

InversionResult generate_attack_face(const ImageTensor& source, const EmbeddingVector& target,
                                     const ToyMapper& mapper, const Cropper& cropper,
                                     const InversionConfig& config) {
  config.validate();
  if (!target.allFinite() || std::abs(target.norm() - 1.0) > 1e-6) {
    throw NumericError("inversion target must be a unit vector");
  }
  CropResult cropped = crop_stabilize(source, cropper, config.max_crop_applications);
  if (cropped.image.side() != mapper.shape().side) {
    throw DimensionError("cropped image side " + std::to_string(cropped.image.side()) +
                         " does not match the mapper input side " +
                         std::to_string(mapper.shape().side));
  }
  const Eigen::VectorXd& x0 = cropped.image.values();
  Eigen::VectorXd lo, hi;
  feasible_box(x0, config.epsilon, lo, hi);

  Eigen::VectorXd x = x0;
  if (config.random_start) {
    Rng rng = make_rng(config.seed, {0x696e76ULL});
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = lo(i) + u(rng) * (hi(i) - lo(i));
    x = x.cwiseMax(lo).cwiseMin(hi);
  }

  InversionResult result{cropped.image, EmbeddingVector(), 0.0, 0.0, {}, {}, 0.0, 0.0,
                         cropped.applications};
  result.initial_distance = mapper.loss_and_gradient(x0, target, nullptr);

  Eigen::VectorXd m = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd v = Eigen::VectorXd::Zero(x.size());
  Eigen::VectorXd grad;
  Eigen::VectorXd best = x;
  double best_loss = std::numeric_limits<double>::infinity();
  double b1_power = 1.0;
  double b2_power = 1.0;
  result.loss_trace.reserve(static_cast<std::size_t>(config.iterations));
  result.best_loss_trace.reserve(static_cast<std::size_t>(config.iterations));

  auto consider = [&](double loss) {
    if (loss < best_loss) {
      best_loss = loss;
      best = x;
    }
    result.max_iterate_deviation = std::max(result.max_iterate_deviation, (x - x0).cwiseAbs().maxCoeff());
  };

  for (int it = 0; it < config.iterations; ++it) {
    const double loss = mapper.loss_and_gradient(x, target, &grad);
    consider(loss);
    result.loss_trace.push_back(loss);
    result.best_loss_trace.push_back(best_loss);

    b1_power *= config.beta1;
    b2_power *= config.beta2;
    m = config.beta1 * m + (1.0 - config.beta1) * grad;
    v = config.beta2 * v + (1.0 - config.beta2) * grad.cwiseAbs2();
    const Eigen::ArrayXd m_hat = m.array() / (1.0 - b1_power);
    const Eigen::ArrayXd v_hat = v.array() / (1.0 - b2_power);
    x.array() -= config.step_size * m_hat / (v_hat.sqrt() + config.adam_epsilon);
    x = x.cwiseMax(lo).cwiseMin(hi);
  }
  consider(mapper.loss_and_gradient(x, target, nullptr));

  result.attack = ImageTensor(cropped.image.side(), best);
  result.embedding = mapper.forward(result.attack);
  result.final_distance = best_loss;
  result.max_deviation = (best - x0).cwiseAbs().maxCoeff();
  return result;
}

}  // namespace dodgep
