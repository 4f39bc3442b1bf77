#include <doctest.h>

#include <random>

#include "dodgep/mapper.hpp"
#include "dodgep/scenario.hpp"

using namespace dodgep;

namespace {

// Image with values in [-0.9, 0.9] so finite-difference probes stay valid.
ImageTensor inner_image(int side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  Eigen::VectorXd v(3 * side * side);
  for (auto& x : v) x = u(rng);
  return ImageTensor(side, v);
}

double loss(const ToyMapper& m, const Eigen::VectorXd& pixels, const EmbeddingVector& target) {
  return (m.forward_raw(pixels) - target).norm();
}

}  // namespace

TEST_CASE("image tensor layout and validation") {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(12);
  v[ImageTensor(2, v).index(2, 1, 0)] = 0.5;
  const ImageTensor img(2, v);
  CHECK(img(2, 1, 0) == 0.5);
  CHECK(img.index(2, 1, 0) == 10);
  CHECK_THROWS_AS(ImageTensor(2, Eigen::VectorXd::Zero(11)), ConfigError);
  CHECK_THROWS_AS(ImageTensor(2, Eigen::VectorXd::Constant(12, 1.5)), NumericError);
  CHECK_THROWS_AS(ImageTensor(2, Eigen::VectorXd::Constant(12, std::nan(""))), NumericError);
  CHECK(ImageTensor::constant(3, -1.0).values().minCoeff() == -1.0);
}

TEST_CASE("forward is unit-norm and deterministic") {
  const ToyMapper m(MapperShape{}, 7);
  const ToyMapper again(MapperShape{}, 7);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto x = random_image(16, s);
    const auto e = m.forward(x);
    CHECK(e.size() == 64);
    CHECK(std::abs(e.norm() - 1.0) <= 1e-9);
    CHECK(e == m.forward(x));
    CHECK(e == again.forward(x));
  }
  CHECK(ToyMapper(MapperShape{}, 8).forward(random_image(16, 0)) != m.forward(random_image(16, 0)));
}

TEST_CASE("one-pixel change moves the embedding very little") {
  const ToyMapper m(MapperShape{}, 0);
  const auto x = inner_image(16, 3);
  Eigen::VectorXd v = x.values();
  v[100] += 1e-6;
  CHECK((m.forward(ImageTensor(16, v)) - m.forward(x)).norm() <= 1e-3);
}

TEST_CASE("gradient vanishes at the target") {
  const ToyMapper m(MapperShape{}, 1);
  const auto x = random_image(16, 2);
  CHECK(m.input_gradient(x, m.forward(x)).isZero(0.0));
}

TEST_CASE("analytic gradient matches central differences") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const ToyMapper m(MapperShape{}, seed);
    const auto x = inner_image(16, seed + 10);
    const auto target = m.forward(random_image(16, seed + 20));
    const Eigen::VectorXd g = m.input_gradient(x, target);
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Eigen::Index> pick(0, x.size() - 1);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
      const Eigen::Index i = pick(rng);
      Eigen::VectorXd plus = x.values(), minus = x.values();
      plus[i] += 1e-4;
      minus[i] -= 1e-4;
      const double fd = (loss(m, plus, target) - loss(m, minus, target)) / 2e-4;
      const double denom = std::max({std::abs(fd), std::abs(g[i]), 1e-8});
      worst = std::max(worst, std::abs(fd - g[i]) / denom);
    }
    CHECK(worst <= 1e-4);
  }
}

TEST_CASE("loss_and_gradient agrees with input_gradient") {
  const ToyMapper m(MapperShape{8, 32, 16}, 4);
  const auto x = inner_image(8, 1);
  const auto t = m.forward(inner_image(8, 2));
  Eigen::VectorXd g;
  const double l = m.loss_and_gradient(x.values(), t, &g);
  CHECK(l == doctest::Approx((m.forward(x) - t).norm()).epsilon(1e-14));
  CHECK((g - m.input_gradient(x, t)).norm() <= 1e-14);
}

TEST_CASE("scaling the output layer changes nothing") {
  const ToyMapper m(MapperShape{8, 32, 16}, 4);
  MapperWeights w = m.weights();
  w.w2 *= 2.0;
  w.b2 *= 2.0;
  const ToyMapper scaled(m.shape(), w);
  const auto x = inner_image(8, 5);
  const auto t = m.forward(inner_image(8, 6));
  CHECK((scaled.forward(x) - m.forward(x)).norm() <= 1e-14);
  CHECK((scaled.input_gradient(x, t) - m.input_gradient(x, t)).norm() <= 1e-12);
}

TEST_CASE("shape mismatches are dimension errors") {
  const ToyMapper m(MapperShape{8, 32, 16}, 4);
  CHECK_THROWS_AS(m.forward(random_image(16, 0)), DimensionError);
  CHECK_THROWS_AS(m.input_gradient(random_image(8, 0), EmbeddingVector::Ones(15).normalized()),
                  DimensionError);
  MapperWeights w = m.weights();
  w.b1.resize(3);
  CHECK_THROWS_AS(ToyMapper(m.shape(), w), DimensionError);
}
