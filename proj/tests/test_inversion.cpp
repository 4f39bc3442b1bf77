#include <doctest.h>

#include <random>

#include "dodgep/inversion.hpp"
#include "dodgep/scenario.hpp"

using namespace dodgep;

namespace {

// Blanks the border pixels; idempotent after the first application.
ImageTensor blank_border(const ImageTensor& x) {
  Eigen::VectorXd v = x.values();
  const int m = x.side();
  for (int c = 0; c < 3; ++c) {
    for (int r = 0; r < m; ++r) {
      for (int col = 0; col < m; ++col) {
        if (r == 0 || col == 0 || r == m - 1 || col == m - 1) v[x.index(c, r, col)] = 0.0;
      }
    }
  }
  return ImageTensor(m, v);
}

ImageTensor planted_perturbation(const ImageTensor& x, double bound, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-bound, bound);
  Eigen::VectorXd v = x.values();
  for (auto& p : v) p = std::clamp(p + u(rng), -1.0, 1.0);
  return ImageTensor(x.side(), v);
}

}  // namespace

TEST_CASE("crop stabilization") {
  const auto x = random_image(6, 1);
  const auto id = crop_stabilize(x, identity_cropper());
  CHECK(id.applications == 1);
  CHECK(id.image == x);

  const auto once = crop_stabilize(x, blank_border);
  CHECK(once.applications == 2);
  CHECK(once.image == blank_border(x));

  int calls = 0;
  const Cropper flip = [&](const ImageTensor& img) {
    ++calls;
    return ImageTensor(img.side(), -img.values());
  };
  CHECK_THROWS_AS(crop_stabilize(x, flip, 10), CropperDivergenceError);
  CHECK(calls == 10);
}

TEST_CASE("target already reached") {
  const ToyMapper m(MapperShape{8, 32, 16}, 2);
  const auto src = random_image(8, 3);
  const auto r = generate_attack_face(src, m.forward(src), m, identity_cropper(), InversionConfig{});
  CHECK(r.final_distance <= 1e-6);
  CHECK(r.max_deviation <= 0.1);
}

TEST_CASE("zero epsilon returns the cropped source") {
  const ToyMapper m(MapperShape{8, 32, 16}, 2);
  const auto src = random_image(8, 3);
  InversionConfig cfg;
  cfg.epsilon = 0.0;
  cfg.iterations = 50;
  const auto r = generate_attack_face(src, m.forward(random_image(8, 4)), m, identity_cropper(), cfg);
  CHECK(r.attack == src);
  CHECK(r.max_iterate_deviation == 0.0);
}

TEST_CASE("reachable target is reached and the ball is respected") {
  const ToyMapper m(MapperShape{}, 0);
  const double th = calibrate_mapper_threshold(m, 0.001, 1100, 11).threshold.value();
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto src = random_image(16, 100 + seed);
    const auto target = m.forward(planted_perturbation(src, 0.05, seed));
    InversionConfig cfg;
    const auto r = generate_attack_face(src, target, m, identity_cropper(), cfg);
    CHECK(r.final_distance <= th);
    CHECK(r.final_distance <= r.initial_distance);
    CHECK(r.max_iterate_deviation <= cfg.epsilon);
    CHECK((r.attack.values() - src.values()).cwiseAbs().maxCoeff() <= cfg.epsilon);
    CHECK(r.attack.values().cwiseAbs().maxCoeff() <= 1.0);
    CHECK(r.loss_trace.size() == static_cast<std::size_t>(cfg.iterations));
    CHECK(r.final_distance <= r.best_loss_trace.back());
  }
}

TEST_CASE("crop is applied before the perturbation") {
  const ToyMapper m(MapperShape{8, 32, 16}, 2);
  const auto src = random_image(8, 9);
  InversionConfig cfg;
  cfg.iterations = 30;
  const auto r = generate_attack_face(src, m.forward(random_image(8, 10)), m, blank_border, cfg);
  CHECK(r.crop_applications == 2);
  CHECK((r.attack.values() - blank_border(src).values()).cwiseAbs().maxCoeff() <= cfg.epsilon);
}

TEST_CASE("random start and determinism") {
  const ToyMapper m(MapperShape{8, 32, 16}, 2);
  const auto src = random_image(8, 9);
  const auto t = m.forward(random_image(8, 12));
  InversionConfig cfg;
  cfg.iterations = 40;
  cfg.random_start = true;
  cfg.seed = 5;
  const auto a = generate_attack_face(src, t, m, identity_cropper(), cfg);
  const auto b = generate_attack_face(src, t, m, identity_cropper(), cfg);
  CHECK(a.attack == b.attack);
  CHECK(a.max_iterate_deviation <= cfg.epsilon);
}

TEST_CASE("inversion input validation") {
  const ToyMapper m(MapperShape{8, 32, 16}, 2);
  const auto src = random_image(8, 9);
  CHECK_THROWS_AS(generate_attack_face(src, EmbeddingVector::Ones(16), m, identity_cropper(), {}),
                  NumericError);
  InversionConfig bad;
  bad.epsilon = -0.1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = {};
  bad.step_size = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}
