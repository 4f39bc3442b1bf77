#include "dodgep/mapper.hpp"

#include <random>

#include "dodgep/rng.hpp"

namespace dodgep {

ImageTensor::ImageTensor(int side, Eigen::VectorXd values) : side_(side), values_(std::move(values)) {
  if (side < 1) throw ConfigError("image side must be positive");
  const Eigen::Index expected = static_cast<Eigen::Index>(kChannels) * side * side;
  if (values_.size() != expected) {
    throw ConfigError("image of side " + std::to_string(side) + " needs " +
                      std::to_string(expected) + " values, got " + std::to_string(values_.size()));
  }
  if (!values_.allFinite()) throw NumericError("image has a non-finite value");
  if (values_.size() > 0 && (values_.minCoeff() < -1.0 || values_.maxCoeff() > 1.0)) {
    throw NumericError("image values must lie in [-1, +1]");
  }
}

ImageTensor ImageTensor::constant(int side, double value) {
  return ImageTensor(side, Eigen::VectorXd::Constant(kChannels * side * side, value));
}

ToyMapper::ToyMapper(MapperShape shape, std::uint64_t seed) : shape_(shape), seed_(seed) {
  if (shape.side < 1 || shape.hidden < 1 || shape.dimension < 1) {
    throw ConfigError("mapper dimensions must be positive");
  }
  const int in = input_size();
  Rng rng = make_rng(seed, {0x6d6170ULL});
  auto draw = [&](Eigen::Index rows, Eigen::Index cols, double stddev) {
    std::normal_distribution<double> normal(0.0, stddev);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
    return m;
  };
  weights_.w1 = draw(shape.hidden, in, 1.0 / std::sqrt(static_cast<double>(in)));
  weights_.b1 = draw(shape.hidden, 1, 0.1);
  weights_.w2 = draw(shape.dimension, shape.hidden, 1.0 / std::sqrt(static_cast<double>(shape.hidden)));
  weights_.b2 = draw(shape.dimension, 1, 0.1);
}

ToyMapper::ToyMapper(MapperShape shape, MapperWeights weights, std::uint64_t seed)
    : shape_(shape), weights_(std::move(weights)), seed_(seed) {
  const int in = input_size();
  if (weights_.w1.rows() != shape.hidden || weights_.w1.cols() != in ||
      weights_.b1.size() != shape.hidden || weights_.w2.rows() != shape.dimension ||
      weights_.w2.cols() != shape.hidden || weights_.b2.size() != shape.dimension) {
    throw DimensionError("mapper weights do not match the declared shape");
  }
  if (!weights_.w1.allFinite() || !weights_.b1.allFinite() || !weights_.w2.allFinite() ||
      !weights_.b2.allFinite()) {
    throw NumericError("mapper weights contain a non-finite value");
  }
}

void ToyMapper::check_input(Eigen::Index size) const {
  if (size != input_size()) {
    throw DimensionError("mapper expects " + std::to_string(input_size()) + " pixels, got " +
                         std::to_string(size));
  }
}

EmbeddingVector ToyMapper::forward_raw(const Eigen::Ref<const Eigen::VectorXd>& pixels) const {
  check_input(pixels.size());
  const Eigen::VectorXd hidden = (weights_.w1 * pixels + weights_.b1).array().tanh().matrix();
  return l2_normalize(weights_.w2 * hidden + weights_.b2);
}

EmbeddingVector ToyMapper::forward(const ImageTensor& x) const {
  if (x.side() != shape_.side) {
    throw DimensionError("mapper expects side " + std::to_string(shape_.side) + ", got " +
                         std::to_string(x.side()));
  }
  return forward_raw(x.values());
}

double ToyMapper::loss_and_gradient(const Eigen::Ref<const Eigen::VectorXd>& pixels,
                                    const EmbeddingVector& target, Eigen::VectorXd* gradient) const {
  check_input(pixels.size());
  if (target.size() != shape_.dimension) {
    throw DimensionError("target has dimension " + std::to_string(target.size()) +
                         ", mapper outputs " + std::to_string(shape_.dimension));
  }
  const Eigen::VectorXd hidden = (weights_.w1 * pixels + weights_.b1).array().tanh().matrix();
  const Eigen::VectorXd out = weights_.w2 * hidden + weights_.b2;
  const double out_norm = out.norm();
  if (!(out_norm > 0.0)) throw NumericError("mapper output vanished");
  const Eigen::VectorXd e = out / out_norm;
  const Eigen::VectorXd diff = e - target;
  const double loss = diff.norm();
  if (gradient == nullptr) return loss;
  if (loss == 0.0) {
    *gradient = Eigen::VectorXd::Zero(pixels.size());
    return loss;
  }
  // dL/de = diff / L;  de/dout = (I - e e^T) / ||out||.
  const Eigen::VectorXd d_e = diff / loss;
  const Eigen::VectorXd d_out = (d_e - e * e.dot(d_e)) / out_norm;
  const Eigen::VectorXd d_pre =
      ((weights_.w2.transpose() * d_out).array() * (1.0 - hidden.array().square())).matrix();
  *gradient = weights_.w1.transpose() * d_pre;
  return loss;
}

Eigen::VectorXd ToyMapper::input_gradient(const ImageTensor& x, const EmbeddingVector& target) const {
  if (x.side() != shape_.side) throw DimensionError("image side does not match the mapper");
  Eigen::VectorXd g;
  loss_and_gradient(x.values(), target, &g);
  return g;
}

}  // namespace dodgep
