#pragma once

#include <Eigen/Dense>

#include <cstdint>

#include "dodgep/embedding.hpp"

namespace dodgep {

/// 3 x m x m image with values in [-1, +1], stored channel-major then
/// row-major.
class ImageTensor {
 public:
  static constexpr int kChannels = 3;

  /// Throws ConfigError on a size mismatch and NumericError on values
  /// outside [-1, +1] or non-finite values.
  ImageTensor(int side, Eigen::VectorXd values);

  static ImageTensor constant(int side, double value);

  int side() const noexcept { return side_; }
  Eigen::Index size() const noexcept { return values_.size(); }
  const Eigen::VectorXd& values() const noexcept { return values_; }

  double operator()(int channel, int row, int col) const {
    return values_(index(channel, row, col));
  }
  Eigen::Index index(int channel, int row, int col) const {
    return (static_cast<Eigen::Index>(channel) * side_ + row) * side_ + col;
  }

  friend bool operator==(const ImageTensor& a, const ImageTensor& b) {
    return a.side_ == b.side_ && a.values_ == b.values_;
  }

 private:
  int side_;
  Eigen::VectorXd values_;
};

struct MapperShape {
  int side = 16;
  int hidden = 256;
  int dimension = 64;
};

struct MapperWeights {
  Eigen::MatrixXd w1;  // hidden x 3*side^2
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // dimension x hidden
  Eigen::VectorXd b2;
};

/// Fixed random two-layer network image -> unit embedding:
/// normalize(W2 tanh(W1 x + b1) + b2).
class ToyMapper {
 public:
  /// Weights drawn from N(0, 1/fan_in), biases from N(0, 0.01).
  ToyMapper(MapperShape shape, std::uint64_t seed);
  ToyMapper(MapperShape shape, MapperWeights weights, std::uint64_t seed = 0);

  const MapperShape& shape() const noexcept { return shape_; }
  const MapperWeights& weights() const noexcept { return weights_; }
  std::uint64_t seed() const noexcept { return seed_; }
  int input_size() const noexcept { return 3 * shape_.side * shape_.side; }

  EmbeddingVector forward(const ImageTensor& x) const;

  /// Same as forward on a raw pixel vector, without the range check.
  EmbeddingVector forward_raw(const Eigen::Ref<const Eigen::VectorXd>& pixels) const;

  /// d/dx ||forward(x) - target||, through the normalization layer. Zero
  /// where the distance is exactly 0.
  Eigen::VectorXd input_gradient(const ImageTensor& x, const EmbeddingVector& target) const;

  /// Distance and gradient from a single forward pass.
  double loss_and_gradient(const Eigen::Ref<const Eigen::VectorXd>& pixels,
                           const EmbeddingVector& target, Eigen::VectorXd* gradient) const;

 private:
  void check_input(Eigen::Index size) const;

  MapperShape shape_;
  MapperWeights weights_;
  std::uint64_t seed_;
};

}  // namespace dodgep
