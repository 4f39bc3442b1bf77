#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "dodgep/mapper.hpp"

namespace dodgep {

/// Face detection / cropping stage applied before inversion.
using Cropper = std::function<ImageTensor(const ImageTensor&)>;

Cropper identity_cropper();

class CropperDivergenceError : public Error {
 public:
  using Error::Error;
};

struct CropResult {
  ImageTensor image;
  int applications = 0;
};

/// Applies `cropper` until its output equals its input. Throws
/// CropperDivergenceError if no fixed point appears within
/// `max_applications` applications.
CropResult crop_stabilize(const ImageTensor& x, const Cropper& cropper, int max_applications = 10);

struct InversionConfig {
  /// Max per-pixel change relative to the cropped source, in [0, 2].
  double epsilon = 0.1;
  int iterations = 1000;
  double step_size = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Start from a uniform random point of the feasible box instead of the source.
  bool random_start = false;
  std::uint64_t seed = 0;
  int max_crop_applications = 10;

  void validate() const;
};

struct InversionResult {
  ImageTensor attack;
  EmbeddingVector embedding;
  double initial_distance = 0.0;
  double final_distance = 0.0;
  /// Distance of the iterate evaluated at each iteration.
  std::vector<double> loss_trace;
  /// Best distance seen so far at each iteration.
  std::vector<double> best_loss_trace;
  /// Max over pixels of |attack - cropped source|.
  double max_deviation = 0.0;
  /// Max deviation over every iterate, not only the returned one.
  double max_iterate_deviation = 0.0;
  int crop_applications = 0;
};

/// Perturbs `source` with Adam steps on ||mapper(x) - target|| and
/// projects every iterate onto the L-infinity ball of radius epsilon
/// around the cropped source, intersected with [-1, +1]. Returns the
/// iterate with the lowest loss.
InversionResult generate_attack_face(const ImageTensor& source, const EmbeddingVector& target,
                                     const ToyMapper& mapper, const Cropper& cropper,
                                     const InversionConfig& config);

}  // namespace dodgep
