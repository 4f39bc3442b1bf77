#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dodgep/error.hpp"

namespace dodgep {

/// Point in the embedding space. Unit norm after l2_normalize.
using EmbeddingVector = Eigen::VectorXd;

inline constexpr int kDefaultDimension = 512;

/// Verification threshold on Euclidean distance between unit embeddings.
class Threshold {
 public:
  explicit Threshold(double value);

  double value() const noexcept { return value_; }

  friend bool operator==(const Threshold&, const Threshold&) = default;

 private:
  double value_;
};

enum class SetRole { match, dodge, unseen, population };

std::string_view to_string(SetRole role);
SetRole parse_role(std::string_view text);

struct EmbeddingRecord {
  std::string id;
  /// Stand-in for the identity of the face the vector came from.
  std::string label;
  EmbeddingVector vector;

  friend bool operator==(const EmbeddingRecord&, const EmbeddingRecord&) = default;
};

/// Ordered collection of records sharing one dimension. Ids are unique.
class EmbeddingSet {
 public:
  EmbeddingSet(SetRole role, int dimension);

  SetRole role() const noexcept { return role_; }
  int dimension() const noexcept { return dimension_; }
  std::size_t size() const noexcept { return records_.size(); }
  bool empty() const noexcept { return records_.empty(); }

  const std::vector<EmbeddingRecord>& records() const noexcept { return records_; }
  const EmbeddingRecord& operator[](std::size_t i) const { return records_[i]; }

  /// Appends a record; throws DimensionError / ConfigError on bad length,
  /// non-finite components or a duplicate id.
  void add(EmbeddingRecord record);
  void add(std::string id, std::string label, EmbeddingVector vector);

  /// Same records under another role.
  EmbeddingSet with_role(SetRole role) const;

  /// Records selected by index, in the given order.
  EmbeddingSet subset(std::span<const std::size_t> indices) const;

  /// p x n matrix, one column per record.
  Eigen::MatrixXd matrix() const;

  std::vector<EmbeddingVector> vectors() const;

  friend bool operator==(const EmbeddingSet&, const EmbeddingSet&) = default;

 private:
  SetRole role_;
  int dimension_;
  std::vector<EmbeddingRecord> records_;
};

/// Returns v / ||v||. Throws NumericError for a zero or non-finite input.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> l2_normalize(
    const Eigen::MatrixBase<Derived>& v) {
  if (!v.allFinite()) throw NumericError("l2_normalize: non-finite component");
  const auto norm = v.norm();
  if (!(norm > 0)) throw NumericError("l2_normalize: zero vector has no direction");
  return v / norm;
}

template <typename A, typename B>
typename A::Scalar distance(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b) {
  if (a.size() != b.size()) {
    throw DimensionError("distance: dimension " + std::to_string(a.size()) + " vs " +
                         std::to_string(b.size()));
  }
  return (a - b).norm();
}

/// a impersonates b under th (distance <= th); otherwise a dodges b.
template <typename A, typename B>
bool matches(const Eigen::MatrixBase<A>& a, const Eigen::MatrixBase<B>& b, Threshold th) {
  return distance(a, b) <= th.value();
}

struct CoverageResult {
  double percentage = 0.0;
  /// For each target record, the lowest attack index that matched it.
  std::vector<std::optional<std::size_t>> matched_by;

  std::size_t matched_count() const;
};

/// Percentage of targets matched by at least one attack vector.
/// Throws ConfigError when targets is empty.
CoverageResult coverage(std::span<const EmbeddingVector> attack, const EmbeddingSet& targets,
                        Threshold th, int threads = 1);

/// Throws ConfigError when the two sets share an identity label.
void require_disjoint(const EmbeddingSet& a, const EmbeddingSet& b);

}  // namespace dodgep
