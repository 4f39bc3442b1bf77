#include "dodgep/embedding.hpp"

#include <algorithm>
#include <unordered_set>

#include "dodgep/parallel.hpp"

namespace dodgep {

Threshold::Threshold(double value) : value_(value) {
  if (!(value > 0.0 && value <= 2.0)) {
    throw ConfigError("threshold must lie in (0, 2], got " + std::to_string(value));
  }
}

std::string_view to_string(SetRole role) {
  switch (role) {
    case SetRole::match: return "match";
    case SetRole::dodge: return "dodge";
    case SetRole::unseen: return "unseen";
    case SetRole::population: return "population";
  }
  return "population";
}

SetRole parse_role(std::string_view text) {
  if (text == "match") return SetRole::match;
  if (text == "dodge") return SetRole::dodge;
  if (text == "unseen") return SetRole::unseen;
  if (text == "population") return SetRole::population;
  throw ConfigError("unknown set role '" + std::string(text) + "'");
}

EmbeddingSet::EmbeddingSet(SetRole role, int dimension) : role_(role), dimension_(dimension) {
  if (dimension < 1) throw ConfigError("embedding dimension must be positive");
}

void EmbeddingSet::add(EmbeddingRecord record) {
  if (record.vector.size() != dimension_) {
    throw DimensionError("record '" + record.id + "' has " +
                         std::to_string(record.vector.size()) + " components, expected " +
                         std::to_string(dimension_));
  }
  if (!record.vector.allFinite()) {
    throw NumericError("record '" + record.id + "' has a non-finite component");
  }
  const bool duplicate = std::any_of(records_.begin(), records_.end(),
                                     [&](const auto& r) { return r.id == record.id; });
  if (duplicate) throw ConfigError("duplicate record id '" + record.id + "'");
  records_.push_back(std::move(record));
}

void EmbeddingSet::add(std::string id, std::string label, EmbeddingVector vector) {
  add(EmbeddingRecord{std::move(id), std::move(label), std::move(vector)});
}

EmbeddingSet EmbeddingSet::with_role(SetRole role) const {
  EmbeddingSet out = *this;
  out.role_ = role;
  return out;
}

EmbeddingSet EmbeddingSet::subset(std::span<const std::size_t> indices) const {
  EmbeddingSet out(role_, dimension_);
  out.records_.reserve(indices.size());
  for (auto i : indices) out.records_.push_back(records_.at(i));
  return out;
}

Eigen::MatrixXd EmbeddingSet::matrix() const {
  Eigen::MatrixXd m(dimension_, static_cast<Eigen::Index>(records_.size()));
  for (std::size_t j = 0; j < records_.size(); ++j) m.col(static_cast<Eigen::Index>(j)) = records_[j].vector;
  return m;
}

std::vector<EmbeddingVector> EmbeddingSet::vectors() const {
  std::vector<EmbeddingVector> out;
  out.reserve(records_.size());
  for (const auto& r : records_) out.push_back(r.vector);
  return out;
}

std::size_t CoverageResult::matched_count() const {
  return static_cast<std::size_t>(
      std::count_if(matched_by.begin(), matched_by.end(), [](const auto& m) { return m.has_value(); }));
}

CoverageResult coverage(std::span<const EmbeddingVector> attack, const EmbeddingSet& targets,
                        Threshold th, int threads) {
  if (targets.empty()) throw ConfigError("coverage is undefined over an empty target set");
  for (const auto& a : attack) {
    if (a.size() != targets.dimension()) {
      throw DimensionError("coverage: attack vector of dimension " + std::to_string(a.size()) +
                           " against targets of dimension " + std::to_string(targets.dimension()));
    }
  }
  CoverageResult result;
  result.matched_by.resize(targets.size());
  parallel_for(targets.size(), threads, [&](std::size_t t) {
    const auto& target = targets[t].vector;
    for (std::size_t i = 0; i < attack.size(); ++i) {
      if (matches(attack[i], target, th)) {
        result.matched_by[t] = i;
        break;
      }
    }
  });
  result.percentage = 100.0 * static_cast<double>(result.matched_count()) /
                      static_cast<double>(targets.size());
  return result;
}

void require_disjoint(const EmbeddingSet& a, const EmbeddingSet& b) {
  std::unordered_set<std::string> labels;
  for (const auto& r : a.records()) labels.insert(r.label);
  for (const auto& r : b.records()) {
    if (labels.contains(r.label)) {
      throw ConfigError("identity '" + r.label + "' appears in both the " +
                        std::string(to_string(a.role())) + " and " +
                        std::string(to_string(b.role())) + " sets");
    }
  }
}

}  // namespace dodgep
