#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "dodgep/embedding.hpp"
#include "dodgep/fitness.hpp"
#include "dodgep/kmeans.hpp"
#include "dodgep/lmmaes.hpp"

namespace dodgep {

struct SearchConfig {
  int clusters = 1;
  FitnessParams fitness;
  /// ES settings; `seed` and `sphere_projection` are overridden per cluster.
  EsConfig es;
  std::uint64_t seed = 0;
  /// Skip the match/dodge identity-label disjointness check.
  bool allow_shared_labels = false;

  void validate() const;
};

struct SearchResult {
  int requested_clusters = 0;
  /// One unit vector per non-empty cluster, in cluster order.
  std::vector<EmbeddingVector> best_embeddings;
  std::vector<double> best_fitness;
  std::vector<EsTrace> traces;
  /// Cluster index per match record (empty for dodge-only searches).
  std::vector<int> assignments;
  /// Coverage of the match set under th1 and of the dodge set under th2.
  std::optional<CoverageResult> match_coverage;
  std::optional<CoverageResult> dodge_coverage;

  int effective_clusters() const noexcept { return static_cast<int>(best_embeddings.size()); }
};

/// Clusters `match` with k-means and runs one sphere-constrained LM-MA-ES
/// per cluster against the whole dodge set. Throws ConfigError for an
/// empty match set (use dodge_search) or shared identity labels.
SearchResult search(const EmbeddingSet& match, const EmbeddingSet& dodge,
                    const SearchConfig& config);

/// Search with an empty match set: one ES run minimizing the fitness with
/// only the dodge term, started from `start` (normalized), or from the
/// normalized dodge-set centroid when absent.
SearchResult dodge_search(const EmbeddingSet& dodge, const SearchConfig& config,
                          const std::optional<EmbeddingVector>& start = std::nullopt);

}  // namespace dodgep
