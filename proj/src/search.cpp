#include "dodgep/search.hpp"

#include "dodgep/rng.hpp"

namespace dodgep {

namespace {

constexpr std::uint64_t kClusteringStream = 0x636c7573ULL;
constexpr std::uint64_t kEsStream = 0x65735f73ULL;

EsConfig cluster_es_config(const SearchConfig& config, std::size_t cluster) {
  EsConfig es = config.es;
  es.seed = derive_seed(config.seed, {kEsStream, cluster});
  es.sphere_projection = true;
  return es;
}

EmbeddingVector start_direction(const Eigen::VectorXd& centroid, const Eigen::MatrixXd& members) {
  // Antipodal members can cancel out; fall back to the first member.
  if (centroid.norm() > 1e-12) return l2_normalize(centroid);
  return l2_normalize(members.col(0));
}

void run_cluster(SearchResult& out, std::size_t slot, const Eigen::MatrixXd& members,
                 const Eigen::MatrixXd& dodge, const EmbeddingVector& start,
                 const SearchConfig& config) {
  const DodgePersonationObjective objective(members, dodge, config.fitness);
  auto es = minimize([&](const Eigen::VectorXd& x) { return objective(x); }, start,
                     cluster_es_config(config, slot));
  out.best_embeddings[slot] = std::move(es.best);
  out.best_fitness[slot] = es.best_fitness;
  out.traces[slot] = std::move(es.trace);
}

void attach_coverage(SearchResult& out, const EmbeddingSet& match, const EmbeddingSet& dodge,
                     const SearchConfig& config) {
  if (!match.empty()) {
    out.match_coverage = coverage(out.best_embeddings, match, config.fitness.th1);
  }
  if (!dodge.empty()) {
    out.dodge_coverage = coverage(out.best_embeddings, dodge, config.fitness.th2);
  }
}

}  // namespace

void SearchConfig::validate() const {
  if (clusters < 1) throw ConfigError("number of clusters must be at least 1");
  fitness.validate();
  es.validate();
}

SearchResult search(const EmbeddingSet& match, const EmbeddingSet& dodge,
                    const SearchConfig& config) {
  config.validate();
  if (match.empty()) {
    throw ConfigError("match set is empty: this is a pure-dodging scenario, use dodge_search");
  }
  if (match.dimension() != dodge.dimension()) {
    throw DimensionError("match set dimension " + std::to_string(match.dimension()) +
                         " differs from dodge set dimension " + std::to_string(dodge.dimension()));
  }
  if (!config.allow_shared_labels) require_disjoint(match, dodge);

  const Eigen::MatrixXd points = match.matrix();
  const Eigen::MatrixXd dodge_points = dodge.matrix();
  const Clustering clustering =
      kmeans(points, config.clusters, derive_seed(config.seed, {kClusteringStream}));

  SearchResult out;
  out.requested_clusters = config.clusters;
  out.assignments = clustering.assignments;
  const auto k = static_cast<std::size_t>(clustering.cluster_count());
  out.best_embeddings.resize(k);
  out.best_fitness.resize(k);
  out.traces.resize(k);

  for (std::size_t c = 0; c < k; ++c) {
    const auto idx = clustering.members(static_cast<int>(c));
    Eigen::MatrixXd members(points.rows(), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t j = 0; j < idx.size(); ++j) {
      members.col(static_cast<Eigen::Index>(j)) = points.col(static_cast<Eigen::Index>(idx[j]));
    }
    const auto start = start_direction(clustering.centroids.col(static_cast<Eigen::Index>(c)), members);
    run_cluster(out, c, members, dodge_points, start, config);
  }
  attach_coverage(out, match, dodge, config);
  return out;
}

SearchResult dodge_search(const EmbeddingSet& dodge, const SearchConfig& config,
                          const std::optional<EmbeddingVector>& start) {
  config.validate();
  if (dodge.empty() && !start) {
    throw ConfigError("dodge-only search needs a dodge set or a start point");
  }
  const Eigen::MatrixXd dodge_points = dodge.matrix();
  EmbeddingVector from;
  if (start) {
    if (start->size() != dodge.dimension()) {
      throw DimensionError("start point dimension does not match the dodge set");
    }
    from = l2_normalize(*start);
  } else {
    from = start_direction(dodge_points.rowwise().mean(), dodge_points);
  }

  SearchResult out;
  out.requested_clusters = 1;
  out.best_embeddings.resize(1);
  out.best_fitness.resize(1);
  out.traces.resize(1);
  run_cluster(out, 0, Eigen::MatrixXd(dodge.dimension(), 0), dodge_points, from, config);
  attach_coverage(out, EmbeddingSet(SetRole::match, dodge.dimension()), dodge, config);
  return out;
}

}  // namespace dodgep
