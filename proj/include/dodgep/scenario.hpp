#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "dodgep/embedding.hpp"
#include "dodgep/inversion.hpp"
#include "dodgep/io.hpp"
#include "dodgep/mapper.hpp"
#include "dodgep/report.hpp"
#include "dodgep/search.hpp"

namespace dodgep {

// ------------------------------------------------------------ synthetic data

/// Unit vectors grouped in spherical caps. Record i belongs to cap
/// i % clusters and lies within chordal distance `radius` of its center.
struct SynthSpec {
  int clusters = 1;
  double radius = 0.3;
  int count = 10;
  int dimension = 64;
  std::uint64_t seed = 0;
  /// Minimum chordal distance between cap centers.
  double min_center_separation = 0.0;
  SetRole role = SetRole::population;
  /// Prefix for ids and labels ("<prefix>c<cap>_<index>").
  std::string prefix = "s";

  void validate() const;
};

struct SynthDataset {
  EmbeddingSet set;
  /// p x clusters, one unit center per column.
  Eigen::MatrixXd centers;
};

/// Deterministic per seed. Throws ConfigError when the geometry is
/// infeasible (radius >= 2, unreachable center separation, ...).
SynthDataset synth_dataset_with_centers(const SynthSpec& spec);
EmbeddingSet synth_dataset(const SynthSpec& spec);

/// Cap index encoded in a synthetic label, or -1.
int synth_cluster_of(std::string_view label);

// ---------------------------------------------------------------- calibration

struct Calibration {
  Threshold threshold{1.0};
  std::size_t mismatch_pairs = 0;
  std::size_t allowed_false_accepts = 0;
  /// Fraction of mismatch pairs accepted at the threshold (<= far).
  double achieved_far = 0.0;
  /// Fraction of match pairs accepted, when match pairs exist.
  std::optional<double> true_accept_rate;
};

/// Threshold at a target false acceptance rate. With N mismatch distances
/// and q = floor(far * N): the q-th smallest distance (stepping down past
/// ties so at most q pairs are accepted), or the smallest distance scaled
/// by (1 - 1e-9) when q = 0.
Calibration calibrate_threshold(const std::vector<double>& mismatch_distances, double far,
                                const std::vector<double>& match_distances = {});
Calibration calibrate_threshold(const std::vector<Pair>& pairs, const EmbeddingSet& embeddings,
                                double far);

/// Calibrates the verification threshold of a toy mapper on random images:
/// mismatch pairs are independent uniform images, match pairs an image and
/// a copy with uniform noise of amplitude `same_identity_noise`.
Calibration calibrate_mapper_threshold(const ToyMapper& mapper, double far, int pairs,
                                       std::uint64_t seed, double same_identity_noise = 0.05);

/// Uniform random image in [-1, 1].
ImageTensor random_image(int side, std::uint64_t seed);

// ------------------------------------------------------------------ scenarios

enum class ScenarioKind {
  null_attack,
  single_dodging,
  multi_dodging,
  single_impersonation,
  multi_impersonation,
  single_impersonation_single_dodging,
  single_impersonation_multi_dodging,
  multi_impersonation_single_dodging,
  multi_impersonation_multi_dodging,
};

std::string_view to_string(ScenarioKind kind);
ScenarioKind parse_scenario_kind(std::string_view text);
/// Taxonomy cell for MatchSet size k and DodgeSet size l.
ScenarioKind classify_scenario(int match_size, int dodge_size);

struct DatasetSpec {
  /// Pool from which disjoint match/dodge/unseen sets are drawn each
  /// repetition. When absent a synthetic pool is generated from `synth`
  /// with a per-repetition seed.
  std::optional<EmbeddingSet> pool;
  SynthSpec synth;
  /// Fixed sets used as-is in every repetition (override the pool).
  std::optional<EmbeddingSet> match;
  std::optional<EmbeddingSet> dodge;
  std::optional<EmbeddingSet> unseen;
  /// Add the source face's own embedding to the dodge set (requires the
  /// mapper).
  bool attacker_in_dodge = false;
  /// Free-text provenance recorded in reports.
  std::string label = "synthetic";
};

struct ScenarioConfig {
  /// Derived from (match_size, dodge_size) when absent.
  std::optional<ScenarioKind> kind;
  int match_size = 10;
  int dodge_size = 0;
  int unseen_size = 0;
  int repetitions = 1;
  std::uint64_t seed = 0;
  SearchConfig search;
  /// Verification threshold used to measure coverage of every set.
  Threshold verification{1.055};
  bool phase2 = false;
  InversionConfig inversion;
  MapperShape mapper_shape;
  std::uint64_t mapper_seed = 0;
  /// Random source face from the scenario seed when absent.
  std::optional<ImageTensor> source;
  DatasetSpec data;

  ScenarioKind effective_kind() const;
  void validate() const;
};

/// Search settings as written into config echoes.
nlohmann::ordered_json search_config_to_json(const SearchConfig& config);

/// Config echo written into reports; also accepted by scenario_from_json.
nlohmann::ordered_json scenario_to_json(const ScenarioConfig& config);
/// Reads a versioned config document ({"fmt":"cfg","v":1,...}); missing
/// keys keep the values already in `base`.
ScenarioConfig scenario_from_json(const nlohmann::json& doc, ScenarioConfig base = {});

/// Runs Phase 1 (and optionally Phase 2) over `repetitions` random draws
/// and reports per-repetition and mean coverage of each set.
RunReport run_scenario(const ScenarioConfig& config);

/// run_scenario with an unseen identity pool of `unseen_size` evaluated
/// alongside the match set.
RunReport run_unseen_generalization(int match_size, int unseen_size, ScenarioConfig config);

enum class SweepAxis { th2_percent, gamma, cluster_count, match_size };

std::string_view to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view text);

struct SweepSpec {
  SweepAxis axis = SweepAxis::gamma;
  /// For th2_percent the values are absolute th2 thresholds.
  std::vector<double> values;
  int repetitions = 1;

  void validate() const;
};

/// One scenario per axis value with shared seeds; fills the report table
/// with mean coverage per value and phase.
RunReport run_sweep(const SweepSpec& spec, const ScenarioConfig& base);

}  // namespace dodgep
