#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dodgep/embedding.hpp"

namespace dodgep {

/// One coverage measurement. `repetition` is the repetition index, or
/// "mean" for the average over repetitions.
struct MetricRow {
  std::string label;
  std::string repetition;
  int phase = 1;
  SetRole role = SetRole::match;
  double coverage = 0.0;
  std::size_t matched = 0;
  std::size_t total = 0;
};

/// Best-so-far fitness per generation of one cluster search.
struct ClusterHistory {
  std::string label;
  int repetition = 0;
  int cluster = 0;
  std::vector<double> best_fitness;
};

/// Phase 2 distance summary for one attack face.
struct InversionSummary {
  std::string label;
  int repetition = 0;
  int cluster = 0;
  double initial_distance = 0.0;
  double final_distance = 0.0;
  double max_deviation = 0.0;
};

/// Sweep table row: mean coverage for one axis value and phase.
struct SweepRow {
  std::string axis;
  double value = 0.0;
  std::optional<double> increase_percent;
  int phase = 1;
  std::optional<double> match_coverage;
  std::optional<double> dodge_coverage;
  std::optional<double> unseen_coverage;
};

struct RunReport {
  std::string kind;
  std::uint64_t seed = 0;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::string data_source;
  std::vector<std::string> notes;
  std::vector<MetricRow> metrics;
  std::vector<ClusterHistory> histories;
  std::vector<InversionSummary> inversions;
  std::vector<SweepRow> table;

  /// Mean-row coverage for (label, phase, role), if present.
  std::optional<double> mean_coverage(const std::string& label, int phase, SetRole role) const;
};

}  // namespace dodgep
