#include "dodgep/scenario.hpp"

#include <algorithm>
#include <iterator>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include "dodgep/parallel.hpp"
#include "dodgep/rng.hpp"

namespace dodgep {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

constexpr std::uint64_t kDrawStream = 0x64726177ULL;
constexpr std::uint64_t kPoolStream = 0x706f6f6cULL;
constexpr std::uint64_t kSourceStream = 0x73726365ULL;
constexpr std::uint64_t kInversionStream = 0x696e7672ULL;

struct KindInfo {
  ScenarioKind kind;
  std::string_view name;
};

constexpr KindInfo kKinds[] = {
    {ScenarioKind::null_attack, "null_attack"},
    {ScenarioKind::single_dodging, "single_dodging"},
    {ScenarioKind::multi_dodging, "multi_dodging"},
    {ScenarioKind::single_impersonation, "single_impersonation"},
    {ScenarioKind::multi_impersonation, "multi_impersonation"},
    {ScenarioKind::single_impersonation_single_dodging, "single_impersonation_single_dodging"},
    {ScenarioKind::single_impersonation_multi_dodging, "single_impersonation_multi_dodging"},
    {ScenarioKind::multi_impersonation_single_dodging, "multi_impersonation_single_dodging"},
    {ScenarioKind::multi_impersonation_multi_dodging, "multi_impersonation_multi_dodging"},
};

int total_dodge_size(const ScenarioConfig& c) {
  return c.dodge_size + (c.data.attacker_in_dodge ? 1 : 0);
}

struct DrawnSets {
  EmbeddingSet match;
  EmbeddingSet dodge;
  std::optional<EmbeddingSet> unseen;
};

DrawnSets draw_sets(const ScenarioConfig& config, std::uint64_t rep_seed) {
  const auto& data = config.data;
  const int fixed_match = data.match ? config.match_size : 0;
  const int fixed_dodge = data.dodge ? config.dodge_size : 0;
  const int fixed_unseen = data.unseen ? config.unseen_size : 0;
  const int needed = (config.match_size - fixed_match) + (config.dodge_size - fixed_dodge) +
                     (config.unseen_size - fixed_unseen);

  std::optional<EmbeddingSet> pool;
  std::vector<std::size_t> order;
  if (needed > 0) {
    if (data.pool) {
      pool = *data.pool;
    } else {
      SynthSpec spec = data.synth;
      spec.count = needed;
      spec.seed = derive_seed(rep_seed, {kPoolStream});
      pool = synth_dataset(spec);
    }
    if (pool->size() < static_cast<std::size_t>(needed)) {
      throw ConfigError("identity pool holds " + std::to_string(pool->size()) +
                        " records but the scenario needs " + std::to_string(needed));
    }
    order.resize(pool->size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(rep_seed, {kDrawStream});
    std::shuffle(order.begin(), order.end(), rng);
  }

  std::size_t cursor = 0;
  const int dim = data.match ? data.match->dimension() : pool ? pool->dimension() : data.synth.dimension;
  auto take = [&](const std::optional<EmbeddingSet>& fixed, int size, SetRole role) {
    if (fixed) return fixed->with_role(role);
    if (size == 0) return EmbeddingSet(role, pool ? pool->dimension() : dim);
    std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                                 order.begin() + static_cast<std::ptrdiff_t>(cursor) + size);
    cursor += static_cast<std::size_t>(size);
    return pool->subset(idx).with_role(role);
  };
  DrawnSets sets{take(data.match, config.match_size, SetRole::match),
                 take(data.dodge, config.dodge_size, SetRole::dodge), std::nullopt};
  if (config.unseen_size > 0) sets.unseen = take(data.unseen, config.unseen_size, SetRole::unseen);
  return sets;
}

void add_mean_rows(RunReport& report, const std::string& label, std::size_t first_row) {
  struct Acc {
    double coverage = 0.0;
    std::size_t matched = 0;
    std::size_t total = 0;
    int count = 0;
  };
  std::map<std::pair<int, int>, Acc> acc;
  for (std::size_t i = first_row; i < report.metrics.size(); ++i) {
    const auto& m = report.metrics[i];
    auto& a = acc[{m.phase, static_cast<int>(m.role)}];
    a.coverage += m.coverage;
    a.matched += m.matched;
    a.total += m.total;
    ++a.count;
  }
  for (const auto& [key, a] : acc) {
    report.metrics.push_back({label, "mean", key.first, static_cast<SetRole>(key.second),
                              a.coverage / a.count, a.matched, a.total});
  }
}

struct RepOutcome {
  std::vector<MetricRow> metrics;
  std::vector<ClusterHistory> histories;
  std::vector<InversionSummary> inversions;
  std::vector<std::string> notes;
};

void add_rows(RepOutcome& out, const std::string& label, int rep, int phase,
              const std::vector<EmbeddingVector>& attack, const DrawnSets& sets, Threshold th) {
  auto row = [&](const EmbeddingSet& set) {
    if (set.empty()) return;
    const auto cov = coverage(attack, set, th);
    out.metrics.push_back(
        {label, std::to_string(rep), phase, set.role(), cov.percentage, cov.matched_count(), set.size()});
  };
  row(sets.match);
  row(sets.dodge);
  if (sets.unseen) row(*sets.unseen);
}

RepOutcome run_repetition(const ScenarioConfig& config, const std::string& label, int rep,
                          const std::optional<ToyMapper>& mapper, int threads) {
  RepOutcome out;
  const std::uint64_t rep_seed = derive_seed(config.seed, {static_cast<std::uint64_t>(rep)});
  DrawnSets sets = draw_sets(config, rep_seed);

  std::optional<ImageTensor> source;
  if (mapper) {
    source = config.source ? *config.source
                           : random_image(config.mapper_shape.side,
                                          derive_seed(rep_seed, {kSourceStream}));
    if (mapper->shape().dimension != sets.dodge.dimension()) {
      throw ConfigError("mapper dimension " + std::to_string(mapper->shape().dimension) +
                        " differs from the embedding dimension " +
                        std::to_string(sets.dodge.dimension()));
    }
  }
  if (config.data.attacker_in_dodge) sets.dodge.add("attacker", "attacker", mapper->forward(*source));

  if (!config.search.allow_shared_labels) {
    require_disjoint(sets.match, sets.dodge);
    if (sets.unseen) require_disjoint(sets.match, *sets.unseen);
  }

  SearchConfig search_config = config.search;
  search_config.seed = rep_seed;
  search_config.es.threads = threads;
  SearchResult result;
  if (!sets.match.empty()) {
    result = search(sets.match, sets.dodge, search_config);
  } else {
    std::optional<EmbeddingVector> start;
    if (source) start = mapper->forward(*source);
    result = dodge_search(sets.dodge, search_config, start);
  }
  for (std::size_t c = 0; c < result.traces.size(); ++c) {
    out.histories.push_back({label, rep, static_cast<int>(c), result.traces[c].best_fitness});
  }
  if (result.effective_clusters() < result.requested_clusters) {
    out.notes.push_back(label + ": repetition " + std::to_string(rep) + " used " +
                        std::to_string(result.effective_clusters()) + " of " +
                        std::to_string(result.requested_clusters) + " requested clusters");
  }
  add_rows(out, label, rep, 1, result.best_embeddings, sets, config.verification);

  if (config.phase2) {
    std::vector<EmbeddingVector> faces;
    for (std::size_t c = 0; c < result.best_embeddings.size(); ++c) {
      InversionConfig inv = config.inversion;
      inv.seed = derive_seed(rep_seed, {kInversionStream, c});
      const auto attack = generate_attack_face(*source, result.best_embeddings[c], *mapper,
                                               identity_cropper(), inv);
      out.inversions.push_back({label, rep, static_cast<int>(c), attack.initial_distance,
                                attack.final_distance, attack.max_deviation});
      faces.push_back(attack.embedding);
    }
    add_rows(out, label, rep, 2, faces, sets, config.verification);
  }
  return out;
}

// Repetitions run concurrently with derived seeds; rows are appended in
// repetition order, so the report does not depend on the thread count.
void run_into(RunReport& report, const ScenarioConfig& config, const std::string& label) {
  const std::size_t first_row = report.metrics.size();
  if (config.effective_kind() == ScenarioKind::null_attack) {
    report.notes.push_back(label + ": null attack, any valid input is a solution; no search run");
    return;
  }
  std::optional<ToyMapper> mapper;
  if (config.phase2 || config.data.attacker_in_dodge) mapper.emplace(config.mapper_shape, config.mapper_seed);

  const int threads = std::max(config.search.es.threads, 1);
  const int rep_threads = std::min(threads, config.repetitions);
  const int inner_threads = rep_threads > 1 ? 1 : threads;
  std::vector<RepOutcome> outcomes(static_cast<std::size_t>(config.repetitions));
  parallel_for(outcomes.size(), rep_threads, [&](std::size_t rep) {
    outcomes[rep] = run_repetition(config, label, static_cast<int>(rep), mapper, inner_threads);
  });
  for (auto& o : outcomes) {
    std::move(o.metrics.begin(), o.metrics.end(), std::back_inserter(report.metrics));
    std::move(o.histories.begin(), o.histories.end(), std::back_inserter(report.histories));
    std::move(o.inversions.begin(), o.inversions.end(), std::back_inserter(report.inversions));
    std::move(o.notes.begin(), o.notes.end(), std::back_inserter(report.notes));
  }
  add_mean_rows(report, label, first_row);
}

template <typename T>
void maybe(const json& j, const char* key, T& target) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

void maybe_threshold(const json& j, const char* key, Threshold& target) {
  if (!j.contains(key)) return;
  double v = 0.0;
  maybe(j, key, v);
  target = Threshold(v);
}

}  // namespace

ordered_json search_config_to_json(const SearchConfig& s) {
  ordered_json j;
  j["clusters"] = s.clusters;
  j["th1"] = s.fitness.th1.value();
  j["th2"] = s.fitness.th2.value();
  j["alpha"] = s.fitness.alpha;
  j["beta"] = s.fitness.beta;
  j["gamma"] = s.fitness.gamma;
  j["population"] = s.es.population;
  j["generations"] = s.es.generations;
  j["sigma0"] = s.es.sigma0;
  j["memory_size"] = s.es.memory_size;
  j["reinject_best"] = s.es.reinject_best;
  j["allow_shared_labels"] = s.allow_shared_labels;
  return j;
}

std::string_view to_string(ScenarioKind kind) {
  for (const auto& k : kKinds) {
    if (k.kind == kind) return k.name;
  }
  return "null_attack";
}

ScenarioKind parse_scenario_kind(std::string_view text) {
  for (const auto& k : kKinds) {
    if (k.name == text) return k.kind;
  }
  throw ConfigError("unknown scenario kind '" + std::string(text) + "'");
}

ScenarioKind classify_scenario(int match_size, int dodge_size) {
  if (match_size < 0 || dodge_size < 0) throw ConfigError("set sizes must be non-negative");
  const int m = std::min(match_size, 2);
  const int d = std::min(dodge_size, 2);
  static constexpr ScenarioKind table[3][3] = {
      {ScenarioKind::null_attack, ScenarioKind::single_dodging, ScenarioKind::multi_dodging},
      {ScenarioKind::single_impersonation, ScenarioKind::single_impersonation_single_dodging,
       ScenarioKind::single_impersonation_multi_dodging},
      {ScenarioKind::multi_impersonation, ScenarioKind::multi_impersonation_single_dodging,
       ScenarioKind::multi_impersonation_multi_dodging},
  };
  return table[m][d];
}

ScenarioKind ScenarioConfig::effective_kind() const {
  return classify_scenario(match_size, total_dodge_size(*this));
}

void ScenarioConfig::validate() const {
  if (match_size < 0 || dodge_size < 0 || unseen_size < 0) {
    throw ConfigError("set sizes must be non-negative");
  }
  if (repetitions < 1) throw ConfigError("repetitions must be at least 1");
  const ScenarioKind derived = effective_kind();
  if (kind && *kind != derived) {
    throw ConfigError("scenario kind " + std::string(to_string(*kind)) + " is inconsistent with k=" +
                      std::to_string(match_size) + ", l=" + std::to_string(total_dodge_size(*this)) +
                      " (" + std::string(to_string(derived)) + ")");
  }
  auto check_fixed = [](const std::optional<EmbeddingSet>& set, int size, const char* name) {
    if (set && static_cast<int>(set->size()) != size) {
      throw ConfigError(std::string(name) + " set has " + std::to_string(set->size()) +
                        " records but the config says " + std::to_string(size));
    }
  };
  check_fixed(data.match, match_size, "match");
  check_fixed(data.dodge, dodge_size, "dodge");
  check_fixed(data.unseen, unseen_size, "unseen");
  search.validate();
  if (phase2) inversion.validate();
}

ordered_json scenario_to_json(const ScenarioConfig& c) {
  ordered_json j;
  j["fmt"] = "cfg";
  j["v"] = kFormatVersion;
  j["kind"] = std::string(to_string(c.effective_kind()));
  j["match_size"] = c.match_size;
  j["dodge_size"] = c.dodge_size;
  j["unseen_size"] = c.unseen_size;
  j["repetitions"] = c.repetitions;
  j["seed"] = c.seed;
  j["verification_th"] = c.verification.value();
  j["search"] = search_config_to_json(c.search);
  j["phase2"] = c.phase2;
  ordered_json inv;
  inv["epsilon"] = c.inversion.epsilon;
  inv["iterations"] = c.inversion.iterations;
  inv["step_size"] = c.inversion.step_size;
  inv["beta1"] = c.inversion.beta1;
  inv["beta2"] = c.inversion.beta2;
  inv["adam_epsilon"] = c.inversion.adam_epsilon;
  inv["random_start"] = c.inversion.random_start;
  j["inversion"] = std::move(inv);
  ordered_json mapper;
  mapper["side"] = c.mapper_shape.side;
  mapper["hidden"] = c.mapper_shape.hidden;
  mapper["dimension"] = c.mapper_shape.dimension;
  mapper["seed"] = c.mapper_seed;
  j["mapper"] = std::move(mapper);
  j["source"] = c.source ? "provided" : "random";
  ordered_json data;
  data["label"] = c.data.label;
  data["attacker_in_dodge"] = c.data.attacker_in_dodge;
  data["pool_size"] = c.data.pool ? ordered_json(c.data.pool->size()) : ordered_json();
  data["fixed_match"] = c.data.match.has_value();
  data["fixed_dodge"] = c.data.dodge.has_value();
  data["fixed_unseen"] = c.data.unseen.has_value();
  ordered_json synth;
  synth["clusters"] = c.data.synth.clusters;
  synth["radius"] = c.data.synth.radius;
  synth["dimension"] = c.data.synth.dimension;
  synth["min_center_separation"] = c.data.synth.min_center_separation;
  data["synth"] = std::move(synth);
  j["data"] = std::move(data);
  return j;
}

ScenarioConfig scenario_from_json(const json& doc, ScenarioConfig c) {
  if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
  if (doc.value("fmt", std::string()) != "cfg") throw ConfigError("config lacks \"fmt\":\"cfg\"");
  if (doc.value("v", 0) != kFormatVersion) throw ConfigError("unsupported config version");

  if (doc.contains("kind")) {
    c.kind = parse_scenario_kind(doc.at("kind").get<std::string>());
  }
  maybe(doc, "match_size", c.match_size);
  maybe(doc, "dodge_size", c.dodge_size);
  maybe(doc, "unseen_size", c.unseen_size);
  maybe(doc, "repetitions", c.repetitions);
  maybe(doc, "seed", c.seed);
  maybe_threshold(doc, "verification_th", c.verification);
  maybe(doc, "phase2", c.phase2);
  if (doc.contains("search")) {
    const auto& s = doc.at("search");
    maybe(s, "clusters", c.search.clusters);
    maybe_threshold(s, "th1", c.search.fitness.th1);
    maybe_threshold(s, "th2", c.search.fitness.th2);
    maybe(s, "alpha", c.search.fitness.alpha);
    maybe(s, "beta", c.search.fitness.beta);
    maybe(s, "gamma", c.search.fitness.gamma);
    maybe(s, "population", c.search.es.population);
    maybe(s, "generations", c.search.es.generations);
    maybe(s, "sigma0", c.search.es.sigma0);
    maybe(s, "memory_size", c.search.es.memory_size);
    maybe(s, "reinject_best", c.search.es.reinject_best);
    maybe(s, "threads", c.search.es.threads);
    maybe(s, "allow_shared_labels", c.search.allow_shared_labels);
  }
  if (doc.contains("inversion")) {
    const auto& s = doc.at("inversion");
    maybe(s, "epsilon", c.inversion.epsilon);
    maybe(s, "iterations", c.inversion.iterations);
    maybe(s, "step_size", c.inversion.step_size);
    maybe(s, "beta1", c.inversion.beta1);
    maybe(s, "beta2", c.inversion.beta2);
    maybe(s, "adam_epsilon", c.inversion.adam_epsilon);
    maybe(s, "random_start", c.inversion.random_start);
  }
  if (doc.contains("mapper")) {
    const auto& s = doc.at("mapper");
    maybe(s, "side", c.mapper_shape.side);
    maybe(s, "hidden", c.mapper_shape.hidden);
    maybe(s, "dimension", c.mapper_shape.dimension);
    maybe(s, "seed", c.mapper_seed);
  }
  if (doc.contains("data")) {
    const auto& s = doc.at("data");
    maybe(s, "label", c.data.label);
    maybe(s, "attacker_in_dodge", c.data.attacker_in_dodge);
    if (s.contains("synth")) {
      const auto& y = s.at("synth");
      maybe(y, "clusters", c.data.synth.clusters);
      maybe(y, "radius", c.data.synth.radius);
      maybe(y, "dimension", c.data.synth.dimension);
      maybe(y, "min_center_separation", c.data.synth.min_center_separation);
    }
  }
  return c;
}

RunReport run_scenario(const ScenarioConfig& config) {
  config.validate();
  RunReport report;
  report.kind = "scenario";
  report.seed = config.seed;
  report.config = scenario_to_json(config);
  report.data_source = config.data.label;
  run_into(report, config, std::string(to_string(config.effective_kind())));
  return report;
}

RunReport run_unseen_generalization(int match_size, int unseen_size, ScenarioConfig config) {
  if (unseen_size < 1) throw ConfigError("unseen generalization needs a non-empty unseen set");
  config.match_size = match_size;
  config.unseen_size = unseen_size;
  config.kind.reset();
  RunReport report = run_scenario(config);
  report.kind = "unseen_generalization";
  return report;
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::th2_percent: return "th2_percent";
    case SweepAxis::gamma: return "gamma";
    case SweepAxis::cluster_count: return "cluster_count";
    case SweepAxis::match_size: return "match_size";
  }
  return "gamma";
}

SweepAxis parse_sweep_axis(std::string_view text) {
  for (auto axis : {SweepAxis::th2_percent, SweepAxis::gamma, SweepAxis::cluster_count,
                    SweepAxis::match_size}) {
    if (to_string(axis) == text) return axis;
  }
  throw ConfigError("unknown sweep axis '" + std::string(text) + "'");
}

void SweepSpec::validate() const {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (repetitions < 1) throw ConfigError("sweep repetitions must be at least 1");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) throw ConfigError("sweep values must be strictly increasing");
  }
  for (double v : values) {
    const bool integral = std::floor(v) == v;
    switch (axis) {
      case SweepAxis::gamma:
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError("gamma values must lie in [0, 1]");
        break;
      case SweepAxis::th2_percent:
        if (!(v > 0.0 && v <= 2.0)) throw ConfigError("th2 values must lie in (0, 2]");
        break;
      case SweepAxis::cluster_count:
        if (!integral || v < 1) throw ConfigError("cluster counts must be integers >= 1");
        break;
      case SweepAxis::match_size:
        if (!integral || v < 0) throw ConfigError("match sizes must be integers >= 0");
        break;
    }
  }
}

RunReport run_sweep(const SweepSpec& spec, const ScenarioConfig& base) {
  spec.validate();
  RunReport report;
  report.kind = "sweep";
  report.seed = base.seed;
  report.config = scenario_to_json(base);
  report.config["sweep"] = {{"axis", std::string(to_string(spec.axis))},
                            {"values", spec.values},
                            {"repetitions", spec.repetitions}};
  report.data_source = base.data.label;

  for (double value : spec.values) {
    ScenarioConfig cfg = base;
    cfg.repetitions = spec.repetitions;
    std::optional<double> increase;
    switch (spec.axis) {
      case SweepAxis::gamma:
        cfg.search.fitness.gamma = value;
        break;
      case SweepAxis::th2_percent:
        cfg.search.fitness.th2 = Threshold(value);
        increase = std::round(100.0 * (value / base.search.fitness.th2.value() - 1.0));
        break;
      case SweepAxis::cluster_count:
        cfg.search.clusters = static_cast<int>(value);
        break;
      case SweepAxis::match_size:
        cfg.match_size = static_cast<int>(value);
        cfg.kind.reset();
        break;
    }
    cfg.validate();
    const std::string label = std::string(to_string(spec.axis)) + "=" + format_double(value);
    run_into(report, cfg, label);

    for (int phase : {1, 2}) {
      if (phase == 2 && !cfg.phase2) continue;
      SweepRow row{std::string(to_string(spec.axis)), value, increase, phase,
                   report.mean_coverage(label, phase, SetRole::match),
                   report.mean_coverage(label, phase, SetRole::dodge),
                   report.mean_coverage(label, phase, SetRole::unseen)};
      report.table.push_back(row);
    }
  }
  return report;
}

}  // namespace dodgep
