#include "cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "dodgep/error.hpp"
#include "dodgep/io.hpp"
#include "dodgep/scenario.hpp"

namespace dodgep::cli {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr const char* kEmptySet = "empty";

template <typename T, typename U>
void set_if(const std::optional<T>& flag, U& target) {
  if (flag) target = *flag;
}

struct ReportFlags {
  std::string path;
  std::string format = "json";

  void add(CLI::App* cmd) {
    cmd->add_option("--report", path, "Write a run report to this path");
    cmd->add_option("--format", format, "Report format (json or csv)");
  }

  void write(const RunReport& report) const {
    const ReportFormat fmt = parse_report_format(format);
    if (!path.empty()) write_report(report, std::filesystem::path(path), fmt);
  }
};

struct SearchFlags {
  std::optional<int> clusters, population, generations, memory;
  std::optional<double> th1, th2, alpha, beta, gamma, sigma0;
  bool reinject_best = false;
  bool allow_shared_labels = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--clusters", clusters, "Number of attack embeddings C (k-means clusters)");
    cmd->add_option("--th1", th1, "Matching threshold for the match set");
    cmd->add_option("--th2", th2, "Matching threshold for the dodge set");
    cmd->add_option("--alpha", alpha, "Count weight of the match-side loss");
    cmd->add_option("--beta", beta, "Count weight of the dodge-side loss");
    cmd->add_option("--gamma", gamma, "Impersonation vs dodging trade-off in [0, 1]");
    cmd->add_option("--population", population, "ES population size");
    cmd->add_option("--generations", generations, "ES generations per cluster");
    cmd->add_option("--sigma0", sigma0, "Initial ES step size");
    cmd->add_option("--memory", memory, "LM-MA-ES direction vectors (0 = default)");
    cmd->add_flag("--reinject-best", reinject_best, "Re-insert the best-ever point each generation");
    cmd->add_flag("--allow-shared-labels", allow_shared_labels,
                  "Skip the match/dodge identity disjointness check");
  }

  void apply(SearchConfig& s) const {
    set_if(clusters, s.clusters);
    if (th1) s.fitness.th1 = Threshold(*th1);
    if (th2) s.fitness.th2 = Threshold(*th2);
    set_if(alpha, s.fitness.alpha);
    set_if(beta, s.fitness.beta);
    set_if(gamma, s.fitness.gamma);
    set_if(population, s.es.population);
    set_if(generations, s.es.generations);
    set_if(sigma0, s.es.sigma0);
    set_if(memory, s.es.memory_size);
    if (reinject_best) s.es.reinject_best = true;
    if (allow_shared_labels) s.allow_shared_labels = true;
  }
};

struct MapperFlags {
  std::string file;
  std::uint64_t seed = 0;
  int side = MapperShape{}.side;
  int hidden = MapperShape{}.hidden;

  void add(CLI::App* cmd) {
    cmd->add_option("--mapper", file, "Mapper weight file (default: random toy mapper)");
    cmd->add_option("--mapper-seed", seed, "Seed of the random toy mapper");
    cmd->add_option("--side", side, "Image side of the random toy mapper");
    cmd->add_option("--hidden", hidden, "Hidden width of the random toy mapper");
  }

  ToyMapper build(int dimension) const {
    if (!file.empty()) {
      ToyMapper mapper = read_mapper(std::filesystem::path(file));
      if (mapper.shape().dimension != dimension) {
        throw ConfigError("mapper outputs " + std::to_string(mapper.shape().dimension) +
                          "-d embeddings, expected " + std::to_string(dimension));
      }
      return mapper;
    }
    return ToyMapper(MapperShape{side, hidden, dimension}, seed);
  }
};

EmbeddingSet load_set(const std::string& path, SetRole role) {
  return read_embedding_set(std::filesystem::path(path)).with_role(role);
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
}

void print_means(const RunReport& report, std::ostream& out) {
  for (const auto& note : report.notes) out << "note: " << note << '\n';
  for (const auto& m : report.metrics) {
    if (m.repetition != "mean") continue;
    out << m.label << " phase " << m.phase << ' ' << to_string(m.role) << " coverage "
        << format_double(m.coverage) << " (" << m.matched << '/' << m.total << ")\n";
  }
}

// ------------------------------------------------------------------ synth

struct SynthCommand {
  SynthSpec spec;
  std::string role = "population";
  std::string out;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("synth", "Generate a planted synthetic embedding set");
    cmd->add_option("--clusters", spec.clusters, "Number of planted caps");
    cmd->add_option("--radius", spec.radius, "Chordal cap radius");
    cmd->add_option("--count", spec.count, "Number of records");
    cmd->add_option("--dim", spec.dimension, "Embedding dimension");
    cmd->add_option("--separation", spec.min_center_separation, "Minimum distance between cap centers");
    cmd->add_option("--prefix", spec.prefix, "Id/label prefix");
    cmd->add_option("--role", role, "Role written into the file header");
    cmd->add_option("--seed", spec.seed, "Master seed");
    cmd->add_option("--out", out, "Output embedding file")->required();
    cmd->callback([this] { run(); });
  }

  void run() {
    spec.role = parse_role(role);
    const EmbeddingSet set = synth_dataset(spec);
    write_embedding_set(set, std::filesystem::path(out));
  }
};

// -------------------------------------------------------------- calibrate

struct CalibrateCommand {
  std::string pairs;
  std::string embeddings;
  double far = 0.001;
  int pair_count = 1100;
  double noise = 0.05;
  std::uint64_t seed = 0;
  MapperFlags mapper;
  int dimension = MapperShape{}.dimension;
  std::string out;
  ReportFlags report;
  std::ostream* stdout_ = nullptr;

  void add(CLI::App& app, std::ostream& sink) {
    stdout_ = &sink;
    auto* cmd = app.add_subcommand(
        "calibrate", "Verification threshold at a target false acceptance rate");
    cmd->add_option("--pairs", pairs, "Pair list (CSV); omit to calibrate a toy mapper");
    cmd->add_option("--embeddings", embeddings, "Embedding file resolving the pair ids");
    cmd->add_option("--far", far, "Target false acceptance rate");
    cmd->add_option("--pair-count", pair_count, "Mapper mode: pairs of each kind");
    cmd->add_option("--noise", noise, "Mapper mode: same-identity pixel noise");
    cmd->add_option("--dim", dimension, "Mapper mode: embedding dimension");
    cmd->add_option("--seed", seed, "Mapper mode: image seed");
    mapper.add(cmd);
    cmd->add_option("--out", out, "Threshold JSON output (default: stdout)");
    report.add(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    Calibration cal;
    ordered_json echo;
    if (!pairs.empty()) {
      if (embeddings.empty()) throw ConfigError("--pairs requires --embeddings");
      const auto list = read_pairs(std::filesystem::path(pairs));
      const auto set = read_embedding_set(std::filesystem::path(embeddings));
      cal = calibrate_threshold(list, set, far);
      echo["source"] = "pairs";
    } else {
      if (!embeddings.empty()) throw ConfigError("--embeddings requires --pairs");
      const ToyMapper m = mapper.build(dimension);
      cal = calibrate_mapper_threshold(m, far, pair_count, seed, noise);
      echo["source"] = "mapper";
      echo["mapper_seed"] = m.seed();
      echo["pair_count"] = pair_count;
      echo["noise"] = noise;
      echo["seed"] = seed;
    }
    ordered_json doc;
    doc["fmt"] = "threshold";
    doc["v"] = kFormatVersion;
    doc["threshold"] = cal.threshold.value();
    doc["far"] = far;
    doc["achieved_far"] = cal.achieved_far;
    doc["mismatch_pairs"] = cal.mismatch_pairs;
    doc["allowed_false_accepts"] = cal.allowed_false_accepts;
    doc["true_accept_rate"] = cal.true_accept_rate ? ordered_json(*cal.true_accept_rate) : ordered_json();
    if (out.empty()) {
      *stdout_ << doc.dump(2) << '\n';
    } else {
      std::ofstream f(out);
      if (!f) throw IoError("cannot write " + out);
      f << doc.dump(2) << '\n';
    }
    RunReport r;
    r.kind = "calibrate";
    r.seed = seed;
    echo["far"] = far;
    echo["result"] = doc;
    r.config = echo;
    r.data_source = pairs.empty() ? "toy mapper" : pairs;
    report.write(r);
  }
};

// ----------------------------------------------------------------- search

struct SearchCommand {
  std::string match;
  std::string dodge = kEmptySet;
  std::string start;
  std::uint64_t seed = 0;
  int threads = 1;
  SearchFlags flags;
  std::string out;
  ReportFlags report;
  std::ostream* stdout_ = nullptr;

  void add(CLI::App& app, std::ostream& sink) {
    stdout_ = &sink;
    auto* cmd = app.add_subcommand("search", "Phase 1: search the embedding space");
    cmd->add_option("--match", match, "Match set file (omit or 'empty' for pure dodging)");
    cmd->add_option("--dodge", dodge, "Dodge set file, or 'empty'");
    cmd->add_option("--start", start, "Pure dodging: start from the first record of this file");
    cmd->add_option("--seed", seed, "Master seed");
    cmd->add_option("--threads", threads, "Worker threads");
    flags.add(cmd);
    cmd->add_option("--out", out, "Output file for the attack embeddings");
    report.add(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const bool has_match = !match.empty() && match != kEmptySet;
    const bool has_dodge = dodge != kEmptySet;
    if (!has_match && !has_dodge) {
      throw ConfigError("both sets are empty (null attack): any input is a solution");
    }
    SearchConfig cfg;
    flags.apply(cfg);
    cfg.seed = seed;
    cfg.es.threads = threads;

    std::optional<EmbeddingSet> m;
    if (has_match) m = load_set(match, SetRole::match);
    const int dim = m ? m->dimension() : 0;
    EmbeddingSet d = has_dodge ? load_set(dodge, SetRole::dodge) : EmbeddingSet(SetRole::dodge, dim);

    SearchResult result;
    if (m) {
      result = search(*m, d, cfg);
    } else {
      std::optional<EmbeddingVector> from;
      if (!start.empty()) {
        const auto s = read_embedding_set(std::filesystem::path(start));
        if (s.empty()) throw ConfigError("start file " + start + " has no records");
        from = s[0].vector;
      }
      result = dodge_search(d, cfg, from);
    }

    EmbeddingSet attack(SetRole::population, m ? m->dimension() : d.dimension());
    for (std::size_t c = 0; c < result.best_embeddings.size(); ++c) {
      const std::string id = "attack_" + std::to_string(c);
      attack.add(id, id, result.best_embeddings[c]);
    }
    if (!out.empty()) write_embedding_set(attack, std::filesystem::path(out));

    RunReport r;
    r.kind = "search";
    r.seed = seed;
    r.config = search_config_to_json(cfg);
    r.config["match"] = has_match ? match : kEmptySet;
    r.config["dodge"] = dodge;
    r.data_source = has_match ? match : dodge;
    auto add_metric = [&](const std::optional<CoverageResult>& cov, SetRole role, std::size_t n) {
      if (!cov) return;
      r.metrics.push_back({"search", "0", 1, role, cov->percentage, cov->matched_count(), n});
      *stdout_ << "phase 1 " << to_string(role) << " coverage " << format_double(cov->percentage)
               << " (" << cov->matched_count() << '/' << n << ")\n";
    };
    add_metric(result.match_coverage, SetRole::match, m ? m->size() : 0);
    add_metric(result.dodge_coverage, SetRole::dodge, d.size());
    for (std::size_t c = 0; c < result.traces.size(); ++c) {
      r.histories.push_back({"search", 0, static_cast<int>(c), result.traces[c].best_fitness});
    }
    if (result.effective_clusters() < result.requested_clusters) {
      r.notes.push_back("used " + std::to_string(result.effective_clusters()) + " of " +
                        std::to_string(result.requested_clusters) + " requested clusters");
    }
    report.write(r);
  }
};

// ----------------------------------------------------------------- invert

struct InvertCommand {
  std::string source;
  std::string target;
  std::size_t target_index = 0;
  std::string target_id;
  MapperFlags mapper;
  InversionConfig inv;
  std::uint64_t seed = 0;
  std::string out;
  std::string embedding_out;
  std::string save_mapper;
  ReportFlags report;
  std::ostream* stdout_ = nullptr;

  void add(CLI::App& app, std::ostream& sink) {
    stdout_ = &sink;
    auto* cmd = app.add_subcommand("invert", "Phase 2: craft an attack face for a target embedding");
    cmd->add_option("--source", source, "Source image file (default: random image from --seed)");
    cmd->add_option("--target", target, "Embedding file holding the target")->required();
    cmd->add_option("--target-index", target_index, "Record index of the target");
    cmd->add_option("--target-id", target_id, "Record id of the target (overrides the index)");
    mapper.add(cmd);
    cmd->add_option("--epsilon", inv.epsilon, "L-infinity perturbation bound");
    cmd->add_option("--iterations", inv.iterations, "Adam iterations");
    cmd->add_option("--step-size", inv.step_size, "Adam learning rate");
    cmd->add_flag("--random-start", inv.random_start, "Start from a random point in the ball");
    cmd->add_option("--seed", seed, "Master seed");
    cmd->add_option("--out", out, "Output image file")->required();
    cmd->add_option("--embedding-out", embedding_out, "Also write the attack embedding");
    cmd->add_option("--save-mapper", save_mapper, "Write the mapper weights used");
    report.add(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const auto targets = read_embedding_set(std::filesystem::path(target));
    const EmbeddingRecord* record = nullptr;
    if (!target_id.empty()) {
      for (const auto& r : targets.records()) {
        if (r.id == target_id) record = &r;
      }
      if (!record) throw ConfigError("no record with id '" + target_id + "' in " + target);
    } else {
      if (target_index >= targets.size()) {
        throw ConfigError("target index " + std::to_string(target_index) + " out of range");
      }
      record = &targets[target_index];
    }
    const ToyMapper m = mapper.build(targets.dimension());
    const ImageTensor src = source.empty() ? random_image(m.shape().side, seed)
                                           : read_image(std::filesystem::path(source));
    inv.seed = seed;
    const auto result = generate_attack_face(src, record->vector, m, identity_cropper(), inv);
    write_image(result.attack, std::filesystem::path(out));
    if (!embedding_out.empty()) {
      EmbeddingSet e(SetRole::population, targets.dimension());
      e.add("attack_face", record->label, result.embedding);
      write_embedding_set(e, std::filesystem::path(embedding_out));
    }
    if (!save_mapper.empty()) write_mapper(m, std::filesystem::path(save_mapper));

    *stdout_ << "initial distance " << format_double(result.initial_distance) << '\n'
             << "final distance " << format_double(result.final_distance) << '\n'
             << "max deviation " << format_double(result.max_deviation) << '\n';

    RunReport r;
    r.kind = "invert";
    r.seed = seed;
    ordered_json echo;
    echo["target"] = target;
    echo["target_id"] = record->id;
    echo["source"] = source.empty() ? "random" : source;
    echo["epsilon"] = inv.epsilon;
    echo["iterations"] = inv.iterations;
    echo["step_size"] = inv.step_size;
    echo["random_start"] = inv.random_start;
    echo["mapper"] = mapper.file.empty() ? ordered_json{{"side", m.shape().side},
                                                        {"hidden", m.shape().hidden},
                                                        {"dimension", m.shape().dimension},
                                                        {"seed", m.seed()}}
                                         : ordered_json(mapper.file);
    r.config = echo;
    r.data_source = target;
    r.inversions.push_back(
        {"invert", 0, 0, result.initial_distance, result.final_distance, result.max_deviation});
    report.write(r);
  }
};

// --------------------------------------------------------------- evaluate

struct EvaluateCommand {
  std::string attack;
  std::vector<std::string> images;
  std::string targets;
  double th = 1.055;
  int threads = 1;
  MapperFlags mapper;
  ReportFlags report;
  std::ostream* stdout_ = nullptr;

  void add(CLI::App& app, std::ostream& sink) {
    stdout_ = &sink;
    auto* cmd = app.add_subcommand("evaluate", "Coverage of attack embeddings or images");
    auto* a = cmd->add_option("--attack", attack, "Attack embedding file");
    auto* i = cmd->add_option("--attack-image", images, "Attack image file(s), mapped first");
    a->excludes(i);
    cmd->add_option("--targets", targets, "Target embedding file")->required();
    cmd->add_option("--th", th, "Matching threshold");
    cmd->add_option("--threads", threads, "Worker threads");
    mapper.add(cmd);
    report.add(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    if (attack.empty() && images.empty()) throw ConfigError("give --attack or --attack-image");
    const auto set = read_embedding_set(std::filesystem::path(targets));
    std::vector<EmbeddingVector> vectors;
    if (!attack.empty()) {
      vectors = read_embedding_set(std::filesystem::path(attack)).vectors();
    } else {
      const ToyMapper m = mapper.build(set.dimension());
      for (const auto& path : images) vectors.push_back(m.forward(read_image(std::filesystem::path(path))));
    }
    const auto cov = coverage(vectors, set, Threshold(th), threads);
    *stdout_ << "coverage " << format_double(cov.percentage) << " (" << cov.matched_count() << '/'
             << set.size() << ")\n";

    RunReport r;
    r.kind = "evaluate";
    ordered_json echo;
    echo["attack"] = attack.empty() ? ordered_json(images) : ordered_json(attack);
    echo["targets"] = targets;
    echo["th"] = th;
    r.config = echo;
    r.data_source = targets;
    r.metrics.push_back({"evaluate", "0", 1, set.role(), cov.percentage, cov.matched_count(), set.size()});
    report.write(r);
  }
};

// ------------------------------------------------------- scenario / sweep

struct ScenarioFlags {
  std::string config;
  std::optional<std::string> kind;
  std::optional<int> match_size, dodge_size, unseen_size, repetitions, threads;
  std::optional<std::uint64_t> seed, mapper_seed;
  std::optional<double> verification, epsilon, step_size;
  std::optional<int> iterations, side, hidden, mapper_dim;
  bool phase2 = false, random_start = false, attacker_in_dodge = false;
  std::optional<std::string> source, pool, match, dodge, unseen, data_label;
  std::optional<int> synth_clusters, synth_dim;
  std::optional<double> synth_radius, synth_separation;
  SearchFlags search;
  std::string echo;
  ReportFlags report;

  void add(CLI::App* cmd) {
    cmd->add_option("--config", config, "Versioned JSON config; flags override its values");
    cmd->add_option("--kind", kind, "Scenario kind (checked against the set sizes)");
    cmd->add_option("--match-size", match_size, "Match set size k");
    cmd->add_option("--dodge-size", dodge_size, "Dodge set size l");
    cmd->add_option("--unseen-size", unseen_size, "Unseen set size");
    cmd->add_option("--repetitions", repetitions, "Random draws to average over");
    cmd->add_option("--seed", seed, "Master seed");
    cmd->add_option("--threads", threads, "Worker threads");
    search.add(cmd);
    cmd->add_option("--verification-th", verification, "Threshold used to measure coverage");
    cmd->add_flag("--phase2", phase2, "Also run Phase 2 through the toy mapper");
    cmd->add_option("--epsilon", epsilon, "Phase 2 perturbation bound");
    cmd->add_option("--iterations", iterations, "Phase 2 Adam iterations");
    cmd->add_option("--step-size", step_size, "Phase 2 Adam learning rate");
    cmd->add_flag("--random-start", random_start, "Phase 2 random start in the ball");
    cmd->add_option("--side", side, "Toy mapper image side");
    cmd->add_option("--hidden", hidden, "Toy mapper hidden width");
    cmd->add_option("--mapper-dim", mapper_dim, "Toy mapper output dimension (default: data dimension)");
    cmd->add_option("--mapper-seed", mapper_seed, "Toy mapper seed");
    cmd->add_option("--source", source, "Source image file (default: random per repetition)");
    cmd->add_flag("--attacker-in-dodge", attacker_in_dodge, "Add the source face to the dodge set");
    cmd->add_option("--pool", pool, "Identity pool file to draw sets from");
    cmd->add_option("--match", match, "Fixed match set file");
    cmd->add_option("--dodge", dodge, "Fixed dodge set file, or 'empty'");
    cmd->add_option("--unseen", unseen, "Fixed unseen set file");
    cmd->add_option("--data-label", data_label, "Data provenance label for the report");
    cmd->add_option("--synth-clusters", synth_clusters, "Synthetic pool: planted caps");
    cmd->add_option("--synth-radius", synth_radius, "Synthetic pool: cap radius");
    cmd->add_option("--synth-dim", synth_dim, "Synthetic pool: dimension");
    cmd->add_option("--synth-separation", synth_separation, "Synthetic pool: center separation");
    cmd->add_option("--echo-config", echo, "Write the effective config document to this path");
    report.add(cmd);
  }

  ScenarioConfig build() const {
    ScenarioConfig c;
    if (!config.empty()) c = scenario_from_json(load_config(config));
    if (kind) c.kind = parse_scenario_kind(*kind);
    set_if(match_size, c.match_size);
    set_if(dodge_size, c.dodge_size);
    set_if(unseen_size, c.unseen_size);
    set_if(repetitions, c.repetitions);
    set_if(seed, c.seed);
    set_if(threads, c.search.es.threads);
    search.apply(c.search);
    if (verification) c.verification = Threshold(*verification);
    if (phase2) c.phase2 = true;
    set_if(epsilon, c.inversion.epsilon);
    set_if(iterations, c.inversion.iterations);
    set_if(step_size, c.inversion.step_size);
    if (random_start) c.inversion.random_start = true;
    set_if(side, c.mapper_shape.side);
    set_if(hidden, c.mapper_shape.hidden);
    set_if(mapper_seed, c.mapper_seed);
    if (attacker_in_dodge) c.data.attacker_in_dodge = true;
    set_if(synth_clusters, c.data.synth.clusters);
    set_if(synth_radius, c.data.synth.radius);
    set_if(synth_dim, c.data.synth.dimension);
    set_if(synth_separation, c.data.synth.min_center_separation);
    if (source) c.source = read_image(std::filesystem::path(*source));
    if (pool) {
      c.data.pool = load_set(*pool, SetRole::population);
      c.data.label = *pool;
    }
    if (match) {
      c.data.match = load_set(*match, SetRole::match);
      if (!match_size) c.match_size = static_cast<int>(c.data.match->size());
    }
    if (dodge && *dodge == kEmptySet) {
      c.data.dodge.reset();
      c.dodge_size = 0;
    } else if (dodge) {
      c.data.dodge = load_set(*dodge, SetRole::dodge);
      if (!dodge_size) c.dodge_size = static_cast<int>(c.data.dodge->size());
    }
    if (unseen) {
      c.data.unseen = load_set(*unseen, SetRole::unseen);
      if (!unseen_size) c.unseen_size = static_cast<int>(c.data.unseen->size());
    }
    set_if(data_label, c.data.label);

    int data_dim = c.data.synth.dimension;
    for (const auto* s : {&c.data.pool, &c.data.match, &c.data.dodge, &c.data.unseen}) {
      if (*s) data_dim = (*s)->dimension();
    }
    c.mapper_shape.dimension = mapper_dim.value_or(data_dim);
    c.validate();
    if (!echo.empty()) {
      std::ofstream f(echo);
      if (!f) throw IoError("cannot write " + echo);
      f << scenario_to_json(c).dump(2) << '\n';
    }
    return c;
  }
};

struct ScenarioCommand {
  ScenarioFlags flags;
  std::ostream* stdout_ = nullptr;

  void add(CLI::App& app, std::ostream& sink) {
    stdout_ = &sink;
    auto* cmd = app.add_subcommand("scenario", "Run one taxonomy scenario with repetitions");
    flags.add(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const RunReport r = run_scenario(flags.build());
    print_means(r, *stdout_);
    flags.report.write(r);
  }
};

struct SweepCommand {
  ScenarioFlags flags;
  std::string axis;
  std::vector<double> values;
  std::ostream* stdout_ = nullptr;

  void add(CLI::App& app, std::ostream& sink) {
    stdout_ = &sink;
    auto* cmd = app.add_subcommand("sweep", "Run one scenario per value of an ablation axis");
    cmd->add_option("--axis", axis, "th2_percent, gamma, cluster_count or match_size")->required();
    cmd->add_option("--values", values, "Comma-separated, strictly increasing values")
        ->required()
        ->delimiter(',');
    flags.add(cmd);
    cmd->callback([this] { run(); });
  }

  void run() {
    const ScenarioConfig base = flags.build();
    SweepSpec spec{parse_sweep_axis(axis), values, base.repetitions};
    const RunReport r = run_sweep(spec, base);
    for (const auto& row : r.table) {
      *stdout_ << row.axis << ' ' << format_double(row.value);
      if (row.increase_percent) *stdout_ << " (+" << format_double(*row.increase_percent) << "%)";
      *stdout_ << " phase " << row.phase;
      if (row.match_coverage) *stdout_ << " match " << format_double(*row.match_coverage);
      if (row.dodge_coverage) *stdout_ << " dodge " << format_double(*row.dodge_coverage);
      if (row.unseen_coverage) *stdout_ << " unseen " << format_double(*row.unseen_coverage);
      *stdout_ << '\n';
    }
    flags.report.write(r);
  }
};

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Embedding-space impersonation and dodging attacks", "dodgep"};
  app.require_subcommand(1);

  SynthCommand synth;
  CalibrateCommand calibrate;
  SearchCommand search_cmd;
  InvertCommand invert;
  EvaluateCommand evaluate;
  ScenarioCommand scenario;
  SweepCommand sweep;
  synth.add(app);
  calibrate.add(app, out);
  search_cmd.add(app, out);
  invert.add(app, out);
  evaluate.add(app, out);
  scenario.add(app, out);
  sweep.add(app, out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace dodgep::cli
