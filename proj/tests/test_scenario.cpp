#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "dodgep/scenario.hpp"
#include "oracles.hpp"

using namespace dodgep;

namespace {

ScenarioConfig quick(int k, int l, int reps = 1, std::uint64_t seed = 1) {
  ScenarioConfig c;
  c.match_size = k;
  c.dodge_size = l;
  c.repetitions = reps;
  c.seed = seed;
  c.search.es.generations = 150;
  return c;
}

const MetricRow* find_row(const RunReport& r, const std::string& rep, int phase, SetRole role) {
  for (const auto& m : r.metrics) {
    if (m.repetition == rep && m.phase == phase && m.role == role) return &m;
  }
  return nullptr;
}

}  // namespace

TEST_CASE("calibration examples") {
  const std::vector<double> d{1.4, 1.0, 1.6, 1.2};
  CHECK(calibrate_threshold(d, 0.25).threshold.value() == 1.0);
  CHECK(calibrate_threshold(d, 0.5).threshold.value() == 1.2);
  const auto tiny = calibrate_threshold(d, 0.1);
  CHECK(tiny.threshold.value() < 1.0);
  CHECK(tiny.threshold.value() > 0.999);
  CHECK(tiny.achieved_far == 0.0);
  CHECK_THROWS_AS(calibrate_threshold(std::vector<double>{}, 0.1), ConfigError);
  CHECK_THROWS_AS(calibrate_threshold(d, 0.0), ConfigError);
  CHECK_THROWS_AS(calibrate_threshold(d, 1.0), ConfigError);
}

TEST_CASE("calibration never exceeds the requested FAR") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.2, 2.0);
  std::uniform_int_distribution<int> n(1, 300);
  std::uniform_int_distribution<int> ties(0, 4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<double> d(static_cast<std::size_t>(n(rng)));
    for (auto& x : d) x = ties(rng) == 0 ? 1.0 : u(rng);  // plenty of ties at 1.0
    const double far = std::uniform_real_distribution<double>(0.001, 0.9)(rng);
    const auto cal = calibrate_threshold(d, far);
    const auto accepted = std::count_if(d.begin(), d.end(), [&](double x) { return x <= cal.threshold.value(); });
    CHECK(static_cast<double>(accepted) / static_cast<double>(d.size()) <= far);
    CHECK(cal.achieved_far == static_cast<double>(accepted) / static_cast<double>(d.size()));
  }
}

TEST_CASE("calibration from pairs and from the toy mapper") {
  EmbeddingSet s(SetRole::population, 2);
  auto at = [](double chord) {
    const double a = 2.0 * std::asin(chord / 2.0);
    EmbeddingVector v(2);
    v << std::cos(a), std::sin(a);
    return v;
  };
  s.add("o", "o", at(0.0));
  s.add("a", "a", at(1.0));
  s.add("b", "b", at(1.2));
  s.add("c", "c", at(0.1));
  const std::vector<Pair> pairs{{"o", "a", PairLabel::mismatch},
                                {"o", "b", PairLabel::mismatch},
                                {"o", "c", PairLabel::match}};
  const auto cal = calibrate_threshold(pairs, s, 0.5);
  CHECK(cal.threshold.value() == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(cal.true_accept_rate == std::optional<double>(1.0));

  const ToyMapper m(MapperShape{8, 32, 16}, 1);
  const auto mc = calibrate_mapper_threshold(m, 0.01, 300, 4);
  CHECK(mc.mismatch_pairs == 300);
  CHECK(mc.achieved_far <= 0.01);
  CHECK(mc.true_accept_rate.value() > 0.9);
}

TEST_CASE("synthetic data geometry") {
  SynthSpec one;
  one.radius = 0.3;
  one.count = 10;
  one.seed = 5;
  const auto a = synth_dataset(one);
  CHECK(a.size() == 10);
  for (const auto& x : a.records()) {
    CHECK(std::abs(x.vector.norm() - 1.0) < 1e-12);
    for (const auto& y : a.records()) CHECK(distance(x.vector, y.vector) <= 0.6 + 1e-12);
  }
  CHECK(synth_dataset(one) == a);

  SynthSpec two;
  two.clusters = 2;
  two.radius = 0.2;
  two.count = 20;
  two.min_center_separation = 1.9;
  two.seed = 8;
  const auto b = synth_dataset_with_centers(two);
  CHECK(distance(b.centers.col(0), b.centers.col(1)) >= 1.9);
  for (const auto& x : b.set.records()) {
    for (const auto& y : b.set.records()) {
      if (synth_cluster_of(x.label) != synth_cluster_of(y.label)) {
        CHECK(distance(x.vector, y.vector) >= 1.5);
      }
    }
  }
  CHECK(synth_cluster_of("sc1_3") == 1);
  CHECK(synth_cluster_of("abc") == -1);

  SynthSpec bad;
  bad.radius = 2.0;
  CHECK_THROWS_AS(synth_dataset(bad), ConfigError);
  SynthSpec crowded;
  crowded.clusters = 5;
  crowded.dimension = 2;
  crowded.min_center_separation = 1.99;
  CHECK_THROWS_AS(synth_dataset(crowded), ConfigError);
}

TEST_CASE("taxonomy") {
  CHECK(classify_scenario(0, 0) == ScenarioKind::null_attack);
  CHECK(classify_scenario(0, 1) == ScenarioKind::single_dodging);
  CHECK(classify_scenario(0, 5) == ScenarioKind::multi_dodging);
  CHECK(classify_scenario(1, 0) == ScenarioKind::single_impersonation);
  CHECK(classify_scenario(7, 0) == ScenarioKind::multi_impersonation);
  CHECK(classify_scenario(1, 1) == ScenarioKind::single_impersonation_single_dodging);
  CHECK(classify_scenario(1, 3) == ScenarioKind::single_impersonation_multi_dodging);
  CHECK(classify_scenario(4, 1) == ScenarioKind::multi_impersonation_single_dodging);
  CHECK(classify_scenario(4, 4) == ScenarioKind::multi_impersonation_multi_dodging);
  for (int k = 0; k < 3; ++k) {
    for (int l = 0; l < 3; ++l) {
      const auto kind = classify_scenario(k, l);
      CHECK(parse_scenario_kind(to_string(kind)) == kind);
    }
  }
  CHECK_THROWS_AS(parse_scenario_kind("mega"), ConfigError);

  auto c = quick(3, 0);
  c.kind = ScenarioKind::single_dodging;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.kind = ScenarioKind::multi_impersonation;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("null attack runs no search") {
  const auto r = run_scenario(quick(0, 0));
  CHECK(r.metrics.empty());
  CHECK(r.histories.empty());
  REQUIRE(r.notes.size() == 1);
  CHECK(r.notes[0].find("any valid input is a solution") != std::string::npos);
}

TEST_CASE("single impersonation succeeds in every repetition") {
  const auto r = run_scenario(quick(1, 0, 10, 2));
  int rows = 0;
  for (const auto& m : r.metrics) {
    if (m.repetition == "mean") continue;
    ++rows;
    CHECK(m.coverage == 100.0);
  }
  CHECK(rows == 10);
  CHECK(r.mean_coverage("single_impersonation", 1, SetRole::match) == 100.0);
}

TEST_CASE("single dodging succeeds") {
  const auto r = run_scenario(quick(0, 1, 10, 3));
  int dodged = 0;
  for (const auto& m : r.metrics) {
    if (m.repetition != "mean" && m.role == SetRole::dodge && m.coverage == 0.0) ++dodged;
  }
  CHECK(dodged >= 9);
}

TEST_CASE("mean rows average coverage and sum counts") {
  auto c = quick(6, 2, 3, 4);
  c.data.synth.clusters = 3;
  c.data.synth.radius = 0.5;
  const auto r = run_scenario(c);
  double sum = 0.0;
  std::size_t matched = 0;
  for (int rep = 0; rep < 3; ++rep) {
    const auto* row = find_row(r, std::to_string(rep), 1, SetRole::match);
    REQUIRE(row);
    CHECK(row->total == 6);
    sum += row->coverage;
    matched += row->matched;
  }
  const auto* mean = find_row(r, "mean", 1, SetRole::match);
  REQUIRE(mean);
  CHECK(mean->coverage == doctest::Approx(sum / 3.0));
  CHECK(mean->matched == matched);
  CHECK(mean->total == 18);
  CHECK(r.histories.size() == 3);
  CHECK(r.histories[0].best_fitness.size() == 150);
}

TEST_CASE("overlapping identities are rejected") {
  SynthSpec s;
  s.count = 4;
  s.seed = 3;
  const auto set = synth_dataset(s);
  auto c = quick(4, 4);
  c.data.match = set.with_role(SetRole::match);
  c.data.dodge = set.with_role(SetRole::dodge);
  CHECK_THROWS_AS(run_scenario(c), ConfigError);
}

TEST_CASE("pool too small") {
  auto c = quick(5, 5);
  SynthSpec s;
  s.count = 6;
  c.data.pool = synth_dataset(s);
  CHECK_THROWS_AS(run_scenario(c), ConfigError);
}

TEST_CASE("unseen generalization") {
  SUBCASE("unseen equal to match") {
    SynthSpec s;
    s.clusters = 2;
    s.radius = 0.4;
    s.count = 8;
    s.seed = 2;
    const auto set = synth_dataset(s);
    auto c = quick(8, 0);
    c.data.match = set.with_role(SetRole::match);
    c.data.unseen = set.with_role(SetRole::unseen);
    CHECK_THROWS_AS(run_unseen_generalization(8, 8, c), ConfigError);
    c.search.allow_shared_labels = true;
    const auto r = run_unseen_generalization(8, 8, c);
    CHECK(r.kind == "unseen_generalization");
    CHECK(find_row(r, "0", 1, SetRole::unseen)->coverage == find_row(r, "0", 1, SetRole::match)->coverage);
  }
  SUBCASE("unseen drawn from the same planted cap") {
    const auto r = run_unseen_generalization(10, 10, quick(10, 0, 3, 5));
    const double m = r.mean_coverage("multi_impersonation", 1, SetRole::match).value();
    const double u = r.mean_coverage("multi_impersonation", 1, SetRole::unseen).value();
    CHECK(std::abs(m - u) <= 10.0);
  }
  SUBCASE("unseen planted far from the attack") {
    SynthSpec s;
    s.count = 10;
    s.seed = 6;
    const auto match = synth_dataset(s);
    EmbeddingSet far(SetRole::unseen, match.dimension());
    for (const auto& rec : match.records()) far.add("far_" + rec.id, "far_" + rec.label, -rec.vector);
    auto c = quick(10, 0);
    c.data.match = match.with_role(SetRole::match);
    c.data.unseen = far;
    const auto r = run_unseen_generalization(10, 10, c);
    CHECK(find_row(r, "0", 1, SetRole::match)->coverage == 100.0);
    CHECK(find_row(r, "0", 1, SetRole::unseen)->coverage == 0.0);
  }
  CHECK_THROWS_AS(run_unseen_generalization(5, 0, quick(5, 0)), ConfigError);
}

TEST_CASE("phase 2 rows and inversion summaries") {
  auto c = quick(2, 1, 1, 9);
  c.phase2 = true;
  c.inversion.iterations = 50;
  c.mapper_shape = MapperShape{8, 32, 64};
  const auto r = run_scenario(c);
  CHECK(find_row(r, "0", 2, SetRole::match) != nullptr);
  CHECK(find_row(r, "0", 2, SetRole::dodge) != nullptr);
  REQUIRE(r.inversions.size() == 1);
  CHECK(r.inversions[0].max_deviation <= c.inversion.epsilon);

  c.mapper_shape.dimension = 32;
  CHECK_THROWS_AS(run_scenario(c), ConfigError);
}

TEST_CASE("attacker face in the dodge set") {
  auto c = quick(0, 0, 2, 4);
  c.data.attacker_in_dodge = true;
  c.mapper_shape = MapperShape{8, 32, 64};
  CHECK(c.effective_kind() == ScenarioKind::single_dodging);
  const auto r = run_scenario(c);
  const auto* row = find_row(r, "mean", 1, SetRole::dodge);
  REQUIRE(row);
  CHECK(row->total == 2);
}

TEST_CASE("repetition rows do not depend on the thread count") {
  auto c = quick(5, 2, 3, 7);
  const auto a = run_scenario(c);
  c.search.es.threads = 3;
  const auto b = run_scenario(c);
  std::ostringstream ja, jb;
  write_report(a, ja, ReportFormat::json);
  write_report(b, jb, ReportFormat::json);
  CHECK(ja.str() == jb.str());
}

TEST_CASE("config documents") {
  auto c = quick(5, 2, 3, 11);
  c.search.fitness.gamma = 0.5;
  c.search.fitness.th2 = Threshold(1.1);
  c.phase2 = true;
  c.inversion.epsilon = 0.05;
  c.data.synth.clusters = 4;
  const auto doc = nlohmann::json::parse(scenario_to_json(c).dump());
  const auto back = scenario_from_json(doc);
  CHECK(scenario_to_json(back) == scenario_to_json(c));
  CHECK(back.search.fitness.gamma == 0.5);
  CHECK(back.kind == ScenarioKind::multi_impersonation_multi_dodging);

  CHECK_THROWS_AS(scenario_from_json(nlohmann::json{{"fmt", "cfg"}, {"v", 2}}), ConfigError);
  CHECK_THROWS_AS(scenario_from_json(nlohmann::json{{"fmt", "report"}, {"v", 1}}), ConfigError);
  CHECK_THROWS_AS(
      scenario_from_json(nlohmann::json{{"fmt", "cfg"}, {"v", 1}, {"match_size", "ten"}}), ConfigError);
  const auto partial = scenario_from_json(nlohmann::json{{"fmt", "cfg"}, {"v", 1}, {"repetitions", 4}}, c);
  CHECK(partial.repetitions == 4);
  CHECK(partial.match_size == 5);
}

TEST_CASE("sweep specs") {
  CHECK_THROWS_AS((SweepSpec{SweepAxis::gamma, {}, 1}.validate()), ConfigError);
  CHECK_THROWS_AS((SweepSpec{SweepAxis::gamma, {0.5, 0.3}, 1}.validate()), ConfigError);
  CHECK_THROWS_AS((SweepSpec{SweepAxis::gamma, {0.5, 1.2}, 1}.validate()), ConfigError);
  CHECK_THROWS_AS((SweepSpec{SweepAxis::cluster_count, {1, 2.5}, 1}.validate()), ConfigError);
  CHECK_THROWS_AS((SweepSpec{SweepAxis::th2_percent, {1.0, 2.5}, 1}.validate()), ConfigError);
  CHECK_THROWS_AS((SweepSpec{SweepAxis::gamma, {0.5}, 0}.validate()), ConfigError);
  for (auto axis : {SweepAxis::th2_percent, SweepAxis::gamma, SweepAxis::cluster_count, SweepAxis::match_size}) {
    CHECK(parse_sweep_axis(to_string(axis)) == axis);
  }
  CHECK_THROWS_AS(parse_sweep_axis("beta"), ConfigError);
}

TEST_CASE("threshold sweep rows carry the increase") {
  auto base = quick(4, 2);
  base.search.es.generations = 30;
  const auto r = run_sweep({SweepAxis::th2_percent, {1.055, 1.086, 1.097, 1.107, 1.118}, 1}, base);
  REQUIRE(r.table.size() == 5);
  const std::vector<double> expected{0, 3, 4, 5, 6};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(r.table[i].increase_percent == std::optional<double>(expected[i]));
    CHECK(r.table[i].match_coverage.has_value());
    CHECK(r.table[i].dodge_coverage.has_value());
  }
}

TEST_CASE("sweeps share seeds across values") {
  auto base = quick(6, 0, 2, 3);
  base.search.es.generations = 40;
  const auto r = run_sweep({SweepAxis::gamma, {0.5, 0.9}, 2}, base);
  // gamma only rescales an impersonation-only fitness, so the search path
  // and therefore every row coincide.
  REQUIRE(r.table.size() == 2);
  CHECK(r.table[0].match_coverage == r.table[1].match_coverage);
  CHECK(r.histories[0].best_fitness.size() == 40);
}
