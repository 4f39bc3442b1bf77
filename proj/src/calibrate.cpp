#include <algorithm>
#include <cmath>
#include <random>
#include <unordered_map>

#include "dodgep/rng.hpp"
#include "dodgep/scenario.hpp"

namespace dodgep {

Calibration calibrate_threshold(const std::vector<double>& mismatch_distances, double far,
                                const std::vector<double>& match_distances) {
  if (mismatch_distances.empty()) throw ConfigError("calibration needs at least one mismatch pair");
  if (!(far > 0.0 && far < 1.0)) throw ConfigError("target FAR must lie in (0, 1)");
  for (double d : mismatch_distances) {
    if (!std::isfinite(d) || d < 0.0) throw NumericError("invalid mismatch distance");
  }

  std::vector<double> sorted = mismatch_distances;
  std::sort(sorted.begin(), sorted.end());
  const auto n = sorted.size();
  const double nd = static_cast<double>(n);
  auto q = static_cast<std::size_t>(std::floor(far * nd * (1.0 + 1e-12)));
  while (q > 0 && static_cast<double>(q) / nd > far) --q;

  double th = 0.0;
  if (q >= 1) {
    th = sorted[q - 1];
    // Ties beyond position q would push the acceptance count past q.
    if (q < n && sorted[q] == th) {
      const auto first = std::lower_bound(sorted.begin(), sorted.end(), th) - sorted.begin();
      th = first > 0 ? sorted[static_cast<std::size_t>(first) - 1] : sorted.front() * (1.0 - 1e-9);
    }
  } else {
    th = sorted.front() * (1.0 - 1e-9);
  }
  if (!(th > 0.0)) throw ConfigError("calibrated threshold is not positive (identical mismatch pair?)");
  if (th > 2.0) th = 2.0;

  Calibration out;
  out.threshold = Threshold(th);
  out.mismatch_pairs = n;
  out.allowed_false_accepts = q;
  const auto accepted = std::upper_bound(sorted.begin(), sorted.end(), th) - sorted.begin();
  out.achieved_far = static_cast<double>(accepted) / nd;
  if (!match_distances.empty()) {
    const auto hits = std::count_if(match_distances.begin(), match_distances.end(),
                                    [&](double d) { return d <= th; });
    out.true_accept_rate = static_cast<double>(hits) / static_cast<double>(match_distances.size());
  }
  return out;
}

Calibration calibrate_threshold(const std::vector<Pair>& pairs, const EmbeddingSet& embeddings,
                                double far) {
  require_resolvable(pairs, embeddings);
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < embeddings.size(); ++i) index.emplace(embeddings[i].id, i);
  std::vector<double> mismatch, match;
  for (const auto& p : pairs) {
    const double d = distance(embeddings[index.at(p.id_a)].vector, embeddings[index.at(p.id_b)].vector);
    (p.label == PairLabel::mismatch ? mismatch : match).push_back(d);
  }
  return calibrate_threshold(mismatch, far, match);
}

Calibration calibrate_mapper_threshold(const ToyMapper& mapper, double far, int pairs,
                                       std::uint64_t seed, double same_identity_noise) {
  if (pairs < 1) throw ConfigError("calibration needs at least one pair");
  const int side = mapper.shape().side;
  std::vector<double> mismatch, match;
  Rng noise_rng = make_rng(seed, {0x6e6f6973ULL});
  std::uniform_real_distribution<double> noise(-same_identity_noise, same_identity_noise);
  for (int i = 0; i < pairs; ++i) {
    const auto a = random_image(side, derive_seed(seed, {0, static_cast<std::uint64_t>(i)}));
    const auto b = random_image(side, derive_seed(seed, {1, static_cast<std::uint64_t>(i)}));
    const auto ea = mapper.forward(a);
    mismatch.push_back(distance(ea, mapper.forward(b)));
    Eigen::VectorXd twin = a.values();
    for (auto& v : twin) v = std::clamp(v + noise(noise_rng), -1.0, 1.0);
    match.push_back(distance(ea, mapper.forward(ImageTensor(side, std::move(twin)))));
  }
  return calibrate_threshold(mismatch, far, match);
}

}  // namespace dodgep
