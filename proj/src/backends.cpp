#include "ideaflow/backends.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "ideaflow/errors.hpp"
#include "ideaflow/random.hpp"

namespace ideaflow {

FitnessRecord evaluate_fitness(const RewardModel& reward, const Idea& idea) {
  const RewardResponse r = reward.score_idea(idea);
  return make_fitness(r.novelty_score, r.feasibility_score);
}

// ---------------------------------------------------------------------------

namespace {

void add_hashed(std::vector<double>& acc, std::uint64_t key, double weight) {
  for (std::size_t i = 0; i < acc.size(); ++i) {
    const double u = unit_from_bits(splitmix64(key ^ splitmix64(i + 1)));
    acc[i] += weight * (2.0 * u - 1.0);
  }
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::uint64_t mix(std::uint64_t h, std::uint64_t v) { return splitmix64(h ^ splitmix64(v)); }

std::size_t bin_of(double x, std::size_t bins) {
  const double t = (std::clamp(x, -1.0, 1.0) + 1.0) / 2.0;
  return std::min(bins - 1, static_cast<std::size_t>(t * static_cast<double>(bins)));
}

}  // namespace

MockEmbedder::MockEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim == 0) throw ValidationError("embedding dimension must be positive");
}

std::vector<double> MockEmbedder::embed_text(std::string_view text) const {
  if (text.empty()) throw ValidationError("cannot embed empty text");
  std::vector<double> v(dim_, 0.0);
  for (const auto& tok : tokenize(text)) add_hashed(v, mix(seed_, fnv1a64(tok)), 1.0);
  add_hashed(v, mix(seed_ ^ 0x5bd1e995ULL, fnv1a64(text)), 0.25);
  if (l2_norm(v) == 0.0) v[0] = 1.0;
  normalize_in_place(v);
  return v;
}

// ---------------------------------------------------------------------------

MockLandscape MockLandscape::seeded(std::size_t genome_dim, std::uint64_t seed) {
  if (genome_dim == 0) throw ValidationError("genome dimension must be positive");
  Rng rng(seed);
  MockLandscape l;
  l.target.resize(genome_dim);
  // Radius reaches past the farthest corner of [-1, 1]^d, so reward has no flat zero region there.
  double corner2 = 0.0;
  for (double& t : l.target) {
    t = uniform01(rng) - 0.5;
    corner2 += (1.0 + std::abs(t)) * (1.0 + std::abs(t));
  }
  l.radius = std::sqrt(corner2) * (1.0 + 0.25 * uniform01(rng));
  return l;
}

double MockLandscape::reward(std::span<const double> genome) const {
  if (genome.size() != target.size())
    throw ValidationError("genome dimension " + std::to_string(genome.size()) +
                          " does not match landscape dimension " + std::to_string(target.size()));
  double d2 = 0.0;
  for (std::size_t i = 0; i < genome.size(); ++i) d2 += (genome[i] - target[i]) * (genome[i] - target[i]);
  return 1.0 - std::min(1.0, std::sqrt(d2) / radius);
}

// ---------------------------------------------------------------------------

MockGenerator::MockGenerator(std::uint64_t seed, MockGeneratorOptions options)
    : seed_(seed), options_(options) {
  if (options_.genome_dim == 0) throw ValidationError("genome dimension must be positive");
}

std::vector<double> MockGenerator::hashed_point(std::uint64_t key) const {
  std::vector<double> g(options_.genome_dim);
  for (std::size_t d = 0; d < g.size(); ++d)
    g[d] = 2.0 * unit_from_bits(mix(mix(seed_, key), d + 1)) - 1.0;
  return g;
}

std::vector<double> MockGenerator::doc_genome(std::string_view doc_id) const {
  return hashed_point(mix(fnv1a64("doc"), fnv1a64(doc_id)));
}

Idea MockGenerator::from_genome(const Query& query, std::vector<double> genome) const {
  // Words come from coarse and fine bins of each coordinate, so nearby
  // genomes produce overlapping text.
  std::string coarse;
  std::string fine;
  std::string coords;
  for (std::size_t d = 0; d < genome.size(); ++d) {
    coarse += fmt::format(" d{}c{}", d, bin_of(genome[d], 4));
    fine += fmt::format(" d{}f{}", d, bin_of(genome[d], 16));
    coords += fmt::format("{}{:.4f}", d ? ", " : "", genome[d]);
  }
  Idea idea;
  idea.motivation = fmt::format("Regime{} for {}.", coarse, query.text);
  idea.method = fmt::format("Design{} at ({}).", fine, coords);
  idea.experimental_plan = fmt::format("Evaluate{}{}.", coarse, fine);
  idea.genome = std::move(genome);
  return idea;
}

Idea MockGenerator::generate_initial(const Query& query, DocRefs trajectory) const {
  if (trajectory.empty()) throw ValidationError("cannot generate from an empty trajectory");
  std::uint64_t key = fnv1a64(query.text);
  for (const PatentDoc* doc : trajectory) key = mix(key, fnv1a64(doc->id));
  return from_genome(query, hashed_point(key));
}

Idea MockGenerator::crossover_idea(const Query& query, const ScoredIdea& parent_a,
                                   const ScoredIdea& parent_b, DocRefs) const {
  const auto& ga = parent_a.idea.genome;
  const auto& gb = parent_b.idea.genome;
  if (!ga || !gb || ga->size() != gb->size())
    throw ValidationError("mock crossover needs parent genomes of equal dimension");
  std::vector<double> child(ga->size());
  for (std::size_t i = 0; i < child.size(); ++i) child[i] = ((*ga)[i] + (*gb)[i]) / 2.0;
  return from_genome(query, std::move(child));
}

Idea MockGenerator::mutate_idea(const Query& query, const Idea& idea, std::optional<double>,
                                DocRefs island) const {
  if (!idea.genome) throw ValidationError("mock mutation needs a genome");
  if (island.empty()) {
    Idea same = idea;
    same.warnings.push_back("empty isolation island: idea passed through unchanged");
    return same;
  }
  const std::size_t dim = idea.genome->size();
  std::vector<double> centroid(dim, 0.0);
  std::uint64_t key = fnv1a64(idea.id);
  for (const PatentDoc* doc : island) {
    const auto g = doc_genome(doc->id);
    for (std::size_t i = 0; i < dim; ++i) centroid[i] += g[i] / static_cast<double>(island.size());
    key = mix(key, fnv1a64(doc->id));
  }
  const auto noise = hashed_point(mix(key, fnv1a64("jitter")));
  std::vector<double> out(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    out[i] = (*idea.genome)[i] + options_.mutation_step * (centroid[i] - (*idea.genome)[i]) +
             options_.jitter * noise[i];
  }
  return from_genome(query, std::move(out));
}

// ---------------------------------------------------------------------------

MockRewardModel::MockRewardModel(MockLandscape landscape) : landscape_(std::move(landscape)) {}

RewardResponse MockRewardModel::score_idea(const Idea& idea) const {
  if (!idea.genome) throw ValidationError("mock reward model needs a genome on idea '" + idea.id + "'");
  const double r = landscape_.reward(*idea.genome);
  RewardResponse resp;
  resp.novelty_score = 1.0 + 4.0 * r;
  resp.feasibility_score = 1.0 + 4.0 * r;
  resp.raw_text = nlohmann::json{{"novelty_score", resp.novelty_score},
                                 {"feasibility_score", resp.feasibility_score}}
                      .dump();
  return resp;
}

}  // namespace ideaflow
