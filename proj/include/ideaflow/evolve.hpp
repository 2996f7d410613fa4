#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ideaflow/backends.hpp"
#include "ideaflow/corpus.hpp"
#include "ideaflow/idea.hpp"
#include "ideaflow/litgraph.hpp"
#include "ideaflow/random.hpp"

namespace ideaflow {

struct EvolutionConfig {
  std::size_t population_size = 0;  // 0: size of the initial population
  std::size_t offspring = 0;        // 0: population size
  double rho = 0.3;
  std::size_t subset_size = 0;      // 0: max(2, ceil(|C| / 4))
  std::size_t t_max = 20;
  double std_threshold = 0.05;
  bool std_rule = true;
  /// Stop once |mean(t) - mean(t-1)| falls below this; disabled when unset.
  std::optional<double> delta_threshold;
  IslandOptions island;
  int max_backend_retries = 3;

  void validate() const;
};

struct Population {
  std::vector<ScoredIdea> members;
  int generation = 0;
};

struct GenerationStats {
  int generation = 0;
  double mean = 0.0;
  double std = 0.0;   // population standard deviation
  double best = 0.0;
};

GenerationStats population_stats(const std::vector<ScoredIdea>& members, int generation);

/// Fitness-proportional draw of two distinct members, returned as indices in
/// fitness-descending order (ties: lower id first). All-zero weights fall
/// back to uniform.
std::pair<std::size_t, std::size_t> select_parents(const std::vector<ScoredIdea>& population,
                                                   Rng& rng);

/// Offspring of two distinct parents with Crossover provenance. Context
/// literature is the union of both parents' trajectories.
Idea crossover(const Query& query, const ScoredIdea& parent_a, const ScoredIdea& parent_b,
               const Corpus& corpus, const IdeaGenerator& generator, std::string offspring_id,
               int generation);

struct MutationOutcome {
  Idea idea;
  bool mutated = false;
  bool shortfall = false;
  IslandSample island;
};

/// With probability rho, samples an isolation island away from `excluded`
/// and asks the generator for a mutated idea with id `mutant_id`; otherwise
/// returns the input unchanged. Exactly one uniform draw precedes the
/// island sampling.
MutationOutcome maybe_mutate(const Query& query, const Idea& idea, double rho,
                             const LiteratureGraph& graph, const Corpus& corpus,
                             const std::set<std::string>& excluded,
                             const IslandOptions& island, const IdeaGenerator& generator,
                             Rng& rng, std::string mutant_id);

/// Trajectory docs plus their graph neighbors.
std::set<std::string> neighborhood_of(const LiteratureGraph& graph,
                                      const std::vector<const Idea*>& ideas);

struct TournamentRound {
  std::vector<std::string> drawn;  // idea ids in draw order
  std::string winner;
};

std::size_t default_subset_size(std::size_t pool_size);

/// Survival selection: N rounds, each drawing subset_size distinct members
/// of the remaining pool and promoting the fittest (ties: lower id).
std::vector<ScoredIdea> tournament_select(std::vector<ScoredIdea> candidates, std::size_t n,
                                          std::size_t subset_size, Rng& rng,
                                          std::vector<TournamentRound>* trace = nullptr);

struct EvolutionResult {
  std::vector<Population> generations;  // generation 0 is the initial population
  std::vector<GenerationStats> stats;
  std::vector<Idea> intermediates;      // crossover offspring that were then mutated
  std::string stop_reason;
  std::optional<std::string> abort_reason;
};

/// Generation loop: M offspring by crossover and maybe_mutate, scoring,
/// merge with parents, tournament survival back to N.
EvolutionResult run_evolution(Population initial, const Query& query,
                              const LiteratureGraph& graph, const Corpus& corpus,
                              const Backends& backends, const EvolutionConfig& config, Rng& rng);

/// 1 - (similar pairs / all pairs), where a pair is similar when the cosine
/// of its embeddings exceeds `threshold`.
double diversity_score(const std::vector<Idea>& ideas, const Embedder& embedder,
                       double threshold = 0.65);
double diversity_from_embeddings(const std::vector<std::vector<double>>& embeddings,
                                 double threshold = 0.65);

/// Mean of (rank - 1) / n over the target ranks; each rank in [1, n + 1].
double insight_score(const std::vector<int>& target_ranks, int n);

nlohmann::json population_to_json(const Population& population);
Population population_from_json(const nlohmann::json& j, const RewardModel* reward = nullptr);

}  // namespace ideaflow
