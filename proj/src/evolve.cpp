#include "ideaflow/evolve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "ideaflow/errors.hpp"

namespace ideaflow {

void EvolutionConfig::validate() const {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ValidationError("evolution.rho must lie in [0, 1]");
  if (!(std_threshold >= 0.0)) throw ValidationError("evolution.std_threshold must be >= 0");
  if (delta_threshold && !(*delta_threshold >= 0.0))
    throw ValidationError("evolution.delta_threshold must be >= 0");
  if (island.size == 0) throw ValidationError("island.size must be >= 1");
  if (max_backend_retries < 1) throw ValidationError("evolution.max_backend_retries must be >= 1");
}

namespace {

/// Higher fitness first; equal fitness goes to the lower id.
bool fitter(const ScoredIdea& a, const ScoredIdea& b) {
  if (a.fitness.fitness != b.fitness.fitness) return a.fitness.fitness > b.fitness.fitness;
  return a.idea.id < b.idea.id;
}

std::size_t weighted_pick(const std::vector<ScoredIdea>& pop, const std::vector<std::size_t>& idx,
                          Rng& rng) {
  double total = 0.0;
  for (auto i : idx) total += pop[i].fitness.fitness;
  if (!(total > 0.0)) return idx[uniform_index(rng, idx.size())];
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = idx.front();
  for (auto i : idx) {
    const double w = pop[i].fitness.fitness;
    if (w <= 0.0) continue;
    last_positive = i;
    acc += w;
    if (u < acc) return i;
  }
  return last_positive;
}

}  // namespace

GenerationStats population_stats(const std::vector<ScoredIdea>& members, int generation) {
  GenerationStats s;
  s.generation = generation;
  if (members.empty()) return s;
  double sum = 0.0;
  s.best = members.front().fitness.fitness;
  for (const auto& m : members) {
    sum += m.fitness.fitness;
    s.best = std::max(s.best, m.fitness.fitness);
  }
  s.mean = sum / static_cast<double>(members.size());
  double ss = 0.0;
  for (const auto& m : members) ss += (m.fitness.fitness - s.mean) * (m.fitness.fitness - s.mean);
  s.std = std::sqrt(ss / static_cast<double>(members.size()));
  return s;
}

std::pair<std::size_t, std::size_t> select_parents(const std::vector<ScoredIdea>& population,
                                                   Rng& rng) {
  if (population.size() < 2) throw ValidationError("parent selection needs at least 2 members");
  std::vector<std::size_t> idx(population.size());
  std::iota(idx.begin(), idx.end(), 0);
  const std::size_t first = weighted_pick(population, idx, rng);
  idx.erase(std::find(idx.begin(), idx.end(), first));
  const std::size_t second = weighted_pick(population, idx, rng);
  if (fitter(population[second], population[first])) return {second, first};
  return {first, second};
}

Idea crossover(const Query& query, const ScoredIdea& parent_a, const ScoredIdea& parent_b,
               const Corpus& corpus, const IdeaGenerator& generator, std::string offspring_id,
               int generation) {
  if (parent_a.idea.id == parent_b.idea.id)
    throw ValidationError("crossover needs two distinct parents");
  std::set<std::string> context_ids(parent_a.idea.provenance.trajectory_ids.begin(),
                                    parent_a.idea.provenance.trajectory_ids.end());
  context_ids.insert(parent_b.idea.provenance.trajectory_ids.begin(),
                     parent_b.idea.provenance.trajectory_ids.end());
  std::vector<const PatentDoc*> context;
  for (const auto& id : context_ids)
    if (corpus.contains(id)) context.push_back(&corpus.at(id));

  Idea child = generator.crossover_idea(query, parent_a, parent_b, context);
  child.id = std::move(offspring_id);
  child.provenance = Provenance{Operator::kCrossover,
                                {parent_a.idea.id, parent_b.idea.id},
                                {context_ids.begin(), context_ids.end()},
                                {},
                                generation};
  return child;
}

std::set<std::string> neighborhood_of(const LiteratureGraph& graph,
                                      const std::vector<const Idea*>& ideas) {
  std::set<std::string> out;
  for (const Idea* idea : ideas) {
    for (const auto& id : idea->provenance.trajectory_ids) {
      out.insert(id);
      if (!graph.contains(id)) continue;
      for (const auto& nb : graph.neighbors(id)) out.insert(nb);
    }
  }
  return out;
}

MutationOutcome maybe_mutate(const Query& query, const Idea& idea, double rho,
                             const LiteratureGraph& graph, const Corpus& corpus,
                             const std::set<std::string>& excluded,
                             const IslandOptions& island, const IdeaGenerator& generator,
                             Rng& rng, std::string mutant_id) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ValidationError("rho must lie in [0, 1]");
  MutationOutcome out;
  if (!(uniform01(rng) < rho)) {
    out.idea = idea;
    return out;
  }
  out.island = sample_isolation_island(graph, corpus, excluded, island, rng);
  out.shortfall = out.island.shortfall;
  if (out.island.docs.empty()) {
    out.idea = idea;
    out.idea.warnings.push_back("empty isolation island: mutation skipped");
    return out;
  }
  std::vector<const PatentDoc*> docs;
  for (const auto& id : out.island.docs) docs.push_back(&corpus.at(id));
  out.idea = generator.mutate_idea(query, idea, std::nullopt, docs);
  out.idea.id = std::move(mutant_id);
  out.idea.provenance = Provenance{Operator::kMutation,
                                   {idea.id},
                                   idea.provenance.trajectory_ids,
                                   out.island.docs,
                                   idea.provenance.generation};
  if (out.shortfall)
    out.idea.warnings.push_back(fmt::format("isolation island short: {} of {} docs",
                                            out.island.docs.size(), island.size));
  out.mutated = true;
  return out;
}

std::size_t default_subset_size(std::size_t pool_size) {
  return std::max<std::size_t>(2, (pool_size + 3) / 4);
}

std::vector<ScoredIdea> tournament_select(std::vector<ScoredIdea> candidates, std::size_t n,
                                          std::size_t subset_size, Rng& rng,
                                          std::vector<TournamentRound>* trace) {
  if (candidates.size() < n)
    throw ValidationError(fmt::format("tournament needs {} candidates, got {}", n, candidates.size()));
  if (subset_size == 0) throw ValidationError("tournament subset size must be >= 1");
  std::vector<ScoredIdea> survivors;
  survivors.reserve(n);
  std::vector<std::size_t> idx;
  while (survivors.size() < n) {
    const std::size_t s = std::min(subset_size, candidates.size());
    idx.resize(candidates.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < s; ++i) std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
    std::size_t winner = idx[0];
    for (std::size_t i = 1; i < s; ++i)
      if (fitter(candidates[idx[i]], candidates[winner])) winner = idx[i];
    if (trace) {
      TournamentRound round;
      for (std::size_t i = 0; i < s; ++i) round.drawn.push_back(candidates[idx[i]].idea.id);
      round.winner = candidates[winner].idea.id;
      trace->push_back(std::move(round));
    }
    survivors.push_back(std::move(candidates[winner]));
    candidates.erase(candidates.begin() + static_cast<std::ptrdiff_t>(winner));
  }
  return survivors;
}

EvolutionResult run_evolution(Population initial, const Query& query,
                              const LiteratureGraph& graph, const Corpus& corpus,
                              const Backends& backends, const EvolutionConfig& config, Rng& rng) {
  config.validate();
  if (initial.members.empty()) throw ValidationError("initial population is empty");
  if (!backends.generator || !backends.reward)
    throw ValidationError("evolution needs generator and reward backends");

  std::size_t n = config.population_size ? config.population_size : initial.members.size();
  if (initial.members.size() > n) {
    std::stable_sort(initial.members.begin(), initial.members.end(), fitter);
    initial.members.resize(n);
  }
  n = std::min(n, initial.members.size());
  const std::size_t m_count = config.offspring ? config.offspring : n;

  EvolutionResult result;
  Population pop = std::move(initial);
  result.generations.push_back(pop);
  result.stats.push_back(population_stats(pop.members, pop.generation));

  const int start = pop.generation;
  int consecutive_failures = 0;
  while (true) {
    const int t = pop.generation;
    if (static_cast<std::size_t>(t - start) >= config.t_max) {
      result.stop_reason = "t_max";
      break;
    }
    // The spread rule looks at generated offspring, so it never fires on the input population.
    if (config.std_rule && t > start && result.stats.back().std < config.std_threshold) {
      result.stop_reason = "std_threshold";
      break;
    }
    if (config.delta_threshold && result.stats.size() >= 2) {
      const double delta = std::abs(result.stats.back().mean - result.stats[result.stats.size() - 2].mean);
      if (delta < *config.delta_threshold) {
        result.stop_reason = "delta_threshold";
        break;
      }
    }
    if (pop.members.size() < 2) {
      result.stop_reason = "population_too_small";
      break;
    }

    const int gen = t + 1;
    std::vector<ScoredIdea> offspring;
    for (std::size_t m = 1; m <= m_count && !result.abort_reason; ++m) {
      const auto [ia, ib] = select_parents(pop.members, rng);
      const ScoredIdea& pa = pop.members[ia];
      const ScoredIdea& pb = pop.members[ib];
      const std::string id = fmt::format("g{:02d}-o{:02d}", gen, m);
      try {
        Idea child = crossover(query, pa, pb, corpus, *backends.generator, id, gen);
        const auto excluded = neighborhood_of(graph, {&pa.idea, &pb.idea});
        auto mo = maybe_mutate(query, child, config.rho, graph, corpus, excluded, config.island,
                               *backends.generator, rng, id + "-m");
        if (mo.mutated) result.intermediates.push_back(std::move(child));
        const FitnessRecord fit = evaluate_fitness(*backends.reward, mo.idea);
        offspring.push_back({std::move(mo.idea), fit});
        consecutive_failures = 0;
      } catch (const BackendError& e) {
        if (++consecutive_failures >= config.max_backend_retries)
          result.abort_reason = fmt::format(
              "evolution aborted after {} consecutive backend failures; last error: {}",
              consecutive_failures, e.what());
      }
    }
    if (result.abort_reason) {
      result.stop_reason = "aborted";
      break;
    }

    std::vector<ScoredIdea> pool = pop.members;
    pool.insert(pool.end(), std::make_move_iterator(offspring.begin()),
                std::make_move_iterator(offspring.end()));
    const std::size_t subset = config.subset_size ? config.subset_size : default_subset_size(pool.size());
    pop.members = tournament_select(std::move(pool), n, subset, rng);
    pop.generation = gen;
    result.generations.push_back(pop);
    result.stats.push_back(population_stats(pop.members, gen));
  }
  return result;
}

double diversity_from_embeddings(const std::vector<std::vector<double>>& embeddings,
                                 double threshold) {
  if (embeddings.size() < 2) throw ValidationError("diversity needs at least 2 ideas");
  std::size_t similar = 0;
  std::size_t total = 0;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    for (std::size_t j = i + 1; j < embeddings.size(); ++j) {
      ++total;
      if (cosine_similarity(embeddings[i], embeddings[j]) > threshold) ++similar;
    }
  }
  return 1.0 - static_cast<double>(similar) / static_cast<double>(total);
}

double diversity_score(const std::vector<Idea>& ideas, const Embedder& embedder, double threshold) {
  if (ideas.size() < 2) throw ValidationError("diversity needs at least 2 ideas");
  std::vector<std::vector<double>> emb;
  emb.reserve(ideas.size());
  for (const auto& idea : ideas) emb.push_back(embedder.embed_text(idea.text()));
  return diversity_from_embeddings(emb, threshold);
}

double insight_score(const std::vector<int>& target_ranks, int n) {
  if (n < 1) throw ValidationError("insight score needs n >= 1");
  if (target_ranks.empty()) throw ValidationError("insight score needs at least one rank");
  double sum = 0.0;
  for (int r : target_ranks) {
    if (r < 1 || r > n + 1)
      throw ValidationError(fmt::format("rank {} outside [1, {}]", r, n + 1));
    sum += static_cast<double>(r - 1) / static_cast<double>(n);
  }
  return sum / static_cast<double>(target_ranks.size());
}

nlohmann::json population_to_json(const Population& population) {
  nlohmann::json members = nlohmann::json::array();
  for (const auto& m : population.members)
    members.push_back({{"idea", m.idea}, {"fitness", m.fitness}});
  return nlohmann::json{{"schema_version", 1},
                        {"generation", population.generation},
                        {"members", std::move(members)}};
}

Population population_from_json(const nlohmann::json& j, const RewardModel* reward) {
  Population pop;
  try {
    pop.generation = j.value("generation", 0);
    for (const auto& m : j.at("members")) {
      ScoredIdea s;
      s.idea = m.at("idea").get<Idea>();
      if (m.contains("fitness") && !m["fitness"].is_null()) {
        s.fitness = m["fitness"].get<FitnessRecord>();
      } else if (reward) {
        s.fitness = evaluate_fitness(*reward, s.idea);
      } else {
        throw ValidationError("population member '" + s.idea.id + "' has no fitness");
      }
      pop.members.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed population document: ") + e.what());
  }
  std::set<std::string> ids;
  for (const auto& m : pop.members)
    if (!ids.insert(m.idea.id).second)
      throw ValidationError("duplicate idea id '" + m.idea.id + "' in population");
  return pop;
}

}  // namespace ideaflow
