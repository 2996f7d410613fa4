#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ideaflow/corpus.hpp"
#include "ideaflow/idea.hpp"

namespace ideaflow {

using DocRefs = std::span<const PatentDoc* const>;

/// Raw 1-5 scores as returned by a reward backend, before aggregation.
struct RewardResponse {
  double novelty_score = 1.0;
  double feasibility_score = 1.0;
  std::string raw_text;
  std::vector<std::string> warnings;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;
  /// Unit-norm vector of length dim().
  virtual std::vector<double> embed_text(std::string_view text) const = 0;
};

/// Produces idea content. Implementations fill the text sections (and genome
/// for mocks); the engines assign ids and provenance.
class IdeaGenerator {
 public:
  virtual ~IdeaGenerator() = default;
  virtual Idea generate_initial(const Query& query, DocRefs trajectory) const = 0;
  virtual Idea crossover_idea(const Query& query, const ScoredIdea& parent_a,
                              const ScoredIdea& parent_b, DocRefs context) const = 0;
  virtual Idea mutate_idea(const Query& query, const Idea& idea, std::optional<double> score,
                           DocRefs island) const = 0;
};

class RewardModel {
 public:
  virtual ~RewardModel() = default;
  virtual RewardResponse score_idea(const Idea& idea) const = 0;
};

struct Backends {
  std::shared_ptr<const IdeaGenerator> generator;
  std::shared_ptr<const RewardModel> reward;
  std::shared_ptr<const Embedder> embedder;
};

/// Scores an idea and folds the two components into a FitnessRecord.
FitnessRecord evaluate_fitness(const RewardModel& reward, const Idea& idea);

// ---------------------------------------------------------------------------
// Deterministic mocks. Every method is a pure function of its inputs and the
// seed the mock was built with.

/// Bag-of-tokens hashing embedder with a small whole-string component, so
/// texts sharing words are close while distinct strings stay distinct.
class MockEmbedder final : public Embedder {
 public:
  MockEmbedder(std::size_t dim, std::uint64_t seed);
  std::size_t dim() const override { return dim_; }
  std::vector<double> embed_text(std::string_view text) const override;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Reward landscape over genomes: r(g) = 1 - min(1, |g - target| / radius).
struct MockLandscape {
  std::vector<double> target;
  double radius = 1.0;

  /// Target drawn uniformly from [-0.5, 0.5]^dim and radius from [1.5, 2.5].
  static MockLandscape seeded(std::size_t genome_dim, std::uint64_t seed);
  double reward(std::span<const double> genome) const;
};

struct MockGeneratorOptions {
  std::size_t genome_dim = 2;
  double mutation_step = 0.5;
  double jitter = 0.05;  // half-width of the uniform jitter added on mutation
};

/// Genome-level generator: initial genomes hash (query, trajectory) into
/// [-1, 1]^dim, crossover takes the elementwise mean, mutation steps toward
/// the island centroid plus seeded jitter.
class MockGenerator final : public IdeaGenerator {
 public:
  MockGenerator(std::uint64_t seed, MockGeneratorOptions options = {});

  Idea generate_initial(const Query& query, DocRefs trajectory) const override;
  Idea crossover_idea(const Query& query, const ScoredIdea& parent_a, const ScoredIdea& parent_b,
                      DocRefs context) const override;
  Idea mutate_idea(const Query& query, const Idea& idea, std::optional<double> score,
                   DocRefs island) const override;

  /// Genome a document contributes as an island member.
  std::vector<double> doc_genome(std::string_view doc_id) const;
  const MockGeneratorOptions& options() const noexcept { return options_; }

 private:
  std::vector<double> hashed_point(std::uint64_t key) const;
  Idea from_genome(const Query& query, std::vector<double> genome) const;

  std::uint64_t seed_;
  MockGeneratorOptions options_;
};

/// Scores a genome on the landscape; both components equal 1 + 4 r(g).
class MockRewardModel final : public RewardModel {
 public:
  explicit MockRewardModel(MockLandscape landscape);
  RewardResponse score_idea(const Idea& idea) const override;
  const MockLandscape& landscape() const noexcept { return landscape_; }

 private:
  MockLandscape landscape_;
};

}  // namespace ideaflow
