#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace ideaflow {

enum class Operator { kInitial, kCrossover, kMutation };

const char* to_string(Operator op) noexcept;
Operator operator_from_string(const std::string& s);

struct Provenance {
  Operator op = Operator::kInitial;
  std::vector<std::string> parent_ids;
  std::vector<std::string> trajectory_ids;  // literature the idea was conditioned on
  std::vector<std::string> island_ids;      // isolation-island docs injected by mutation
  int generation = 0;

  bool operator==(const Provenance&) const = default;
};

/// A structured idea: motivation, method, experimental plan.
struct Idea {
  std::string id;
  std::string motivation;
  std::string method;
  std::string experimental_plan;
  std::string auxiliary;               // innovation directions, kept but not scored
  std::optional<std::vector<double>> genome;  // mock-backend payload
  Provenance provenance;
  std::vector<std::string> warnings;   // parse degradations reported by the backend

  /// Sections rendered as one block, used for prompts and embeddings.
  std::string text() const;

  bool operator==(const Idea&) const = default;
};

/// Novelty and feasibility on the 1-5 scale plus the aggregated fitness.
struct FitnessRecord {
  double novelty = 1.0;
  double feasibility = 1.0;
  double fitness = 0.0;

  bool operator==(const FitnessRecord&) const = default;
};

struct ScoredIdea {
  Idea idea;
  FitnessRecord fitness;

  bool operator==(const ScoredIdea&) const = default;
};

/// Mean of the two 1-5 scores rescaled onto [0, 1]. Throws ValidationError
/// when either input lies outside [1, 5].
double aggregate_fitness(double novelty, double feasibility);

FitnessRecord make_fitness(double novelty, double feasibility);

void to_json(nlohmann::json& j, const Idea& idea);
void from_json(const nlohmann::json& j, Idea& idea);
void to_json(nlohmann::json& j, const FitnessRecord& f);
void from_json(const nlohmann::json& j, FitnessRecord& f);

}  // namespace ideaflow
