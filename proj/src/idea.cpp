#include "ideaflow/idea.hpp"

#include "ideaflow/errors.hpp"

namespace ideaflow {

const char* to_string(Operator op) noexcept {
  switch (op) {
    case Operator::kInitial:
      return "initial";
    case Operator::kCrossover:
      return "crossover";
    case Operator::kMutation:
      return "mutation";
  }
  return "initial";
}

Operator operator_from_string(const std::string& s) {
  if (s == "initial") return Operator::kInitial;
  if (s == "crossover") return Operator::kCrossover;
  if (s == "mutation") return Operator::kMutation;
  throw ValidationError("unknown operator '" + s + "'");
}

std::string Idea::text() const {
  std::string out;
  out += "Motivation:\n" + motivation + "\n\n";
  out += "Method:\n" + method + "\n\n";
  out += "Experimental plan:\n" + experimental_plan;
  return out;
}

double aggregate_fitness(double novelty, double feasibility) {
  if (!(novelty >= 1.0 && novelty <= 5.0) || !(feasibility >= 1.0 && feasibility <= 5.0))
    throw ValidationError("scores must lie in [1, 5], got novelty=" + std::to_string(novelty) +
                          " feasibility=" + std::to_string(feasibility));
  return ((novelty - 1.0) / 4.0 + (feasibility - 1.0) / 4.0) / 2.0;
}

FitnessRecord make_fitness(double novelty, double feasibility) {
  return FitnessRecord{novelty, feasibility, aggregate_fitness(novelty, feasibility)};
}

void to_json(nlohmann::json& j, const Idea& idea) {
  j = nlohmann::json{
      {"id", idea.id},
      {"motivation", idea.motivation},
      {"method", idea.method},
      {"experimental_plan", idea.experimental_plan},
      {"provenance",
       {{"operator", to_string(idea.provenance.op)},
        {"parent_ids", idea.provenance.parent_ids},
        {"trajectory_ids", idea.provenance.trajectory_ids},
        {"island_ids", idea.provenance.island_ids},
        {"generation", idea.provenance.generation}}},
  };
  if (!idea.auxiliary.empty()) j["auxiliary"] = idea.auxiliary;
  if (idea.genome) j["genome"] = *idea.genome;
  if (!idea.warnings.empty()) j["warnings"] = idea.warnings;
}

void from_json(const nlohmann::json& j, Idea& idea) {
  try {
    idea = Idea{};
    idea.id = j.at("id").get<std::string>();
    idea.motivation = j.value("motivation", "");
    idea.method = j.value("method", "");
    idea.experimental_plan = j.value("experimental_plan", "");
    idea.auxiliary = j.value("auxiliary", "");
    if (j.contains("genome") && !j["genome"].is_null())
      idea.genome = j["genome"].get<std::vector<double>>();
    idea.warnings = j.value("warnings", std::vector<std::string>{});
    if (j.contains("provenance")) {
      const auto& p = j["provenance"];
      idea.provenance.op = operator_from_string(p.value("operator", "initial"));
      idea.provenance.parent_ids = p.value("parent_ids", std::vector<std::string>{});
      idea.provenance.trajectory_ids = p.value("trajectory_ids", std::vector<std::string>{});
      idea.provenance.island_ids = p.value("island_ids", std::vector<std::string>{});
      idea.provenance.generation = p.value("generation", 0);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed idea record: ") + e.what());
  }
}

void to_json(nlohmann::json& j, const FitnessRecord& f) {
  j = nlohmann::json{{"novelty", f.novelty}, {"feasibility", f.feasibility}, {"fitness", f.fitness}};
}

void from_json(const nlohmann::json& j, FitnessRecord& f) {
  try {
    f = make_fitness(j.at("novelty").get<double>(), j.at("feasibility").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed fitness record: ") + e.what());
  }
}

}  // namespace ideaflow
