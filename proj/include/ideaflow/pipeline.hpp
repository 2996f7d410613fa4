#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "ideaflow/backends.hpp"
#include "ideaflow/corpus.hpp"
#include "ideaflow/evolve.hpp"
#include "ideaflow/flowmcts.hpp"
#include "ideaflow/remote.hpp"

namespace ideaflow {

inline constexpr int kSchemaVersion = 1;

struct RunConfig {
  std::uint64_t seed = 42;
  std::string corpus_path;
  std::optional<std::string> query;
  bool normalize_embeddings = false;
  EmbeddingSource embedding_source = EmbeddingSource::kFile;
  double sim_threshold = 0.8;
  ExplorationConfig exploration;
  EvolutionConfig evolution;
  double diversity_threshold = 0.65;
  MockGeneratorOptions mock;
  BackendConfig generator_backend;
  BackendConfig reward_backend;
  BackendConfig embedder_backend;
  bool log_backends = false;  // write backend_log.jsonl in the run directory
  std::filesystem::path output_dir = "run";

  RunConfig();
  void validate() const;
};

/// Missing keys take their defaults; unknown keys are rejected.
RunConfig config_from_json(const nlohmann::json& j);
/// Every field with defaults materialized. output_dir is left out so that
/// snapshots of identical runs are byte-identical wherever they live.
nlohmann::json config_to_json(const RunConfig& config);
RunConfig load_config(const std::filesystem::path& path);

/// Sets every backend role to `kind`.
void override_backend_kind(RunConfig& config, BackendKind kind);

/// Dimension declared in a corpus file header.
std::size_t read_corpus_dim(const std::filesystem::path& path);

/// Backends for every role; mock seeds come from the "backends" sub-stream.
Backends make_backends(const RunConfig& config, std::size_t embed_dim,
                       const std::filesystem::path& run_dir = {});

Corpus load_run_corpus(const RunConfig& config, const Backends& backends);

// File names inside a run directory.
namespace artifacts {
inline constexpr const char* kGraph = "graph.json";
inline constexpr const char* kConfig = "config_resolved.json";
inline constexpr const char* kTrajectories = "trajectories.jsonl";
inline constexpr const char* kSearchTree = "search_tree.json";
inline constexpr const char* kExplorationRewards = "exploration_rewards.csv";
inline constexpr const char* kInitialPopulation = "initial_population.json";
inline constexpr const char* kEvolutionRewards = "evolution_rewards.csv";
inline constexpr const char* kDiversity = "diversity.json";
inline constexpr const char* kRewardCurve = "reward_curve.csv";
inline constexpr const char* kFailed = "FAILED";
inline constexpr const char* kReportText = "report.txt";
inline constexpr const char* kReportCsv = "report_stats.csv";
inline constexpr const char* kBackendLog = "backend_log.jsonl";
std::string population_file(int generation);
}  // namespace artifacts

struct IngestSummary {
  std::size_t nodes = 0;
  std::size_t edges = 0;
  std::size_t citation_edges = 0;
  std::size_t feature_edges = 0;
  std::size_t similarity_edges = 0;
  std::size_t dangling_citations = 0;
};

IngestSummary cmd_ingest(const RunConfig& config, std::ostream& out);

struct ExploreSummary {
  std::size_t iterations = 0;
  bool failed = false;
};

ExploreSummary cmd_explore(const std::string& query_text, const std::filesystem::path& graph_file,
                           RunConfig config, std::ostream& out);

struct EvolveSummary {
  std::size_t generations = 0;
  bool failed = false;
};

EvolveSummary cmd_evolve(const std::filesystem::path& population_file,
                         const std::filesystem::path& graph_file, RunConfig config,
                         std::ostream& out);

/// ingest -> explore -> evolve into one directory plus the combined reward curve.
void cmd_run(const std::string& query_text, RunConfig config, std::ostream& out);

void cmd_report(const std::filesystem::path& run_dir,
                const std::optional<std::filesystem::path>& ranks_file, std::ostream& out);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

}  // namespace ideaflow
