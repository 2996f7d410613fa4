// ideaflow command-line entry point.

#include <cstdint>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "ideaflow/errors.hpp"
#include "ideaflow/pipeline.hpp"

namespace fs = std::filesystem;
using namespace ideaflow;

int main(int argc, char** argv) {
  CLI::App app{"Literature-grounded idea generation: flow-guided search plus evolution"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string output;
  std::string backend;
  app.add_option("--config", config_path, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "root random seed");
  app.add_option("--output", output, "run directory");
  app.add_option("--backend", backend, "override every backend role")
      ->check(CLI::IsMember({"mock", "remote"}));

  std::string corpus;
  std::string query;
  std::string graph;
  std::string population;
  std::string run_dir;
  std::string ranks;

  auto* ingest = app.add_subcommand("ingest", "build the literature graph from a corpus");
  ingest->add_option("corpus", corpus, "corpus JSONL file");

  auto* explore = app.add_subcommand("explore", "flow-guided exploration into an initial population");
  explore->add_option("query", query, "research query")->required();
  explore->add_option("--graph", graph, "graph file from ingest")->required();
  explore->add_option("--corpus", corpus, "corpus JSONL file");

  auto* evolve = app.add_subcommand("evolve", "evolve a population file");
  evolve->add_option("population", population, "population JSON file")->required();
  evolve->add_option("--graph", graph, "graph file from ingest")->required();
  evolve->add_option("--corpus", corpus, "corpus JSONL file");

  auto* run = app.add_subcommand("run", "ingest, explore and evolve in one run directory");
  run->add_option("query", query, "research query")->required();
  run->add_option("--corpus", corpus, "corpus JSONL file");

  auto* report = app.add_subcommand("report", "summary statistics for a run directory");
  report->add_option("run_dir", run_dir, "run directory")->required();
  report->add_option("--ranks", ranks, "ranks file for the insight score");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_config(config_path);
    if (seed) config.seed = *seed;
    if (!output.empty()) config.output_dir = output;
    if (!backend.empty())
      override_backend_kind(config, backend == "mock" ? BackendKind::kMock : BackendKind::kRemote);
    if (!corpus.empty()) config.corpus_path = corpus;
    config.validate();

    bool failed = false;
    if (*ingest) {
      cmd_ingest(config, std::cout);
    } else if (*explore) {
      failed = cmd_explore(query, graph, config, std::cout).failed;
    } else if (*evolve) {
      failed = cmd_evolve(population, graph, config, std::cout).failed;
    } else if (*run) {
      cmd_run(query, config, std::cout);
      failed = fs::exists(config.output_dir / artifacts::kFailed);
    } else if (*report) {
      cmd_report(run_dir, ranks.empty() ? std::nullopt : std::optional<fs::path>(ranks), std::cout);
    }
    return failed ? 3 : 0;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const BackendError& e) {
    std::cerr << "backend error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
