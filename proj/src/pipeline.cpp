#include "ideaflow/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <fmt/format.h>

#include "ideaflow/errors.hpp"
#include "ideaflow/litgraph.hpp"
#include "ideaflow/random.hpp"

namespace ideaflow {

namespace fs = std::filesystem;
using nlohmann::json;

// ---------------------------------------------------------------------------
// Files

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << content;
  if (!out) throw ValidationError("failed writing " + path.string());
}

namespace {

json read_json(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("missing file: " + path.string());
  auto j = json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw ValidationError("not valid JSON: " + path.string());
  return j;
}

void write_json(const fs::path& path, const json& j) { write_file(path, j.dump(2) + "\n"); }

/// Shortest round-trip representation, so CSVs are byte-stable.
std::string num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  return fmt::format("{}", v);
}

}  // namespace

std::string artifacts::population_file(int generation) {
  return fmt::format("population_gen_{}.json", generation);
}

// ---------------------------------------------------------------------------
// Config

RunConfig::RunConfig() {
  reward_backend.temperature = 0.2;
  embedder_backend.temperature = 0.0;
}

void RunConfig::validate() const {
  exploration.validate();
  evolution.validate();
  if (!(sim_threshold >= -1.0 && sim_threshold <= 1.0))
    throw ValidationError("graph.sim_threshold must lie in [-1, 1]");
  if (!(diversity_threshold >= -1.0 && diversity_threshold <= 1.0))
    throw ValidationError("report.diversity_threshold must lie in [-1, 1]");
  if (mock.genome_dim == 0) throw ValidationError("mock.genome_dim must be positive");
  if (!(mock.mutation_step >= 0.0 && mock.mutation_step <= 1.0))
    throw ValidationError("mock.mutation_step must lie in [0, 1]");
  if (!(mock.jitter >= 0.0)) throw ValidationError("mock.jitter must be >= 0");
  generator_backend.validate();
  reward_backend.validate();
  embedder_backend.validate();
}

namespace {

void check_keys(const json& j, std::string_view section, std::initializer_list<std::string_view> keys) {
  if (!j.is_object()) throw ValidationError(fmt::format("config section '{}' must be an object", section));
  for (const auto& [k, _] : j.items()) {
    bool found = false;
    for (auto allowed : keys) found = found || k == allowed;
    if (!found) throw ValidationError(fmt::format("unknown config key '{}{}{}'", section,
                                                  section.empty() ? "" : ".", k));
  }
}

template <class T>
void take(const json& j, const char* key, T& field) {
  if (j.contains(key) && !j[key].is_null()) field = j[key].get<T>();
}

std::string q_mode_name(QMode m) { return m == QMode::kRaw ? "raw" : "decayed"; }

}  // namespace

RunConfig config_from_json(const json& j) {
  RunConfig c;
  try {
    check_keys(j, "", {"seed", "corpus_path", "query", "output_dir", "corpus", "graph", "exploration",
                       "evolution", "island", "report", "mock", "backends"});
    take(j, "seed", c.seed);
    take(j, "corpus_path", c.corpus_path);
    if (j.contains("query") && !j["query"].is_null()) c.query = j["query"].get<std::string>();
    if (j.contains("output_dir")) c.output_dir = j["output_dir"].get<std::string>();

    if (j.contains("corpus")) {
      const auto& s = j["corpus"];
      check_keys(s, "corpus", {"normalize_embeddings", "embedding_source"});
      take(s, "normalize_embeddings", c.normalize_embeddings);
      if (s.contains("embedding_source")) {
        const auto v = s["embedding_source"].get<std::string>();
        if (v == "file") c.embedding_source = EmbeddingSource::kFile;
        else if (v == "ingest") c.embedding_source = EmbeddingSource::kIngest;
        else throw ValidationError("corpus.embedding_source must be 'file' or 'ingest'");
      }
    }
    if (j.contains("graph")) {
      check_keys(j["graph"], "graph", {"sim_threshold"});
      take(j["graph"], "sim_threshold", c.sim_threshold);
    }
    if (j.contains("exploration")) {
      const auto& s = j["exploration"];
      check_keys(s, "exploration", {"k", "c", "alpha", "gamma", "epsilon", "n_min", "n_max",
                                    "depth_cap", "q_mode", "max_backend_retries"});
      auto& e = c.exploration;
      take(s, "k", e.k);
      take(s, "c", e.c);
      take(s, "alpha", e.alpha);
      take(s, "gamma", e.gamma);
      take(s, "epsilon", e.epsilon);
      take(s, "n_min", e.n_min);
      take(s, "n_max", e.n_max);
      take(s, "depth_cap", e.depth_cap);
      take(s, "max_backend_retries", e.max_backend_retries);
      if (s.contains("q_mode")) {
        const auto v = s["q_mode"].get<std::string>();
        if (v == "decayed") e.q_mode = QMode::kDecayed;
        else if (v == "raw") e.q_mode = QMode::kRaw;
        else throw ValidationError("exploration.q_mode must be 'decayed' or 'raw'");
      }
    }
    if (j.contains("evolution")) {
      const auto& s = j["evolution"];
      check_keys(s, "evolution", {"population_size", "offspring", "rho", "subset_size", "t_max",
                                  "std_threshold", "std_rule", "delta_threshold",
                                  "max_backend_retries"});
      auto& e = c.evolution;
      take(s, "population_size", e.population_size);
      take(s, "offspring", e.offspring);
      take(s, "rho", e.rho);
      take(s, "subset_size", e.subset_size);
      take(s, "t_max", e.t_max);
      take(s, "std_threshold", e.std_threshold);
      take(s, "std_rule", e.std_rule);
      take(s, "max_backend_retries", e.max_backend_retries);
      if (s.contains("delta_threshold") && !s["delta_threshold"].is_null())
        e.delta_threshold = s["delta_threshold"].get<double>();
    }
    if (j.contains("island")) {
      check_keys(j["island"], "island", {"size", "min_hops"});
      take(j["island"], "size", c.evolution.island.size);
      take(j["island"], "min_hops", c.evolution.island.min_hops);
    }
    if (j.contains("report")) {
      check_keys(j["report"], "report", {"diversity_threshold"});
      take(j["report"], "diversity_threshold", c.diversity_threshold);
    }
    if (j.contains("mock")) {
      check_keys(j["mock"], "mock", {"genome_dim", "mutation_step", "jitter"});
      take(j["mock"], "genome_dim", c.mock.genome_dim);
      take(j["mock"], "mutation_step", c.mock.mutation_step);
      take(j["mock"], "jitter", c.mock.jitter);
    }
    if (j.contains("backends")) {
      const auto& s = j["backends"];
      check_keys(s, "backends", {"generator", "reward", "embedder", "log"});
      // Role sections update the role defaults rather than replacing them.
      if (s.contains("generator")) from_json(s["generator"], c.generator_backend);
      if (s.contains("reward")) from_json(s["reward"], c.reward_backend);
      if (s.contains("embedder")) from_json(s["embedder"], c.embedder_backend);
      take(s, "log", c.log_backends);
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed config: ") + e.what());
  }
  c.validate();
  return c;
}

json config_to_json(const RunConfig& c) {
  const auto& x = c.exploration;
  const auto& v = c.evolution;
  return json{
      {"schema_version", kSchemaVersion},
      {"seed", c.seed},
      {"corpus_path", c.corpus_path},
      {"query", c.query ? json(*c.query) : json(nullptr)},
      {"corpus",
       {{"normalize_embeddings", c.normalize_embeddings},
        {"embedding_source", c.embedding_source == EmbeddingSource::kFile ? "file" : "ingest"}}},
      {"graph", {{"sim_threshold", c.sim_threshold}}},
      {"exploration",
       {{"k", x.k},
        {"c", x.c},
        {"alpha", x.alpha},
        {"gamma", x.gamma},
        {"epsilon", x.epsilon},
        {"n_min", x.n_min},
        {"n_max", x.n_max},
        {"depth_cap", x.depth_cap},
        {"q_mode", q_mode_name(x.q_mode)},
        {"max_backend_retries", x.max_backend_retries}}},
      {"evolution",
       {{"population_size", v.population_size},
        {"offspring", v.offspring},
        {"rho", v.rho},
        {"subset_size", v.subset_size},
        {"t_max", v.t_max},
        {"std_threshold", v.std_threshold},
        {"std_rule", v.std_rule},
        {"delta_threshold", v.delta_threshold ? json(*v.delta_threshold) : json(nullptr)},
        {"max_backend_retries", v.max_backend_retries}}},
      {"island", {{"size", v.island.size}, {"min_hops", v.island.min_hops}}},
      {"report", {{"diversity_threshold", c.diversity_threshold}}},
      {"mock",
       {{"genome_dim", c.mock.genome_dim},
        {"mutation_step", c.mock.mutation_step},
        {"jitter", c.mock.jitter}}},
      {"backends",
       {{"generator", c.generator_backend},
        {"reward", c.reward_backend},
        {"embedder", c.embedder_backend},
        {"log", c.log_backends}}}};
}

RunConfig load_config(const fs::path& path) {
  auto j = read_json(path);
  j.erase("schema_version");
  RunConfig c = config_from_json(j);
  if (!c.corpus_path.empty() && fs::path(c.corpus_path).is_relative())
    c.corpus_path = (path.parent_path() / c.corpus_path).lexically_normal().string();
  return c;
}

void override_backend_kind(RunConfig& config, BackendKind kind) {
  config.generator_backend.kind = kind;
  config.reward_backend.kind = kind;
  config.embedder_backend.kind = kind;
}

std::size_t read_corpus_dim(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read corpus " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("dim") || !j["dim"].is_number_unsigned())
      throw ValidationError("corpus line 1: expected a {\"dim\": D} header");
    return j["dim"].get<std::size_t>();
  }
  throw ValidationError("corpus is empty: " + path.string());
}

Backends make_backends(const RunConfig& config, std::size_t embed_dim, const fs::path& run_dir) {
  const std::uint64_t root = derive_seed(config.seed, "backends");
  std::shared_ptr<BackendLog> log;
  auto client_for = [&](const BackendConfig& bc) {
    if (config.log_backends && !run_dir.empty() && !log) {
      fs::create_directories(run_dir);
      std::string key;
      if (const char* v = std::getenv(bc.api_key_env.c_str())) key = v;
      log = std::make_shared<BackendLog>(run_dir / artifacts::kBackendLog, key);
    }
    return make_chat_client(bc, log);
  };

  Backends b;
  if (config.generator_backend.kind == BackendKind::kMock)
    b.generator = std::make_shared<MockGenerator>(derive_seed(root, "generator"), config.mock);
  else
    b.generator = std::make_shared<RemoteGenerator>(client_for(config.generator_backend));

  if (config.reward_backend.kind == BackendKind::kMock)
    b.reward = std::make_shared<MockRewardModel>(
        MockLandscape::seeded(config.mock.genome_dim, derive_seed(root, "landscape")));
  else
    b.reward = std::make_shared<RemoteRewardModel>(client_for(config.reward_backend));

  if (config.embedder_backend.kind == BackendKind::kMock)
    b.embedder = std::make_shared<MockEmbedder>(embed_dim, derive_seed(root, "embedder"));
  else
    b.embedder = std::make_shared<RemoteEmbedder>(client_for(config.embedder_backend), embed_dim);
  return b;
}

Corpus load_run_corpus(const RunConfig& config, const Backends& backends) {
  if (config.corpus_path.empty()) throw ValidationError("no corpus path configured");
  CorpusOptions opts;
  opts.normalize_embeddings = config.normalize_embeddings;
  opts.embedding_source = config.embedding_source;
  opts.embedder = backends.embedder.get();
  return load_corpus(config.corpus_path, opts);
}

// ---------------------------------------------------------------------------
// Commands

namespace {

void snapshot_config(RunConfig& config) {
  if (!config.corpus_path.empty())
    config.corpus_path = fs::absolute(config.corpus_path).lexically_normal().string();
  config.validate();
  fs::create_directories(config.output_dir);
  write_json(config.output_dir / artifacts::kConfig, config_to_json(config));
}

void mark_failed(const fs::path& dir, const std::string& reason) {
  write_file(dir / artifacts::kFailed, reason + "\n");
}

/// Keeps a copy of the graph inside the run directory.
void place_graph(const fs::path& graph_file, const fs::path& run_dir) {
  const fs::path target = run_dir / artifacts::kGraph;
  if (fs::exists(target) && fs::equivalent(graph_file, target)) return;
  write_file(target, read_file(graph_file));
}

}  // namespace

IngestSummary cmd_ingest(const RunConfig& cfg, std::ostream& out) {
  RunConfig config = cfg;
  snapshot_config(config);
  const Backends backends = make_backends(config, read_corpus_dim(config.corpus_path), config.output_dir);
  const Corpus corpus = load_run_corpus(config, backends);
  if (corpus.empty()) throw ValidationError("corpus has no documents: " + config.corpus_path);
  const LiteratureGraph graph = build_graph(corpus, config.sim_threshold);
  save_graph(graph, config.output_dir / artifacts::kGraph);

  IngestSummary s;
  s.nodes = graph.nodes().size();
  s.dangling_citations = corpus.dangling_citations();
  for (const auto& [pair, reasons] : graph.edges()) {
    ++s.edges;
    if (reasons & kCitation) ++s.citation_edges;
    if (reasons & kFeatureOverlap) ++s.feature_edges;
    if (reasons & kSimilarity) ++s.similarity_edges;
  }
  out << fmt::format("nodes: {}\nedges: {}\n  citation: {}\n  feature_overlap: {}\n  similarity: {}\n"
                     "dangling citations dropped: {}\n",
                     s.nodes, s.edges, s.citation_edges, s.feature_edges, s.similarity_edges,
                     s.dangling_citations);
  return s;
}

ExploreSummary cmd_explore(const std::string& query_text, const fs::path& graph_file, RunConfig config,
                           std::ostream& out) {
  if (!query_text.empty()) config.query = query_text;
  if (!config.query || config.query->empty()) throw ValidationError("explore needs a query");
  if (!fs::exists(graph_file)) throw ValidationError("missing graph file: " + graph_file.string());
  snapshot_config(config);
  const fs::path dir = config.output_dir;

  const LiteratureGraph graph = load_graph(graph_file);
  place_graph(graph_file, dir);
  const Backends backends = make_backends(config, graph.dim(), dir);
  const Corpus corpus = load_run_corpus(config, backends);
  const Query query = embed_query(*config.query, *backends.embedder);

  ExplorationResult r = run_exploration(query, graph, corpus, backends, config.exploration);

  std::string traj;
  for (std::size_t i = 0; i < r.trajectories.size(); ++i)
    traj += trajectory_to_json(r.tree, r.trajectories[i], i + 1).dump() + "\n";
  write_file(dir / artifacts::kTrajectories, traj);
  write_json(dir / artifacts::kSearchTree, tree_to_json(r.tree));

  std::string csv = "iteration,idea_id,reward,running_mean,running_variance\n";
  RewardBuffer buf;
  for (std::size_t i = 0; i < r.population.size(); ++i) {
    buf.rewards.push_back(r.reward_curve[i]);
    const double mean = std::accumulate(buf.rewards.begin(), buf.rewards.end(), 0.0) /
                        static_cast<double>(buf.rewards.size());
    csv += fmt::format("{},{},{},{},{}\n", i + 1, r.population[i].idea.id, num(r.reward_curve[i]),
                       num(mean), num(buf.variance()));
  }
  write_file(dir / artifacts::kExplorationRewards, csv);

  Population initial{r.population, 0};
  json pop = population_to_json(initial);
  pop["query"] = *config.query;
  write_json(dir / artifacts::kInitialPopulation, pop);

  ExploreSummary s;
  s.iterations = r.population.size();
  out << fmt::format("exploration: {} iterations, {} nodes in search tree\n", s.iterations,
                     r.tree.size());
  if (r.abort_reason) {
    mark_failed(dir, *r.abort_reason);
    out << "exploration aborted: " << *r.abort_reason << "\n";
    s.failed = true;
  }
  return s;
}

EvolveSummary cmd_evolve(const fs::path& population_file, const fs::path& graph_file, RunConfig config,
                         std::ostream& out) {
  const json pj = read_json(population_file);
  if (pj.contains("query") && pj["query"].is_string()) config.query = pj["query"].get<std::string>();
  if (!config.query || config.query->empty())
    throw ValidationError("population file carries no query and none is configured");
  if (!fs::exists(graph_file)) throw ValidationError("missing graph file: " + graph_file.string());
  snapshot_config(config);
  const fs::path dir = config.output_dir;

  const LiteratureGraph graph = load_graph(graph_file);
  place_graph(graph_file, dir);
  const Backends backends = make_backends(config, graph.dim(), dir);
  const Corpus corpus = load_run_corpus(config, backends);
  const Query query = embed_query(*config.query, *backends.embedder);
  Population initial = population_from_json(pj, backends.reward.get());

  Rng rng = make_stream(config.seed, "evolution");
  EvolutionResult r = run_evolution(std::move(initial), query, graph, corpus, backends, config.evolution, rng);

  json diversity_rows = json::array();
  std::string csv = "generation,size,mean,std,best,std_nonincreasing\n";
  for (std::size_t i = 0; i < r.generations.size(); ++i) {
    const Population& g = r.generations[i];
    json pop = population_to_json(g);
    pop["query"] = *config.query;
    write_json(dir / artifacts::population_file(g.generation), pop);

    const GenerationStats& st = r.stats[i];
    const bool nonincreasing = i == 0 || st.std <= r.stats[i - 1].std;
    csv += fmt::format("{},{},{},{},{},{}\n", st.generation, g.members.size(), num(st.mean),
                       num(st.std), num(st.best), nonincreasing ? 1 : 0);

    std::vector<Idea> ideas;
    for (const auto& m : g.members) ideas.push_back(m.idea);
    json d = ideas.size() >= 2 ? json(diversity_score(ideas, *backends.embedder, config.diversity_threshold))
                               : json(nullptr);
    diversity_rows.push_back({{"generation", g.generation}, {"diversity", d}});
  }
  write_file(dir / artifacts::kEvolutionRewards, csv);

  json inter = json::array();
  for (const auto& idea : r.intermediates) inter.push_back(idea);
  write_json(dir / "evolution_intermediates.json",
             {{"schema_version", kSchemaVersion}, {"ideas", std::move(inter)}});
  write_json(dir / artifacts::kDiversity, {{"schema_version", kSchemaVersion},
                                           {"threshold", config.diversity_threshold},
                                           {"generations", std::move(diversity_rows)},
                                           {"stop_reason", r.stop_reason}});

  EvolveSummary s;
  s.generations = r.generations.size() - 1;
  const auto& first = r.stats.front();
  const auto& last = r.stats.back();
  out << fmt::format("evolution: {} generations ({}), mean fitness {:.4f} -> {:.4f}, std {:.4f} -> {:.4f}\n",
                     s.generations, r.stop_reason, first.mean, last.mean, first.std, last.std);
  if (r.abort_reason) {
    mark_failed(dir, *r.abort_reason);
    out << "evolution aborted: " << *r.abort_reason << "\n";
    s.failed = true;
  }
  return s;
}

void cmd_run(const std::string& query_text, RunConfig config, std::ostream& out) {
  if (!query_text.empty()) config.query = query_text;
  if (!config.query || config.query->empty()) throw ValidationError("run needs a query");
  const fs::path dir = config.output_dir;

  cmd_ingest(config, out);
  const fs::path graph = dir / artifacts::kGraph;
  if (cmd_explore(*config.query, graph, config, out).failed) return;
  const auto evo = cmd_evolve(dir / artifacts::kInitialPopulation, graph, config, out);

  // Combined curve: one row per exploration iteration, then one per
  // evolution generation after generation 0.
  std::string curve = "step,phase,index,reward\n";
  std::size_t step = 0;
  {
    std::istringstream in(read_file(dir / artifacts::kExplorationRewards));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      std::vector<std::string> cols;
      std::stringstream ls(line);
      for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
      curve += fmt::format("{},exploration,{},{}\n", ++step, cols.at(0), cols.at(2));
    }
  }
  {
    std::istringstream in(read_file(dir / artifacts::kEvolutionRewards));
    std::string line;
    std::getline(in, line);
    bool first = true;
    while (std::getline(in, line)) {
      if (first) {
        first = false;
        continue;
      }
      std::vector<std::string> cols;
      std::stringstream ls(line);
      for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
      curve += fmt::format("{},evolution,{},{}\n", ++step, cols.at(0), cols.at(2));
    }
  }
  write_file(dir / artifacts::kRewardCurve, curve);
  out << fmt::format("reward curve: {} points ({} generations)\n", step, evo.generations);
}

void cmd_report(const fs::path& run_dir, const std::optional<fs::path>& ranks_file, std::ostream& out) {
  if (!fs::is_directory(run_dir)) throw ValidationError("missing run directory: " + run_dir.string());
  const fs::path first = run_dir / artifacts::population_file(0);
  if (!fs::exists(first)) throw ValidationError("missing file: " + first.string());
  const fs::path cfg_path = run_dir / artifacts::kConfig;
  const fs::path graph_path = run_dir / artifacts::kGraph;
  if (!fs::exists(cfg_path)) throw ValidationError("missing file: " + cfg_path.string());
  if (!fs::exists(graph_path)) throw ValidationError("missing file: " + graph_path.string());

  auto cj = read_json(cfg_path);
  cj.erase("schema_version");
  const RunConfig config = config_from_json(cj);
  const std::size_t dim = read_json(graph_path).at("dim").get<std::size_t>();
  const Backends backends = make_backends(config, dim);

  // Generations are numbered from the first file's generation upward.
  std::vector<Population> gens;
  int g = population_from_json(read_json(first)).generation;
  gens.push_back(population_from_json(read_json(first)));
  for (int t = std::max(g + 1, 1);; ++t) {
    const fs::path p = run_dir / artifacts::population_file(t);
    if (!fs::exists(p)) break;
    gens.push_back(population_from_json(read_json(p)));
  }

  std::string csv = "generation,size,mean,std,best,diversity\n";
  std::string text = fmt::format("run: {}\n\n{:>10} {:>5} {:>8} {:>8} {:>8} {:>9}\n", run_dir.string(),
                                 "generation", "size", "mean", "std", "best", "diversity");
  std::optional<double> final_diversity;
  for (const auto& pop : gens) {
    const GenerationStats st = population_stats(pop.members, pop.generation);
    std::optional<double> d;
    if (pop.members.size() >= 2) {
      std::vector<Idea> ideas;
      for (const auto& m : pop.members) ideas.push_back(m.idea);
      d = diversity_score(ideas, *backends.embedder, config.diversity_threshold);
    }
    final_diversity = d;
    csv += fmt::format("{},{},{},{},{},{}\n", st.generation, pop.members.size(), num(st.mean),
                       num(st.std), num(st.best), d ? num(*d) : "");
    text += fmt::format("{:>10} {:>5} {:>8.4f} {:>8.4f} {:>8.4f} {:>9}\n", st.generation,
                        pop.members.size(), st.mean, st.std, st.best,
                        d ? fmt::format("{:.4f}", *d) : std::string("n/a"));
  }
  text += fmt::format("\ndiversity_score (final generation, threshold {}): {}\n",
                      config.diversity_threshold,
                      final_diversity ? fmt::format("{:.6f}", *final_diversity) : std::string("n/a"));

  if (ranks_file) {
    const json rj = read_json(*ranks_file);
    double insight = 0.0;
    try {
      insight = insight_score(rj.at("ranks").get<std::vector<int>>(), rj.at("n").get<int>());
    } catch (const json::exception& e) {
      throw ValidationError(std::string("malformed ranks file: ") + e.what());
    }
    text += fmt::format("insight_score: {:.6f}\n", insight);
  }
  write_file(run_dir / artifacts::kReportCsv, csv);
  write_file(run_dir / artifacts::kReportText, text);
  out << text;
}

}  // namespace ideaflow
