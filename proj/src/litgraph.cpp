#include "ideaflow/litgraph.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <limits>

#include "ideaflow/errors.hpp"

namespace ideaflow {

std::vector<std::string> reason_names(EdgeReasons reasons) {
  std::vector<std::string> out;
  if (reasons & kCitation) out.emplace_back("citation");
  if (reasons & kFeatureOverlap) out.emplace_back("feature_overlap");
  if (reasons & kSimilarity) out.emplace_back("similarity");
  return out;
}

EdgeReasons reasons_from_names(const std::vector<std::string>& names) {
  EdgeReasons r = 0;
  for (const auto& n : names) {
    if (n == "citation") r |= kCitation;
    else if (n == "feature_overlap") r |= kFeatureOverlap;
    else if (n == "similarity") r |= kSimilarity;
    else throw ValidationError("unknown edge reason '" + n + "'");
  }
  return r;
}

EdgeReasons edge_criteria(const PatentDoc& a, const PatentDoc& b, double sim_threshold) {
  if (a.id == b.id) return 0;
  EdgeReasons r = 0;
  if (std::binary_search(a.citations.begin(), a.citations.end(), b.id) ||
      std::binary_search(b.citations.begin(), b.citations.end(), a.id))
    r |= kCitation;
  // Both feature lists are sorted and unique.
  auto ia = a.features.begin();
  auto ib = b.features.begin();
  while (ia != a.features.end() && ib != b.features.end()) {
    if (*ia == *ib) {
      r |= kFeatureOverlap;
      break;
    }
    if (*ia < *ib) ++ia;
    else ++ib;
  }
  if (cosine_similarity(a.embedding, b.embedding) > sim_threshold) r |= kSimilarity;
  return r;
}

// ---------------------------------------------------------------------------

LiteratureGraph::LiteratureGraph(std::size_t dim, double sim_threshold,
                                 std::vector<std::string> nodes, std::map<Edge, EdgeReasons> edges)
    : dim_(dim), sim_threshold_(sim_threshold), nodes_(std::move(nodes)), edges_(std::move(edges)) {
  if (!(sim_threshold_ > 0.0 && sim_threshold_ < 1.0))
    throw ValidationError("sim_threshold must lie in (0, 1)");
  std::sort(nodes_.begin(), nodes_.end());
  if (std::adjacent_find(nodes_.begin(), nodes_.end()) != nodes_.end())
    throw ValidationError("duplicate node id in graph");
  for (const auto& n : nodes_) adjacency_[n];
  for (const auto& [edge, reasons] : edges_) {
    const auto& [a, b] = edge;
    if (a == b) throw ValidationError("self-loop on '" + a + "'");
    if (!(a < b)) throw ValidationError("edge endpoints must be ordered");
    if (reasons == 0) throw ValidationError("edge " + a + "-" + b + " has no reasons");
    if (!adjacency_.count(a) || !adjacency_.count(b))
      throw ValidationError("edge " + a + "-" + b + " references an unknown node");
    adjacency_[a].push_back(b);
    adjacency_[b].push_back(a);
  }
  for (auto& [_, list] : adjacency_) std::sort(list.begin(), list.end());
}

bool LiteratureGraph::contains(std::string_view id) const {
  return adjacency_.count(std::string(id)) > 0;
}

const std::vector<std::string>& LiteratureGraph::neighbors(std::string_view id) const {
  auto it = adjacency_.find(std::string(id));
  if (it == adjacency_.end()) throw ValidationError("unknown node '" + std::string(id) + "'");
  return it->second;
}

EdgeReasons LiteratureGraph::reasons(std::string_view a, std::string_view b) const {
  Edge key = a < b ? Edge{std::string(a), std::string(b)} : Edge{std::string(b), std::string(a)};
  auto it = edges_.find(key);
  return it == edges_.end() ? 0 : it->second;
}

LiteratureGraph build_graph(const Corpus& corpus, double sim_threshold) {
  if (!(sim_threshold > 0.0 && sim_threshold < 1.0))
    throw ValidationError("sim_threshold must lie in (0, 1)");
  const auto& docs = corpus.docs();
  std::vector<std::string> nodes;
  nodes.reserve(docs.size());
  for (const auto& d : docs) nodes.push_back(d.id);
  std::map<LiteratureGraph::Edge, EdgeReasons> edges;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    for (std::size_t j = i + 1; j < docs.size(); ++j) {
      if (EdgeReasons r = edge_criteria(docs[i], docs[j], sim_threshold))
        edges.emplace(LiteratureGraph::Edge{docs[i].id, docs[j].id}, r);
    }
  }
  return LiteratureGraph(corpus.dim(), sim_threshold, std::move(nodes), std::move(edges));
}

std::vector<std::string> retrieve_topk(const Corpus& corpus, const Query& query, std::size_t k) {
  if (k == 0) throw ValidationError("k must be at least 1");
  if (corpus.empty()) throw ValidationError("no literature");
  std::vector<std::pair<double, const std::string*>> scored;
  scored.reserve(corpus.size());
  for (const auto& d : corpus.docs())
    scored.emplace_back(cosine_similarity(d.embedding, query.embedding), &d.id);
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    [](const auto& x, const auto& y) {
                      if (x.first != y.first) return x.first > y.first;
                      return *x.second < *y.second;
                    });
  std::vector<std::string> out;
  out.reserve(take);
  for (std::size_t i = 0; i < take; ++i) out.push_back(*scored[i].second);
  return out;
}

std::unordered_map<std::string, std::size_t> multi_source_distances(
    const LiteratureGraph& graph, const std::set<std::string>& sources) {
  std::unordered_map<std::string, std::size_t> dist;
  std::deque<std::string> frontier;
  for (const auto& s : sources) {
    if (!graph.contains(s)) throw ValidationError("unknown node '" + s + "'");
    dist.emplace(s, 0);
    frontier.push_back(s);
  }
  while (!frontier.empty()) {
    std::string cur = std::move(frontier.front());
    frontier.pop_front();
    const std::size_t d = dist[cur];
    for (const auto& nb : graph.neighbors(cur)) {
      if (dist.emplace(nb, d + 1).second) frontier.push_back(nb);
    }
  }
  return dist;
}

std::optional<std::size_t> graph_distance(const LiteratureGraph& graph, std::string_view a,
                                          std::string_view b) {
  if (!graph.contains(b)) throw ValidationError("unknown node '" + std::string(b) + "'");
  const auto dist = multi_source_distances(graph, {std::string(a)});
  auto it = dist.find(std::string(b));
  if (it == dist.end()) return std::nullopt;
  return it->second;
}

std::vector<std::set<std::string>> connected_components(const LiteratureGraph& graph) {
  std::vector<std::set<std::string>> out;
  std::set<std::string> seen;
  // nodes() is sorted, so each component is discovered from its smallest id.
  for (const auto& n : graph.nodes()) {
    if (seen.count(n)) continue;
    std::set<std::string> comp;
    for (const auto& [id, _] : multi_source_distances(graph, {n})) comp.insert(id);
    seen.insert(comp.begin(), comp.end());
    out.push_back(std::move(comp));
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

/// Random subset of `pool` (sorted input) of the requested size, returned sorted.
std::vector<std::string> draw_without_replacement(std::vector<std::string> pool, std::size_t count,
                                                  Rng& rng) {
  count = std::min(count, pool.size());
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + uniform_index(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace

IslandSample sample_isolation_island(const LiteratureGraph& graph, const Corpus& corpus,
                                     const std::set<std::string>& excluded,
                                     const IslandOptions& options, Rng& rng) {
  if (options.size == 0) throw ValidationError("island size must be at least 1");
  std::set<std::string> sources;
  for (const auto& e : excluded)
    if (graph.contains(e)) sources.insert(e);
  const auto dist = multi_source_distances(graph, sources);

  std::vector<std::string> disconnected;
  std::vector<std::string> far;
  std::vector<std::string> near;
  for (const auto& n : graph.nodes()) {
    if (excluded.count(n)) continue;
    auto it = dist.find(n);
    if (it == dist.end()) disconnected.push_back(n);
    else if (it->second >= options.min_hops) far.push_back(n);
    else near.push_back(n);
  }

  IslandSample sample;
  const std::size_t eligible = disconnected.size() + far.size() + near.size();
  sample.shortfall = eligible < options.size;
  std::size_t need = options.size;

  auto take = [&](std::vector<std::string> chosen) {
    need -= chosen.size();
    sample.docs.insert(sample.docs.end(), chosen.begin(), chosen.end());
  };

  sample.tier = IslandTier::kDisconnected;
  take(draw_without_replacement(std::move(disconnected), need, rng));
  if (need > 0 && !far.empty()) {
    sample.tier = IslandTier::kMinHops;
    take(draw_without_replacement(std::move(far), need, rng));
  }
  if (need > 0 && !near.empty()) {
    sample.tier = IslandTier::kFallback;
    std::vector<double> centroid(corpus.dim(), 0.0);
    for (const auto& e : sources) {
      if (!corpus.contains(e)) continue;
      const auto& emb = corpus.at(e).embedding;
      for (std::size_t i = 0; i < centroid.size() && i < emb.size(); ++i) centroid[i] += emb[i];
    }
    auto sim_to_centroid = [&](const std::string& id) {
      if (!corpus.contains(id) || corpus.dim() == 0) return 0.0;
      return cosine_similarity(corpus.at(id).embedding, centroid);
    };
    std::vector<std::pair<std::size_t, std::pair<double, std::string>>> ranked;
    for (auto& n : near) ranked.push_back({dist.at(n), {sim_to_centroid(n), n}});
    std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
      if (x.first != y.first) return x.first > y.first;
      if (x.second.first != y.second.first) return x.second.first < y.second.first;
      return x.second.second < y.second.second;
    });
    std::vector<std::string> chosen;
    for (std::size_t i = 0; i < need && i < ranked.size(); ++i)
      chosen.push_back(ranked[i].second.second);
    take(std::move(chosen));
  }

  std::optional<std::size_t> min_d;
  for (const auto& d : sample.docs) {
    auto it = dist.find(d);
    if (it == dist.end()) continue;
    min_d = min_d ? std::min(*min_d, it->second) : it->second;
  }
  sample.min_distance_achieved = min_d;
  return sample;
}

// ---------------------------------------------------------------------------

nlohmann::json graph_to_json(const LiteratureGraph& graph) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [edge, reasons] : graph.edges())
    edges.push_back({{"a", edge.first}, {"b", edge.second}, {"reasons", reason_names(reasons)}});
  return nlohmann::json{{"schema_version", 1},
                        {"dim", graph.dim()},
                        {"sim_threshold", graph.sim_threshold()},
                        {"nodes", graph.nodes()},
                        {"edges", std::move(edges)}};
}

LiteratureGraph graph_from_json(const nlohmann::json& j) {
  try {
    std::map<LiteratureGraph::Edge, EdgeReasons> edges;
    for (const auto& e : j.at("edges")) {
      auto a = e.at("a").get<std::string>();
      auto b = e.at("b").get<std::string>();
      if (b < a) std::swap(a, b);
      edges[{a, b}] |= reasons_from_names(e.at("reasons").get<std::vector<std::string>>());
    }
    return LiteratureGraph(j.at("dim").get<std::size_t>(), j.at("sim_threshold").get<double>(),
                           j.at("nodes").get<std::vector<std::string>>(), std::move(edges));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed graph document: ") + e.what());
  }
}

void save_graph(const LiteratureGraph& graph, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write graph file " + path.string());
  out << graph_to_json(graph).dump(2) << '\n';
}

LiteratureGraph load_graph(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open graph file " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("graph file " + path.string() + ": " + e.what());
  }
  return graph_from_json(j);
}

}  // namespace ideaflow
