#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "ideaflow/corpus.hpp"
#include "ideaflow/random.hpp"

namespace ideaflow {

/// Why two documents are linked. Stored as a bit set per edge.
enum EdgeReason : std::uint8_t {
  kCitation = 1u << 0,
  kFeatureOverlap = 1u << 1,
  kSimilarity = 1u << 2,
};

using EdgeReasons = std::uint8_t;

std::vector<std::string> reason_names(EdgeReasons reasons);
EdgeReasons reasons_from_names(const std::vector<std::string>& names);

/// Criteria evaluated directly on two documents; zero means no edge.
EdgeReasons edge_criteria(const PatentDoc& a, const PatentDoc& b, double sim_threshold);

/// Undirected literature graph. Immutable after construction.
class LiteratureGraph {
 public:
  using Edge = std::pair<std::string, std::string>;  // first < second

  LiteratureGraph() = default;
  LiteratureGraph(std::size_t dim, double sim_threshold, std::vector<std::string> nodes,
                  std::map<Edge, EdgeReasons> edges);

  std::size_t dim() const noexcept { return dim_; }
  double sim_threshold() const noexcept { return sim_threshold_; }
  const std::vector<std::string>& nodes() const noexcept { return nodes_; }
  const std::map<Edge, EdgeReasons>& edges() const noexcept { return edges_; }
  std::size_t edge_count() const noexcept { return edges_.size(); }

  bool contains(std::string_view id) const;
  /// Ascending ids. Throws ValidationError for unknown ids.
  const std::vector<std::string>& neighbors(std::string_view id) const;
  /// Zero when the pair is not an edge.
  EdgeReasons reasons(std::string_view a, std::string_view b) const;

 private:
  std::size_t dim_ = 0;
  double sim_threshold_ = 0.8;
  std::vector<std::string> nodes_;
  std::map<Edge, EdgeReasons> edges_;
  std::unordered_map<std::string, std::vector<std::string>> adjacency_;
};

/// O(|V|^2) pairwise scan applying the citation, feature-overlap, and
/// strict similarity criteria.
LiteratureGraph build_graph(const Corpus& corpus, double sim_threshold);

/// The k docs closest to the query, descending similarity, ties by id.
std::vector<std::string> retrieve_topk(const Corpus& corpus, const Query& query, std::size_t k);

/// Hop count of a shortest path, or nullopt when unreachable.
std::optional<std::size_t> graph_distance(const LiteratureGraph& graph, std::string_view a,
                                          std::string_view b);

/// BFS hop counts from a set of sources; nodes absent from the map are unreachable.
std::unordered_map<std::string, std::size_t> multi_source_distances(
    const LiteratureGraph& graph, const std::set<std::string>& sources);

/// Components ordered by smallest member id.
std::vector<std::set<std::string>> connected_components(const LiteratureGraph& graph);

struct IslandOptions {
  std::size_t size = 3;
  std::size_t min_hops = 3;
};

enum class IslandTier {
  kDisconnected,  // drawn from components not touching the excluded set
  kMinHops,       // every node at distance >= min_hops
  kFallback,      // max-min-distance ordering
};

struct IslandSample {
  std::vector<std::string> docs;
  /// Smallest hop distance from any sampled doc to the excluded set;
  /// nullopt stands for "disconnected".
  std::optional<std::size_t> min_distance_achieved;
  IslandTier tier = IslandTier::kDisconnected;
  bool shortfall = false;  // fewer eligible docs than requested
};

/// Picks docs topologically far from `excluded`. Prefers other components,
/// then docs at least min_hops away, then the farthest docs (ties by lowest
/// similarity to the excluded centroid, then id). Tiers are combined when a
/// single tier cannot fill the sample.
IslandSample sample_isolation_island(const LiteratureGraph& graph, const Corpus& corpus,
                                     const std::set<std::string>& excluded,
                                     const IslandOptions& options, Rng& rng);

nlohmann::json graph_to_json(const LiteratureGraph& graph);
LiteratureGraph graph_from_json(const nlohmann::json& j);
void save_graph(const LiteratureGraph& graph, const std::filesystem::path& path);
LiteratureGraph load_graph(const std::filesystem::path& path);

}  // namespace ideaflow
