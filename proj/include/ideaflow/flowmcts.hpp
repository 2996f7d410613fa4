#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ideaflow/backends.hpp"
#include "ideaflow/corpus.hpp"
#include "ideaflow/idea.hpp"
#include "ideaflow/litgraph.hpp"

namespace ideaflow {

/// Whether edge values average the depth-decayed reward or the raw reward.
enum class QMode { kDecayed, kRaw };

struct ExplorationConfig {
  std::size_t k = 4;                 // retrieved children of the root
  double c = std::numbers::sqrt2;    // exploration rate
  double alpha = 0.2;                // flow learning rate
  double gamma = 0.9;                // depth decay
  double epsilon = 0.05;             // reward-variance stop threshold
  std::size_t n_min = 5;
  std::size_t n_max = 50;
  std::size_t depth_cap = 10;        // max docs per trajectory
  QMode q_mode = QMode::kDecayed;
  int max_backend_retries = 3;       // consecutive failed iterations before abort

  void validate() const;
};

struct EdgeStats {
  std::size_t visit_count = 0;       // N(s'|s)
  double value = 0.0;                // Q(s'|s)
  double flow_prob = 0.0;            // P_f(s'|s)
  std::vector<double> applied_rewards;
};

struct TreeNode {
  std::optional<std::string> doc_id;   // empty for the root
  std::optional<std::size_t> parent;
  std::size_t depth = 0;
  double flow = 0.0;                   // F(s)
  std::size_t visit_count = 0;         // N(s)
  std::vector<std::size_t> children;   // keys of child nodes
  std::vector<std::string> untried;    // ascending ids not yet expanded
  EdgeStats edge;                      // stats of the edge parent -> this node
};

/// Search tree over literature docs. Node keys are indices; the edge into a
/// node is keyed by the child's index.
class SearchTree {
 public:
  static constexpr std::size_t kRoot = 0;

  SearchTree();

  const TreeNode& node(std::size_t key) const { return nodes_.at(key); }
  TreeNode& node(std::size_t key) { return nodes_.at(key); }
  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }

  /// Doc ids from the root down to `key` (root excluded).
  std::vector<std::string> path_docs(std::size_t key) const;

  /// Appends a child with zeroed stats; untried is left to the caller.
  std::size_t add_child(std::size_t parent, std::string doc_id, double flow_prob);

  /// Top-down pass: F(root) = 1, F(child) = F(parent) * P_f(child | parent).
  void recompute_flows();

  /// Largest violation of sum P_f = 1 over nodes with children.
  double max_conservation_error() const;
  /// Largest violation of F(child) = F(parent) * P_f over all edges.
  double max_decomposition_error() const;

 private:
  std::vector<TreeNode> nodes_;
};

struct Trajectory {
  std::vector<std::size_t> nodes;   // starts at the root
  std::optional<std::string> idea_id;
  std::optional<double> reward;
  std::vector<double> decayed_rewards;  // index t-1 for depth t
};

struct RewardBuffer {
  std::vector<double> rewards;

  /// Sample variance; +infinity with fewer than two entries.
  double variance() const;
};

/// Root with the top-k retrieved docs as uniformly weighted children.
SearchTree init_root(const Query& query, const LiteratureGraph& graph, const Corpus& corpus,
                     std::size_t k);

/// Flow-guided UCB: Q + c * P_f * sqrt(N(s)) / (1 + N(s'|s)).
inline double ucb(const EdgeStats& edge, std::size_t parent_visits, double c) {
  return edge.value + c * edge.flow_prob * std::sqrt(static_cast<double>(parent_visits)) /
                          (1.0 + static_cast<double>(edge.visit_count));
}

/// R * gamma^(T - t) for 1 <= t <= T.
double depth_decayed_reward(double reward, double gamma, std::size_t depth_total,
                            std::size_t depth);

/// Moving-average flow update before local normalization.
inline double flow_update(double flow_prob, double alpha, double decayed_reward) {
  return (1.0 - alpha) * flow_prob + alpha * decayed_reward;
}

/// Child with the highest UCB; ties go to the lower doc id.
std::size_t select_child(const SearchTree& tree, std::size_t node, double c);

/// Moves the lowest untried id into the children. Existing flow mass is
/// scaled by n/(n+1) and the newcomer gets 1/(n+1). Returns nullopt when
/// nothing is left to expand.
std::optional<std::size_t> expand(SearchTree& tree, std::size_t node,
                                  const LiteratureGraph& graph);

/// Applies reward R along a root-to-leaf path and returns the decayed
/// reward used at each depth.
std::vector<double> backpropagate(SearchTree& tree, const std::vector<std::size_t>& path,
                                  double reward, double gamma, double alpha,
                                  QMode q_mode = QMode::kDecayed);

bool should_terminate(const RewardBuffer& buffer, double epsilon, std::size_t n_min,
                      std::size_t n_max);

/// One select/expand descent from the root. Returns the node path.
std::vector<std::size_t> descend(SearchTree& tree, const LiteratureGraph& graph,
                                 const ExplorationConfig& config);

struct ExplorationResult {
  std::vector<ScoredIdea> population;   // generation order
  std::vector<Trajectory> trajectories;
  SearchTree tree;
  std::vector<double> reward_curve;
  std::vector<std::string> failures;    // backend errors of aborted iterations
  std::optional<std::string> abort_reason;
};

using BackpropObserver = std::function<void(const SearchTree&, std::size_t iteration)>;

/// Builds the initial population: select, expand, generate, score,
/// backpropagate until should_terminate.
ExplorationResult run_exploration(const Query& query, const LiteratureGraph& graph,
                                  const Corpus& corpus, const Backends& backends,
                                  const ExplorationConfig& config,
                                  const BackpropObserver& observer = {});

nlohmann::json tree_to_json(const SearchTree& tree);
nlohmann::json trajectory_to_json(const SearchTree& tree, const Trajectory& t,
                                  std::size_t iteration);

}  // namespace ideaflow
