#include "ideaflow/flowmcts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "ideaflow/errors.hpp"

namespace ideaflow {

void ExplorationConfig::validate() const {
  if (k == 0) throw ValidationError("exploration.k must be >= 1");
  if (!(c >= 0.0) || !std::isfinite(c)) throw ValidationError("exploration.c must be >= 0");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("exploration.alpha must lie in [0, 1]");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("exploration.gamma must lie in (0, 1]");
  if (!(epsilon > 0.0)) throw ValidationError("exploration.epsilon must be > 0");
  if (n_max == 0) throw ValidationError("exploration.n_max must be >= 1");
  if (n_min > n_max) throw ValidationError("exploration.n_min must not exceed n_max");
  if (depth_cap == 0) throw ValidationError("exploration.depth_cap must be >= 1");
  if (max_backend_retries < 1) throw ValidationError("exploration.max_backend_retries must be >= 1");
}

// ---------------------------------------------------------------------------

SearchTree::SearchTree() {
  TreeNode root;
  root.flow = 1.0;
  nodes_.push_back(std::move(root));
}

std::vector<std::string> SearchTree::path_docs(std::size_t key) const {
  std::vector<std::string> out;
  for (std::optional<std::size_t> cur = key; cur; cur = nodes_.at(*cur).parent) {
    if (nodes_.at(*cur).doc_id) out.push_back(*nodes_.at(*cur).doc_id);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::size_t SearchTree::add_child(std::size_t parent, std::string doc_id, double flow_prob) {
  TreeNode child;
  child.doc_id = std::move(doc_id);
  child.parent = parent;
  child.depth = nodes_.at(parent).depth + 1;
  child.edge.flow_prob = flow_prob;
  child.flow = nodes_.at(parent).flow * flow_prob;
  nodes_.push_back(std::move(child));
  const std::size_t key = nodes_.size() - 1;
  nodes_[parent].children.push_back(key);
  return key;
}

void SearchTree::recompute_flows() {
  nodes_[kRoot].flow = 1.0;
  // Children are always appended after their parent, so index order is top-down.
  for (std::size_t i = 1; i < nodes_.size(); ++i)
    nodes_[i].flow = nodes_[*nodes_[i].parent].flow * nodes_[i].edge.flow_prob;
}

double SearchTree::max_conservation_error() const {
  double worst = 0.0;
  for (const auto& n : nodes_) {
    if (n.children.empty()) continue;
    double sum = 0.0;
    for (auto c : n.children) sum += nodes_[c].edge.flow_prob;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  return worst;
}

double SearchTree::max_decomposition_error() const {
  double worst = std::abs(nodes_[kRoot].flow - 1.0);
  for (std::size_t i = 1; i < nodes_.size(); ++i) {
    const auto& n = nodes_[i];
    worst = std::max(worst, std::abs(n.flow - nodes_[*n.parent].flow * n.edge.flow_prob));
  }
  return worst;
}

double RewardBuffer::variance() const {
  if (rewards.size() < 2) return std::numeric_limits<double>::infinity();
  double mean = 0.0;
  for (double r : rewards) mean += r;
  mean /= static_cast<double>(rewards.size());
  double ss = 0.0;
  for (double r : rewards) ss += (r - mean) * (r - mean);
  return ss / static_cast<double>(rewards.size() - 1);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> untried_for(const LiteratureGraph& graph, const std::string& doc,
                                     const std::vector<std::string>& path) {
  std::vector<std::string> out;
  for (const auto& nb : graph.neighbors(doc)) {
    if (std::find(path.begin(), path.end(), nb) == path.end()) out.push_back(nb);
  }
  return out;
}

}  // namespace

SearchTree init_root(const Query& query, const LiteratureGraph& graph, const Corpus& corpus,
                     std::size_t k) {
  const auto ids = retrieve_topk(corpus, query, k);
  SearchTree tree;
  const double p = 1.0 / static_cast<double>(ids.size());
  for (const auto& id : ids) {
    const std::size_t key = tree.add_child(SearchTree::kRoot, id, p);
    tree.node(key).untried = untried_for(graph, id, {id});
  }
  tree.recompute_flows();
  return tree;
}

double depth_decayed_reward(double reward, double gamma, std::size_t depth_total,
                            std::size_t depth) {
  if (depth < 1 || depth > depth_total)
    throw ValidationError("depth must satisfy 1 <= t <= T");
  return reward * std::pow(gamma, static_cast<double>(depth_total - depth));
}

std::size_t select_child(const SearchTree& tree, std::size_t node, double c) {
  const TreeNode& n = tree.node(node);
  if (n.children.empty()) throw ValidationError("cannot select from a childless node");
  std::size_t best = n.children.front();
  double best_score = ucb(tree.node(best).edge, n.visit_count, c);
  for (std::size_t i = 1; i < n.children.size(); ++i) {
    const std::size_t cand = n.children[i];
    const double s = ucb(tree.node(cand).edge, n.visit_count, c);
    if (s > best_score || (s == best_score && *tree.node(cand).doc_id < *tree.node(best).doc_id)) {
      best = cand;
      best_score = s;
    }
  }
  return best;
}

std::optional<std::size_t> expand(SearchTree& tree, std::size_t node,
                                  const LiteratureGraph& graph) {
  TreeNode& n = tree.node(node);
  if (n.untried.empty()) return std::nullopt;
  std::string doc = n.untried.front();
  n.untried.erase(n.untried.begin());

  const double existing = static_cast<double>(n.children.size());
  const double scale = existing / (existing + 1.0);
  for (auto c : n.children) tree.node(c).edge.flow_prob *= scale;

  auto path = tree.path_docs(node);
  path.push_back(doc);
  const std::size_t key = tree.add_child(node, doc, 1.0 / (existing + 1.0));
  tree.node(key).untried = untried_for(graph, doc, path);
  tree.recompute_flows();
  return key;
}

std::vector<double> backpropagate(SearchTree& tree, const std::vector<std::size_t>& path,
                                  double reward, double gamma, double alpha, QMode q_mode) {
  if (path.size() < 2 || path.front() != SearchTree::kRoot)
    throw ValidationError("trajectory must start at the root and contain at least one edge");
  for (std::size_t i = 1; i < path.size(); ++i) {
    if (path[i] >= tree.size() || tree.node(path[i]).parent != path[i - 1])
      throw ValidationError("trajectory step " + std::to_string(i) + " is not a tree edge");
  }
  if (!(reward >= 0.0 && reward <= 1.0)) throw ValidationError("reward must lie in [0, 1]");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ValidationError("alpha must lie in [0, 1]");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma must lie in (0, 1]");

  const std::size_t depth_total = path.size() - 1;
  std::vector<double> decayed(depth_total);
  for (std::size_t t = 1; t <= depth_total; ++t) {
    const double rt = depth_decayed_reward(reward, gamma, depth_total, t);
    decayed[t - 1] = rt;
    EdgeStats& e = tree.node(path[t]).edge;
    e.visit_count += 1;
    e.applied_rewards.push_back(q_mode == QMode::kDecayed ? rt : reward);
    double sum = 0.0;
    for (double r : e.applied_rewards) sum += r;
    e.value = sum / static_cast<double>(e.applied_rewards.size());
    e.flow_prob = flow_update(e.flow_prob, alpha, rt);

    // Local normalization over the siblings of this edge.
    const auto& siblings = tree.node(path[t - 1]).children;
    double total = 0.0;
    for (auto s : siblings) total += tree.node(s).edge.flow_prob;
    for (auto s : siblings) {
      double& p = tree.node(s).edge.flow_prob;
      p = total > 0.0 ? p / total : 1.0 / static_cast<double>(siblings.size());
    }
  }
  for (auto key : path) tree.node(key).visit_count += 1;
  tree.recompute_flows();
  return decayed;
}

bool should_terminate(const RewardBuffer& buffer, double epsilon, std::size_t n_min,
                      std::size_t n_max) {
  const std::size_t n = buffer.rewards.size();
  if (n >= n_max) return true;
  return n >= n_min && buffer.variance() < epsilon;
}

std::vector<std::size_t> descend(SearchTree& tree, const LiteratureGraph& graph,
                                 const ExplorationConfig& config) {
  std::vector<std::size_t> path{SearchTree::kRoot};
  std::size_t s = SearchTree::kRoot;
  while (!tree.node(s).children.empty()) {
    s = select_child(tree, s, config.c);
    path.push_back(s);
    if (tree.node(s).depth >= config.depth_cap) break;
    if (!tree.node(s).untried.empty()) {
      expand(tree, s, graph);
      break;
    }
  }
  return path;
}

ExplorationResult run_exploration(const Query& query, const LiteratureGraph& graph,
                                  const Corpus& corpus, const Backends& backends,
                                  const ExplorationConfig& config,
                                  const BackpropObserver& observer) {
  config.validate();
  if (!backends.generator || !backends.reward)
    throw ValidationError("exploration needs generator and reward backends");

  ExplorationResult result;
  result.tree = init_root(query, graph, corpus, config.k);
  RewardBuffer buffer;
  int consecutive_failures = 0;

  while (!should_terminate(buffer, config.epsilon, config.n_min, config.n_max)) {
    const auto path = descend(result.tree, graph, config);
    std::vector<const PatentDoc*> docs;
    std::vector<std::string> doc_ids;
    for (std::size_t i = 1; i < path.size(); ++i) {
      doc_ids.push_back(*result.tree.node(path[i]).doc_id);
      docs.push_back(&corpus.at(doc_ids.back()));
    }

    Idea idea;
    FitnessRecord fitness;
    try {
      idea = backends.generator->generate_initial(query, docs);
      fitness = evaluate_fitness(*backends.reward, idea);
    } catch (const BackendError& e) {
      result.failures.push_back(e.what());
      if (++consecutive_failures >= config.max_backend_retries) {
        result.abort_reason = fmt::format(
            "exploration aborted after {} consecutive backend failures; last error: {}",
            consecutive_failures, e.what());
        break;
      }
      continue;
    }
    consecutive_failures = 0;

    const std::size_t iteration = buffer.rewards.size() + 1;
    idea.id = fmt::format("init-{:04d}", iteration);
    idea.provenance = Provenance{Operator::kInitial, {}, doc_ids, {}, 0};

    Trajectory traj;
    traj.nodes = path;
    traj.idea_id = idea.id;
    traj.reward = fitness.fitness;
    traj.decayed_rewards = backpropagate(result.tree, path, fitness.fitness, config.gamma,
                                         config.alpha, config.q_mode);
    buffer.rewards.push_back(fitness.fitness);
    result.reward_curve.push_back(fitness.fitness);
    result.trajectories.push_back(std::move(traj));
    result.population.push_back({std::move(idea), fitness});
    if (observer) observer(result.tree, iteration);
  }
  return result;
}

// ---------------------------------------------------------------------------

nlohmann::json tree_to_json(const SearchTree& tree) {
  nlohmann::json nodes = nlohmann::json::array();
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const auto& n = tree.node(i);
    nlohmann::json j;
    j["key"] = i;
    j["doc_id"] = n.doc_id ? nlohmann::json(*n.doc_id) : nlohmann::json(nullptr);
    j["parent"] = n.parent ? nlohmann::json(*n.parent) : nlohmann::json(nullptr);
    j["depth"] = n.depth;
    j["flow"] = n.flow;
    j["visit_count"] = n.visit_count;
    j["children"] = n.children;
    j["untried"] = n.untried;
    if (n.parent) {
      j["edge"] = {{"visit_count", n.edge.visit_count},
                   {"value", n.edge.value},
                   {"flow_prob", n.edge.flow_prob},
                   {"applied_rewards", n.edge.applied_rewards}};
    }
    nodes.push_back(std::move(j));
  }
  return nlohmann::json{{"schema_version", 1}, {"root", SearchTree::kRoot}, {"nodes", std::move(nodes)}};
}

nlohmann::json trajectory_to_json(const SearchTree& tree, const Trajectory& t,
                                  std::size_t iteration) {
  std::vector<std::string> docs;
  for (std::size_t i = 1; i < t.nodes.size(); ++i) docs.push_back(*tree.node(t.nodes[i]).doc_id);
  nlohmann::json j{{"schema_version", 1},
                   {"iteration", iteration},
                   {"doc_ids", docs},
                   {"node_keys", t.nodes},
                   {"decayed_rewards", t.decayed_rewards}};
  j["idea_id"] = t.idea_id ? nlohmann::json(*t.idea_id) : nlohmann::json(nullptr);
  j["reward"] = t.reward ? nlohmann::json(*t.reward) : nlohmann::json(nullptr);
  return j;
}

}  // namespace ideaflow
