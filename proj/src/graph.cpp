#include "missforest/graph.hpp"

#include <algorithm>
#include <array>
#include <deque>
#include <set>

#include "missforest/errors.hpp"

namespace missforest {

namespace {

NodeRef parse_node(int k_count, const std::string& name) {
  if (name.size() < 2 || (name[0] != 'X' && name[0] != 'R'))
    throw UnknownNode("unknown node name: '" + name + "'");
  int idx = 0;
  for (std::size_t i = 1; i < name.size(); ++i) {
    if (name[i] < '0' || name[i] > '9')
      throw UnknownNode("unknown node name: '" + name + "'");
    idx = idx * 10 + (name[i] - '0');
  }
  if (idx < 1 || idx > k_count)
    throw UnknownNode("node index out of range: '" + name + "' with K=" +
                      std::to_string(k_count));
  return {name[0] == 'X' ? NodeKind::Var : NodeKind::Ind, idx};
}

}  // namespace

MDag MDag::build(int k_count,
                 const std::vector<std::pair<std::string, std::string>>& edges) {
  std::vector<std::pair<NodeRef, NodeRef>> refs;
  refs.reserve(edges.size());
  for (const auto& [tail, head] : edges)
    refs.emplace_back(parse_node(k_count, tail), parse_node(k_count, head));
  return build_refs(k_count, std::move(refs));
}

MDag MDag::build_refs(int k_count, std::vector<std::pair<NodeRef, NodeRef>> edges) {
  if (k_count < 1 || k_count > 62)
    throw UnknownNode("variable count must lie in [1, 62], got " +
                      std::to_string(k_count));
  MDag g;
  g.k_ = k_count;

  std::set<std::pair<NodeRef, NodeRef>> seen;
  for (const auto& [tail, head] : edges) {
    if (!g.contains(tail)) throw UnknownNode("edge tail out of range: " + tail.name());
    if (!g.contains(head)) throw UnknownNode("edge head out of range: " + head.name());
    if (head.kind == NodeKind::Var)
      throw EdgeIntoVariable("edge " + tail.name() + " -> " + head.name() +
                             ": proxy variables cannot have parents inside the model");
    if (tail == head)
      throw CycleDetected("self-loop on " + tail.name());
    if (!seen.insert({tail, head}).second)
      throw DuplicateEdge("duplicate edge " + tail.name() + " -> " + head.name());
  }
  g.edges_.assign(seen.begin(), seen.end());

  // Cycles can only form among indicators; check with Kahn's algorithm there.
  std::vector<int> indegree(k_count + 1, 0);
  for (const auto& [tail, head] : g.edges_)
    if (tail.kind == NodeKind::Ind) ++indegree[head.index];
  std::deque<int> frontier;
  for (int i = 1; i <= k_count; ++i)
    if (indegree[i] == 0) frontier.push_back(i);
  int emitted = 0;
  while (!frontier.empty()) {
    int i = frontier.front();
    frontier.pop_front();
    ++emitted;
    for (const auto& [tail, head] : g.edges_)
      if (tail == ind(i) && --indegree[head.index] == 0)
        frontier.push_back(head.index);
  }
  if (emitted != k_count)
    throw CycleDetected("cycle among missingness indicators");
  return g;
}

bool MDag::has_edge(NodeRef tail, NodeRef head) const {
  return std::binary_search(edges_.begin(), edges_.end(),
                            std::pair<NodeRef, NodeRef>{tail, head});
}

std::vector<NodeRef> MDag::parents(NodeRef n) const {
  if (!contains(n)) throw UnknownNode("parents: unknown node " + n.name());
  std::vector<NodeRef> out;
  for (const auto& [tail, head] : edges_)
    if (head == n) out.push_back(tail);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<int> MDag::parent_vars(int r) const {
  std::vector<int> out;
  for (const auto& [tail, head] : edges_)
    if (head == ind(r) && tail.kind == NodeKind::Var) out.push_back(tail.index);
  std::sort(out.begin(), out.end());
  return out;
}

IndSet MDag::parent_inds(int r) const {
  IndSet out;
  for (const auto& [tail, head] : edges_)
    if (head == ind(r) && tail.kind == NodeKind::Ind) out.insert(tail.index);
  return out;
}

IndSet MDag::descendants(int r) const {
  if (!contains(ind(r))) throw UnknownNode("descendants: unknown indicator R" +
                                           std::to_string(r));
  IndSet out{r};
  std::deque<int> frontier{r};
  while (!frontier.empty()) {
    int i = frontier.front();
    frontier.pop_front();
    for (const auto& [tail, head] : edges_)
      if (tail == ind(i) && !out.contains(head.index)) {
        out.insert(head.index);
        frontier.push_back(head.index);
      }
  }
  return out;
}

std::vector<int> MDag::reversed_topological_order() const {
  // Emit sinks first: repeatedly take the lowest-index indicator whose
  // (remaining) children are all emitted.
  std::vector<int> outdegree(k_ + 1, 0);
  for (const auto& [tail, head] : edges_) {
    (void)head;
    if (tail.kind == NodeKind::Ind) ++outdegree[tail.index];
  }
  std::vector<bool> emitted(k_ + 1, false);
  std::vector<int> order;
  order.reserve(k_);
  for (int step = 0; step < k_; ++step) {
    int pick = -1;
    for (int i = 1; i <= k_; ++i)
      if (!emitted[i] && outdegree[i] == 0) {
        pick = i;
        break;
      }
    if (pick < 0) throw CycleDetected("cycle among missingness indicators");
    emitted[pick] = true;
    order.push_back(pick);
    for (const auto& [tail, head] : edges_)
      if (tail.kind == NodeKind::Ind && head == ind(pick)) --outdegree[tail.index];
  }
  return order;
}

MDag MDag::fix_indicators(IndSet t) const {
  std::vector<std::pair<NodeRef, NodeRef>> kept;
  kept.reserve(edges_.size());
  for (const auto& e : edges_)
    if (!t.contains(e.second.index)) kept.push_back(e);
  MDag g;
  g.k_ = k_;
  g.edges_ = std::move(kept);
  return g;
}

bool MDag::d_separated(NodeRef a, NodeRef b,
                       const std::vector<NodeRef>& cond) const {
  return LatentAugmentedGraph(*this).d_separated(a, b, cond);
}

LatentAugmentedGraph::LatentAugmentedGraph(const MDag& base) : k_(base.k_count()) {
  parents_.assign(node_count(), {});
  children_.assign(node_count(), {});
  for (const auto& [tail, head] : base.edges()) {
    parents_[id_of(head)].push_back(id_of(tail));
    children_[id_of(tail)].push_back(id_of(head));
  }
  for (int i = 1; i <= k_; ++i) {
    parents_[id_of(var(i))].push_back(latent_id());
    children_[latent_id()].push_back(id_of(var(i)));
  }
}

bool LatentAugmentedGraph::d_separated(NodeRef a, NodeRef b,
                                       const std::vector<NodeRef>& cond) const {
  const int src = id_of(a);
  const int dst = id_of(b);
  std::vector<bool> in_cond(node_count(), false);
  for (NodeRef c : cond) in_cond[id_of(c)] = true;
  if (in_cond[src] || in_cond[dst])
    throw UnknownNode("d_separated: endpoints must not be conditioned on");

  // Ancestors of the conditioning set (including the set itself).
  std::vector<bool> anc(node_count(), false);
  std::deque<int> frontier;
  for (int v = 0; v < node_count(); ++v)
    if (in_cond[v]) {
      anc[v] = true;
      frontier.push_back(v);
    }
  while (!frontier.empty()) {
    int v = frontier.front();
    frontier.pop_front();
    for (int p : parents_of(v))
      if (!anc[p]) {
        anc[p] = true;
        frontier.push_back(p);
      }
  }

  // Breadth-first search over (node, arrival direction) states along active
  // trails.  "Up" means the node was entered from a child (or is the source).
  enum { kUp = 0, kDown = 1 };
  std::vector<std::array<bool, 2>> seen(node_count(), {false, false});
  std::deque<std::pair<int, int>> queue;
  queue.push_back({src, kUp});
  while (!queue.empty()) {
    auto [v, dir] = queue.front();
    queue.pop_front();
    if (seen[v][dir]) continue;
    seen[v][dir] = true;
    if (v == dst) return false;  // reachable => d-connected

    if (dir == kUp) {
      if (!in_cond[v]) {
        for (int p : parents_of(v)) queue.push_back({p, kUp});
        for (int c : children_of(v)) queue.push_back({c, kDown});
      }
    } else {
      if (!in_cond[v])
        for (int c : children_of(v)) queue.push_back({c, kDown});
      if (anc[v])
        for (int p : parents_of(v)) queue.push_back({p, kUp});
    }
  }
  return true;
}

MDag build_mdag(int k_count,
                const std::vector<std::pair<std::string, std::string>>& edges) {
  return MDag::build(k_count, edges);
}

}  // namespace missforest
