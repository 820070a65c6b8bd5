#pragma once

#include <string>
#include <utility>
#include <vector>

#include "missforest/sets.hpp"

namespace missforest {

enum class NodeKind { Var, Ind };

// Reference to X_i (Var) or R_i (Ind); indices are 1-based.
struct NodeRef {
  NodeKind kind;
  int index;

  bool operator==(const NodeRef&) const = default;
  auto operator<=>(const NodeRef&) const = default;

  std::string name() const {
    return (kind == NodeKind::Var ? "X" : "R") + std::to_string(index);
  }
};

inline NodeRef var(int i) { return {NodeKind::Var, i}; }
inline NodeRef ind(int i) { return {NodeKind::Ind, i}; }

// Directed graph over {X_1..X_K, R_1..R_K} in which every edge head is an
// R node; encodes a missingness mechanism factorization.  Immutable once built.
class MDag {
 public:
  // Validates and normalizes an edge list given as (tail name, head name).
  static MDag build(int k_count,
                    const std::vector<std::pair<std::string, std::string>>& edges);
  static MDag build_refs(int k_count,
                         std::vector<std::pair<NodeRef, NodeRef>> edges);

  int k_count() const { return k_; }

  bool contains(NodeRef n) const {
    return n.index >= 1 && n.index <= k_;
  }

  // Edges in canonical order (sorted by tail then head).
  const std::vector<std::pair<NodeRef, NodeRef>>& edges() const { return edges_; }
  bool has_edge(NodeRef tail, NodeRef head) const;

  std::vector<NodeRef> parents(NodeRef n) const;
  std::vector<int> parent_vars(int r) const;  // X-parent indices of R_r, ascending
  IndSet parent_inds(int r) const;            // R-parents of R_r

  // Indicator descendants of R_r, including R_r itself.
  IndSet descendants(int r) const;

  // Reversed topological order over indicators; lowest index first among ties.
  std::vector<int> reversed_topological_order() const;

  // Graph surgery for do(R_j = 1): drop all edges whose head lies in t.
  MDag fix_indicators(IndSet t) const;

  // d-separation of a and b given cond, evaluated with the latent augmentation.
  bool d_separated(NodeRef a, NodeRef b, const std::vector<NodeRef>& cond) const;

 private:
  int k_ = 0;
  std::vector<std::pair<NodeRef, NodeRef>> edges_;
};

// The d-separation view of an MDag: one extra latent node U with U -> X_i for
// every i, realizing an unrestricted joint law over the X's.  U can never be
// conditioned on.
class LatentAugmentedGraph {
 public:
  explicit LatentAugmentedGraph(const MDag& base);

  // Node ids: X_i -> i-1, R_i -> K+i-1, U -> 2K.
  int node_count() const { return 2 * k_ + 1; }
  int id_of(NodeRef n) const {
    return n.kind == NodeKind::Var ? n.index - 1 : k_ + n.index - 1;
  }
  int latent_id() const { return 2 * k_; }

  const std::vector<int>& parents_of(int id) const { return parents_[id]; }
  const std::vector<int>& children_of(int id) const { return children_[id]; }

  bool d_separated(NodeRef a, NodeRef b, const std::vector<NodeRef>& cond) const;

 private:
  int k_;
  std::vector<std::vector<int>> parents_;
  std::vector<std::vector<int>> children_;
};

// Free-function spellings of the structural queries.
inline std::vector<NodeRef> parents(const MDag& g, NodeRef n) { return g.parents(n); }
inline IndSet descendants(const MDag& g, int r) { return g.descendants(r); }
inline std::vector<int> reversed_topological_order(const MDag& g) {
  return g.reversed_topological_order();
}
inline MDag fix_indicators(const MDag& g, IndSet t) { return g.fix_indicators(t); }
inline bool d_separated(const MDag& g, NodeRef a, NodeRef b,
                        const std::vector<NodeRef>& cond) {
  return g.d_separated(a, b, cond);
}
MDag build_mdag(int k_count,
                const std::vector<std::pair<std::string, std::string>>& edges);

}  // namespace missforest
