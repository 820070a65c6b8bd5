#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "missforest/graph.hpp"
#include "missforest/sets.hpp"

namespace missforest {

// Intervention tree: the root's children are the indicators fixed to identify
// the root's propensity; each child carries the (possibly pruned) tree that
// identifies its own propensity in turn.  Children are kept in tau order.
struct IdTree {
  int root = 0;
  std::vector<IdTree> children;

  bool operator==(const IdTree&) const = default;

  IndSet child_set() const {
    IndSet s;
    for (const auto& c : children) s.insert(c.root);
    return s;
  }

  // Canonical serialization, e.g. "R4(R2(R1),R3(R1))"; used as variant key.
  std::string structure_key() const;
};

// Per-indicator selection sets.  Field names follow the set taxonomy used
// throughout: s_x (selection induced via substituted parents), r_p (the
// problematic subset of s_x), colluder_self, tree_children, s_pre (pre-
// selection), s_r (indicator-induced), s_full = s_x | s_r.
struct SelectionProfile {
  std::vector<NodeRef> parents;  // pa(R_k), canonical order
  IndSet s_x;
  IndSet r_p;
  IndSet colluder_self;
  IndSet tree_children;
  IndSet s_pre;
  IndSet s_r;
  IndSet s_full;
  bool identified = false;
};

// A pruned form of some indicator's tree, spliced into another tree during
// identification, with the selection sets recomputed for the pruned shape.
struct VariantProfile {
  IdTree tree;
  std::string structure_key;
  IndSet tree_children;
  IndSet s_pre;
  IndSet s_r;
  IndSet s_full;
  std::vector<std::string> pruned;  // human-readable edits vs the canonical tree
};

struct IdReport {
  int k_count = 0;
  std::vector<int> order_used;                  // tau
  std::map<int, IdTree> forest;                 // canonical trees, identified only
  std::map<int, SelectionProfile> profiles;     // every indicator
  std::map<int, std::vector<VariantProfile>> variants;
  IndSet not_identified;                        // D
  bool target_law_identified = false;

  const VariantProfile* find_variant(int r, const std::string& key) const;
  // Selection sets for the fit of R_r under the tree with the given structure
  // key (canonical or variant).  Returns nullptr profile data via found=false.
  bool sets_for(int r, const std::string& key, IndSet* s_pre, IndSet* s_r,
                IndSet* tree_children) const;
};

// s_x, r_p and the root's own colluder set for R_k.
std::tuple<IndSet, IndSet, IndSet> selection_primitives(const MDag& g, int r_k);

// Descendants of R_k whose parents include X_j (fixing them selects on R_j).
IndSet colluder_set(const MDag& g, int r_k, int r_j);

// Members of s_pre \ pa(R_k) not separated from R_k given pa(R_k) once the
// tree's children are fixed; R_k itself counts as dependent by convention.
IndSet dependent_indicators(const MDag& g, int r_k, const IdTree& tree,
                            IndSet s_pre);

// Processes one indicator (children of earlier tau positions must already be
// in the report), updating forest/profiles/variants/not_identified in place.
void tree_construction(const MDag& g, int r_k, IdReport& report);

// Runs the full pass over tau and assembles the report.
IdReport identify(const MDag& g);

}  // namespace missforest
