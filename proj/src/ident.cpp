#include "missforest/ident.hpp"

#include <algorithm>
#include <optional>
#include <stdexcept>

#include "missforest/errors.hpp"
#include "missforest/log.hpp"

namespace missforest {

std::string IdTree::structure_key() const {
  std::vector<std::pair<int, std::string>> parts;
  parts.reserve(children.size());
  for (const auto& c : children) parts.emplace_back(c.root, c.structure_key());
  std::sort(parts.begin(), parts.end());
  std::string out = "R" + std::to_string(root);
  if (!parts.empty()) {
    out += "(";
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i > 0) out += ",";
      out += parts[i].second;
    }
    out += ")";
  }
  return out;
}

const VariantProfile* IdReport::find_variant(int r, const std::string& key) const {
  auto it = variants.find(r);
  if (it == variants.end()) return nullptr;
  for (const auto& v : it->second)
    if (v.structure_key == key) return &v;
  return nullptr;
}

bool IdReport::sets_for(int r, const std::string& key, IndSet* s_pre, IndSet* s_r,
                        IndSet* tree_children) const {
  auto fit = forest.find(r);
  if (fit != forest.end() && fit->second.structure_key() == key) {
    const auto& p = profiles.at(r);
    if (s_pre) *s_pre = p.s_pre;
    if (s_r) *s_r = p.s_r;
    if (tree_children) *tree_children = p.tree_children;
    return true;
  }
  if (const VariantProfile* vp = find_variant(r, key)) {
    if (s_pre) *s_pre = vp->s_pre;
    if (s_r) *s_r = vp->s_r;
    if (tree_children) *tree_children = vp->tree_children;
    return true;
  }
  return false;
}

std::tuple<IndSet, IndSet, IndSet> selection_primitives(const MDag& g, int r_k) {
  IndSet s_x;
  for (int x : g.parent_vars(r_k)) s_x.insert(x);
  IndSet r_p = s_x & g.descendants(r_k);
  return {s_x, r_p, colluder_set(g, r_k, r_k)};
}

IndSet colluder_set(const MDag& g, int r_k, int r_j) {
  IndSet out;
  for (int i : g.descendants(r_k).to_vector()) {
    for (int x : g.parent_vars(i))
      if (x == r_j) {
        out.insert(i);
        break;
      }
  }
  return out;
}

IndSet dependent_indicators(const MDag& g, int r_k, const IdTree& tree,
                            IndSet s_pre) {
  const MDag fixed = g.fix_indicators(tree.child_set());
  const std::vector<NodeRef> cond = g.parents(ind(r_k));
  IndSet out;
  for (int r_j : (s_pre - g.parent_inds(r_k)).to_vector()) {
    if (r_j == r_k) {
      out.insert(r_j);  // the root always depends on its own indicator
      continue;
    }
    if (!fixed.d_separated(ind(r_k), ind(r_j), cond)) out.insert(r_j);
  }
  return out;
}

namespace {

// Latest successfully re-identified pruned subtree per indicator, collected
// while one root's tree is being repaired.
using PrunedBank = std::map<int, IdTree>;

int count_nodes(const IdTree& t) {
  int n = 1;
  for (const auto& c : t.children) n += count_nodes(c);
  return n;
}

IndSet child_s_full(const IdTree& child, const MDag& g, const IdReport& report) {
  IndSet s_pre, s_r, tc;
  if (!report.sets_for(child.root, child.structure_key(), &s_pre, &s_r, &tc))
    throw std::logic_error("internal: no selection sets recorded for " +
                           child.structure_key());
  IndSet s_x;
  for (int x : g.parent_vars(child.root)) s_x.insert(x);
  return s_x | s_r;
}

IndSet recompute_s_pre(const IdTree& tree, IndSet s_x, const MDag& g,
                       const IdReport& report) {
  IndSet out = s_x;
  for (const auto& child : tree.children) out |= child_s_full(child, g, report);
  return out;
}

// Edits of `current` relative to the canonical tree, at the top level.
std::vector<std::string> describe_edits(const IdTree& canonical,
                                        const IdTree& current) {
  std::vector<std::string> out;
  for (const auto& was : canonical.children) {
    const IdTree* now = nullptr;
    for (const auto& c : current.children)
      if (c.root == was.root) now = &c;
    if (now == nullptr)
      out.push_back("removed child R" + std::to_string(was.root));
    else if (!(*now == was))
      out.push_back("child R" + std::to_string(was.root) + ": " +
                    was.structure_key() + " -> " + now->structure_key());
  }
  return out;
}

bool id_status(const MDag& g, int r_k, const SelectionProfile& prim, IdTree& tree,
               IndSet& s_pre, PrunedBank& bank, IdReport& report, int depth);

// One repair step on a child subtree: swap in already-pruned grandchild forms,
// drop colluding grandchildren, then re-check the child's own identification.
// Returns the repaired subtree, or nullopt if the child cannot survive.
std::optional<IdTree> tree_prune(const MDag& g, IdTree subtree, IndSet colluders,
                                 PrunedBank& bank, IdReport& report, int depth) {
  const int r_i = subtree.root;
  std::vector<IdTree> kept;
  kept.reserve(subtree.children.size());
  for (auto& gm : subtree.children) {
    IdTree current = std::move(gm);
    auto it = bank.find(current.root);
    if (it != bank.end() && !(it->second == current)) current = it->second;
    if (colluders.contains(current.root)) continue;
    kept.push_back(std::move(current));
  }
  subtree.children = std::move(kept);

  auto [s_x, r_p, coll_self] = selection_primitives(g, r_i);
  SelectionProfile prim;
  prim.s_x = s_x;
  prim.r_p = r_p;
  prim.colluder_self = coll_self;
  IndSet s_pre = recompute_s_pre(subtree, s_x, g, report);
  PrunedBank local;
  if (!id_status(g, r_i, prim, subtree, s_pre, local, report, depth + 1)) {
    log_trace("R" + std::to_string(r_i) +
              ": pruned form fails identification; dropping the child");
    return std::nullopt;
  }

  const std::string key = subtree.structure_key();
  const auto canonical_it = report.forest.find(r_i);
  const bool is_canonical = canonical_it != report.forest.end() &&
                            canonical_it->second.structure_key() == key;
  if (!is_canonical && report.find_variant(r_i, key) == nullptr) {
    VariantProfile vp;
    vp.tree = subtree;
    vp.structure_key = key;
    vp.tree_children = subtree.child_set();
    vp.s_pre = s_pre;
    vp.s_r = s_pre & g.parent_inds(r_i);
    vp.s_full = s_x | vp.s_r;
    if (canonical_it != report.forest.end())
      vp.pruned = describe_edits(canonical_it->second, subtree);
    report.variants[r_i].push_back(std::move(vp));
    log_trace("R" + std::to_string(r_i) + ": recorded pruned variant " + key);
  }
  bank[r_i] = subtree;
  return subtree;
}

bool id_status(const MDag& g, int r_k, const SelectionProfile& prim, IdTree& tree,
               IndSet& s_pre, PrunedBank& bank, IdReport& report, int depth) {
  if (depth > g.k_count() + 1)
    throw std::logic_error("internal: identification recursion exceeded bound");
  const int pass_budget = count_nodes(tree) + 1;
  for (int pass = 1; pass <= pass_budget; ++pass) {
    const IndSet rd = dependent_indicators(g, r_k, tree, s_pre);
    log_trace("R" + std::to_string(r_k) + " pass " + std::to_string(pass) +
              ": tree=" + tree.structure_key() + " s_pre=" + s_pre.to_string() +
              " dependent=" + rd.to_string());
    if (rd.empty()) return true;
    if (rd.intersects(prim.r_p)) {
      log_trace("R" + std::to_string(r_k) + ": dependence on " +
                (rd & prim.r_p).to_string() +
                " cannot be repaired (induced by substituted parents)");
      return false;
    }

    IndSet colluders;
    for (int r_j : rd.to_vector()) colluders |= colluder_set(g, r_k, r_j);

    const IdTree before = tree;
    std::vector<IdTree> kept;
    kept.reserve(tree.children.size());
    for (auto& child : tree.children) {
      if (colluders.contains(child.root)) {
        log_trace("R" + std::to_string(r_k) + ": removing colluding child R" +
                  std::to_string(child.root));
        continue;
      }
      bool needs_swap = false;
      for (const auto& gm : child.children) {
        auto it = bank.find(gm.root);
        if (it != bank.end() && !(it->second == gm)) {
          needs_swap = true;
          break;
        }
      }
      bool colluder_under_child = false;
      bool colluder_under_child_alt = false;
      const IndSet ch_i = child.child_set();
      for (int r_j : rd.to_vector()) {
        if (!ch_i.intersects(colluder_set(g, r_k, r_j))) continue;
        if (g.parent_inds(child.root).contains(r_j)) colluder_under_child = true;
        if (g.parent_inds(r_k).contains(r_j)) colluder_under_child_alt = true;
      }
      if (colluder_under_child != colluder_under_child_alt)
        log_trace("R" + std::to_string(r_k) + " child R" +
                  std::to_string(child.root) +
                  ": repair trigger readings disagree (parent-of-child=" +
                  std::to_string(colluder_under_child) + ", parent-of-root=" +
                  std::to_string(colluder_under_child_alt) +
                  "); using parent-of-child");
      if (needs_swap || colluder_under_child) {
        auto repaired =
            tree_prune(g, std::move(child), colluders, bank, report, depth);
        if (repaired) kept.push_back(std::move(*repaired));
      } else {
        kept.push_back(std::move(child));
      }
    }
    tree.children = std::move(kept);
    if (tree == before) {
      log_trace("R" + std::to_string(r_k) +
                ": no admissible repair changes the tree; not identifiable");
      return false;
    }
    s_pre = recompute_s_pre(tree, prim.s_x, g, report);
  }
  log_warn("R" + std::to_string(r_k) + ": repair pass budget exhausted");
  return false;
}

}  // namespace

void tree_construction(const MDag& g, int r_k, IdReport& report) {
  auto [s_x, r_p, coll_self] = selection_primitives(g, r_k);
  SelectionProfile prof;
  prof.parents = g.parents(ind(r_k));
  prof.s_x = s_x;
  prof.r_p = r_p;
  prof.colluder_self = coll_self;

  if (r_p.empty()) {
    // No substituted parent feeds back into the root's own descendants: the
    // propensity is identified outright from its parents, no fixing needed.
    IdTree t{r_k, {}};
    prof.tree_children = IndSet{};
    prof.s_pre = s_x;
    prof.s_r = s_x & g.parent_inds(r_k);
    prof.s_full = s_x | prof.s_r;
    prof.identified = true;
    report.forest[r_k] = std::move(t);
    report.profiles[r_k] = prof;
    log_info("R" + std::to_string(r_k) + ": identified without interventions");
    return;
  }

  IndSet candidates = g.descendants(r_k) - coll_self - report.not_identified;
  candidates.erase(r_k);
  IdTree tree{r_k, {}};
  for (int r_i : report.order_used) {
    if (!candidates.contains(r_i)) continue;
    tree.children.push_back(report.forest.at(r_i));  // deep copy
  }
  IndSet s_pre = recompute_s_pre(tree, s_x, g, report);
  PrunedBank bank;
  const bool ok = id_status(g, r_k, prof, tree, s_pre, bank, report, 0);
  if (ok) {
    prof.tree_children = tree.child_set();
    prof.s_pre = s_pre;
    prof.s_r = s_pre & g.parent_inds(r_k);
    prof.s_full = s_x | prof.s_r;
    prof.identified = true;
    log_info("R" + std::to_string(r_k) + ": identified with tree " +
             tree.structure_key());
    report.forest[r_k] = std::move(tree);
  } else {
    prof.identified = false;
    report.not_identified.insert(r_k);
    log_info("R" + std::to_string(r_k) + ": not identifiable");
  }
  report.profiles[r_k] = prof;
}

IdReport identify(const MDag& g) {
  IdReport report;
  report.k_count = g.k_count();
  report.order_used = g.reversed_topological_order();
  for (int r_k : report.order_used) tree_construction(g, r_k, report);
  report.target_law_identified = report.not_identified.empty();

  // Post-hoc invariant: every identified tree must actually satisfy the
  // independence criterion, and never fix a colluder of its own root.
  for (const auto& [r_k, tree] : report.forest) {
    const auto& prof = report.profiles.at(r_k);
    if (!dependent_indicators(g, r_k, tree, prof.s_pre).empty())
      throw std::logic_error("internal: recorded tree for R" +
                             std::to_string(r_k) + " fails the id criterion");
    if (prof.colluder_self.intersects(tree.child_set()))
      throw std::logic_error("internal: tree for R" + std::to_string(r_k) +
                             " fixes a colluder of its own root");
  }
  return report;
}

}  // namespace missforest
