// Shared graph fixtures and their frozen expected identification tables.
// The expected values were derived by hand from the selection-set definitions
// and double-checked against independent traces before the library algorithm
// was written; tests treat them as ground truth.
#pragma once

#include <string>
#include <vector>

#include "missforest/graph.hpp"

namespace missforest::testing {

using EdgeList = std::vector<std::pair<std::string, std::string>>;

// Four-pair graph: every propensity identified, no pruning anywhere.
inline MDag clean4() {
  return MDag::build(4, EdgeList{{"X1", "R2"},
                                 {"X1", "R3"},
                                 {"X1", "R4"},
                                 {"X2", "R3"},
                                 {"X2", "R4"},
                                 {"X3", "R4"},
                                 {"X3", "R2"},
                                 {"R2", "R1"},
                                 {"R3", "R1"},
                                 {"R4", "R2"},
                                 {"R4", "R3"}});
}

// Six-pair graph exercising branch pruning: R_3's subtree is pruned two
// different ways inside the trees of R_4 and of R_5/R_6.
inline MDag pruned6() {
  return MDag::build(6, EdgeList{{"X1", "R3"},
                                 {"X3", "R4"},
                                 {"X3", "R5"},
                                 {"X3", "R6"},
                                 {"X4", "R1"},
                                 {"X4", "R6"},
                                 {"X5", "R2"},
                                 {"X6", "R5"},
                                 {"R6", "R5"},
                                 {"R6", "R3"},
                                 {"R5", "R3"},
                                 {"R4", "R3"},
                                 {"R3", "R2"},
                                 {"R2", "R1"}});
}

// Five-pair graph where R_5 is not identifiable (D = {R5}).
inline MDag blocked5() {
  return MDag::build(5, EdgeList{{"X2", "R5"},
                                 {"X1", "R4"},
                                 {"X5", "R2"},
                                 {"X4", "R1"},
                                 {"R5", "R4"},
                                 {"R5", "R3"},
                                 {"R4", "R2"},
                                 {"R3", "R2"},
                                 {"R2", "R1"}});
}

// Three-pair graph whose R_3 fails identification after its only candidate
// child prunes to nothing.
inline MDag dead_end3() {
  return MDag::build(3, EdgeList{{"X1", "R3"},
                                 {"X1", "R2"},
                                 {"R3", "R2"},
                                 {"X3", "R1"},
                                 {"R2", "R1"}});
}

// Two-pair graph: identified by a root-only tree with an R-parent gate.
inline MDag gate2() {
  return MDag::build(2, EdgeList{{"X1", "R2"}, {"R1", "R2"}});
}

// Five-pair graph exercising subtree replacement: R_5's tree carries a
// pruned copy of R_4's tree which itself embeds the pruned R_3 subtree.
inline MDag nested5() {
  return MDag::build(5, EdgeList{{"X1", "R3"},
                                 {"X3", "R4"},
                                 {"X3", "R5"},
                                 {"X5", "R2"},
                                 {"R5", "R4"},
                                 {"R5", "R3"},
                                 {"R4", "R3"},
                                 {"R3", "R2"},
                                 {"R2", "R1"}});
}

// One expected identification row; set columns use IndSet::to_string format.
struct ExpectedRow {
  int r = 0;
  bool identified = true;
  std::string s_x, r_p, colluder_self, children, s_pre, s_r, s_full;
  std::string tree_key;  // empty for non-identified rows
};

struct ExpectedVariant {
  int r = 0;  // indicator whose tree was pruned
  std::string key;
  std::string children, s_pre, s_r, s_full;
};

struct ExpectedReport {
  std::vector<ExpectedRow> rows;
  std::vector<ExpectedVariant> variants;
  std::string d_set = "{}";
  bool law_identified = true;
};

inline ExpectedReport expected_clean4() {
  ExpectedReport e;
  e.rows = {
      {1, true, "{}", "{}", "{}", "{}", "{}", "{}", "{}", "R1"},
      {2, true, "{R1,R3}", "{R1}", "{}", "{R1}", "{R1,R3}", "{}", "{R1,R3}",
       "R2(R1)"},
      {3, true, "{R1,R2}", "{R1}", "{}", "{R1}", "{R1,R2}", "{}", "{R1,R2}",
       "R3(R1)"},
      {4, true, "{R1,R2,R3}", "{R1,R2,R3}", "{}", "{R1,R2,R3}", "{R1,R2,R3}",
       "{}", "{R1,R2,R3}", "R4(R1,R2(R1),R3(R1))"},
  };
  return e;
}

inline ExpectedReport expected_pruned6() {
  ExpectedReport e;
  e.rows = {
      {1, true, "{R4}", "{}", "{}", "{}", "{R4}", "{}", "{R4}", "R1"},
      {2, true, "{R5}", "{}", "{}", "{}", "{R5}", "{}", "{R5}", "R2"},
      {3, true, "{R1}", "{R1}", "{}", "{R1,R2}", "{R1,R4,R5}", "{R4,R5}",
       "{R1,R4,R5}", "R3(R1,R2)"},
      {4, true, "{R3}", "{R3}", "{R1}", "{R2,R3}", "{R1,R3,R5}", "{}", "{R3}",
       "R4(R2,R3(R2))"},
      {5, true, "{R3,R6}", "{R3}", "{R2}", "{R1,R3}", "{R1,R3,R4,R6}", "{R6}",
       "{R3,R6}", "R5(R1,R3(R1))"},
      {6, true, "{R3,R4}", "{R3}", "{R5}", "{R1,R3}", "{R1,R3,R4}", "{}",
       "{R3,R4}", "R6(R1,R3(R1))"},
  };
  e.variants = {
      {3, "R3(R2)", "{R2}", "{R1,R5}", "{R5}", "{R1,R5}"},
      {3, "R3(R1)", "{R1}", "{R1,R4}", "{R4}", "{R1,R4}"},
  };
  return e;
}

inline ExpectedReport expected_blocked5() {
  ExpectedReport e;
  e.rows = {
      {1, true, "{R4}", "{}", "{}", "{}", "{R4}", "{}", "{R4}", "R1"},
      {2, true, "{R5}", "{}", "{}", "{}", "{R5}", "{}", "{R5}", "R2"},
      {3, true, "{}", "{}", "{}", "{}", "{}", "{}", "{}", "R3"},
      {4, true, "{R1}", "{R1}", "{R1}", "{R2}", "{R1,R5}", "{R5}", "{R1,R5}",
       "R4(R2)"},
      {5, false, "{R2}", "{R2}", "{R2}", "", "", "", "", ""},
  };
  e.d_set = "{R5}";
  e.law_identified = false;
  return e;
}

inline ExpectedReport expected_nested5() {
  ExpectedReport e;
  e.rows = {
      {1, true, "{}", "{}", "{}", "{}", "{}", "{}", "{}", "R1"},
      {2, true, "{R5}", "{}", "{}", "{}", "{R5}", "{}", "{R5}", "R2"},
      {3, true, "{R1}", "{R1}", "{}", "{R1,R2}", "{R1,R5}", "{R5}", "{R1,R5}",
       "R3(R1,R2)"},
      {4, true, "{R3}", "{R3}", "{}", "{R1,R2,R3}", "{R1,R3,R5}", "{R5}",
       "{R3,R5}", "R4(R1,R2,R3(R1,R2))"},
      {5, true, "{R3}", "{R3}", "{R2}", "{R1,R3,R4}", "{R1,R3}", "{}", "{R3}",
       "R5(R1,R3(R1),R4(R1,R3(R1)))"},
  };
  e.variants = {
      {3, "R3(R1)", "{R1}", "{R1}", "{}", "{R1}"},
      {4, "R4(R1,R3(R1))", "{R1,R3}", "{R1,R3}", "{}", "{R3}"},
  };
  return e;
}

inline ExpectedReport expected_dead_end3() {
  ExpectedReport e;
  e.rows = {
      {1, true, "{R3}", "{}", "{}", "{}", "{R3}", "{}", "{R3}", "R1"},
      {2, true, "{R1}", "{R1}", "{}", "{R1}", "{R1,R3}", "{R3}", "{R1,R3}",
       "R2(R1)"},
      {3, false, "{R1}", "{R1}", "{R1}", "", "", "", "", ""},
  };
  e.d_set = "{R3}";
  e.law_identified = false;
  return e;
}

inline ExpectedReport expected_gate2() {
  ExpectedReport e;
  e.rows = {
      // R2 descends from R1 and has X1 as parent, so it is a (harmless,
      // because r_p is empty) colluder descendant of R1.
      {1, true, "{}", "{}", "{R2}", "{}", "{}", "{}", "{}", "R1"},
      {2, true, "{R1}", "{}", "{}", "{}", "{R1}", "{R1}", "{R1}", "R2"},
  };
  return e;
}

// --- benchmark graphs (same shapes the simulation module generates) ------

inline ExpectedReport expected_bench_g2() {
  ExpectedReport e;
  e.rows = {
      {1, true, "{}", "{}", "{}", "{}", "{}", "{}", "{}", "R1"},
      {2, true, "{R1,R3}", "{R1}", "{}", "{R1}", "{R1,R3}", "{}", "{R1,R3}",
       "R2(R1)"},
      {3, true, "{R1,R2}", "{R1}", "{}", "{R1}", "{R1,R2}", "{}", "{R1,R2}",
       "R3(R1)"},
  };
  return e;
}

inline ExpectedReport expected_bench_g3() {
  ExpectedReport e;
  e.rows = {
      {1, true, "{R4}", "{}", "{}", "{}", "{R4}", "{}", "{R4}", "R1"},
      {2, true, "{R5}", "{}", "{}", "{}", "{R5}", "{}", "{R5}", "R2"},
      {3, true, "{}", "{}", "{}", "{}", "{}", "{}", "{}", "R3"},
      {4, true, "{R1}", "{R1}", "{R1}", "{R2,R3}", "{R1,R5}", "{R5}", "{R1,R5}",
       "R4(R2,R3)"},
      {5, true, "{R2}", "{R2}", "{R2}", "{R1,R3,R4}", "{R1,R2,R4}", "{}",
       "{R2}", "R5(R1,R3,R4(R3))"},
  };
  e.variants = {
      {4, "R4(R3)", "{R3}", "{R1}", "{}", "{R1}"},
  };
  return e;
}

}  // namespace missforest::testing
