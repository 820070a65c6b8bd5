#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "json.hpp"
#include "missforest/errors.hpp"
#include "missforest/estimator.hpp"
#include "missforest/ident.hpp"
#include "missforest/io.hpp"
#include "missforest/simbench.hpp"
#include "support/fixtures.hpp"

using namespace missforest;
namespace mt = missforest::testing;
using nlohmann::json;

namespace {

// "{R1,R3}" rendering of a JSON array of indicator names, for comparison
// against the frozen fixture tables.
std::string set_str(const json& arr) {
  std::string out = "{";
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (i) out += ",";
    out += arr[i].get<std::string>();
  }
  return out + "}";
}

std::string key_of(const json& tree) {
  if (tree.is_null()) return "";
  std::string k = tree["root"].get<std::string>();
  if (!tree["children"].empty()) {
    k += "(";
    for (std::size_t i = 0; i < tree["children"].size(); ++i) {
      if (i) k += ",";
      k += key_of(tree["children"][i]);
    }
    k += ")";
  }
  return k;
}

}  // namespace

TEST_CASE("render and parse are inverse on the catalog graphs") {
  for (const MDag& g : {mt::clean4(), mt::pruned6(), mt::blocked5(), mt::dead_end3(),
                        mt::gate2(), mt::nested5()}) {
    const MDag back = parse_graph(render_graph(g));
    CHECK(back.k_count() == g.k_count());
    CHECK(back.edges() == g.edges());
  }
  for (SimGraph sg : {SimGraph::G1, SimGraph::G2, SimGraph::G3, SimGraph::G4}) {
    // Benchmark texts list edges in equation order; rendering normalizes to
    // canonical order, so compare parsed structure, not bytes.
    const MDag g = parse_graph(dgp_graph_text(sg));
    CHECK(parse_graph(render_graph(g)).edges() == g.edges());
  }
}

TEST_CASE("graph text forms and tolerances") {
  CHECK(parse_graph("vars: 2\nX1 -> R2\n").k_count() == 2);
  CHECK(parse_graph("vars:2\nX1 -> R2").k_count() == 2);
  CHECK(parse_graph("vars : 2").k_count() == 2);
  CHECK(parse_graph("# lead comment\n\n  vars: 3  # trailing\nX1 -> R2\r\n")
            .has_edge(var(1), ind(2)));
  const MDag spaced = parse_graph("vars: 3\n   X2   ->    R3   \n");
  CHECK(spaced.has_edge(var(2), ind(3)));
}

TEST_CASE("syntax errors carry line and column") {
  auto check_syntax = [](const std::string& text, int line, int col) {
    CAPTURE(text);
    try {
      parse_graph(text);
      FAIL_CHECK("expected SyntaxError");
    } catch (const SyntaxError& e) {
      CHECK(e.line == line);
      CHECK(e.col == col);
    }
  };
  check_syntax("", 1, 1);                         // missing header
  check_syntax("X1 -> R2\n", 1, 1);               // edge before header
  check_syntax("vars: two\n", 1, 1);              // non-integer count
  check_syntax("vars: 2 extra\n", 1, 9);          // trailing header text
  check_syntax("vars: 2\nX1 - R2\n", 2, 4);       // bad arrow
  check_syntax("vars: 2\nX1 -> R2 junk\n", 2, 10);
  check_syntax("vars: 2\nQ1 -> R2\n", 2, 1);      // unknown prefix
  check_syntax("vars: 2\nX1 ->\n", 2, 6);         // dangling arrow
}

TEST_CASE("semantic errors carry line and column") {
  auto check_semantic = [](const std::string& text, int line) {
    CAPTURE(text);
    try {
      parse_graph(text);
      FAIL_CHECK("expected SemanticError");
    } catch (const SemanticError& e) {
      CHECK(e.line == line);
    }
  };
  check_semantic("vars: 0\n", 1);
  check_semantic("vars: 63\n", 1);
  check_semantic("vars: 2\nR1 -> X2\n", 2);       // edge into a variable
  check_semantic("vars: 2\nX3 -> R2\n", 2);       // index beyond k
  check_semantic("vars: 2\nR1 -> R1\n", 2);       // self loop
  check_semantic("vars: 2\nX1 -> R2\nX1 -> R2\n", 3);  // duplicate
  // A cycle is a whole-graph violation, reported at the header.
  try {
    parse_graph("vars: 2\nR1 -> R2\nR2 -> R1\n");
    FAIL_CHECK("expected SemanticError");
  } catch (const SemanticError& e) {
    CHECK(e.line == 1);
    CHECK(std::string(e.what()).find("invalid graph") != std::string::npos);
  }
}

TEST_CASE("csv parsing: values, missing cells, column order") {
  const Dataset d = parse_csv("X1,X2,X3\n1,2.5,NA\n,4,5\n\n", 3);
  CHECK(d.n() == 2);
  CHECK(d.k() == 3);
  CHECK(d.value(0, 1) == 1.0);
  CHECK(d.value(0, 2) == 2.5);
  CHECK_FALSE(d.observed(0, 3));
  CHECK_FALSE(d.observed(1, 1));
  CHECK(d.value(1, 2) == 4.0);
  CHECK(d.r_value(0, 1) == 1);
  CHECK(d.r_value(0, 3) == 0);

  // Header columns may come in any order; values land by name.
  const Dataset perm = parse_csv("X2, X1\n7,8\n", 2);
  CHECK(perm.value(0, 1) == 8.0);
  CHECK(perm.value(0, 2) == 7.0);
}

TEST_CASE("csv parsing failures") {
  CHECK_THROWS_AS(parse_csv("", 2), EmptyFile);
  CHECK_THROWS_AS(parse_csv("\n", 2), EmptyFile);
  CHECK_THROWS_AS(parse_csv("X1,X2\n1,2\n", 3), HeaderMismatch);
  CHECK_THROWS_AS(parse_csv("X1,X3\n1,2\n", 2), HeaderMismatch);
  CHECK_THROWS_AS(parse_csv("X1,X1\n1,2\n", 2), HeaderMismatch);
  CHECK_THROWS_AS(parse_csv("Y1,X2\n1,2\n", 2), HeaderMismatch);
  try {
    parse_csv("X1,X2\n1,2\n3,oops\n", 2);
    FAIL_CHECK("expected UnparsableCell");
  } catch (const UnparsableCell& e) {
    CHECK(e.row == 2);
    CHECK(e.col == 2);
  }
  try {
    parse_csv("X1,X2\n1\n", 2);
    FAIL_CHECK("expected UnparsableCell");
  } catch (const UnparsableCell& e) {
    CHECK(e.row == 1);
  }
  CHECK_THROWS_AS(parse_csv("X1\ninf\n", 1), UnparsableCell);
  CHECK_THROWS_AS(parse_csv("X1\nnan\n", 1), UnparsableCell);
}

TEST_CASE("csv writing round-trips bit-exactly") {
  Eigen::MatrixXd x(3, 2);
  x << 1.0 / 3.0, -2.718281828459045,
       1e-17, std::numeric_limits<double>::quiet_NaN(),
       123456.789012345678, 0.0;
  const Dataset d = Dataset::from_proxies(x);
  const Dataset back = parse_csv(write_csv(d), 2);
  REQUIRE(back.n() == 3);
  for (int i = 0; i < 3; ++i)
    for (int j = 1; j <= 2; ++j) {
      CHECK(back.observed(i, j) == d.observed(i, j));
      if (d.observed(i, j)) CHECK(back.value(i, j) == d.value(i, j));
    }
}

TEST_CASE("load_csv reads files and reports unreadable paths") {
  const std::string path = "/tmp/missforest_io_test.csv";
  {
    std::ofstream f(path);
    f << "X1,X2\n1,NA\n";
  }
  const Dataset d = load_csv(path, 2);
  CHECK(d.n() == 1);
  CHECK_FALSE(d.observed(0, 2));
  std::remove(path.c_str());
  CHECK_THROWS_AS(load_csv("/tmp/definitely_absent_9301.csv", 2), EmptyFile);
}

TEST_CASE("identification report json matches the frozen tables") {
  const MDag g = mt::clean4();
  const IdReport rep = identify(g);
  const std::string text = emit_report(rep);
  CHECK(emit_report(identify(g)) == text);  // deterministic bytes

  const json j = json::parse(text);
  CHECK(j["version"] == "missforest/1");
  CHECK(j["order"] == json::array({"R1", "R2", "R3", "R4"}));
  CHECK(j["D"].empty());
  CHECK(j["target_law_identified"] == true);

  for (const mt::ExpectedRow& row : mt::expected_clean4().rows) {
    CAPTURE(row.r);
    const json& o = j["indicators"]["R" + std::to_string(row.r)];
    CHECK(o["identified"] == row.identified);
    CHECK(set_str(o["s_x"]) == row.s_x);
    CHECK(set_str(o["r_p"]) == row.r_p);
    CHECK(set_str(o["colluder_self"]) == row.colluder_self);
    CHECK(set_str(o["tree_children"]) == row.children);
    CHECK(set_str(o["s_pre"]) == row.s_pre);
    CHECK(set_str(o["s_r"]) == row.s_r);
    CHECK(set_str(o["s_full"]) == row.s_full);
    CHECK(key_of(o["tree"]) == row.tree_key);
    CHECK(o["pruned_variants"].empty());
  }
  // Parent lists are node names in canonical order.
  CHECK(j["indicators"]["R4"]["parents"] ==
        json::array({"X1", "X2", "X3"}));
}

TEST_CASE("report json records pruned variants and non-identified sets") {
  const json jb = json::parse(emit_report(identify(mt::pruned6())));
  const json& variants = jb["indicators"]["R3"]["pruned_variants"];
  REQUIRE(variants.size() == 2);
  CHECK(variants[0]["structure_key"] == "R3(R2)");
  CHECK(variants[1]["structure_key"] == "R3(R1)");
  CHECK(key_of(variants[0]["tree"]) == "R3(R2)");
  CHECK_FALSE(variants[0]["pruned"].empty());
  CHECK(set_str(variants[1]["s_full"]) ==
        mt::expected_pruned6().variants[1].s_full);

  const json jc = json::parse(emit_report(identify(mt::blocked5())));
  CHECK(jc["D"] == json::array({"R5"}));
  CHECK(jc["target_law_identified"] == false);
  CHECK(jc["indicators"]["R5"]["identified"] == false);
  CHECK(jc["indicators"]["R1"]["identified"] == true);
}

TEST_CASE("estimation result json exposes the full inference surface") {
  const SimDraw draw = dgp_sample({SimGraph::G1, SimTask::Mean}, 800, 17);
  const MDag g = parse_graph(dgp_graph_text(SimGraph::G1));
  const IdReport rep = identify(g);
  const FitRegistry reg = fit_forest(rep, draw.data, g);
  const MomentSpec moment = MomentSpec::mean(3);
  const EstimationResult est = target_estimate(moment, draw.data, reg, rep, g);

  const std::string text = emit_report(est, moment);
  const json j = json::parse(text);
  REQUIRE(j["theta_hat"].size() == 1);
  REQUIRE(j["se"].size() == 1);
  CHECK(j["parameter_names"].size() == 1);
  CHECK(j["closure"] == json::array({"R1", "R3"}));
  CHECK(j["stacked_dimension"] == est.stacked_dimension);
  CHECK(j["se"][0].get<double>() ==
        doctest::Approx(std::sqrt(est.covariance(0, 0))));
  CHECK(j["covariance"].size() == 1);
  CHECK(j["diagnostics"]["min_fitted_propensity"].get<double>() > 0.0);
  CHECK(j["diagnostics"]["weighted_rows"].get<int>() > 0);
  REQUIRE(j["diagnostics"]["block_solves"].is_array());
  for (const json& s : j["diagnostics"]["block_solves"]) {
    CHECK(s.contains("block"));
    CHECK(s["converged"] == true);
  }
  CHECK(emit_report(est, moment) == text);
}

TEST_CASE("monte carlo summary json") {
  McSummary with, without;
  with.estimator_name = "missing-tree";
  with.n = 100;
  with.replicates = 7;
  with.bias = 0.01;
  with.rmse = 0.2;
  with.type_i_error = 0.05;
  with.coverage_pct = 95.0;
  with.mc_se_of_bias = 0.002;
  with.failures = 1;
  without.estimator_name = "complete-case";

  const json j = json::parse(emit_report({with, without}));
  REQUIRE(j["summaries"].size() == 2);
  CHECK(j["summaries"][0]["estimator"] == "missing-tree");
  CHECK(j["summaries"][0]["type_i_error"].get<double>() == 0.05);
  CHECK(j["summaries"][0]["failures"] == 1);
  CHECK(j["summaries"][1]["type_i_error"].is_null());
}
