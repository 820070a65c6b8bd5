#include "missforest/io.hpp"

#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "missforest/errors.hpp"

namespace missforest {

namespace {

using nlohmann::json;  // plain json orders keys, giving deterministic output

bool is_space(char c) { return c == ' ' || c == '\t'; }

std::string strip_line(std::string line) {
  if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
  while (!line.empty() &&
         (line.back() == '\r' || is_space(line.back()) || line.back() == '\n'))
    line.pop_back();
  return line;
}

// A node token plus its 1-based column, for error positions.
struct Token {
  std::string text;
  int col = 0;
};

Token next_token(const std::string& line, std::size_t& pos) {
  while (pos < line.size() && is_space(line[pos])) ++pos;
  Token t;
  t.col = static_cast<int>(pos) + 1;
  while (pos < line.size() && !is_space(line[pos])) t.text += line[pos++];
  return t;
}

// "X3" / "R12" -> NodeRef with range checking.
NodeRef parse_node_token(const Token& t, int k, int line_no) {
  if (t.text.size() < 2 || (t.text[0] != 'X' && t.text[0] != 'R'))
    throw SyntaxError("expected a node name like X1 or R1, got '" + t.text + "'",
                      line_no, t.col);
  int index = 0;
  for (std::size_t i = 1; i < t.text.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(t.text[i])))
      throw SyntaxError("expected a node name like X1 or R1, got '" + t.text + "'",
                        line_no, t.col);
    index = index * 10 + (t.text[i] - '0');
    if (index > 1000)
      throw SemanticError("node index out of range in '" + t.text + "'", line_no,
                          t.col);
  }
  if (index < 1 || index > k)
    throw SemanticError("unknown node '" + t.text + "' (graph has " +
                            std::to_string(k) + " variable pairs)",
                        line_no, t.col);
  return {t.text[0] == 'X' ? NodeKind::Var : NodeKind::Ind, index};
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      cells.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  cells.push_back(cur);
  return cells;
}

json set_json(IndSet s) {
  json a = json::array();
  for (int i : s.to_vector()) a.push_back("R" + std::to_string(i));
  return a;
}

json tree_json(const IdTree& t) {
  json node;
  node["root"] = "R" + std::to_string(t.root);
  json children = json::array();
  for (const auto& c : t.children) children.push_back(tree_json(c));
  node["children"] = children;
  return node;
}

json solve_json(const SolveReport& r) {
  json o;
  o["converged"] = r.converged;
  o["iterations"] = r.iterations;
  o["final_residual_norm"] = r.final_residual_norm;
  return o;
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

MDag parse_graph(const std::string& text) {
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  int k = -1;
  int header_line = 0;
  std::vector<std::pair<std::string, std::string>> edges;
  std::set<std::pair<std::string, std::string>> seen;

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = strip_line(raw);
    std::size_t pos = 0;
    while (pos < line.size() && is_space(line[pos])) ++pos;
    if (pos == line.size()) continue;

    if (k < 0) {
      // Header: vars: <count>
      Token head = next_token(line, pos);
      std::string rest;
      if (head.text.rfind("vars:", 0) == 0) {
        rest = head.text.substr(5);
      } else if (head.text == "vars") {
        Token colon = next_token(line, pos);
        if (colon.text.rfind(':', 0) != 0)
          throw SyntaxError("expected ':' after 'vars'", line_no, colon.col);
        rest = colon.text.substr(1);
      } else {
        throw SyntaxError("expected 'vars: <count>' header", line_no, head.col);
      }
      if (rest.empty()) rest = next_token(line, pos).text;
      char* end = nullptr;
      const long value = std::strtol(rest.c_str(), &end, 10);
      if (rest.empty() || end == nullptr || *end != '\0')
        throw SyntaxError("expected an integer variable count, got '" + rest + "'",
                          line_no, head.col);
      if (value < 1 || value > 62)
        throw SemanticError("variable count must be between 1 and 62", line_no,
                            head.col);
      Token extra = next_token(line, pos);
      if (!extra.text.empty())
        throw SyntaxError("unexpected text after header: '" + extra.text + "'",
                          line_no, extra.col);
      k = static_cast<int>(value);
      header_line = line_no;
      continue;
    }

    // Edge: <name> -> <name>
    Token tail_tok = next_token(line, pos);
    NodeRef tail = parse_node_token(tail_tok, k, line_no);
    Token arrow = next_token(line, pos);
    if (arrow.text != "->")
      throw SyntaxError("expected '->' after '" + tail_tok.text + "'", line_no,
                        arrow.col);
    Token head_tok = next_token(line, pos);
    if (head_tok.text.empty())
      throw SyntaxError("expected an edge head after '->'", line_no, head_tok.col);
    NodeRef head = parse_node_token(head_tok, k, line_no);
    Token extra = next_token(line, pos);
    if (!extra.text.empty())
      throw SyntaxError("unexpected text after edge: '" + extra.text + "'",
                        line_no, extra.col);

    if (head.kind != NodeKind::Ind)
      throw SemanticError("edge into a variable: '" + head_tok.text +
                              "' cannot be an edge head",
                          line_no, head_tok.col);
    if (tail == head)
      throw SemanticError("self-loop on '" + tail_tok.text + "'", line_no,
                          tail_tok.col);
    if (!seen.insert({tail_tok.text, head_tok.text}).second)
      throw SemanticError("duplicate edge '" + tail_tok.text + " -> " +
                              head_tok.text + "'",
                          line_no, tail_tok.col);
    edges.push_back({tail_tok.text, head_tok.text});
  }

  if (k < 0)
    throw SyntaxError("missing 'vars: <count>' header", std::max(1, line_no), 1);
  try {
    return MDag::build(k, edges);
  } catch (const Error& e) {
    // Whole-graph violations (cycles) have no single offending line.
    throw SemanticError(std::string("invalid graph: ") + e.what(), header_line, 1);
  }
}

std::string render_graph(const MDag& g) {
  std::ostringstream os;
  os << "vars: " << g.k_count() << "\n";
  for (const auto& [tail, head] : g.edges())
    os << tail.name() << " -> " << head.name() << "\n";
  return os.str();
}

Dataset parse_csv(const std::string& text, int k) {
  std::istringstream in(text);
  std::string raw;
  if (!std::getline(in, raw)) throw EmptyFile("CSV input is empty");
  std::string header = strip_line(raw);
  if (header.empty()) throw EmptyFile("CSV input has no header row");

  // Header cells must be a permutation of X1..Xk.
  const std::vector<std::string> names = split_commas(header);
  if (static_cast<int>(names.size()) != k)
    throw HeaderMismatch("expected " + std::to_string(k) + " columns, found " +
                         std::to_string(names.size()));
  std::vector<int> col_var(names.size(), 0);
  std::vector<bool> taken(k + 1, false);
  for (std::size_t c = 0; c < names.size(); ++c) {
    const std::string name = trim(names[c]);
    int index = 0;
    bool ok = name.size() >= 2 && name[0] == 'X';
    for (std::size_t i = 1; ok && i < name.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(name[i])))
        ok = false;
      else
        index = index * 10 + (name[i] - '0');
    }
    if (!ok || index < 1 || index > k || taken[index])
      throw HeaderMismatch("header must name X1..X" + std::to_string(k) +
                           " exactly once; found '" + name + "'");
    taken[index] = true;
    col_var[c] = index;
  }

  std::vector<std::vector<double>> rows;
  int row_no = 0;
  while (std::getline(in, raw)) {
    const std::string line = strip_line(raw);
    if (line.empty()) continue;  // tolerate trailing blank lines
    ++row_no;
    const std::vector<std::string> cells = split_commas(line);
    if (static_cast<int>(cells.size()) != k)
      throw UnparsableCell("row " + std::to_string(row_no) + " has " +
                               std::to_string(cells.size()) +
                               " cells; expected " + std::to_string(k),
                           row_no, static_cast<int>(cells.size()));
    std::vector<double> values(k, 0.0);
    for (int c = 0; c < k; ++c) {
      const std::string cell = trim(cells[c]);
      if (cell.empty() || cell == "NA") {
        values[col_var[c] - 1] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      char* end = nullptr;
      const double v = std::strtod(cell.c_str(), &end);
      if (end == nullptr || *end != '\0' || !std::isfinite(v))
        throw UnparsableCell("cannot parse cell '" + cell + "'", row_no, c + 1);
      values[col_var[c] - 1] = v;
    }
    rows.push_back(std::move(values));
  }

  Eigen::MatrixXd x(static_cast<int>(rows.size()), k);
  for (int r = 0; r < static_cast<int>(rows.size()); ++r)
    for (int c = 0; c < k; ++c) x(r, c) = rows[r][c];
  return Dataset::from_proxies(std::move(x));
}

Dataset load_csv(const std::string& path, int k) {
  std::ifstream f(path);
  if (!f) throw EmptyFile("cannot read file: " + path);
  std::ostringstream buffer;
  buffer << f.rdbuf();
  return parse_csv(buffer.str(), k);
}

std::string write_csv(const Dataset& d) {
  std::ostringstream os;
  for (int j = 1; j <= d.k(); ++j) os << (j > 1 ? "," : "") << "X" << j;
  os << "\n";
  char buf[64];
  for (int i = 0; i < d.n(); ++i) {
    for (int j = 1; j <= d.k(); ++j) {
      if (j > 1) os << ",";
      if (!d.observed(i, j)) {
        os << "NA";
      } else {
        std::snprintf(buf, sizeof(buf), "%.17g", d.value(i, j));
        os << buf;
      }
    }
    os << "\n";
  }
  return os.str();
}

std::string emit_report(const IdReport& report) {
  json j;
  j["version"] = "missforest/1";
  json order = json::array();
  for (int r : report.order_used) order.push_back("R" + std::to_string(r));
  j["order"] = order;
  j["D"] = set_json(report.not_identified);
  j["target_law_identified"] = report.target_law_identified;

  json indicators;
  for (const auto& [r, p] : report.profiles) {
    json o;
    o["identified"] = p.identified;
    json parents = json::array();
    for (const NodeRef& n : p.parents) parents.push_back(n.name());
    o["parents"] = parents;
    o["s_x"] = set_json(p.s_x);
    o["r_p"] = set_json(p.r_p);
    o["colluder_self"] = set_json(p.colluder_self);
    o["tree_children"] = set_json(p.tree_children);
    o["s_pre"] = set_json(p.s_pre);
    o["s_r"] = set_json(p.s_r);
    o["s_full"] = set_json(p.s_full);
    auto tree_it = report.forest.find(r);
    o["tree"] = tree_it != report.forest.end() ? tree_json(tree_it->second)
                                               : json(nullptr);
    json variants = json::array();
    auto var_it = report.variants.find(r);
    if (var_it != report.variants.end()) {
      for (const VariantProfile& v : var_it->second) {
        json vo;
        vo["structure_key"] = v.structure_key;
        vo["tree"] = tree_json(v.tree);
        vo["tree_children"] = set_json(v.tree_children);
        vo["s_pre"] = set_json(v.s_pre);
        vo["s_r"] = set_json(v.s_r);
        vo["s_full"] = set_json(v.s_full);
        vo["pruned"] = v.pruned;
        variants.push_back(vo);
      }
    }
    o["pruned_variants"] = variants;
    indicators["R" + std::to_string(r)] = o;
  }
  j["indicators"] = indicators;
  return dump(j);
}

std::string emit_report(const EstimationResult& result, const MomentSpec& moment) {
  json j;
  const int p = static_cast<int>(result.theta_hat.size());
  json theta = json::array(), se = json::array(), cov = json::array();
  for (int i = 0; i < p; ++i) {
    theta.push_back(result.theta_hat[i]);
    se.push_back(std::sqrt(result.covariance(i, i)));
    json row = json::array();
    for (int c = 0; c < p; ++c) row.push_back(result.covariance(i, c));
    cov.push_back(row);
  }
  j["parameter_names"] = moment.parameter_names();
  j["theta_hat"] = theta;
  j["se"] = se;
  j["covariance"] = cov;
  j["closure"] = set_json(result.closure_set);
  j["stacked_dimension"] = result.stacked_dimension;
  json diag;
  diag["min_fitted_propensity"] = result.diagnostics.min_fitted_propensity;
  diag["effective_sample_size"] = result.diagnostics.effective_sample_size;
  diag["weighted_rows"] = result.diagnostics.weighted_rows;
  json solves = json::array();
  for (const auto& [label, rep] : result.diagnostics.block_solves) {
    json o = solve_json(rep);
    o["block"] = label;
    solves.push_back(o);
  }
  diag["block_solves"] = solves.empty() ? json(nullptr) : solves;
  j["diagnostics"] = diag;
  return dump(j);
}

std::string emit_report(const std::vector<McSummary>& summaries) {
  json arr = json::array();
  for (const McSummary& s : summaries) {
    json o;
    o["estimator"] = s.estimator_name;
    o["n"] = s.n;
    o["replicates"] = s.replicates;
    o["bias"] = s.bias;
    o["rmse"] = s.rmse;
    o["mc_se_of_bias"] = s.mc_se_of_bias;
    o["coverage_pct"] = s.coverage_pct;
    o["type_i_error"] =
        s.type_i_error ? json(*s.type_i_error) : json(nullptr);
    o["failures"] = s.failures;
    arr.push_back(o);
  }
  json j;
  j["summaries"] = arr;
  return dump(j);
}

}  // namespace missforest
