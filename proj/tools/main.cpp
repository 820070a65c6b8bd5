// Command-line front end: identify / estimate / simulate.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "missforest/errors.hpp"
#include "missforest/estimator.hpp"
#include "missforest/io.hpp"
#include "missforest/log.hpp"
#include "missforest/simbench.hpp"

namespace {

using namespace missforest;

constexpr int kExitParse = 2;
constexpr int kExitNotIdentified = 3;
constexpr int kExitNumeric = 4;

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw EmptyFile("cannot read file: " + path);
  std::ostringstream buffer;
  buffer << f.rdbuf();
  return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path);
  if (!f) throw EmptyFile("cannot write file: " + path);
  f << content;
}

// "X3" -> 3, bounded by the graph size.
int parse_var(const std::string& tok, int k) {
  int index = 0;
  bool ok = tok.size() >= 2 && tok[0] == 'X';
  for (std::size_t i = 1; ok && i < tok.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(tok[i])))
      ok = false;
    else
      index = index * 10 + (tok[i] - '0');
  }
  if (!ok || index < 1 || index > k)
    throw SyntaxError("expected a variable X1..X" + std::to_string(k) +
                          ", got '" + tok + "'",
                      0, 0);
  return index;
}

// "X1*X2^2" -> one polynomial regressor term.
LinTerm parse_term(const std::string& text, int k) {
  LinTerm term;
  if (text == "1") return term;  // explicit intercept spelling
  std::istringstream in(text);
  std::string factor;
  while (std::getline(in, factor, '*')) {
    int power = 1;
    std::string base = factor;
    if (auto caret = factor.find('^'); caret != std::string::npos) {
      base = factor.substr(0, caret);
      const std::string exp = factor.substr(caret + 1);
      power = 0;
      for (char c : exp) {
        if (!std::isdigit(static_cast<unsigned char>(c)))
          throw SyntaxError("bad exponent in term '" + text + "'", 0, 0);
        power = power * 10 + (c - '0');
      }
      if (power < 1) throw SyntaxError("bad exponent in term '" + text + "'", 0, 0);
    }
    term.factors.push_back({parse_var(base, k), power});
  }
  if (term.factors.empty())
    throw SyntaxError("empty regressor term in '" + text + "'", 0, 0);
  return term;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

// Moment grammar:
//   mean:X3
//   linreg:X3~X1+X2+X1*X2+X2^2     (intercept implicit)
//   cfmean:X2=1->X3|adj=X1[,X4]
MomentSpec parse_moment(const std::string& text, int k) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw SyntaxError("moment must look like 'mean:X3', 'linreg:...' or "
                      "'cfmean:...'",
                      0, 0);
  const std::string kind = text.substr(0, colon);
  const std::string body = text.substr(colon + 1);

  if (kind == "mean") return MomentSpec::mean(parse_var(body, k));

  if (kind == "linreg") {
    const auto tilde = body.find('~');
    if (tilde == std::string::npos)
      throw SyntaxError("linreg moment needs '<outcome>~<terms>'", 0, 0);
    const int outcome = parse_var(body.substr(0, tilde), k);
    std::vector<LinTerm> terms;
    terms.push_back(LinTerm{});  // intercept
    for (const std::string& part : split(body.substr(tilde + 1), '+')) {
      if (part.empty())
        throw SyntaxError("empty regressor term in '" + body + "'", 0, 0);
      LinTerm t = parse_term(part, k);
      if (t.factors.empty()) continue;  // "1" duplicates the implicit intercept
      terms.push_back(std::move(t));
    }
    return MomentSpec::linreg(outcome, std::move(terms));
  }

  if (kind == "cfmean") {
    const auto eq = body.find('=');
    const auto arrow = body.find("->");
    const auto bar = body.find('|');
    if (eq == std::string::npos || arrow == std::string::npos || arrow < eq)
      throw SyntaxError("cfmean moment needs '<trt>=<level>-><outcome>|adj=...'",
                        0, 0);
    const int treatment = parse_var(body.substr(0, eq), k);
    const std::string level_text = body.substr(eq + 1, arrow - eq - 1);
    char* end = nullptr;
    const double level = std::strtod(level_text.c_str(), &end);
    if (level_text.empty() || end == nullptr || *end != '\0')
      throw SyntaxError("cannot parse treatment level '" + level_text + "'", 0, 0);
    const std::string tail =
        bar == std::string::npos ? body.substr(arrow + 2)
                                 : body.substr(arrow + 2, bar - arrow - 2);
    const int outcome = parse_var(tail, k);
    std::vector<int> adjustment;
    if (bar != std::string::npos) {
      const std::string adj = body.substr(bar + 1);
      if (adj.rfind("adj=", 0) != 0)
        throw SyntaxError("expected 'adj=' after '|' in cfmean moment", 0, 0);
      for (const std::string& part : split(adj.substr(4), ','))
        adjustment.push_back(parse_var(part, k));
    }
    return MomentSpec::cfmean(treatment, level, outcome, std::move(adjustment));
  }

  throw SyntaxError("unknown moment kind '" + kind + "'", 0, 0);
}

void print_report(const IdReport& report) {
  std::cout << "order:";
  for (int r : report.order_used) std::cout << " R" << r;
  std::cout << "\n";
  for (const auto& [r, p] : report.profiles) {
    std::cout << "R" << r << ": "
              << (p.identified ? "identified" : "NOT identified") << "\n";
    std::cout << "  parents =";
    for (const NodeRef& n : p.parents) std::cout << " " << n.name();
    std::cout << "\n";
    std::cout << "  S^x = " << p.s_x.to_string()
              << "  R^p = " << p.r_p.to_string()
              << "  colluders = " << p.colluder_self.to_string() << "\n";
    if (p.identified) {
      std::cout << "  tree = " << report.forest.at(r).structure_key()
                << "  S~ = " << p.s_pre.to_string()
                << "  S^r = " << p.s_r.to_string()
                << "  S = " << p.s_full.to_string() << "\n";
    }
    auto it = report.variants.find(r);
    if (it != report.variants.end()) {
      for (const VariantProfile& v : it->second) {
        std::cout << "  variant " << v.structure_key
                  << "  S~ = " << v.s_pre.to_string()
                  << "  S^r = " << v.s_r.to_string()
                  << "  S = " << v.s_full.to_string() << "  [";
        for (std::size_t i = 0; i < v.pruned.size(); ++i)
          std::cout << (i ? "; " : "") << v.pruned[i];
        std::cout << "]\n";
      }
    }
  }
  std::cout << "D = " << report.not_identified.to_string() << "\n";
  std::cout << "target law identified: "
            << (report.target_law_identified ? "yes" : "no") << "\n";
}

void print_estimate(const EstimationResult& res, const MomentSpec& moment) {
  const auto names = moment.parameter_names();
  for (int i = 0; i < res.theta_hat.size(); ++i) {
    std::printf("%-14s %12.6f  (se %.6f)\n", names[i].c_str(), res.theta_hat[i],
                std::sqrt(res.covariance(i, i)));
  }
  std::cout << "closure = " << res.closure_set.to_string()
            << "  stacked dim = " << res.stacked_dimension
            << "  min pi = " << res.diagnostics.min_fitted_propensity
            << "  ESS = " << res.diagnostics.effective_sample_size << "\n";
}

void print_summaries(const std::vector<McSummary>& summaries) {
  for (const McSummary& s : summaries) {
    std::printf("%-14s n=%d reps=%d  bias=%+.5f  rmse=%.5f  mc_se=%.5f",
                s.estimator_name.c_str(), s.n, s.replicates, s.bias, s.rmse,
                s.mc_se_of_bias);
    if (s.type_i_error) std::printf("  type1=%.3f", *s.type_i_error);
    std::printf("  cover=%.1f%%  failures=%d\n", s.coverage_pct, s.failures);
  }
}

int run(int argc, char** argv) {
  CLI::App app{"Graphical missing-data identification and weighted estimation"};
  app.require_subcommand(1);

  std::string graph_path, data_path, moment_text, json_path, per_rep_path;
  std::string dgp_name = "G1", task_name = "mean";
  std::optional<double> clamp_floor;
  int n = 2000, reps = 500, parallel = 1;
  std::uint64_t seed = 1;

  CLI::App* identify_cmd = app.add_subcommand("identify", "analyze a graph");
  identify_cmd->add_option("--graph", graph_path, "graph DSL file")->required();
  identify_cmd->add_option("--json", json_path, "write the JSON report here");

  CLI::App* estimate_cmd = app.add_subcommand("estimate", "fit a target moment");
  estimate_cmd->add_option("--graph", graph_path, "graph DSL file")->required();
  estimate_cmd->add_option("--data", data_path, "CSV data file")->required();
  estimate_cmd->add_option("--moment", moment_text, "target moment")->required();
  estimate_cmd->add_option("--json", json_path, "write the JSON report here");
  double clamp_value = 0.0;
  CLI::Option* clamp_opt =
      estimate_cmd->add_option("--clamp", clamp_value, "propensity floor");

  CLI::App* simulate_cmd = app.add_subcommand("simulate", "run a benchmark");
  simulate_cmd->add_option("--dgp", dgp_name, "G1|G2|G3|G4")->required();
  simulate_cmd->add_option("--task", task_name, "mean|regression|causal")
      ->required();
  simulate_cmd->add_option("--n", n, "sample size per replicate");
  simulate_cmd->add_option("--reps", reps, "number of replicates");
  simulate_cmd->add_option("--seed", seed, "base seed");
  simulate_cmd->add_option("--parallel", parallel, "worker threads");
  simulate_cmd->add_option("--json", json_path, "write the JSON report here");
  simulate_cmd->add_option("--per-rep", per_rep_path,
                           "write per-replicate CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitParse;
  }

  try {
    if (*identify_cmd) {
      const MDag g = parse_graph(slurp(graph_path));
      const IdReport report = identify(g);
      print_report(report);
      if (!json_path.empty()) write_file(json_path, emit_report(report));
      return 0;  // a nonempty D is still a successful analysis
    }

    if (*estimate_cmd) {
      if (clamp_opt->count() > 0) clamp_floor = clamp_value;
      const MDag g = parse_graph(slurp(graph_path));
      const Dataset d = load_csv(data_path, g.k_count());
      const MomentSpec moment = parse_moment(moment_text, g.k_count());
      const IdReport report = identify(g);
      const FitRegistry reg = fit_forest(report, d, g, clamp_floor);
      const EstimationResult res =
          target_estimate(moment, d, reg, report, g, clamp_floor);
      print_estimate(res, moment);
      if (!json_path.empty()) write_file(json_path, emit_report(res, moment));
      return 0;
    }

    // simulate
    const auto graph = parse_sim_graph(dgp_name);
    if (!graph) throw SyntaxError("unknown DGP '" + dgp_name + "'", 0, 0);
    const auto task = parse_sim_task(task_name);
    if (!task) throw SyntaxError("unknown task '" + task_name + "'", 0, 0);
    if (n < 1 || reps < 2 || parallel < 1)
      throw SyntaxError("simulate needs n >= 1, reps >= 2, parallel >= 1", 0, 0);
    const DgpId id{*graph, *task};
    const std::vector<EstimatorKind> estimators{EstimatorKind::MissingTree,
                                                EstimatorKind::CompleteCase};
    std::vector<std::vector<RepRecord>> records;
    const std::vector<McSummary> summaries = monte_carlo(
        id, estimators, n, reps, seed, parallel,
        per_rep_path.empty() ? nullptr : &records);
    print_summaries(summaries);
    if (!json_path.empty()) write_file(json_path, emit_report(summaries));
    if (!per_rep_path.empty()) {
      std::ostringstream os;
      os << "rep,estimator,ok,estimate,se\n";
      char buf[64];
      for (std::size_t e = 0; e < records.size(); ++e) {
        for (const RepRecord& rec : records[e]) {
          os << rec.rep << "," << summaries[e].estimator_name << ","
             << (rec.ok ? 1 : 0) << ",";
          if (rec.ok) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g", rec.estimate, rec.se);
            os << buf << "\n";
          } else {
            os << "NA,NA\n";
          }
        }
      }
      write_file(per_rep_path, os.str());
    }
    return 0;
  } catch (const NotIdentifiedFunctional& e) {
    std::cerr << "not identified: " << e.what() << "\n";
    return kExitNotIdentified;
  } catch (const ParseError& e) {
    std::cerr << "parse error";
    if (e.line > 0) {
      std::cerr << " (line " << e.line;
      if (e.col > 0) std::cerr << ", column " << e.col;
      std::cerr << ")";
    }
    std::cerr << ": " << e.what() << "\n";
    return kExitParse;
  } catch (const HeaderMismatch& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const UnparsableCell& e) {
    std::cerr << "parse error (row " << e.row << ", column " << e.col
              << "): " << e.what() << "\n";
    return kExitParse;
  } catch (const EmptyFile& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitParse;
  } catch (const Error& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumeric;
  }
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
