#pragma once

#include <string>

#include "missforest/dataset.hpp"
#include "missforest/estimator.hpp"
#include "missforest/graph.hpp"
#include "missforest/ident.hpp"
#include "missforest/simbench.hpp"

namespace missforest {

// Graph DSL: a "vars: <K>" header, then one "<name> -> <name>" edge per line;
// '#' starts a comment; blank lines are ignored.
MDag parse_graph(const std::string& text);
std::string render_graph(const MDag& g);

// CSV with header X1..XK in any order; empty cells and "NA" mark missing.
Dataset load_csv(const std::string& path, int k);
Dataset parse_csv(const std::string& text, int k);
std::string write_csv(const Dataset& d);

// Deterministic JSON (sorted keys, stable float formatting).
std::string emit_report(const IdReport& report);
std::string emit_report(const EstimationResult& result, const MomentSpec& moment);
std::string emit_report(const std::vector<McSummary>& summaries);

}  // namespace missforest
