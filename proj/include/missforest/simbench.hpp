#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "missforest/dataset.hpp"
#include "missforest/estimator.hpp"

namespace missforest {

enum class SimGraph { G1, G2, G3, G4 };
enum class SimTask { Mean, Regression, Causal };

struct DgpId {
  SimGraph graph;
  SimTask task;
};

std::string to_string(SimGraph g);
std::string to_string(SimTask t);
std::optional<SimGraph> parse_sim_graph(const std::string& s);
std::optional<SimTask> parse_sim_task(const std::string& s);

// Graph DSL text of the missingness mechanism used by each benchmark graph.
std::string dgp_graph_text(SimGraph g);

// Target moment evaluated in each task (Mean(X3); the task-specific
// regression; the counterfactual mean of X3 under X2 = 1 adjusting for X1).
MomentSpec dgp_moment(DgpId id);

struct SimDraw {
  Dataset data;                // masked per the sampled response pattern
  Eigen::MatrixXd complete;    // the underlying full draw
};

// One dataset of size n; deterministic given (id, n, seed).
SimDraw dgp_sample(DgpId id, int n, std::uint64_t seed);

// True propensity coefficients, keyed by indicator, ordered to match the
// fitted design (intercept, X parents ascending, R parents ascending).
// Never-missing indicators are absent from the map.
std::map<int, Vec> dgp_true_propensity_theta(SimGraph g);

// Truth for the scalar metric tracked per task: analytic where the structural
// equations are linear in the needed moments, otherwise a cached 10^7-row
// complete draw.
double dgp_truth(DgpId id);
std::optional<double> dgp_truth_analytic(DgpId id);
double dgp_truth_brute(DgpId id, long long rows = 10000000,
                       std::uint64_t seed = 0xD6);

enum class EstimatorKind { MissingTree, CompleteCase };

struct McSummary {
  std::string estimator_name;
  int n = 0;
  int replicates = 0;
  double bias = 0.0;
  double rmse = 0.0;
  std::optional<double> type_i_error;  // regression task only
  double coverage_pct = 0.0;
  double mc_se_of_bias = 0.0;
  int failures = 0;
};

struct RepRecord {
  int rep = 0;
  bool ok = false;
  double estimate = 0.0;
  double se = 0.0;
};

// Monte Carlo harness.  Per replicate: sample, fit, estimate; failures are
// counted per estimator, not fatal.  Replicates fan out over `workers`
// threads with per-replicate RNG streams, so results do not depend on
// scheduling.  per_rep (if given) receives one record list per estimator.
std::vector<McSummary> monte_carlo(
    DgpId id, const std::vector<EstimatorKind>& estimators, int n, int reps,
    std::uint64_t seed, int workers = 1,
    std::vector<std::vector<RepRecord>>* per_rep = nullptr);

// splitmix64-based replicate stream seeding, shared with the tests.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace missforest
