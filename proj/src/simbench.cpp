#include "missforest/simbench.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "missforest/errors.hpp"
#include "missforest/graph.hpp"
#include "missforest/ident.hpp"
#include "missforest/log.hpp"

namespace missforest {

namespace {

constexpr double kZ975 = 1.959963984540054;

int graph_k(SimGraph g) {
  switch (g) {
    case SimGraph::G1:
    case SimGraph::G2:
      return 3;
    case SimGraph::G3:
      return 5;
    case SimGraph::G4:
      return 10;
  }
  return 0;
}

// Linear predictor of one missingness propensity, terms in source order.
struct LinPred {
  double intercept = 0.0;
  std::vector<std::pair<int, double>> x_terms;  // (variable, coefficient)
  std::vector<std::pair<int, double>> r_terms;  // (indicator, coefficient)
};

// Indicators without an entry are never missing (identically 1).
std::map<int, LinPred> r_equations(SimGraph g) {
  std::map<int, LinPred> eq;
  switch (g) {
    case SimGraph::G1:
      eq[2] = {2.0, {{1, 1.0}}, {}};
      eq[3] = {1.0, {{1, 0.5}}, {}};
      break;
    case SimGraph::G2:
      eq[1] = {1.0, {}, {{2, 1.0}, {3, 1.0}}};
      eq[2] = {0.0, {{1, -0.5}, {3, 0.15}}, {}};
      eq[3] = {3.0, {{1, 0.5}, {2, -1.0}}, {}};
      break;
    case SimGraph::G3:
      eq[1] = {1.2, {{4, 0.01}}, {{2, 1.5}}};
      eq[2] = {-4.0, {{5, 1.0}}, {{3, 1.0}}};
      eq[3] = {-0.8, {}, {{4, 2.0}, {5, 1.8}}};
      eq[4] = {0.3, {{1, 1.5}}, {{5, 2.0}}};
      eq[5] = {0.8, {{2, 1.5}}, {}};
      break;
    case SimGraph::G4: {
      auto alt = [](int from, int to, double first) {
        std::vector<std::pair<int, double>> out;
        double c = first;
        for (int j = from; j <= to; ++j) {
          out.push_back({j, c});
          c = -c;
        }
        return out;
      };
      eq[1] = {-0.1, {}, alt(2, 10, 0.1)};
      eq[2] = {0.1, {{1, 0.3}}, alt(3, 10, -0.1)};
      eq[3] = {0.1, {{2, -0.3}, {1, 0.3}}, alt(4, 10, -0.1)};
      eq[4] = {10.0, {{3, -1.0}, {2, 0.2}}, alt(5, 10, -0.1)};
      eq[5] = {10.0, {{4, -1.0}, {3, 0.2}}, alt(6, 10, -0.1)};
      eq[6] = {2.0, {{5, -1.0}, {4, 1.0}}, alt(7, 10, -0.1)};
      eq[7] = {2.0, {{6, -1.0}, {5, 1.0}}, alt(8, 10, -0.1)};
      eq[8] = {2.0, {{7, -2.0}, {6, 2.0}}, alt(9, 10, -0.1)};
      eq[9] = {2.0, {{8, -2.0}, {7, 2.0}}, alt(10, 10, -0.1)};
      eq[10] = {2.0, {{9, -1.0}, {8, 1.0}}, {}};
      break;
    }
  }
  return eq;
}

std::vector<std::pair<std::string, std::string>> graph_edges(SimGraph g) {
  std::vector<std::pair<std::string, std::string>> edges;
  for (const auto& [k, eq] : r_equations(g)) {
    for (const auto& [x, c] : eq.x_terms) {
      (void)c;
      edges.push_back({"X" + std::to_string(x), "R" + std::to_string(k)});
    }
    for (const auto& [r, c] : eq.r_terms) {
      (void)c;
      edges.push_back({"R" + std::to_string(r), "R" + std::to_string(k)});
    }
  }
  return edges;
}

MDag dgp_mdag(SimGraph g) { return MDag::build(graph_k(g), graph_edges(g)); }

// Structural X draw for one row, written into x[1..K] in source order.
// Task Regression zeroes the X1 pathway into X3; task Causal makes X2 binary.
template <typename Rng>
void sample_x_row(SimGraph g, SimTask task, Rng& rng,
                  std::normal_distribution<double>& normal,
                  std::uniform_real_distribution<double>& unif,
                  std::vector<double>& x) {
  if (g == SimGraph::G1) {
    x[1] = normal(rng);
    if (task == SimTask::Causal)
      x[2] = unif(rng) < expit(1.0 - x[1]) ? 1.0 : 0.0;
    else
      x[2] = 1.0 - x[1] + normal(rng);
    const double slope_x1 = task == SimTask::Regression ? 0.0 : 3.0;
    x[3] = 1.0 - 2.0 * x[2] + slope_x1 * x[1] + normal(rng);
    return;
  }
  // G2 family shares the X1..X3 block.
  x[1] = 1.0 + normal(rng);
  if (task == SimTask::Causal)
    x[2] = unif(rng) < expit(3.0 - 0.6 * std::abs(x[1])) ? 1.0 : 0.0;
  else
    x[2] = 3.0 - 0.6 * std::abs(x[1]) + normal(rng);
  const double x3_mean = task == SimTask::Regression
                             ? 2.0 - x[2] * x[2]
                             : 2.0 - x[2] * x[2] + 4.0 * x[2] + 2.0 * x[1] * x[2];
  x[3] = x3_mean + std::sqrt(1.5) * normal(rng);

  if (g == SimGraph::G3) {
    x[5] = 2.0 + normal(rng);
    x[4] = 5.0 * x[5] * x[5] * x[5] - 5.0 * std::abs(x[3]) * x[5] + normal(rng);
  } else if (g == SimGraph::G4) {
    x[4] = 1.0 + x[3] - 0.5 * x[2] + normal(rng);
    x[5] = 1.0 + 0.9 * x[4] - 0.4 * x[3] + normal(rng);
    x[6] = 1.0 + 0.8 * x[5] - 0.3 * x[4] + normal(rng);
    x[7] = 1.0 + 0.7 * x[6] - 0.2 * x[5] + normal(rng);
    x[8] = 1.0 + 0.7 * x[7] - 0.2 * x[6] + normal(rng);
    x[9] = 1.0 + 0.7 * x[8] - 0.2 * x[7] + normal(rng);
    x[10] = 1.0 + 0.7 * x[9] - 0.2 * x[8] + normal(rng);
  }
}

std::string estimator_label(EstimatorKind e) {
  return e == EstimatorKind::MissingTree ? "missing-tree" : "complete-case";
}

}  // namespace

std::string to_string(SimGraph g) {
  switch (g) {
    case SimGraph::G1: return "G1";
    case SimGraph::G2: return "G2";
    case SimGraph::G3: return "G3";
    case SimGraph::G4: return "G4";
  }
  return "?";
}

std::string to_string(SimTask t) {
  switch (t) {
    case SimTask::Mean: return "mean";
    case SimTask::Regression: return "regression";
    case SimTask::Causal: return "causal";
  }
  return "?";
}

std::optional<SimGraph> parse_sim_graph(const std::string& s) {
  if (s == "G1" || s == "g1") return SimGraph::G1;
  if (s == "G2" || s == "g2") return SimGraph::G2;
  if (s == "G3" || s == "g3") return SimGraph::G3;
  if (s == "G4" || s == "g4") return SimGraph::G4;
  return std::nullopt;
}

std::optional<SimTask> parse_sim_task(const std::string& s) {
  if (s == "mean") return SimTask::Mean;
  if (s == "regression") return SimTask::Regression;
  if (s == "causal") return SimTask::Causal;
  return std::nullopt;
}

std::string dgp_graph_text(SimGraph g) {
  std::ostringstream os;
  os << "vars: " << graph_k(g) << "\n";
  for (const auto& [tail, head] : graph_edges(g)) os << tail << " -> " << head << "\n";
  return os.str();
}

MomentSpec dgp_moment(DgpId id) {
  switch (id.task) {
    case SimTask::Mean:
      return MomentSpec::mean(3);
    case SimTask::Regression: {
      std::vector<LinTerm> terms;
      if (id.graph == SimGraph::G1)
        terms = {LinTerm{{}}, LinTerm{{{1, 1}}}, LinTerm{{{2, 1}}}};
      else
        terms = {LinTerm{{}}, LinTerm{{{1, 1}, {2, 1}}}, LinTerm{{{2, 1}}},
                 LinTerm{{{2, 2}}}};
      return MomentSpec::linreg(3, std::move(terms));
    }
    case SimTask::Causal:
      return MomentSpec::cfmean(2, 1.0, 3, {1});
  }
  throw std::logic_error("internal: unknown task");
}

SimDraw dgp_sample(DgpId id, int n, std::uint64_t seed) {
  const int k = graph_k(id.graph);
  const auto eqs = r_equations(id.graph);
  // Sample indicators parents-first: the reverse of the sinks-first order.
  std::vector<int> r_order = dgp_mdag(id.graph).reversed_topological_order();
  std::reverse(r_order.begin(), r_order.end());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  Eigen::MatrixXd x(n, k);
  Eigen::MatrixXi r(n, k);
  std::vector<double> xv(k + 1, 0.0);
  std::vector<int> rv(k + 1, 1);
  for (int row = 0; row < n; ++row) {
    sample_x_row(id.graph, id.task, rng, normal, unif, xv);
    for (int j : r_order) {
      auto it = eqs.find(j);
      if (it == eqs.end()) {
        rv[j] = 1;  // no propensity listed: never missing, no draw consumed
        continue;
      }
      double t = it->second.intercept;
      for (const auto& [v, c] : it->second.x_terms) t += c * xv[v];
      for (const auto& [i, c] : it->second.r_terms) t += c * rv[i];
      rv[j] = unif(rng) < expit(t) ? 1 : 0;
    }
    for (int j = 1; j <= k; ++j) {
      x(row, j - 1) = xv[j];
      r(row, j - 1) = rv[j];
    }
  }
  SimDraw out;
  out.complete = x;
  out.data = Dataset::from_complete(x, r);
  return out;
}

std::map<int, Vec> dgp_true_propensity_theta(SimGraph g) {
  std::map<int, Vec> out;
  for (auto& [k, eq] : r_equations(g)) {
    auto xs = eq.x_terms;
    auto rs = eq.r_terms;
    std::sort(xs.begin(), xs.end());
    std::sort(rs.begin(), rs.end());
    Vec theta(1 + xs.size() + rs.size());
    theta[0] = eq.intercept;
    int idx = 1;
    for (const auto& [v, c] : xs) {
      (void)v;
      theta[idx++] = c;
    }
    for (const auto& [i, c] : rs) {
      (void)i;
      theta[idx++] = c;
    }
    out[k] = theta;
  }
  return out;
}

std::optional<double> dgp_truth_analytic(DgpId id) {
  if (id.task == SimTask::Regression) return 0.0;  // null coefficient
  if (id.graph == SimGraph::G1) {
    // E(X3) = 1 - 2 E(X2) + 3 E(X1) = -1; counterfactual mean at x2=1 likewise.
    return -1.0;
  }
  if (id.task == SimTask::Causal) {
    // E(X3 | do(X2=1)) = 2 - 1 + 4 + 2 E(X1) = 7 with E(X1) = 1.
    return 7.0;
  }
  return std::nullopt;  // G2-G4 mean: nonlinear in |X1|, use the brute draw
}

double dgp_truth_brute(DgpId id, long long rows, std::uint64_t seed) {
  if (id.task == SimTask::Regression) return 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const bool g1 = id.graph == SimGraph::G1;
  long double acc = 0.0;
  for (long long i = 0; i < rows; ++i) {
    double x1, x2, x3;
    if (g1) {
      x1 = normal(rng);
      if (id.task == SimTask::Causal)
        x2 = 1.0;  // intervened level
      else
        x2 = 1.0 - x1 + normal(rng);
      x3 = 1.0 - 2.0 * x2 + 3.0 * x1 + normal(rng);
    } else {
      x1 = 1.0 + normal(rng);
      if (id.task == SimTask::Causal)
        x2 = 1.0;
      else
        x2 = 3.0 - 0.6 * std::abs(x1) + normal(rng);
      x3 = 2.0 - x2 * x2 + 4.0 * x2 + 2.0 * x1 * x2 + std::sqrt(1.5) * normal(rng);
    }
    (void)unif;
    acc += x3;
  }
  return static_cast<double>(acc / rows);
}

double dgp_truth(DgpId id) {
  static std::mutex mutex;
  static std::map<std::pair<int, int>, double> cache;
  const std::pair<int, int> key{static_cast<int>(id.graph),
                                static_cast<int>(id.task)};
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;

  double value;
  if (id.task == SimTask::Causal) {
    value = dgp_truth_brute(id);  // counterfactual truths are simulated
  } else if (auto analytic = dgp_truth_analytic(id)) {
    value = *analytic;
  } else {
    value = dgp_truth_brute(id);
  }
  cache[key] = value;
  return value;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

std::vector<McSummary> monte_carlo(
    DgpId id, const std::vector<EstimatorKind>& estimators, int n, int reps,
    std::uint64_t seed, int workers,
    std::vector<std::vector<RepRecord>>* per_rep) {
  if (reps < 2) throw InsufficientRows("monte_carlo needs at least 2 replicates");
  const MDag g = dgp_mdag(id.graph);
  const IdReport report = identify(g);
  const MomentSpec moment = dgp_moment(id);
  const double truth = dgp_truth(id);
  const int metric_index = id.task == SimTask::Mean ? 0
                           : id.task == SimTask::Regression
                               ? 1
                               : moment.dim() - 1;

  const int ne = static_cast<int>(estimators.size());
  std::vector<std::vector<RepRecord>> records(
      ne, std::vector<RepRecord>(reps));

  std::atomic<int> next{0};
  auto worker = [&]() {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (;;) {
      const int rep = next.fetch_add(1);
      if (rep >= reps) return;
      const SimDraw draw = dgp_sample(id, n, mix_seed(seed, rep));
      for (int e = 0; e < ne; ++e) {
        RepRecord rec;
        rec.rep = rep;
        try {
          EstimationResult res;
          if (estimators[e] == EstimatorKind::MissingTree) {
            const FitRegistry reg = fit_forest(report, draw.data, g);
            res = target_estimate(moment, draw.data, reg, report, g);
          } else {
            res = complete_case_estimate(moment, draw.data);
          }
          rec.ok = true;
          rec.estimate = res.theta_hat[metric_index];
          rec.se = std::sqrt(res.covariance(metric_index, metric_index));
        } catch (const Error& err) {
          rec.ok = false;
          rec.estimate = nan;
          rec.se = nan;
          log_info("replicate " + std::to_string(rep) + " (" +
                   estimator_label(estimators[e]) + ") failed: " + err.what());
        }
        records[e][rep] = rec;
      }
    }
  };

  const int nthreads = std::max(1, std::min(workers, reps));
  if (nthreads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  std::vector<McSummary> out;
  for (int e = 0; e < ne; ++e) {
    McSummary s;
    s.estimator_name = estimator_label(estimators[e]);
    s.n = n;
    s.replicates = reps;
    double sum = 0.0, sum_sq_err = 0.0;
    int ok = 0, covered = 0, rejected = 0;
    for (const RepRecord& rec : records[e]) {
      if (!rec.ok) continue;
      ++ok;
      sum += rec.estimate;
      sum_sq_err += (rec.estimate - truth) * (rec.estimate - truth);
      if (std::abs(rec.estimate - truth) <= kZ975 * rec.se) ++covered;
      if (std::abs(rec.estimate) > kZ975 * rec.se) ++rejected;
    }
    s.failures = reps - ok;
    if (ok > 0) {
      const double mean = sum / ok;
      s.bias = mean - truth;
      s.rmse = std::sqrt(sum_sq_err / ok);
      double ss = 0.0;
      for (const RepRecord& rec : records[e])
        if (rec.ok) ss += (rec.estimate - mean) * (rec.estimate - mean);
      const double sd = ok > 1 ? std::sqrt(ss / (ok - 1)) : 0.0;
      s.mc_se_of_bias = sd / std::sqrt(static_cast<double>(ok));
      s.coverage_pct = 100.0 * covered / ok;
      if (id.task == SimTask::Regression)
        s.type_i_error = static_cast<double>(rejected) / ok;
    }
    out.push_back(std::move(s));
  }
  if (per_rep) *per_rep = std::move(records);
  return out;
}

}  // namespace missforest
