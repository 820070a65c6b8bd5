#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "missforest/dataset.hpp"
#include "missforest/graph.hpp"
#include "missforest/ident.hpp"
#include "missforest/numerics.hpp"

namespace missforest {

// One entry of a propensity design: a parent read off the data row
// (X parents as observed values, R parents as 0/1).
struct Feature {
  NodeKind kind;
  int index;
  bool operator==(const Feature&) const = default;
};

struct PropensityFit {
  int indicator = 0;
  std::string tree_hash;              // structure key of the tree used
  Vec theta;                          // empty when degenerate
  std::vector<Feature> design_spec;   // ordered parents (intercept implicit)
  IndSet eval_set;                    // S^r: equal to 1 wherever evaluated
  int fit_rows = 0;
  SolveReport solve;
  bool degenerate = false;            // constant-1 indicator: pi == 1
};

using FitKey = std::pair<int, std::string>;

// Descriptor of one propensity estimating function (row gate, weight tree,
// design); enough to re-evaluate the equation at arbitrary parameters.
struct EquationSpec {
  int indicator = 0;
  std::string tree_hash;
  IdTree tree;
  IndSet s_pre;
  IndSet tree_children;
  std::vector<Feature> design;
  IndSet eval_ones;                   // S^r
  int dim = 0;
};

struct FitRegistry {
  std::map<int, PropensityFit> canonical;
  std::map<FitKey, PropensityFit> variants;
  std::map<FitKey, EquationSpec> equations;

  // Exact lookup by (indicator, structure key); canonical keys match the
  // canonical forest entry.  Throws FitMissing when absent.
  const PropensityFit& fit_for(int r, const std::string& key) const;
  bool has_fit(int r, const std::string& key) const;
};

// Polynomial term over X variables, e.g. {(1,1),(2,1)} for X1*X2.
struct LinTerm {
  std::vector<std::pair<int, int>> factors;  // (variable index, power)
  double value(const Dataset& d, int row) const;
  std::string name() const;
  bool operator==(const LinTerm&) const = default;
};

// Target moment condition M(X; theta).
struct MomentSpec {
  enum class Kind { Mean, LinReg, CounterfactualMean };
  Kind kind = Kind::Mean;

  int target = 0;               // Mean: variable whose mean is sought
  int outcome = 0;              // LinReg / CounterfactualMean
  std::vector<LinTerm> terms;   // LinReg regressors
  int treatment = 0;            // CounterfactualMean
  double level = 1.0;
  std::vector<int> adjustment;

  static MomentSpec mean(int target);
  static MomentSpec linreg(int outcome, std::vector<LinTerm> terms);
  static MomentSpec cfmean(int treatment, double level, int outcome,
                           std::vector<int> adjustment);

  IndSet required_vars() const;  // indicators of the variables M reads
  int dim() const;
  Vec evaluate(const Dataset& d, int row, const Vec& theta) const;
  std::vector<std::string> parameter_names() const;
};

struct EstimationResult {
  Vec theta_hat;
  Mat covariance;                // finite-sample (V/n)
  IndSet closure_set;
  int stacked_dimension = 0;
  struct Diagnostics {
    std::vector<std::pair<std::string, SolveReport>> block_solves;
    double min_fitted_propensity = 1.0;
    double effective_sample_size = 0.0;
    int weighted_rows = 0;
  } diagnostics;
};

struct ClosureResult {
  bool identified = false;
  IndSet set;
  int offender = 0;  // lowest-index non-identified indicator reached
};

// ---- operations ----

// (1, parents of R_k) read off the row; throws MissingParentValue when an
// X parent is unobserved there.
Vec design_vector(const Dataset& d, int row, int r_k, const MDag& g);

// Product over the tree's children of 1(R_i = 1) / pi_i, each child evaluated
// under the fit matching its subtree structure; 1 for a childless tree.
double weight_W(const Dataset& d, int row, const IdTree& tree,
                const FitRegistry& reg,
                std::optional<double> clamp_floor = std::nullopt);

// Solves the weighted logistic estimating equation for R_k under the given
// tree, using child fits already present in the registry.
PropensityFit fit_propensity(int r_k, const IdTree& tree, const Dataset& d,
                             const FitRegistry& reg, const MDag& g,
                             const IdReport& report,
                             std::optional<double> clamp_floor = std::nullopt);

// Canonical fit per identified indicator plus one fit per referenced variant.
FitRegistry fit_forest(const IdReport& report, const Dataset& d, const MDag& g,
                       std::optional<double> clamp_floor = std::nullopt);

// Fixpoint of A -> A plus the union of S_i over A; fails when it reaches D.
ClosureResult closure(IndSet r_tilde, const IdReport& report);

// IPW moment estimate with stacked-sandwich covariance.
EstimationResult target_estimate(const MomentSpec& moment, const Dataset& d,
                                 const FitRegistry& reg, const IdReport& report,
                                 const MDag& g,
                                 std::optional<double> clamp_floor = std::nullopt);

// Unweighted moment estimate on rows where all required variables are present.
EstimationResult complete_case_estimate(const MomentSpec& moment,
                                        const Dataset& d);

// ---- stacked estimating-equation machinery ----

// One block of the stacked system; indicator 0 marks the target block.
struct EqBlock {
  int indicator = 0;
  std::string tree_hash;
  IdTree tree;
  IndSet row_gate;                   // indicators that must equal 1
  std::vector<Feature> design;       // free features (eval_ones absorbed)
  IndSet eval_ones;
  std::vector<int> child_blocks;     // per tree child: block index, -1 = pi==1
  int offset = 0;
  int dim = 0;
};

// Jointly evaluable stack of propensity blocks (optionally plus a target
// block, placed last).  Built from the identification report; degenerate
// indicators (constant-1 columns) contribute no block and weight 1.
class StackedSystem {
 public:
  static StackedSystem build(const MDag& g, const IdReport& report,
                             const Dataset& d,
                             const std::vector<FitKey>& seeds,
                             const MomentSpec* target = nullptr,
                             IndSet closure_set = {},
                             std::optional<double> clamp_floor = std::nullopt);

  int dimension() const { return total_dim_; }
  const std::vector<EqBlock>& blocks() const { return blocks_; }
  int block_index(int r, const std::string& key) const;

  Vec mean_residual(const Vec& theta) const;
  Mat row_residuals(const Vec& theta) const;  // n x dimension

  // Concatenates fitted parameters (and optionally target parameters) in
  // block order.
  Vec pack(const FitRegistry& reg, const Vec* target_theta = nullptr) const;

 private:
  const MDag* g_ = nullptr;
  const Dataset* data_ = nullptr;
  std::vector<EqBlock> blocks_;
  std::map<FitKey, int> index_;
  std::optional<MomentSpec> target_;
  IndSet closure_;
  std::vector<int> closure_blocks_;  // canonical blocks feeding the target weight
  std::optional<double> clamp_;
  int total_dim_ = 0;

  void row_residual(int row, const Vec& theta, Vec* out) const;
};

}  // namespace missforest
