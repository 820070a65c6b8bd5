#include "missforest/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <stdexcept>

#include "missforest/errors.hpp"
#include "missforest/log.hpp"

namespace missforest {

namespace {

std::vector<Feature> full_parent_features(const MDag& g, int r_k) {
  std::vector<Feature> out;
  for (int x : g.parent_vars(r_k)) out.push_back({NodeKind::Var, x});
  for (int r : g.parent_inds(r_k).to_vector()) out.push_back({NodeKind::Ind, r});
  return out;
}

// Features carrying free coefficients: R-parents pinned to 1 by the eval set
// are absorbed into the intercept and carry none.
std::vector<Feature> free_features(const MDag& g, int r_k, IndSet eval_ones) {
  std::vector<Feature> out;
  for (int x : g.parent_vars(r_k)) out.push_back({NodeKind::Var, x});
  for (int r : g.parent_inds(r_k).to_vector())
    if (!eval_ones.contains(r)) out.push_back({NodeKind::Ind, r});
  return out;
}

double feature_value(const Dataset& d, int row, const Feature& f) {
  if (f.kind == NodeKind::Ind) return d.r_value(row, f.index);
  const double v = d.value(row, f.index);
  if (std::isnan(v))
    throw MissingParentValue("X" + std::to_string(f.index) +
                             " is unobserved in row " + std::to_string(row));
  return v;
}

bool row_gated(const Dataset& d, int row, IndSet gate) {
  for (int i : gate.to_vector())
    if (d.r_value(row, i) != 1) return false;
  return true;
}

bool column_constant_one(const Dataset& d, int r) {
  for (int i = 0; i < d.n(); ++i)
    if (d.r_value(i, r) != 1) return false;
  return true;
}

// Fitted propensity at a row; only valid where the fit's eval set is all 1.
double eval_fit(const PropensityFit& fit, const Dataset& d, int row) {
  if (fit.degenerate) return 1.0;
  for (int j : fit.eval_set.to_vector())
    if (d.r_value(row, j) != 1)
      throw std::logic_error("internal: propensity for R" +
                             std::to_string(fit.indicator) +
                             " evaluated outside its validity region (R" +
                             std::to_string(j) + " = 0)");
  double t = fit.theta[0];
  int idx = 1;
  for (const Feature& f : fit.design_spec) {
    if (f.kind == NodeKind::Ind && fit.eval_set.contains(f.index)) continue;
    t += fit.theta[idx++] * feature_value(d, row, f);
  }
  return expit(t);
}

std::string fit_label(int indicator, const std::string& key) {
  return "pi(R" + std::to_string(indicator) + ")@" + key;
}

}  // namespace

Vec design_vector(const Dataset& d, int row, int r_k, const MDag& g) {
  const std::vector<Feature> feats = full_parent_features(g, r_k);
  Vec out(1 + feats.size());
  out[0] = 1.0;
  for (std::size_t j = 0; j < feats.size(); ++j)
    out[1 + j] = feature_value(d, row, feats[j]);
  return out;
}

const PropensityFit& FitRegistry::fit_for(int r, const std::string& key) const {
  auto c = canonical.find(r);
  if (c != canonical.end() && c->second.tree_hash == key) return c->second;
  auto v = variants.find({r, key});
  if (v != variants.end()) return v->second;
  throw FitMissing("no propensity fit for R" + std::to_string(r) +
                   " under tree " + key);
}

bool FitRegistry::has_fit(int r, const std::string& key) const {
  auto c = canonical.find(r);
  if (c != canonical.end() && c->second.tree_hash == key) return true;
  return variants.find({r, key}) != variants.end();
}

double weight_W(const Dataset& d, int row, const IdTree& tree,
                const FitRegistry& reg, std::optional<double> clamp_floor) {
  double w = 1.0;
  for (const auto& child : tree.children) {
    if (d.r_value(row, child.root) != 1) return 0.0;
    const PropensityFit& fit = reg.fit_for(child.root, child.structure_key());
    double pi = eval_fit(fit, d, row);
    if (!(pi > 0.0))
      throw NonPositivePropensity("fitted propensity for R" +
                                  std::to_string(child.root) +
                                  " is not positive at row " +
                                  std::to_string(row));
    if (clamp_floor) pi = std::max(pi, *clamp_floor);
    w /= pi;
  }
  return w;
}

PropensityFit fit_propensity(int r_k, const IdTree& tree, const Dataset& d,
                             const FitRegistry& reg, const MDag& g,
                             const IdReport& report,
                             std::optional<double> clamp_floor) {
  const std::string key = tree.structure_key();
  IndSet s_pre, s_r, tree_children;
  if (!report.sets_for(r_k, key, &s_pre, &s_r, &tree_children))
    throw FitMissing("no identification record for R" + std::to_string(r_k) +
                     " under tree " + key);

  PropensityFit fit;
  fit.indicator = r_k;
  fit.tree_hash = key;
  fit.design_spec = full_parent_features(g, r_k);
  fit.eval_set = s_r;

  if (column_constant_one(d, r_k)) {
    fit.degenerate = true;
    fit.fit_rows = d.n();
    fit.solve.converged = true;
    log_info(fit_label(r_k, key) + ": indicator constant 1, degenerate fit");
    return fit;
  }

  const IndSet gate = s_pre | tree_children;
  std::vector<int> rows;
  rows.reserve(d.n());
  for (int i = 0; i < d.n(); ++i)
    if (row_gated(d, i, gate)) rows.push_back(i);

  const std::vector<Feature> feats = free_features(g, r_k, s_r);
  const int p = 1 + static_cast<int>(feats.size());
  if (static_cast<int>(rows.size()) < p)
    throw InsufficientRows("fit of R" + std::to_string(r_k) + " needs " +
                           std::to_string(p) + " valid rows, found " +
                           std::to_string(rows.size()));

  const int m = static_cast<int>(rows.size());
  Mat x(m, p);
  Vec w(m), y(m);
  for (int i = 0; i < m; ++i) {
    const int row = rows[i];
    x(i, 0) = 1.0;
    for (int j = 0; j < p - 1; ++j) x(i, 1 + j) = feature_value(d, row, feats[j]);
    w[i] = weight_W(d, row, tree, reg, clamp_floor);
    y[i] = d.r_value(row, r_k);
  }

  const double n = d.n();
  auto residual = [&](const Vec& theta) -> Vec {
    const Vec eta = x * theta;
    Vec r(p);
    r.setZero();
    for (int i = 0; i < m; ++i)
      r += (w[i] * (y[i] - expit(eta[i]))) * x.row(i).transpose();
    return r / n;
  };
  auto jacobian = [&](const Vec& theta) -> Mat {
    const Vec eta = x * theta;
    Mat j(p, p);
    j.setZero();
    for (int i = 0; i < m; ++i) {
      const double pi = expit(eta[i]);
      j -= (w[i] * pi * (1.0 - pi)) *
           (x.row(i).transpose() * x.row(i));
    }
    return j / n;
  };

  fit.solve = newton_solve(residual, jacobian, Vec::Zero(p));

  // Diagnose separation before non-convergence: a diverging fit shows up as
  // boundary propensities on its own fit rows.
  const Vec eta = x * fit.solve.solution;
  for (int i = 0; i < m; ++i) {
    const double pi = expit(eta[i]);
    if (pi < 1e-6 || pi > 1.0 - 1e-6)
      throw Separation("fitted propensity for R" + std::to_string(r_k) +
                       " reaches " + std::to_string(pi) + " on its fit rows");
  }
  if (!fit.solve.converged)
    throw NonConvergence("propensity fit for R" + std::to_string(r_k) +
                         " under tree " + key + " did not converge (residual " +
                         std::to_string(fit.solve.final_residual_norm) + ")");
  fit.theta = fit.solve.solution;
  fit.fit_rows = m;
  return fit;
}

FitRegistry fit_forest(const IdReport& report, const Dataset& d, const MDag& g,
                       std::optional<double> clamp_floor) {
  FitRegistry reg;
  std::function<void(const IdTree&)> ensure = [&](const IdTree& t) {
    for (const auto& c : t.children) ensure(c);
    const std::string key = t.structure_key();
    if (reg.has_fit(t.root, key)) return;
    PropensityFit fit = fit_propensity(t.root, t, d, reg, g, report, clamp_floor);

    EquationSpec eq;
    eq.indicator = t.root;
    eq.tree_hash = key;
    eq.tree = t;
    report.sets_for(t.root, key, &eq.s_pre, nullptr, &eq.tree_children);
    eq.eval_ones = fit.eval_set;
    eq.design = free_features(g, t.root, fit.eval_set);
    eq.dim = 1 + static_cast<int>(eq.design.size());

    const auto canon = report.forest.find(t.root);
    const bool is_canonical =
        canon != report.forest.end() && canon->second.structure_key() == key;
    if (is_canonical)
      reg.canonical[t.root] = std::move(fit);
    else
      reg.variants[{t.root, key}] = std::move(fit);
    reg.equations[{t.root, key}] = std::move(eq);
  };
  for (int r : report.order_used) {
    auto it = report.forest.find(r);
    if (it != report.forest.end()) ensure(it->second);
  }
  return reg;
}

ClosureResult closure(IndSet r_tilde, const IdReport& report) {
  for (int i : r_tilde.to_vector())
    if (i < 1 || i > report.k_count)
      throw UnknownNode("closure: indicator R" + std::to_string(i) +
                        " outside the model");
  IndSet acc = r_tilde;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int i : acc.to_vector()) {
      if (report.not_identified.contains(i)) continue;  // no selection sets
      const IndSet add = report.profiles.at(i).s_full - acc;
      if (!add.empty()) {
        acc |= add;
        changed = true;
      }
    }
  }
  ClosureResult res;
  res.set = acc;
  const IndSet blocked = acc & report.not_identified;
  res.identified = blocked.empty();
  res.offender = blocked.empty() ? 0 : blocked.min_element();
  return res;
}

// ---- moment specifications ----

double LinTerm::value(const Dataset& d, int row) const {
  double v = 1.0;
  for (const auto& [var, power] : factors) {
    const double x = d.value(row, var);
    if (std::isnan(x))
      throw MissingParentValue("X" + std::to_string(var) +
                               " is unobserved in row " + std::to_string(row));
    for (int p = 0; p < power; ++p) v *= x;
  }
  return v;
}

std::string LinTerm::name() const {
  if (factors.empty()) return "1";
  std::string out;
  for (std::size_t i = 0; i < factors.size(); ++i) {
    if (i > 0) out += "*";
    out += "X" + std::to_string(factors[i].first);
    if (factors[i].second > 1) out += "^" + std::to_string(factors[i].second);
  }
  return out;
}

MomentSpec MomentSpec::mean(int target) {
  MomentSpec m;
  m.kind = Kind::Mean;
  m.target = target;
  return m;
}

MomentSpec MomentSpec::linreg(int outcome, std::vector<LinTerm> terms) {
  MomentSpec m;
  m.kind = Kind::LinReg;
  m.outcome = outcome;
  m.terms = std::move(terms);
  return m;
}

MomentSpec MomentSpec::cfmean(int treatment, double level, int outcome,
                              std::vector<int> adjustment) {
  MomentSpec m;
  m.kind = Kind::CounterfactualMean;
  m.treatment = treatment;
  m.level = level;
  m.outcome = outcome;
  m.adjustment = std::move(adjustment);
  return m;
}

IndSet MomentSpec::required_vars() const {
  IndSet out;
  switch (kind) {
    case Kind::Mean:
      out.insert(target);
      break;
    case Kind::LinReg:
      out.insert(outcome);
      for (const auto& t : terms)
        for (const auto& [var, power] : t.factors) {
          (void)power;
          out.insert(var);
        }
      break;
    case Kind::CounterfactualMean:
      out.insert(treatment);
      out.insert(outcome);
      for (int z : adjustment) out.insert(z);
      break;
  }
  return out;
}

int MomentSpec::dim() const {
  switch (kind) {
    case Kind::Mean:
      return 1;
    case Kind::LinReg:
      return static_cast<int>(terms.size());
    case Kind::CounterfactualMean: {
      const int z = static_cast<int>(adjustment.size());
      return (1 + z) + (2 + 2 * z) + 1;
    }
  }
  return 0;
}

Vec MomentSpec::evaluate(const Dataset& d, int row, const Vec& theta) const {
  switch (kind) {
    case Kind::Mean: {
      Vec out(1);
      const double x = d.value(row, target);
      if (std::isnan(x))
        throw MissingParentValue("X" + std::to_string(target) +
                                 " is unobserved in row " + std::to_string(row));
      out[0] = x - theta[0];
      return out;
    }
    case Kind::LinReg: {
      const int p = static_cast<int>(terms.size());
      Vec design(p);
      for (int j = 0; j < p; ++j) design[j] = terms[j].value(d, row);
      const double y = d.value(row, outcome);
      if (std::isnan(y))
        throw MissingParentValue("X" + std::to_string(outcome) +
                                 " is unobserved in row " + std::to_string(row));
      return design * (y - design.dot(theta));
    }
    case Kind::CounterfactualMean: {
      const int z = static_cast<int>(adjustment.size());
      const int p_trt = 1 + z;
      const int p_or = 2 + 2 * z;
      Vec zv(z);
      for (int j = 0; j < z; ++j) {
        zv[j] = d.value(row, adjustment[j]);
        if (std::isnan(zv[j]))
          throw MissingParentValue("X" + std::to_string(adjustment[j]) +
                                   " is unobserved in row " +
                                   std::to_string(row));
      }
      const double a = d.value(row, treatment);
      const double y = d.value(row, outcome);
      if (std::isnan(a) || std::isnan(y))
        throw MissingParentValue("treatment or outcome unobserved in row " +
                                 std::to_string(row));

      auto f_trt = [&]() {
        Vec f(p_trt);
        f[0] = 1.0;
        for (int j = 0; j < z; ++j) f[1 + j] = zv[j];
        return f;
      }();
      auto f_or = [&](double trt) {
        Vec f(p_or);
        f[0] = 1.0;
        f[1] = trt;
        for (int j = 0; j < z; ++j) {
          f[2 + j] = zv[j];
          f[2 + z + j] = trt * zv[j];
        }
        return f;
      };

      const Vec th_trt = theta.segment(0, p_trt);
      const Vec th_or = theta.segment(p_trt, p_or);
      const double psi = theta[p_trt + p_or];

      const double p1 = expit(th_trt.dot(f_trt));
      const double p_level = level > 0.5 ? p1 : 1.0 - p1;
      const Vec f_obs = f_or(a);
      const Vec f_cf = f_or(level);
      const double m_cf = th_or.dot(f_cf);
      const double at_level = std::abs(a - level) < 0.5 ? 1.0 : 0.0;

      Vec out(dim());
      out.segment(0, p_trt) = f_trt * (a - p1);
      out.segment(p_trt, p_or) = f_obs * (y - th_or.dot(f_obs));
      out[p_trt + p_or] = at_level / p_level * (y - m_cf) + m_cf - psi;
      return out;
    }
  }
  throw std::logic_error("internal: unknown moment kind");
}

std::vector<std::string> MomentSpec::parameter_names() const {
  std::vector<std::string> out;
  switch (kind) {
    case Kind::Mean:
      out.push_back("mean(X" + std::to_string(target) + ")");
      break;
    case Kind::LinReg:
      for (const auto& t : terms) out.push_back(t.name());
      break;
    case Kind::CounterfactualMean: {
      out.push_back("trt:1");
      for (int zv : adjustment) out.push_back("trt:X" + std::to_string(zv));
      out.push_back("or:1");
      out.push_back("or:X" + std::to_string(treatment));
      for (int zv : adjustment) out.push_back("or:X" + std::to_string(zv));
      for (int zv : adjustment)
        out.push_back("or:X" + std::to_string(treatment) + "*X" +
                      std::to_string(zv));
      out.push_back("psi");
      break;
    }
  }
  return out;
}

// ---- stacked system ----

StackedSystem StackedSystem::build(const MDag& g, const IdReport& report,
                                   const Dataset& d,
                                   const std::vector<FitKey>& seeds,
                                   const MomentSpec* target, IndSet closure_set,
                                   std::optional<double> clamp_floor) {
  StackedSystem s;
  s.g_ = &g;
  s.data_ = &d;
  s.closure_ = closure_set;
  s.clamp_ = clamp_floor;
  if (target) s.target_ = *target;

  // Collect every distinct (indicator, structure) reachable from the seeds.
  std::map<FitKey, IdTree> needed;
  std::function<void(const IdTree&)> collect = [&](const IdTree& t) {
    FitKey key{t.root, t.structure_key()};
    if (needed.count(key)) return;
    needed.emplace(key, t);
    for (const auto& c : t.children) collect(c);
  };
  for (const auto& [r, key] : seeds) {
    const IdTree* tree = nullptr;
    auto canon = report.forest.find(r);
    if (canon != report.forest.end() && canon->second.structure_key() == key)
      tree = &canon->second;
    else if (const VariantProfile* vp = report.find_variant(r, key))
      tree = &vp->tree;
    if (tree == nullptr)
      throw FitMissing("stacked system: no tree recorded for R" +
                       std::to_string(r) + " under " + key);
    collect(*tree);
  }

  // Deterministic order: tau position of the indicator, canonical before
  // variants, then key; the target block comes last.
  std::map<int, int> tau_pos;
  for (std::size_t i = 0; i < report.order_used.size(); ++i)
    tau_pos[report.order_used[i]] = static_cast<int>(i);
  std::vector<FitKey> ordered;
  for (const auto& [key, tree] : needed) {
    (void)tree;
    ordered.push_back(key);
  }
  std::sort(ordered.begin(), ordered.end(),
            [&](const FitKey& a, const FitKey& b) {
              const auto canon_a = report.forest.find(a.first);
              const auto canon_b = report.forest.find(b.first);
              const bool ca = canon_a != report.forest.end() &&
                              canon_a->second.structure_key() == a.second;
              const bool cb = canon_b != report.forest.end() &&
                              canon_b->second.structure_key() == b.second;
              return std::tuple(tau_pos.at(a.first), !ca, a.second) <
                     std::tuple(tau_pos.at(b.first), !cb, b.second);
            });

  int offset = 0;
  for (const auto& key : ordered) {
    if (column_constant_one(d, key.first)) continue;  // degenerate: no block
    EqBlock b;
    b.indicator = key.first;
    b.tree_hash = key.second;
    b.tree = needed.at(key);
    IndSet s_pre, s_r, tc;
    if (!report.sets_for(key.first, key.second, &s_pre, &s_r, &tc))
      throw FitMissing("stacked system: no selection sets for R" +
                       std::to_string(key.first) + " under " + key.second);
    b.row_gate = s_pre | tc;
    b.eval_ones = s_r;
    b.design = free_features(g, key.first, s_r);
    b.dim = 1 + static_cast<int>(b.design.size());
    b.offset = offset;
    offset += b.dim;
    s.index_[key] = static_cast<int>(s.blocks_.size());
    s.blocks_.push_back(std::move(b));
  }
  for (auto& b : s.blocks_) {
    b.child_blocks.clear();
    for (const auto& c : b.tree.children)
      b.child_blocks.push_back(s.block_index(c.root, c.structure_key()));
  }
  if (target) {
    for (int r : closure_set.to_vector()) {
      auto canon = report.forest.find(r);
      if (canon == report.forest.end())
        throw FitMissing("stacked system: closure member R" +
                         std::to_string(r) + " has no canonical tree");
      const int bi = s.block_index(r, canon->second.structure_key());
      if (bi >= 0) s.closure_blocks_.push_back(bi);
    }
    EqBlock tb;
    tb.indicator = 0;
    tb.row_gate = closure_set;
    tb.dim = target->dim();
    tb.offset = offset;
    offset += tb.dim;
    s.blocks_.push_back(std::move(tb));
  }
  s.total_dim_ = offset;
  return s;
}

int StackedSystem::block_index(int r, const std::string& key) const {
  auto it = index_.find({r, key});
  return it == index_.end() ? -1 : it->second;
}

void StackedSystem::row_residual(int row, const Vec& theta, Vec* out) const {
  const Dataset& d = *data_;
  auto block_pi = [&](const EqBlock& b) {
    double t = theta[b.offset];
    int idx = b.offset + 1;
    for (const Feature& f : b.design) t += theta[idx++] * feature_value(d, row, f);
    return expit(t);
  };

  for (const EqBlock& b : blocks_) {
    if (b.indicator == 0) continue;
    if (!row_gated(d, row, b.row_gate)) continue;
    double w = 1.0;
    for (int ci : b.child_blocks) {
      double pi = ci < 0 ? 1.0 : block_pi(blocks_[ci]);
      if (clamp_) pi = std::max(pi, *clamp_);
      w /= pi;
    }
    const double resid =
        w * (d.r_value(row, b.indicator) - block_pi(b));
    (*out)[b.offset] = resid;
    int idx = b.offset + 1;
    for (const Feature& f : b.design)
      (*out)[idx++] = resid * feature_value(d, row, f);
  }

  if (target_) {
    const EqBlock& tb = blocks_.back();
    if (row_gated(d, row, closure_)) {
      double w = 1.0;
      for (int ci : closure_blocks_) {
        double pi = block_pi(blocks_[ci]);
        if (clamp_) pi = std::max(pi, *clamp_);
        w /= pi;
      }
      out->segment(tb.offset, tb.dim) =
          w * target_->evaluate(d, row, theta.segment(tb.offset, tb.dim));
    }
  }
}

Vec StackedSystem::mean_residual(const Vec& theta) const {
  Vec acc = Vec::Zero(total_dim_);
  Vec buf(total_dim_);
  for (int row = 0; row < data_->n(); ++row) {
    buf.setZero();
    row_residual(row, theta, &buf);
    acc += buf;
  }
  return acc / static_cast<double>(data_->n());
}

Mat StackedSystem::row_residuals(const Vec& theta) const {
  Mat out = Mat::Zero(data_->n(), total_dim_);
  Vec buf(total_dim_);
  for (int row = 0; row < data_->n(); ++row) {
    buf.setZero();
    row_residual(row, theta, &buf);
    out.row(row) = buf.transpose();
  }
  return out;
}

Vec StackedSystem::pack(const FitRegistry& reg, const Vec* target_theta) const {
  Vec out = Vec::Zero(total_dim_);
  for (const EqBlock& b : blocks_) {
    if (b.indicator == 0) {
      if (target_theta == nullptr)
        throw std::logic_error("internal: target parameters required to pack");
      out.segment(b.offset, b.dim) = *target_theta;
      continue;
    }
    const PropensityFit& fit = reg.fit_for(b.indicator, b.tree_hash);
    if (static_cast<int>(fit.theta.size()) != b.dim)
      throw std::logic_error("internal: fit dimension mismatch for " +
                             fit_label(b.indicator, b.tree_hash));
    out.segment(b.offset, b.dim) = fit.theta;
  }
  return out;
}

// ---- target estimation ----

EstimationResult target_estimate(const MomentSpec& moment, const Dataset& d,
                                 const FitRegistry& reg, const IdReport& report,
                                 const MDag& g,
                                 std::optional<double> clamp_floor) {
  const ClosureResult cl = closure(moment.required_vars(), report);
  if (!cl.identified)
    throw NotIdentifiedFunctional(
        "target functional requires R" + std::to_string(cl.offender) +
            ", whose propensity is not identified",
        cl.offender);

  std::vector<int> rows;
  std::vector<double> weights;
  double min_pi = 1.0;
  double sw = 0.0, sw2 = 0.0;
  for (int i = 0; i < d.n(); ++i) {
    if (!row_gated(d, i, cl.set)) continue;
    double w = 1.0;
    for (int r : cl.set.to_vector()) {
      auto c = reg.canonical.find(r);
      if (c == reg.canonical.end())
        throw FitMissing("no canonical fit for closure member R" +
                         std::to_string(r));
      if (c->second.degenerate) continue;
      double pi = eval_fit(c->second, d, i);
      if (!(pi > 0.0))
        throw NonPositivePropensity("fitted propensity for R" +
                                    std::to_string(r) +
                                    " is not positive at row " +
                                    std::to_string(i));
      min_pi = std::min(min_pi, pi);
      if (clamp_floor) pi = std::max(pi, *clamp_floor);
      w /= pi;
    }
    rows.push_back(i);
    weights.push_back(w);
    sw += w;
    sw2 += w * w;
  }
  if (rows.empty())
    throw DegenerateWeights("no rows observe all of " + cl.set.to_string());
  if (min_pi < 0.01)
    log_warn("minimum fitted propensity " + std::to_string(min_pi) +
             " is below 0.01; inverse weights may be unstable");

  const int p = moment.dim();
  const double n = d.n();
  auto residual = [&](const Vec& theta) -> Vec {
    Vec acc = Vec::Zero(p);
    for (std::size_t j = 0; j < rows.size(); ++j)
      acc += weights[j] * moment.evaluate(d, rows[j], theta);
    return acc / n;
  };
  const SolveReport target_solve = newton_solve(residual, Vec::Zero(p));
  if (!target_solve.converged)
    throw NonConvergence("target moment equation did not converge (residual " +
                         std::to_string(target_solve.final_residual_norm) +
                         ")");

  std::vector<FitKey> seeds;
  for (int r : cl.set.to_vector()) {
    auto c = reg.canonical.find(r);
    if (c != reg.canonical.end() && !c->second.degenerate)
      seeds.push_back({r, c->second.tree_hash});
  }
  const StackedSystem stack =
      StackedSystem::build(g, report, d, seeds, &moment, cl.set, clamp_floor);
  const Vec packed = stack.pack(reg, &target_solve.solution);
  const Mat a = fd_jacobian(
      [&](const Vec& th) { return stack.mean_residual(th); }, packed);
  const Mat resid_rows = stack.row_residuals(packed);
  const Mat b = (resid_rows.transpose() * resid_rows) / n;
  const Mat v = sandwich(a, b, d.n());

  EstimationResult res;
  res.theta_hat = target_solve.solution;
  res.covariance = v.bottomRightCorner(p, p);
  res.closure_set = cl.set;
  res.stacked_dimension = stack.dimension();
  for (const EqBlock& blk : stack.blocks()) {
    if (blk.indicator == 0) continue;
    res.diagnostics.block_solves.push_back(
        {fit_label(blk.indicator, blk.tree_hash),
         reg.fit_for(blk.indicator, blk.tree_hash).solve});
  }
  res.diagnostics.block_solves.push_back({"target", target_solve});
  res.diagnostics.min_fitted_propensity = min_pi;
  res.diagnostics.effective_sample_size = sw2 > 0.0 ? sw * sw / sw2 : 0.0;
  res.diagnostics.weighted_rows = static_cast<int>(rows.size());
  return res;
}

EstimationResult complete_case_estimate(const MomentSpec& moment,
                                        const Dataset& d) {
  const IndSet required = moment.required_vars();
  std::vector<int> rows;
  for (int i = 0; i < d.n(); ++i)
    if (row_gated(d, i, required)) rows.push_back(i);
  const int p = moment.dim();
  if (static_cast<int>(rows.size()) < p)
    throw InsufficientRows("complete-case fit needs " + std::to_string(p) +
                           " fully observed rows, found " +
                           std::to_string(rows.size()));

  const double n = d.n();
  auto residual = [&](const Vec& theta) -> Vec {
    Vec acc = Vec::Zero(p);
    for (int row : rows) acc += moment.evaluate(d, row, theta);
    return acc / n;
  };
  const SolveReport solve = newton_solve(residual, Vec::Zero(p));
  if (!solve.converged)
    throw NonConvergence(
        "complete-case moment equation did not converge (residual " +
        std::to_string(solve.final_residual_norm) + ")");

  const Mat a = fd_jacobian(residual, solve.solution);
  Mat b = Mat::Zero(p, p);
  for (int row : rows) {
    const Vec psi = moment.evaluate(d, row, solve.solution);
    b += psi * psi.transpose();
  }
  b /= n;
  const Mat v = sandwich(a, b, d.n());

  EstimationResult res;
  res.theta_hat = solve.solution;
  res.covariance = v;
  res.closure_set = required;
  res.stacked_dimension = p;
  res.diagnostics.block_solves.push_back({"complete-case", solve});
  res.diagnostics.min_fitted_propensity = 1.0;
  res.diagnostics.effective_sample_size = static_cast<double>(rows.size());
  res.diagnostics.weighted_rows = static_cast<int>(rows.size());
  return res;
}

}  // namespace missforest
