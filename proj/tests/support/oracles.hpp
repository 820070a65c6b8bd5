// Independent reference implementations used to cross-check the library:
// a path-enumeration d-separation test and an IRLS logistic solver.  These
// deliberately share no code with the library algorithms they validate.
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <random>
#include <vector>

#include "missforest/graph.hpp"

namespace missforest::testing {

// --- d-separation by exhaustive path enumeration -------------------------
//
// Works on the latent-augmented view: node ids 0..K-1 are X_1..X_K,
// K..2K-1 are R_1..R_K, and 2K is the latent U with U -> X_i for all i.
// A path is blocked iff some interior collider has no descendant (including
// itself) in the conditioning set, or some interior non-collider lies in it.
class PathOracle {
 public:
  explicit PathOracle(const MDag& g) : k_(g.k_count()) {
    const int n = 2 * k_ + 1;
    child_.assign(n, {});
    parent_.assign(n, {});
    auto add = [&](int tail, int head) {
      child_[tail].push_back(head);
      parent_[head].push_back(tail);
    };
    for (const auto& [tail, head] : g.edges()) add(id(tail), id(head));
    for (int i = 0; i < k_; ++i) add(2 * k_, i);  // U -> X_i
  }

  bool d_separated(NodeRef a, NodeRef b, const std::vector<NodeRef>& cond) const {
    std::vector<bool> in_cond(child_.size(), false);
    for (NodeRef c : cond) in_cond[id(c)] = true;
    std::vector<int> path{id(a)};
    std::vector<bool> on_path(child_.size(), false);
    on_path[id(a)] = true;
    return !open_path_exists(path, on_path, id(b), in_cond);
  }

 private:
  int id(NodeRef n) const {
    return n.kind == NodeKind::Var ? n.index - 1 : k_ + n.index - 1;
  }

  bool edge(int tail, int head) const {
    for (int c : child_[tail])
      if (c == head) return true;
    return false;
  }

  bool descendant_in(int v, const std::vector<bool>& set) const {
    std::vector<int> stack{v};
    std::vector<bool> seen(child_.size(), false);
    seen[v] = true;
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      if (set[u]) return true;
      for (int c : child_[u])
        if (!seen[c]) {
          seen[c] = true;
          stack.push_back(c);
        }
    }
    return false;
  }

  bool path_open(const std::vector<int>& path,
                 const std::vector<bool>& in_cond) const {
    for (std::size_t i = 1; i + 1 < path.size(); ++i) {
      const int prev = path[i - 1], v = path[i], next = path[i + 1];
      const bool collider = edge(prev, v) && edge(next, v);
      if (collider) {
        if (!descendant_in(v, in_cond)) return false;
      } else {
        if (in_cond[v]) return false;
      }
    }
    return true;
  }

  bool open_path_exists(std::vector<int>& path, std::vector<bool>& on_path,
                        int dst, const std::vector<bool>& in_cond) const {
    const int v = path.back();
    if (v == dst) return path_open(path, in_cond);
    auto try_step = [&](int next) {
      if (on_path[next]) return false;
      path.push_back(next);
      on_path[next] = true;
      const bool found = open_path_exists(path, on_path, dst, in_cond);
      on_path[next] = false;
      path.pop_back();
      return found;
    };
    for (int c : child_[v])
      if (try_step(c)) return true;
    for (int p : parent_[v])
      if (try_step(p)) return true;
    return false;
  }

  int k_;
  std::vector<std::vector<int>> child_;
  std::vector<std::vector<int>> parent_;
};

// --- weighted logistic regression by IRLS --------------------------------
//
// Solves sum_i w_i x_i (y_i - expit(x_i' beta)) = 0 by iteratively
// reweighted least squares; returns beta.
inline Eigen::VectorXd irls_logistic(const Eigen::MatrixXd& x,
                                     const Eigen::VectorXd& y,
                                     const Eigen::VectorXd& w,
                                     int max_iter = 100, double tol = 1e-12) {
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(x.cols());
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd eta = x * beta;
    const Eigen::VectorXd mu = eta.unaryExpr(
        [](double t) { return 1.0 / (1.0 + std::exp(-t)); });
    const Eigen::VectorXd s =
        (w.array() * mu.array() * (1.0 - mu.array())).matrix();
    const Eigen::MatrixXd h = x.transpose() * s.asDiagonal() * x;
    const Eigen::VectorXd grad =
        x.transpose() * (w.array() * (y - mu).array()).matrix();
    const Eigen::VectorXd delta = h.ldlt().solve(grad);
    beta += delta;
    if (delta.lpNorm<Eigen::Infinity>() < tol) break;
  }
  return beta;
}

// --- random mDAG generation ----------------------------------------------
//
// Indicator edges respect a random permutation, so the result is acyclic by
// construction.
inline MDag random_mdag(std::mt19937_64& rng, int max_k = 4) {
  std::uniform_int_distribution<int> pick_k(1, max_k);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int k = pick_k(rng);
  std::vector<int> order(k);
  for (int i = 0; i < k; ++i) order[i] = i + 1;
  std::shuffle(order.begin(), order.end(), rng);
  const double p = u(rng) * 0.6 + 0.1;
  std::vector<std::pair<NodeRef, NodeRef>> edges;
  for (int head = 1; head <= k; ++head) {
    for (int tail = 1; tail <= k; ++tail) {
      if (u(rng) < p) edges.push_back({var(tail), ind(head)});
    }
  }
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b)
      if (u(rng) < p) edges.push_back({ind(order[a]), ind(order[b])});
  return MDag::build_refs(k, std::move(edges));
}

}  // namespace missforest::testing
