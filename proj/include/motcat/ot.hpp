#pragma once

// Cost matrices and transport solvers: an exact transportation-simplex EMD
// with dual certificates, balanced entropic Sinkhorn, and unbalanced Sinkhorn
// with KL marginal penalties.

#include "motcat/bagdata.hpp"
#include "motcat/core.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <vector>

namespace motcat::ot {

enum class Metric { l2, squared_l2, cosine_distance };

inline const char* to_string(Metric m) {
  switch (m) {
    case Metric::l2: return "l2";
    case Metric::squared_l2: return "squared_l2";
    case Metric::cosine_distance: return "cosine_distance";
  }
  return "l2";
}

inline Metric metric_from_string(const std::string& s) {
  if (s == "l2") return Metric::l2;
  if (s == "squared_l2") return Metric::squared_l2;
  if (s == "cosine_distance" || s == "cosine") return Metric::cosine_distance;
  throw ParameterError("unknown cost metric '" + s + "'");
}

struct CostMatrix {
  Matrix values;  // source x target
  Metric metric = Metric::l2;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
};

inline CostMatrix build_cost(const Matrix& source, const Matrix& target, Metric metric = Metric::l2) {
  if (source.cols() != target.cols())
    throw ShapeError("cost: source dim " + std::to_string(source.cols()) + " != target dim " + std::to_string(target.cols()));
  CostMatrix cm;
  cm.metric = metric;
  cm.values.resize(source.rows(), target.rows());
  if (metric == Metric::cosine_distance) {
    const Vector sn = source.rowwise().norm();
    const Vector tn = target.rowwise().norm();
    for (Index u = 0; u < source.rows(); ++u)
      for (Index v = 0; v < target.rows(); ++v) {
        const double denom = sn[u] * tn[v];
        const double cosine = denom > 0.0 ? source.row(u).dot(target.row(v)) / denom : 0.0;
        cm.values(u, v) = std::max(0.0, 1.0 - cosine);
      }
    return cm;
  }
  for (Index u = 0; u < source.rows(); ++u)
    for (Index v = 0; v < target.rows(); ++v) {
      const double sq = (source.row(u) - target.row(v)).squaredNorm();
      cm.values(u, v) = metric == Metric::l2 ? std::sqrt(sq) : sq;
    }
  return cm;
}

inline CostMatrix build_cost(const InstanceBag& source, const InstanceBag& target, Metric metric = Metric::l2) {
  return build_cost(source.features, target.features, metric);
}

// Divides by the largest entry; all-zero matrices are returned unchanged.
inline CostMatrix normalized(CostMatrix c) {
  const double mx = c.values.size() ? c.values.maxCoeff() : 0.0;
  if (mx > 0.0) c.values /= mx;
  return c;
}

struct Marginals {
  Vector source;
  Vector target;

  static Marginals uniform(Index n_source, Index n_target) {
    return {Vector::Constant(n_source, 1.0 / static_cast<double>(n_source)),
            Vector::Constant(n_target, 1.0 / static_cast<double>(n_target))};
  }

  void validate(Index rows, Index cols) const {
    if (source.size() != rows || target.size() != cols)
      throw ShapeError("marginals " + std::to_string(source.size()) + "/" + std::to_string(target.size()) +
                       " do not match cost " + shape_str(rows, cols));
    if ((source.array() < 0.0).any() || (target.array() < 0.0).any() || !source.allFinite() || !target.allFinite())
      throw ConstraintError("marginals must be finite and nonnegative");
  }
};

struct SolverSettings {
  double epsilon = 0.05;
  double tau = 0.5;
  int max_iters = 1000;
  double tolerance = 1e-6;
  bool force_log_domain = false;
};

struct TransportPlan {
  Matrix coupling;
  double objective_value = 0.0;        // <P, C>
  double regularized_objective = 0.0;  // including entropic and marginal penalty terms
  double marginal_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string solver;
  double epsilon = 0.0;
  double tau = 0.0;
  int max_iters = 0;
  double tolerance = 0.0;
  bool log_domain = false;
  // Exact solver only.
  Vector dual_source;
  Vector dual_target;
  double duality_gap = 0.0;

  double total_mass() const { return coupling.sum(); }
};

inline double transport_cost(const Matrix& coupling, const Matrix& cost) { return coupling.cwiseProduct(cost).sum(); }

// Generalized KL(P | Q) = sum P log(P/Q) - P + Q with 0 log 0 = 0.
inline double generalized_kl(const Matrix& p, const Matrix& q) {
  double s = 0.0;
  for (Index i = 0; i < p.rows(); ++i)
    for (Index j = 0; j < p.cols(); ++j) {
      const double x = p(i, j), y = q(i, j);
      if (x > 0.0) s += x * std::log(x / y);
      s += y - x;
    }
  return s;
}

inline double generalized_kl(const Vector& p, const Vector& q) {
  double s = 0.0;
  for (Index i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) s += p[i] * std::log(p[i] / q[i]);
    s += q[i] - p[i];
  }
  return s;
}

inline double max_marginal_residual(const Matrix& coupling, const Marginals& marg) {
  const Vector rows = coupling.rowwise().sum();
  const Vector cols = coupling.colwise().sum().transpose();
  return std::max((rows - marg.source).cwiseAbs().maxCoeff(), (cols - marg.target).cwiseAbs().maxCoeff());
}

inline nlohmann::json plan_to_json(const TransportPlan& p) {
  nlohmann::json j;
  j["solver"] = p.solver;
  j["objective_value"] = p.objective_value;
  j["regularized_objective"] = p.regularized_objective;
  j["marginal_residual"] = p.marginal_residual;
  j["total_mass"] = p.total_mass();
  j["iterations"] = p.iterations;
  j["converged"] = p.converged;
  j["shape"] = {p.coupling.rows(), p.coupling.cols()};
  j["settings"] = {{"epsilon", p.epsilon},
                   {"tau", p.tau},
                   {"max_iters", p.max_iters},
                   {"tolerance", p.tolerance},
                   {"log_domain", p.log_domain}};
  if (p.solver == "emd") j["duality_gap"] = p.duality_gap;
  return j;
}

namespace detail {

inline void check_inputs(const CostMatrix& c, const Marginals& marg) {
  if (c.rows() < 1 || c.cols() < 1) throw ShapeError("empty cost matrix");
  marg.validate(c.rows(), c.cols());
  if (!c.values.allFinite() || (c.values.array() < 0.0).any())
    throw ConstraintError("cost entries must be finite and nonnegative");
}

inline void check_balanced(const Marginals& marg) {
  const double diff = std::abs(marg.source.sum() - marg.target.sum());
  if (diff > 1e-9) throw ConstraintError("marginal masses differ by " + std::to_string(diff));
}

inline TransportPlan trivial_plan(const CostMatrix& c, const Marginals& marg, const char* solver) {
  TransportPlan p;
  p.solver = solver;
  p.coupling = Matrix::Constant(1, 1, marg.source[0]);
  p.objective_value = p.coupling(0, 0) * c.values(0, 0);
  p.regularized_objective = p.objective_value;
  p.marginal_residual = std::abs(marg.source[0] - marg.target[0]);
  p.converged = true;
  p.dual_source = Vector::Constant(1, c.values(0, 0));
  p.dual_target = Vector::Zero(1);
  return p;
}

inline double median(Matrix m) {
  std::vector<double> v(m.data(), m.data() + m.size());
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(v.begin(), mid);
  return 0.5 * (lo + hi);
}

inline bool wants_log_domain(const CostMatrix& c, const SolverSettings& s) {
  return s.force_log_domain || s.epsilon < 0.01 * median(c.values);
}

inline double log_or_neg_inf(double x) { return x > 0.0 ? std::log(x) : -std::numeric_limits<double>::infinity(); }

// -eps * log sum_k w_k exp(z_k / eps), computed stably; terms with w_k == 0 are skipped.
inline double soft_min(const double* z, const double* logw, Index n, Index stride, double eps) {
  double mx = -std::numeric_limits<double>::infinity();
  for (Index k = 0; k < n; ++k) {
    if (!std::isfinite(logw[k])) continue;
    mx = std::max(mx, z[k * stride] / eps + logw[k]);
  }
  if (!std::isfinite(mx)) return std::numeric_limits<double>::infinity();
  double s = 0.0;
  for (Index k = 0; k < n; ++k) {
    if (!std::isfinite(logw[k])) continue;
    s += std::exp(z[k * stride] / eps + logw[k] - mx);
  }
  return -eps * (mx + std::log(s));
}

// Shared scaling loop. `lambda` is the damping exponent (1 for balanced).
// Balanced runs stop on marginal residual, unbalanced runs on the change of
// the log scalings.
struct ScalingResult {
  Matrix coupling;
  int iterations = 0;
  bool converged = false;
  bool log_domain = false;
  bool failed = false;
};

inline ScalingResult scale_plain(const Matrix& c, const Marginals& marg, double eps, double lambda, bool balanced,
                                 int max_iters, double tol) {
  ScalingResult r;
  const Index n = c.rows(), m = c.cols();
  Matrix k(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) k(i, j) = marg.source[i] * marg.target[j] * std::exp(-c(i, j) / eps);
  Vector u = Vector::Ones(n), v = Vector::Ones(m);
  Vector best_u = u, best_v = v;
  double best_score = std::numeric_limits<double>::infinity();

  auto scaling = [&](double num, double den) {
    if (num == 0.0) return 0.0;
    if (!(den > 0.0)) return std::numeric_limits<double>::infinity();
    const double ratio = num / den;
    return lambda == 1.0 ? ratio : std::pow(ratio, lambda);
  };

  for (int it = 1; it <= max_iters; ++it) {
    const Vector kv = k * v;
    Vector nu(n);
    for (Index i = 0; i < n; ++i) nu[i] = scaling(marg.source[i], kv[i]);
    const Vector ktu = k.transpose() * nu;
    Vector nv(m);
    for (Index j = 0; j < m; ++j) nv[j] = scaling(marg.target[j], ktu[j]);
    if (!nu.allFinite() || !nv.allFinite()) {
      r.failed = true;
      return r;
    }
    double score;
    if (balanced) {
      const Vector rows = nu.cwiseProduct(k * nv);
      score = (rows - marg.source).cwiseAbs().maxCoeff();
    } else {
      score = 0.0;
      for (Index i = 0; i < n; ++i)
        if (nu[i] > 0.0 && u[i] > 0.0) score = std::max(score, std::abs(std::log(nu[i]) - std::log(u[i])));
      for (Index j = 0; j < m; ++j)
        if (nv[j] > 0.0 && v[j] > 0.0) score = std::max(score, std::abs(std::log(nv[j]) - std::log(v[j])));
    }
    u = std::move(nu);
    v = std::move(nv);
    r.iterations = it;
    if (score < best_score) {
      best_score = score;
      best_u = u;
      best_v = v;
    }
    if (score < tol) {
      r.converged = true;
      break;
    }
  }
  const Vector& fu = r.converged ? u : best_u;
  const Vector& fv = r.converged ? v : best_v;
  r.coupling = fu.asDiagonal() * k * fv.asDiagonal();
  if (!r.coupling.allFinite()) r.failed = true;
  return r;
}

inline ScalingResult scale_log(const Matrix& c, const Marginals& marg, double eps, double lambda, bool balanced,
                               int max_iters, double tol) {
  ScalingResult r;
  r.log_domain = true;
  const Index n = c.rows(), m = c.cols();
  Vector loga(n), logb(m);
  for (Index i = 0; i < n; ++i) loga[i] = log_or_neg_inf(marg.source[i]);
  for (Index j = 0; j < m; ++j) logb[j] = log_or_neg_inf(marg.target[j]);
  // f, g are eps * log of the plain-domain scalings.
  Vector f = Vector::Zero(n), g = Vector::Zero(m);
  Vector best_f = f, best_g = g;
  double best_score = std::numeric_limits<double>::infinity();
  Matrix shifted(n, m);
  Matrix shifted_t(m, n);

  auto coupling_from = [&](const Vector& ff, const Vector& gg) {
    Matrix p(n, m);
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < m; ++j) {
        const double lw = loga[i] + logb[j];
        p(i, j) = std::isfinite(lw) ? std::exp(lw + (ff[i] + gg[j] - c(i, j)) / eps) : 0.0;
      }
    return p;
  };

  for (int it = 1; it <= max_iters; ++it) {
    Vector nf(n), ng(m);
    for (Index i = 0; i < n; ++i) {
      if (!std::isfinite(loga[i])) {
        nf[i] = f[i];
        continue;
      }
      for (Index j = 0; j < m; ++j) shifted(i, j) = g[j] - c(i, j);
      nf[i] = lambda * soft_min(&shifted(i, 0), logb.data(), m, 1, eps);
    }
    for (Index j = 0; j < m; ++j) {
      if (!std::isfinite(logb[j])) {
        ng[j] = g[j];
        continue;
      }
      for (Index i = 0; i < n; ++i) shifted_t(j, i) = nf[i] - c(i, j);
      ng[j] = lambda * soft_min(&shifted_t(j, 0), loga.data(), n, 1, eps);
    }
    if (!nf.allFinite() || !ng.allFinite()) {
      r.failed = true;
      return r;
    }
    double score;
    if (balanced) {
      const Matrix p = coupling_from(nf, ng);
      score = (p.rowwise().sum() - marg.source).cwiseAbs().maxCoeff();
    } else {
      score = std::max((nf - f).cwiseAbs().maxCoeff(), (ng - g).cwiseAbs().maxCoeff()) / eps;
    }
    f = std::move(nf);
    g = std::move(ng);
    r.iterations = it;
    if (score < best_score) {
      best_score = score;
      best_f = f;
      best_g = g;
    }
    if (score < tol) {
      r.converged = true;
      break;
    }
  }
  r.coupling = r.converged ? coupling_from(f, g) : coupling_from(best_f, best_g);
  return r;
}

inline ScalingResult run_scaling(const CostMatrix& c, const Marginals& marg, double eps, double lambda, bool balanced,
                                 const SolverSettings& s) {
  if (!detail::wants_log_domain(c, s)) {
    auto r = scale_plain(c.values, marg, eps, lambda, balanced, s.max_iters, s.tolerance);
    if (!r.failed) return r;
  }
  auto r = scale_log(c.values, marg, eps, lambda, balanced, s.max_iters, s.tolerance);
  if (r.failed) throw SolverError("scaling iterations produced non-finite potentials");
  return r;
}

}  // namespace detail

// Balanced entropic OT with reference measure a (x) b:
//   min <P,C> + eps KL(P | a b^T)  s.t.  P 1 = a, P^T 1 = b.
inline TransportPlan sinkhorn(const CostMatrix& c, const Marginals& marg, double epsilon, int max_iters = 1000,
                              double tol = 1e-6, bool force_log_domain = false) {
  if (!(epsilon > 0.0)) throw ParameterError("sinkhorn requires epsilon > 0");
  if (max_iters < 1) throw ParameterError("max_iters must be >= 1");
  detail::check_inputs(c, marg);
  detail::check_balanced(marg);
  TransportPlan p;
  if (c.rows() == 1 && c.cols() == 1) {
    p = detail::trivial_plan(c, marg, "sinkhorn");
  } else {
    SolverSettings s{epsilon, 0.0, max_iters, tol, force_log_domain};
    auto r = detail::run_scaling(c, marg, epsilon, 1.0, true, s);
    p.solver = "sinkhorn";
    p.coupling = std::move(r.coupling);
    p.iterations = r.iterations;
    p.converged = r.converged;
    p.log_domain = r.log_domain;
  }
  p.epsilon = epsilon;
  p.max_iters = max_iters;
  p.tolerance = tol;
  p.objective_value = transport_cost(p.coupling, c.values);
  const Matrix ref = marg.source * marg.target.transpose();
  p.regularized_objective = p.objective_value + epsilon * generalized_kl(p.coupling, ref);
  p.marginal_residual = max_marginal_residual(p.coupling, marg);
  return p;
}

// Unbalanced entropic OT with KL marginal penalties:
//   min <P,C> + eps KL(P | a b^T) + tau (KL(P 1 | a) + KL(P^T 1 | b)).
// Each scaling update is damped by the exponent tau / (tau + eps).
inline TransportPlan unbalanced_sinkhorn(const CostMatrix& c, const Marginals& marg, double epsilon, double tau,
                                         int max_iters = 1000, double tol = 1e-6, bool force_log_domain = false) {
  if (!(epsilon > 0.0)) throw ParameterError("unbalanced_sinkhorn requires epsilon > 0");
  if (!(tau >= 0.0)) throw ParameterError("unbalanced_sinkhorn requires tau >= 0");
  if (max_iters < 1) throw ParameterError("max_iters must be >= 1");
  detail::check_inputs(c, marg);
  const double lambda = tau / (tau + epsilon);
  SolverSettings s{epsilon, tau, max_iters, tol, force_log_domain};
  TransportPlan p;
  p.solver = "uot";
  if (lambda == 0.0) {
    p.coupling.resize(c.rows(), c.cols());
    for (Index i = 0; i < c.rows(); ++i)
      for (Index j = 0; j < c.cols(); ++j)
        p.coupling(i, j) = marg.source[i] * marg.target[j] * std::exp(-c.values(i, j) / epsilon);
    p.iterations = 0;
    p.converged = true;
    p.log_domain = detail::wants_log_domain(c, s);
  } else {
    auto r = detail::run_scaling(c, marg, epsilon, lambda, false, s);
    p.coupling = std::move(r.coupling);
    p.iterations = r.iterations;
    p.converged = r.converged;
    p.log_domain = r.log_domain;
  }
  p.epsilon = epsilon;
  p.tau = tau;
  p.max_iters = max_iters;
  p.tolerance = tol;
  p.objective_value = transport_cost(p.coupling, c.values);
  const Matrix ref = marg.source * marg.target.transpose();
  const Vector rows = p.coupling.rowwise().sum();
  const Vector cols = p.coupling.colwise().sum().transpose();
  p.regularized_objective = p.objective_value + epsilon * generalized_kl(p.coupling, ref) +
                            tau * (generalized_kl(rows, marg.source) + generalized_kl(cols, marg.target));
  p.marginal_residual = max_marginal_residual(p.coupling, marg);
  return p;
}

// Exact OT by the transportation simplex (northwest-corner start, MODI duals,
// Dantzig pricing with a switch to Bland's rule on degenerate stalls).
// Intended as an oracle-grade solver for small instances.
inline TransportPlan solve_exact_emd(const CostMatrix& c, const Marginals& marg, int max_pivots = 100000) {
  detail::check_inputs(c, marg);
  detail::check_balanced(marg);
  const Index n = c.rows(), m = c.cols();
  if (n == 1 && m == 1) {
    auto p = detail::trivial_plan(c, marg, "emd");
    p.converged = true;
    return p;
  }
  const Matrix& cost = c.values;
  Matrix x = Matrix::Zero(n, m);
  std::vector<std::vector<char>> basic(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(m), 0));

  // Northwest corner: always exactly n + m - 1 basic cells forming a spanning tree.
  {
    Vector supply = marg.source, demand = marg.target;
    Index i = 0, j = 0;
    while (i < n && j < m) {
      basic[i][j] = 1;
      if (i == n - 1) {
        x(i, j) = std::max(0.0, demand[j]);
        supply[i] -= demand[j];
        demand[j] = 0.0;
        ++j;
        continue;
      }
      if (j == m - 1) {
        x(i, j) = std::max(0.0, supply[i]);
        demand[j] -= supply[i];
        supply[i] = 0.0;
        ++i;
        continue;
      }
      const double q = std::min(supply[i], demand[j]);
      x(i, j) = std::max(0.0, q);
      supply[i] -= q;
      demand[j] -= q;
      if (supply[i] <= demand[j]) ++i;
      else ++j;
    }
  }

  Vector u(n), v(m);
  const double scale = std::max(1.0, cost.cwiseAbs().maxCoeff());
  const double price_tol = 1e-13 * scale;
  int pivots = 0;
  int stall = 0;
  bool optimal = false;
  // Tree nodes: rows are 0..n-1, columns are n..n+m-1.
  const Index nodes = n + m;
  std::vector<Index> parent(static_cast<std::size_t>(nodes));
  std::vector<char> seen(static_cast<std::size_t>(nodes));

  auto compute_duals = [&]() {
    std::fill(seen.begin(), seen.end(), 0);
    std::queue<Index> q;
    u[0] = 0.0;
    seen[0] = 1;
    q.push(0);
    while (!q.empty()) {
      const Index a = q.front();
      q.pop();
      if (a < n) {
        for (Index j = 0; j < m; ++j)
          if (basic[a][j] && !seen[n + j]) {
            v[j] = cost(a, j) - u[a];
            seen[n + j] = 1;
            q.push(n + j);
          }
      } else {
        const Index j = a - n;
        for (Index i = 0; i < n; ++i)
          if (basic[i][j] && !seen[i]) {
            u[i] = cost(i, j) - v[j];
            seen[i] = 1;
            q.push(i);
          }
      }
    }
  };

  while (pivots < max_pivots) {
    compute_duals();
    Index ei = -1, ej = -1;
    double best = -price_tol;
    const bool bland = stall > 2 * (n + m);
    for (Index i = 0; i < n && !(bland && ei >= 0); ++i)
      for (Index j = 0; j < m; ++j) {
        if (basic[i][j]) continue;
        const double rc = cost(i, j) - u[i] - v[j];
        if (rc < best) {
          best = rc;
          ei = i;
          ej = j;
          if (bland) break;
        }
      }
    if (ei < 0) {
      optimal = true;
      break;
    }
    // Path in the basis tree from column node ej to row node ei.
    std::fill(seen.begin(), seen.end(), 0);
    std::queue<Index> q;
    const Index start = n + ej, goal = ei;
    seen[start] = 1;
    parent[start] = -1;
    q.push(start);
    while (!q.empty() && !seen[goal]) {
      const Index a = q.front();
      q.pop();
      if (a < n) {
        for (Index j = 0; j < m; ++j)
          if (basic[a][j] && !seen[n + j]) {
            seen[n + j] = 1;
            parent[n + j] = a;
            q.push(n + j);
          }
      } else {
        const Index j = a - n;
        for (Index i = 0; i < n; ++i)
          if (basic[i][j] && !seen[i]) {
            seen[i] = 1;
            parent[i] = a;
            q.push(i);
          }
      }
    }
    if (!seen[goal]) throw SolverError("emd: basis is not a spanning tree");
    // Walk back from ei to ej; edges alternate sign starting with '-' at ej.
    std::vector<std::pair<Index, Index>> cells;
    for (Index a = goal; parent[a] != -1; a = parent[a]) {
      const Index b = parent[a];
      cells.emplace_back(a < n ? a : b, (a < n ? b : a) - n);
    }
    // cells[0] touches row ei, cells.back() touches column ej; both are '-'.
    double theta = std::numeric_limits<double>::infinity();
    Index leave = -1;
    for (std::size_t k = 0; k < cells.size(); k += 2) {
      const auto [i, j] = cells[k];
      const double val = x(i, j);
      const Index id = i * m + j;
      if (val < theta || (val == theta && id < leave)) {
        theta = val;
        leave = id;
      }
    }
    theta = std::max(0.0, theta);
    x(ei, ej) = theta;
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const auto [i, j] = cells[k];
      if (k % 2 == 0) x(i, j) = std::max(0.0, x(i, j) - theta);
      else x(i, j) += theta;
    }
    basic[ei][ej] = 1;
    basic[leave / m][leave % m] = 0;
    x(leave / m, leave % m) = 0.0;
    stall = theta > 0.0 ? 0 : stall + 1;
    ++pivots;
  }
  if (!optimal) throw SolverError("emd: pivot limit reached");
  compute_duals();

  TransportPlan p;
  p.solver = "emd";
  p.coupling = std::move(x);
  p.iterations = pivots;
  p.converged = true;
  p.objective_value = transport_cost(p.coupling, cost);
  p.regularized_objective = p.objective_value;
  p.marginal_residual = max_marginal_residual(p.coupling, marg);
  p.dual_source = u;
  p.dual_target = v;
  const double dual = marg.source.dot(u) + marg.target.dot(v);
  p.duality_gap = std::abs(p.objective_value - dual);
  return p;
}

}  // namespace motcat::ot
