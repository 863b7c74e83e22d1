#pragma once

// Micro-batch sampling of the pathology bag, per-batch transport solves and
// OT-based co-attention, plus the dense softmax co-attention baseline.

#include "motcat/bagdata.hpp"
#include "motcat/core.hpp"
#include "motcat/ot.hpp"

#include <iostream>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

namespace motcat {

enum class CoattentionMode { umbot, emd, dense };

inline const char* to_string(CoattentionMode m) {
  switch (m) {
    case CoattentionMode::umbot: return "umbot";
    case CoattentionMode::emd: return "emd";
    case CoattentionMode::dense: return "dense";
  }
  return "umbot";
}

inline CoattentionMode coattention_mode_from_string(const std::string& s) {
  if (s == "umbot") return CoattentionMode::umbot;
  if (s == "emd") return CoattentionMode::emd;
  if (s == "dense") return CoattentionMode::dense;
  throw ParameterError("unknown attention mode '" + s + "'");
}

inline void log_warning(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

struct MicroBatchPlan {
  std::vector<std::vector<int>> batch_indices;
  int batch_size = 0;
  std::uint64_t seed = 0;

  std::size_t size() const { return batch_indices.size(); }
};

// Seeded permutation split into consecutive chunks of m. When m covers the
// whole bag the single batch keeps the original order, so it is the same
// computation as a whole-bag solve.
inline MicroBatchPlan sample_micro_batches(int n_instances, int m, std::uint64_t seed) {
  if (m <= 0) throw ParameterError("micro-batch size must be > 0");
  if (n_instances < 1) throw ParameterError("bag must contain at least one instance");
  if (m > n_instances) throw ParameterError("micro-batch size " + std::to_string(m) + " exceeds bag size " + std::to_string(n_instances));
  MicroBatchPlan plan;
  plan.batch_size = m;
  plan.seed = seed;
  std::vector<int> order(static_cast<std::size_t>(n_instances));
  std::iota(order.begin(), order.end(), 0);
  if (m < n_instances) {
    Rng rng(seed);
    rng.shuffle(order);
  }
  for (int start = 0; start < n_instances; start += m) {
    const int end = std::min(n_instances, start + m);
    plan.batch_indices.emplace_back(order.begin() + start, order.begin() + end);
  }
  return plan;
}

inline Matrix gather_rows(const Matrix& src, const std::vector<int>& idx) {
  Matrix out(static_cast<Index>(idx.size()), src.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Index>(k)) = src.row(idx[k]);
  return out;
}

struct SelectedBag {
  Matrix features;                                  // M_g x d
  std::shared_ptr<const ot::TransportPlan> source_plan;
  Vector mass_per_row;                              // column sums of the coupling
};

// Rows of the selected bag are P^T B. The coupling is a constant here: no
// gradient is ever propagated into it.
inline SelectedBag coattend(std::shared_ptr<const ot::TransportPlan> plan, const Matrix& batch_features,
                            bool normalize_mass = false) {
  if (!plan) throw ParameterError("coattend: null plan");
  const Matrix& p = plan->coupling;
  if (p.rows() != batch_features.rows())
    throw ShapeError("coattend: coupling " + shape_str(p.rows(), p.cols()) + " vs batch " +
                     shape_str(batch_features.rows(), batch_features.cols()));
  SelectedBag out;
  out.features = p.transpose() * batch_features;
  out.mass_per_row = p.colwise().sum().transpose();
  if (normalize_mass)
    for (Index j = 0; j < out.features.rows(); ++j)
      if (out.mass_per_row[j] > 0.0) out.features.row(j) /= out.mass_per_row[j];
  out.source_plan = std::move(plan);
  return out;
}

inline SelectedBag coattend(const ot::TransportPlan& plan, const Matrix& batch_features, bool normalize_mass = false) {
  return coattend(std::make_shared<const ot::TransportPlan>(plan), batch_features, normalize_mass);
}

// Row-wise softmax; rows with all -inf are not expected.
inline Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    double s = 0.0;
    for (Index j = 0; j < logits.cols(); ++j) {
      out(i, j) = std::exp(logits(i, j) - mx);
      s += out(i, j);
    }
    out.row(i) /= s;
  }
  return out;
}

struct DenseAttention {
  Matrix output;   // queries x d
  Matrix weights;  // queries x keys, rows sum to 1
};

inline DenseAttention dense_coattention(const Matrix& queries, const Matrix& keys, const Matrix& values, double scale) {
  if (!(scale > 0.0)) throw ParameterError("dense_coattention: scale must be > 0");
  if (queries.cols() != keys.cols() || keys.rows() != values.rows())
    throw ShapeError("dense_coattention: inconsistent shapes q=" + shape_str(queries.rows(), queries.cols()) +
                     " k=" + shape_str(keys.rows(), keys.cols()) + " v=" + shape_str(values.rows(), values.cols()));
  DenseAttention out;
  out.weights = softmax_rows(queries * keys.transpose() / scale);
  out.output = out.weights * values;
  return out;
}

struct OtSettings {
  CoattentionMode mode = CoattentionMode::umbot;
  ot::Metric metric = ot::Metric::l2;
  bool normalize_cost = true;
  double epsilon = 0.05;
  double tau = 0.5;
  int max_iters = 1000;
  double tolerance = 1e-6;
  bool normalize_mass = false;
};

// Couples one batch (m x d) with the encoded genomic bag (M_g x d) under
// uniform marginals.
inline std::shared_ptr<const ot::TransportPlan> solve_batch(const Matrix& batch, const Matrix& genomic,
                                                            const OtSettings& s) {
  auto cost = ot::build_cost(batch, genomic, s.metric);
  if (s.normalize_cost) cost = ot::normalized(std::move(cost));
  const auto marg = ot::Marginals::uniform(batch.rows(), genomic.rows());
  if (s.mode == CoattentionMode::emd) return std::make_shared<const ot::TransportPlan>(ot::solve_exact_emd(cost, marg));
  if (s.mode == CoattentionMode::dense) throw ParameterError("solve_batch: dense mode has no transport plan");
  return std::make_shared<const ot::TransportPlan>(
      ot::unbalanced_sinkhorn(cost, marg, s.epsilon, s.tau, s.max_iters, s.tolerance));
}

struct CaseSelection {
  MicroBatchPlan batches;
  std::vector<SelectedBag> selected;
  int non_converged = 0;
};

inline CaseSelection run_case_microbatched(const InstanceBag& pathology, const InstanceBag& genomic_encoded, int m,
                                           const OtSettings& settings, std::uint64_t seed) {
  if (pathology.dim() != genomic_encoded.dim())
    throw ShapeError("pathology dim " + std::to_string(pathology.dim()) + " != genomic dim " +
                     std::to_string(genomic_encoded.dim()));
  CaseSelection out;
  out.batches = sample_micro_batches(static_cast<int>(pathology.size()), m, seed);
  for (const auto& idx : out.batches.batch_indices) {
    const Matrix batch = gather_rows(pathology.features, idx);
    auto plan = solve_batch(batch, genomic_encoded.features, settings);
    if (!plan->converged) {
      ++out.non_converged;
      log_warning("case '" + pathology.case_id + "': transport solve did not converge in " +
                  std::to_string(plan->iterations) + " iterations");
    }
    out.selected.push_back(coattend(std::move(plan), batch, settings.normalize_mass));
  }
  return out;
}

}  // namespace motcat
