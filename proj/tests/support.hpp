#pragma once

// Test-side helpers: scratch directories, seeded generators and independent
// oracles (brute-force transport LP, pairwise concordance, cumulative products).

#include "motcat/bagdata.hpp"
#include "motcat/core.hpp"
#include "motcat/neural.hpp"
#include "motcat/ot.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include <unistd.h>

namespace testing_support {

using motcat::Index;
using motcat::Matrix;
using motcat::Vector;
namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class ScratchDir {
 public:
  explicit ScratchDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("motcat_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  fs::path path_;
};

inline Matrix random_matrix(motcat::Rng& rng, Index rows, Index cols, double lo = 0.0, double hi = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = lo + (hi - lo) * rng.uniform();
  return m;
}

inline Matrix random_normal(motcat::Rng& rng, Index rows, Index cols, double sd = 1.0) {
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = sd * rng.normal();
  return m;
}

// Probability vector with entries k_i / sum(k) for integer k_i in [1, 9].
inline Vector random_rational_marginal(motcat::Rng& rng, Index n) {
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = static_cast<double>(1 + rng.below(9));
  return v / v.sum();
}

// Minimum of <P, C> over all basic feasible solutions of the transportation
// polytope. Every vertex is a spanning tree of n + m - 1 cells in the
// bipartite row/column graph; flows on a tree are found by peeling leaves.
inline double brute_force_emd(const Matrix& c, const Vector& a, const Vector& b) {
  const int n = static_cast<int>(c.rows()), m = static_cast<int>(c.cols());
  const int cells = n * m, k = n + m - 1;
  double best = std::numeric_limits<double>::infinity();
  std::vector<int> pick(static_cast<std::size_t>(k));
  std::iota(pick.begin(), pick.end(), 0);

  auto evaluate = [&]() {
    std::vector<int> parent(static_cast<std::size_t>(n + m));
    std::iota(parent.begin(), parent.end(), 0);
    auto find = [&](int x) {
      while (parent[static_cast<std::size_t>(x)] != x) x = parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      return x;
    };
    for (int e : pick) {
      const int r = find(e / m), s = find(n + e % m);
      if (r == s) return;  // cycle
      parent[static_cast<std::size_t>(r)] = s;
    }
    std::vector<double> rest(static_cast<std::size_t>(n + m));
    for (int i = 0; i < n; ++i) rest[static_cast<std::size_t>(i)] = a[i];
    for (int j = 0; j < m; ++j) rest[static_cast<std::size_t>(n + j)] = b[j];
    std::vector<bool> used(static_cast<std::size_t>(k), false);
    std::vector<double> flow(static_cast<std::size_t>(k), 0.0);
    for (int step = 0; step < k; ++step) {
      std::vector<int> degree(static_cast<std::size_t>(n + m), 0);
      for (int t = 0; t < k; ++t)
        if (!used[static_cast<std::size_t>(t)]) {
          ++degree[static_cast<std::size_t>(pick[static_cast<std::size_t>(t)] / m)];
          ++degree[static_cast<std::size_t>(n + pick[static_cast<std::size_t>(t)] % m)];
        }
      int leaf_edge = -1, leaf = -1;
      for (int t = 0; t < k && leaf_edge < 0; ++t) {
        if (used[static_cast<std::size_t>(t)]) continue;
        const int r = pick[static_cast<std::size_t>(t)] / m, s = n + pick[static_cast<std::size_t>(t)] % m;
        if (degree[static_cast<std::size_t>(r)] == 1) leaf_edge = t, leaf = r;
        else if (degree[static_cast<std::size_t>(s)] == 1) leaf_edge = t, leaf = s;
      }
      const int r = pick[static_cast<std::size_t>(leaf_edge)] / m, s = n + pick[static_cast<std::size_t>(leaf_edge)] % m;
      const int other = leaf == r ? s : r;
      const double f = rest[static_cast<std::size_t>(leaf)];
      flow[static_cast<std::size_t>(leaf_edge)] = f;
      rest[static_cast<std::size_t>(leaf)] = 0.0;
      rest[static_cast<std::size_t>(other)] -= f;
      used[static_cast<std::size_t>(leaf_edge)] = true;
    }
    double cost = 0.0;
    for (int t = 0; t < k; ++t) {
      if (flow[static_cast<std::size_t>(t)] < -1e-12) return;  // infeasible vertex
      cost += flow[static_cast<std::size_t>(t)] * c(pick[static_cast<std::size_t>(t)] / m, pick[static_cast<std::size_t>(t)] % m);
    }
    best = std::min(best, cost);
  };

  while (true) {
    evaluate();
    int i = k - 1;
    while (i >= 0 && pick[static_cast<std::size_t>(i)] == cells - k + i) --i;
    if (i < 0) break;
    ++pick[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
  }
  return best;
}

// Harrell's C by explicit enumeration of ordered pairs.
inline double pairwise_c_index(const std::vector<double>& risk, const std::vector<motcat::SurvivalRecord>& rec) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < rec.size(); ++i)
    for (std::size_t j = 0; j < rec.size(); ++j) {
      if (i == j || rec[i].censor != 0 || !(rec[i].time_months < rec[j].time_months)) continue;
      den += 1.0;
      num += risk[i] > risk[j] ? 1.0 : (risk[i] == risk[j] ? 0.5 : 0.0);
    }
  return num / den;
}

// Upper tail of chi-square(1) as erfc(sqrt(x/2)), an independent route to Q(1/2, x/2).
inline double chi2_1_tail(double x) { return std::erfc(std::sqrt(0.5 * x)); }

// Small synthetic case in memory: pathology M x raw, genomic categories with dims.
inline motcat::CaseData make_case(motcat::Rng& rng, int m_p, int raw_dim, const std::vector<int>& genomic_dims,
                                  int bin, int censor) {
  motcat::CaseData cs;
  cs.case_id = "case";
  cs.pathology.features = random_normal(rng, m_p, raw_dim);
  cs.pathology.case_id = "case";
  for (std::size_t j = 0; j < genomic_dims.size(); ++j)
    cs.genomic.categories.push_back({"g" + std::to_string(j), random_normal(rng, genomic_dims[j], 1).col(0)});
  cs.record = {10.0, censor, bin};
  return cs;
}

inline motcat::nn::ModelConfig small_config(int raw_dim, const std::vector<int>& genomic_dims, int dim = 8, int heads = 2,
                                            int bins = 4) {
  motcat::nn::ModelConfig cfg;
  cfg.raw_dim = raw_dim;
  cfg.dim = dim;
  cfg.heads = heads;
  cfg.bins = bins;
  cfg.genomic_dims = genomic_dims;
  return cfg;
}

// Random head weights: a zero-initialized head would block every upstream gradient.
inline void randomize_head(motcat::nn::ModelParams& p, std::uint64_t seed, double sd = 0.5) {
  motcat::Rng rng(seed);
  p.hazard_head.weight = random_normal(rng, p.hazard_head.weight.rows(), p.hazard_head.weight.cols(), sd);
  p.hazard_head.bias = random_normal(rng, 1, p.hazard_head.bias.cols(), 0.3);
}

struct GradCheck {
  std::string tensor;
  int coordinates = 0;
  double worst_rel_err = 0.0;
  double worst_fd = 0.0;
  double worst_analytic = 0.0;
};

// Fourth-order central differences on `coords` seeded coordinates of every tensor.
// rel err = |fd - an| / max(|fd| + |an|, floor).
template <typename LossFn>
std::vector<GradCheck> finite_difference_check(motcat::nn::ModelParams& params, const motcat::nn::ModelParams& grads,
                                               LossFn&& loss, int coords, std::uint64_t seed, double h = 1e-4,
                                               double floor = 1e-5) {
  std::vector<Matrix*> ps;
  std::vector<const Matrix*> gs;
  std::vector<std::string> names;
  params.for_each([&](const std::string& n, Matrix& t) {
    ps.push_back(&t);
    names.push_back(n);
  });
  grads.for_each([&](const std::string&, const Matrix& t) { gs.push_back(&t); });
  motcat::Rng rng(seed);
  std::vector<GradCheck> out;
  for (std::size_t i = 0; i < ps.size(); ++i) {
    GradCheck gc{names[i], 0, 0.0, 0.0, 0.0};
    const Index n = ps[i]->size();
    std::vector<Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    rng.shuffle(idx);
    idx.resize(static_cast<std::size_t>(std::min<Index>(n, coords)));
    for (Index k : idx) {
      double& w = ps[i]->data()[k];
      const double orig = w;
      auto at = [&](double delta) {
        w = orig + delta;
        return loss();
      };
      const double fd = (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h);
      w = orig;
      const double an = gs[i]->data()[k];
      const double rel = std::abs(fd - an) / std::max(std::abs(fd) + std::abs(an), floor);
      if (rel >= gc.worst_rel_err) gc = {gc.tensor, gc.coordinates, rel, fd, an};
      ++gc.coordinates;
    }
    out.push_back(gc);
  }
  return out;
}

}  // namespace testing_support
