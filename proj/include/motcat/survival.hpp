#pragma once

// Discrete-time survival math and evaluation statistics.

#include "motcat/bagdata.hpp"
#include "motcat/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

namespace motcat::survival {

// Probability floor applied before every log in the loss.
inline constexpr double kProbFloor = 1e-7;

struct SurvivalCurve {
  Vector hazards;
  Vector survival;

  Index bins() const { return hazards.size(); }
};

inline Vector clamp_hazards(Vector h, double eps = kProbFloor) {
  for (Index t = 0; t < h.size(); ++t) h[t] = std::clamp(h[t], eps, 1.0 - eps);
  return h;
}

inline SurvivalCurve survival_from_hazard(const Vector& h) {
  if (h.size() < 1) throw DomainError("empty hazard vector");
  SurvivalCurve c;
  c.hazards = h;
  c.survival.resize(h.size());
  double s = 1.0;
  for (Index t = 0; t < h.size(); ++t) {
    if (!(h[t] > 0.0 && h[t] < 1.0)) throw DomainError("hazard h[" + std::to_string(t) + "] = " + std::to_string(h[t]) + " outside (0,1)");
    s *= 1.0 - h[t];
    c.survival[t] = s;
  }
  return c;
}

inline void check_bin(const SurvivalRecord& r, Index bins) {
  if (r.bin < 0 || r.bin >= bins) throw DomainError("record bin " + std::to_string(r.bin) + " outside [0," + std::to_string(bins) + ")");
}

// Weighted discrete-time NLL. Censored cases contribute -log S(t); observed
// events contribute -log S(t-1) - log h(t), with S(-1) = 1.
inline double nll_loss(const SurvivalCurve& curve, const SurvivalRecord& r, double weight = 1.0) {
  check_bin(r, curve.bins());
  if (!(weight > 0.0)) throw DomainError("loss weight must be > 0");
  const int t = r.bin;
  if (!r.uncensored()) return -weight * std::log(std::max(curve.survival[t], kProbFloor));
  const double s_prev = t == 0 ? 1.0 : curve.survival[t - 1];
  return -weight * (std::log(std::max(s_prev, kProbFloor)) + std::log(std::max(curve.hazards[t], kProbFloor)));
}

// d nll_loss / d h. Terms clipped by the floor contribute no gradient.
inline Vector nll_loss_grad(const SurvivalCurve& curve, const SurvivalRecord& r, double weight = 1.0) {
  check_bin(r, curve.bins());
  Vector g = Vector::Zero(curve.bins());
  const int t = r.bin;
  const auto& h = curve.hazards;
  if (!r.uncensored()) {
    if (curve.survival[t] > kProbFloor)
      for (int z = 0; z <= t; ++z) g[z] += weight / (1.0 - h[z]);
    return g;
  }
  if (t > 0 && curve.survival[t - 1] > kProbFloor)
    for (int z = 0; z < t; ++z) g[z] += weight / (1.0 - h[z]);
  if (h[t] > kProbFloor) g[t] -= weight / h[t];
  return g;
}

// Negative area under the discrete survival curve; higher means riskier.
inline double risk_score(const SurvivalCurve& curve) { return -curve.survival.sum(); }
inline double risk_score(const Vector& survival) { return -survival.sum(); }

// Harrell's C over pairs (i observed, t_i < t_j); tied risks earn half credit.
inline double c_index(const std::vector<double>& risks, const std::vector<SurvivalRecord>& records) {
  if (risks.size() != records.size()) throw ShapeError("c_index: risks and records differ in length");
  double concordant = 0.0;
  std::size_t comparable = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (!records[i].uncensored()) continue;
    for (std::size_t j = 0; j < records.size(); ++j) {
      if (!(records[i].time_months < records[j].time_months)) continue;
      ++comparable;
      if (risks[i] > risks[j]) concordant += 1.0;
      else if (risks[i] == risks[j]) concordant += 0.5;
    }
  }
  if (comparable == 0) throw MetricError("c_index: no comparable pairs");
  return concordant / static_cast<double>(comparable);
}

struct KMCurve {
  std::vector<double> event_times;
  std::vector<int> at_risk;
  std::vector<int> events;
  std::vector<double> survival;
  std::vector<double> greenwood_variance;

  // Right-continuous step function.
  double at(double t) const {
    double s = 1.0;
    for (std::size_t k = 0; k < event_times.size() && event_times[k] <= t; ++k) s = survival[k];
    return s;
  }
};

// Product-limit estimator; at tied times deaths are counted before censorings.
inline KMCurve km_estimate(const std::vector<SurvivalRecord>& records) {
  if (records.empty()) throw DataError("km_estimate: no records");
  std::vector<SurvivalRecord> sorted = records;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.time_months < b.time_months; });
  KMCurve km;
  const std::size_t n = sorted.size();
  double s = 1.0;
  double gw = 0.0;
  std::size_t i = 0;
  while (i < n) {
    const double t = sorted[i].time_months;
    int d = 0;
    std::size_t j = i;
    while (j < n && sorted[j].time_months == t) {
      if (sorted[j].uncensored()) ++d;
      ++j;
    }
    const int at_risk = static_cast<int>(n - i);
    if (d > 0) {
      s *= 1.0 - static_cast<double>(d) / at_risk;
      if (at_risk > d) gw += static_cast<double>(d) / (static_cast<double>(at_risk) * (at_risk - d));
      km.event_times.push_back(t);
      km.at_risk.push_back(at_risk);
      km.events.push_back(d);
      km.survival.push_back(s);
      km.greenwood_variance.push_back(at_risk > d ? s * s * gw : 0.0);
    }
    i = j;
  }
  return km;
}

// Regularized upper incomplete gamma Q(a, x): power series below a + 1,
// Lentz continued fraction above.
inline double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw DomainError("regularized_gamma_q: invalid arguments");
  if (x == 0.0) return 1.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 1000; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return std::clamp(1.0 - sum * std::exp(-x + a * std::log(x) - gln), 0.0, 1.0);
  }
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 1000; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < 1e-16) break;
  }
  return std::clamp(std::exp(-x + a * std::log(x) - gln) * h, 0.0, 1.0);
}

// Upper tail of the chi-square distribution with `dof` degrees of freedom.
inline double chi_square_sf(double statistic, double dof = 1.0) {
  if (statistic <= 0.0) return 1.0;
  return regularized_gamma_q(0.5 * dof, 0.5 * statistic);
}

struct LogrankResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int size_a = 0;
  int size_b = 0;
  double observed_a = 0.0;
  double expected_a = 0.0;
};

inline LogrankResult logrank(const std::vector<SurvivalRecord>& a, const std::vector<SurvivalRecord>& b) {
  if (a.empty() || b.empty()) throw DataError("logrank: both groups must be nonempty");
  std::vector<double> times;
  for (const auto* g : {&a, &b})
    for (const auto& r : *g)
      if (r.uncensored()) times.push_back(r.time_months);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  auto count = [](const std::vector<SurvivalRecord>& g, double t, int& at_risk, int& deaths) {
    at_risk = 0;
    deaths = 0;
    for (const auto& r : g) {
      if (r.time_months >= t) ++at_risk;
      if (r.time_months == t && r.uncensored()) ++deaths;
    }
  };

  LogrankResult res;
  res.size_a = static_cast<int>(a.size());
  res.size_b = static_cast<int>(b.size());
  double var = 0.0;
  for (double t : times) {
    int na, da, nb, db;
    count(a, t, na, da);
    count(b, t, nb, db);
    const double n = na + nb;
    const double d = da + db;
    if (n <= 0.0) continue;
    res.observed_a += da;
    res.expected_a += d * na / n;
    if (n > 1.0) var += d * (na / n) * (1.0 - na / n) * (n - d) / (n - 1.0);
  }
  if (var <= 0.0) return res;
  const double diff = res.observed_a - res.expected_a;
  res.statistic = diff * diff / var;
  res.p_value = chi_square_sf(res.statistic, 1.0);
  return res;
}

struct RiskSplit {
  std::vector<std::size_t> low;
  std::vector<std::size_t> high;
  double threshold = 0.0;
  bool degenerate = false;  // every risk sat at the median; fell back to an index split
};

// Cases at or below the median risk go to the low-risk group.
inline RiskSplit median_split(const std::vector<double>& risks) {
  if (risks.size() < 2) throw DataError("median_split: need at least 2 cases");
  std::vector<double> sorted = risks;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  RiskSplit s;
  s.threshold = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  for (std::size_t i = 0; i < n; ++i) (risks[i] <= s.threshold ? s.low : s.high).push_back(i);
  if (s.high.empty() || s.low.empty()) {
    s.degenerate = true;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto x, auto y) { return risks[x] < risks[y]; });
    const std::size_t cut = (n + 1) / 2;
    s.low.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
    s.high.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
    std::sort(s.low.begin(), s.low.end());
    std::sort(s.high.begin(), s.high.end());
  }
  return s;
}

}  // namespace motcat::survival
