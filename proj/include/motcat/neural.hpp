#pragma once

// Trainable parts of the pipeline: pathology projection, per-category SELU
// genomic encoders, single-layer self-attention aggregators with mean
// pooling, and the sigmoid hazard head. Gradients are hand-derived
// reverse-mode passes over a recorded tape; transport couplings enter the
// forward pass as constants.

#include "motcat/bagdata.hpp"
#include "motcat/core.hpp"
#include "motcat/microbatch.hpp"
#include "motcat/ot.hpp"
#include "motcat/survival.hpp"

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace motcat::nn {

inline constexpr double kSeluAlpha = 1.6732632423543772;
inline constexpr double kSeluLambda = 1.0507009873554805;

inline double selu(double x) { return x > 0.0 ? kSeluLambda * x : kSeluLambda * kSeluAlpha * std::expm1(x); }
inline double selu_grad(double x) { return x > 0.0 ? kSeluLambda : kSeluLambda * kSeluAlpha * std::exp(x); }

inline Matrix selu(const Matrix& z) { return z.unaryExpr([](double v) { return selu(v); }); }

inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct Linear {
  Matrix weight;  // out x in
  Matrix bias;    // 1 x out

  Index in_dim() const { return weight.cols(); }
  Index out_dim() const { return weight.rows(); }
};

struct SeluNet {
  Linear first;   // d_j -> d
  Linear second;  // d -> d
};

struct SelfAttention {
  Linear query, key, value, output;
  int heads = 4;
};

struct ModelConfig {
  int raw_dim = 16;
  int dim = 16;
  int heads = 4;
  int bins = 4;
  std::vector<int> genomic_dims;

  void validate() const {
    if (raw_dim < 1 || dim < 1 || bins < 1) throw ParameterError("model dimensions must be positive");
    if (heads < 1 || dim % heads != 0) throw ParameterError("model dim must be divisible by the head count");
    if (genomic_dims.empty()) throw ParameterError("model needs at least one genomic category");
    for (int dj : genomic_dims)
      if (dj < 1) throw ParameterError("genomic category dims must be >= 1");
  }
};

inline ModelConfig model_config_for(const CaseManifest& m, int dim, int heads, int bins) {
  ModelConfig c;
  c.raw_dim = m.feature_dim;
  c.dim = dim;
  c.heads = heads;
  c.bins = bins;
  for (const auto& s : m.category_spec) c.genomic_dims.push_back(s.dim);
  return c;
}

struct ModelParams {
  ModelConfig config;
  Linear pathology_proj;
  std::vector<SeluNet> genomic_encoders;
  SelfAttention aggregator_p;
  SelfAttention aggregator_g;
  Linear hazard_head;  // 2d -> T
  std::uint64_t version = 0;

  template <typename F>
  void for_each(F&& f) { visit(*this, f); }
  template <typename F>
  void for_each(F&& f) const { visit(*this, f); }

  ModelParams zeros_like() const {
    ModelParams z = *this;
    z.for_each([](const std::string&, Matrix& t) { t.setZero(); });
    z.version = 0;
    return z;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for_each([&](const std::string&, const Matrix& t) { n += static_cast<std::size_t>(t.size()); });
    return n;
  }

 private:
  template <typename Self, typename F>
  static void visit(Self& self, F& f) {
    auto linear = [&](const std::string& name, auto& l) {
      f(name + ".weight", l.weight);
      f(name + ".bias", l.bias);
    };
    auto attention = [&](const std::string& name, auto& a) {
      linear(name + ".query", a.query);
      linear(name + ".key", a.key);
      linear(name + ".value", a.value);
      linear(name + ".output", a.output);
    };
    linear("pathology_proj", self.pathology_proj);
    for (std::size_t j = 0; j < self.genomic_encoders.size(); ++j) {
      linear("genomic_encoder." + std::to_string(j) + ".first", self.genomic_encoders[j].first);
      linear("genomic_encoder." + std::to_string(j) + ".second", self.genomic_encoders[j].second);
    }
    attention("aggregator_p", self.aggregator_p);
    attention("aggregator_g", self.aggregator_g);
    linear("hazard_head", self.hazard_head);
  }
};

// Weights ~ N(0, 1/fan_in); biases zero.
inline ModelParams init_params(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(mix_seed(seed, 0x1417));
  auto make = [&](int in, int out) {
    Linear l;
    l.weight.resize(out, in);
    const double sd = 1.0 / std::sqrt(static_cast<double>(in));
    for (Index r = 0; r < l.weight.rows(); ++r)
      for (Index c = 0; c < l.weight.cols(); ++c) l.weight(r, c) = sd * rng.normal();
    l.bias = Matrix::Zero(1, out);
    return l;
  };
  auto attention = [&]() {
    SelfAttention a;
    a.heads = cfg.heads;
    a.query = make(cfg.dim, cfg.dim);
    a.key = make(cfg.dim, cfg.dim);
    a.value = make(cfg.dim, cfg.dim);
    a.output = make(cfg.dim, cfg.dim);
    return a;
  };
  ModelParams p;
  p.config = cfg;
  p.pathology_proj = make(cfg.raw_dim, cfg.dim);
  for (int dj : cfg.genomic_dims) p.genomic_encoders.push_back({make(dj, cfg.dim), make(cfg.dim, cfg.dim)});
  p.aggregator_p = attention();
  p.aggregator_g = attention();
  // Zero head: every case starts with the same hazards.
  p.hazard_head = make(2 * cfg.dim, cfg.bins);
  p.hazard_head.weight.setZero();
  return p;
}

// ---- layers ------------------------------------------------------------------

inline Matrix linear_forward(const Linear& l, const Matrix& x) {
  if (x.cols() != l.in_dim())
    throw ShapeError("linear: input " + shape_str(x.rows(), x.cols()) + " vs weight " + shape_str(l.out_dim(), l.in_dim()));
  Matrix y = x * l.weight.transpose();
  y.rowwise() += l.bias.row(0);
  return y;
}

// Accumulates parameter gradients into `g` and returns d/dx.
inline Matrix linear_backward(const Linear& l, const Matrix& x, const Matrix& dy, Linear& g) {
  g.weight.noalias() += dy.transpose() * x;
  g.bias.row(0) += dy.colwise().sum();
  return dy * l.weight;
}

struct EncoderCache {
  Matrix x;   // 1 x d_j
  Matrix z1;  // pre-activations
  Matrix z2;
  Matrix a1;
};

inline Matrix encode_genomic_matrix(const GenomicProfile& profile, const ModelParams& params,
                                    std::vector<EncoderCache>* caches = nullptr) {
  if (profile.size() != static_cast<Index>(params.genomic_encoders.size()))
    throw ShapeError("genomic profile has " + std::to_string(profile.size()) + " categories, model expects " +
                     std::to_string(params.genomic_encoders.size()));
  const Index d = params.config.dim;
  Matrix out(profile.size(), d);
  if (caches) caches->assign(static_cast<std::size_t>(profile.size()), {});
  for (Index j = 0; j < profile.size(); ++j) {
    const auto& net = params.genomic_encoders[static_cast<std::size_t>(j)];
    const auto& attrs = profile.categories[static_cast<std::size_t>(j)].attributes;
    if (attrs.size() != net.first.in_dim())
      throw ShapeError("category '" + profile.categories[static_cast<std::size_t>(j)].name + "' has " +
                       std::to_string(attrs.size()) + " attributes, encoder expects " + std::to_string(net.first.in_dim()));
    Matrix x = attrs.transpose();
    Matrix z1 = linear_forward(net.first, x);
    Matrix a1 = selu(z1);
    Matrix z2 = linear_forward(net.second, a1);
    out.row(j) = selu(z2);
    if (caches) (*caches)[static_cast<std::size_t>(j)] = {std::move(x), std::move(z1), std::move(z2), std::move(a1)};
  }
  return out;
}

inline InstanceBag encode_genomic(const GenomicProfile& profile, const ModelParams& params, std::string case_id = {}) {
  InstanceBag bag;
  bag.modality = Modality::genomic;
  bag.case_id = std::move(case_id);
  bag.features = encode_genomic_matrix(profile, params);
  return bag;
}

inline Matrix project_pathology(const Matrix& raw, const ModelParams& params) {
  return linear_forward(params.pathology_proj, raw);
}

struct AttentionCache {
  Matrix x, q, k, v, o;
  std::vector<Matrix> attn;  // one n x n matrix per head
};

// One self-attention layer with a residual connection, then mean pooling over
// tokens. No positional encoding, so the result is permutation invariant.
inline Vector attention_pool_forward(const SelfAttention& a, const Matrix& x, AttentionCache* cache = nullptr) {
  if (x.rows() < 1) throw DataError("aggregate: empty bag");
  const Index n = x.rows(), d = x.cols();
  if (d != a.query.in_dim()) throw ShapeError("aggregate: bag dim " + std::to_string(d) + " vs model dim " + std::to_string(a.query.in_dim()));
  const Index dh = d / a.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  Matrix q = linear_forward(a.query, x);
  Matrix k = linear_forward(a.key, x);
  Matrix v = linear_forward(a.value, x);
  Matrix o(n, d);
  std::vector<Matrix> attn;
  for (int h = 0; h < a.heads; ++h) {
    const Index c0 = h * dh;
    Matrix scores = q.middleCols(c0, dh) * k.middleCols(c0, dh).transpose() * inv_sqrt;
    Matrix w = softmax_rows(scores);
    o.middleCols(c0, dh) = w * v.middleCols(c0, dh);
    attn.push_back(std::move(w));
  }
  const Matrix y = x + linear_forward(a.output, o);
  Vector pooled = y.colwise().mean().transpose();
  if (cache) *cache = {x, std::move(q), std::move(k), std::move(v), std::move(o), std::move(attn)};
  return pooled;
}

inline Vector aggregate(const Matrix& bag, const SelfAttention& a) { return attention_pool_forward(a, bag); }

inline Matrix attention_pool_backward(const SelfAttention& a, const AttentionCache& c, const Vector& dpooled,
                                      SelfAttention& g) {
  const Index n = c.x.rows(), d = c.x.cols();
  const Index dh = d / a.heads;
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));
  const Matrix dy = Matrix::Ones(n, 1) * (dpooled.transpose() / static_cast<double>(n));
  Matrix dx = dy;  // residual path
  const Matrix d_o = linear_backward(a.output, c.o, dy, g.output);
  Matrix dq(n, d), dk(n, d), dv(n, d);
  for (int h = 0; h < a.heads; ++h) {
    const Index c0 = h * dh;
    const Matrix& w = c.attn[static_cast<std::size_t>(h)];
    const Matrix dw = d_o.middleCols(c0, dh) * c.v.middleCols(c0, dh).transpose();
    dv.middleCols(c0, dh) = w.transpose() * d_o.middleCols(c0, dh);
    const Vector row_dot = w.cwiseProduct(dw).rowwise().sum();
    Matrix ds = w.cwiseProduct(dw.colwise() - row_dot) * inv_sqrt;
    dq.middleCols(c0, dh) = ds * c.k.middleCols(c0, dh);
    dk.middleCols(c0, dh) = ds.transpose() * c.q.middleCols(c0, dh);
  }
  dx += linear_backward(a.query, c.x, dq, g.query);
  dx += linear_backward(a.key, c.x, dk, g.key);
  dx += linear_backward(a.value, c.x, dv, g.value);
  return dx;
}

inline Vector hazard_forward(const Vector& h_p, const Vector& h_g, const ModelParams& params) {
  if (h_p.size() != params.config.dim || h_g.size() != params.config.dim)
    throw ShapeError("hazard_forward: bag embeddings must have length " + std::to_string(params.config.dim));
  Matrix concat(1, h_p.size() + h_g.size());
  concat << h_p.transpose(), h_g.transpose();
  const Matrix logits = linear_forward(params.hazard_head, concat);
  Vector h(logits.cols());
  for (Index t = 0; t < h.size(); ++t) h[t] = sigmoid(logits(0, t));
  return survival::clamp_hazards(std::move(h));
}

// ---- case-level forward/backward ----------------------------------------------

// Couplings for one case under the current parameters. Solving is a
// no-gradient step: the plans are frozen before the differentiable pass.
struct CasePlans {
  MicroBatchPlan batches;
  std::vector<std::shared_ptr<const ot::TransportPlan>> plans;  // empty in dense mode
  int non_converged = 0;
};

inline CasePlans plans_for_batches(const ModelParams& params, const CaseData& cs, MicroBatchPlan batches,
                                   const OtSettings& settings) {
  CasePlans out;
  out.batches = std::move(batches);
  if (settings.mode == CoattentionMode::dense) return out;
  const Matrix genomic = encode_genomic_matrix(cs.genomic, params);
  for (const auto& idx : out.batches.batch_indices) {
    const Matrix z = project_pathology(gather_rows(cs.pathology.features, idx), params);
    auto plan = solve_batch(z, genomic, settings);
    if (!plan->converged) {
      ++out.non_converged;
      log_warning("case '" + cs.case_id + "': transport solve did not converge in " + std::to_string(plan->iterations) +
                  " iterations");
    }
    out.plans.push_back(std::move(plan));
  }
  return out;
}

inline int effective_batch_size(int m, const CaseData& cs) {
  return std::min(m, static_cast<int>(cs.pathology.size()));
}

inline CasePlans prepare_case(const ModelParams& params, const CaseData& cs, int m, const OtSettings& settings,
                              std::uint64_t seed) {
  const int n = static_cast<int>(cs.pathology.size());
  return plans_for_batches(params, cs, sample_micro_batches(n, effective_batch_size(m, cs), seed), settings);
}

// The unbatched pipeline: one solve over the whole bag.
inline CasePlans whole_bag_plans(const ModelParams& params, const CaseData& cs, const OtSettings& settings) {
  MicroBatchPlan all;
  all.batch_size = static_cast<int>(cs.pathology.size());
  all.batch_indices.emplace_back(static_cast<std::size_t>(cs.pathology.size()));
  std::iota(all.batch_indices[0].begin(), all.batch_indices[0].end(), 0);
  return plans_for_batches(params, cs, std::move(all), settings);
}

struct BatchRecord {
  Matrix raw;        // frozen input rows
  Matrix projected;  // m x d
  Matrix coupling;   // effective coupling (mass-normalized when requested); empty in dense mode
  Matrix dense_weights;
  AttentionCache aggregator;
  Matrix concat;  // 1 x 2d
  survival::SurvivalCurve curve;
  double weight = 0.0;
  double loss = 0.0;
};

class Tape {
 public:
  const ModelParams* params = nullptr;
  std::uint64_t params_version = 0;
  CoattentionMode mode = CoattentionMode::umbot;
  SurvivalRecord record;
  std::vector<EncoderCache> encoders;
  Matrix genomic;
  AttentionCache aggregator_g;
  Vector h_g;
  std::vector<BatchRecord> batches;
  double loss = 0.0;
  bool consumed = false;
};

// Per-batch loss weights are m_k / M_p, so a final partial batch counts in
// proportion to its size.
inline Tape forward_case(const ModelParams& params, const CaseData& cs, const CasePlans& plans,
                         const OtSettings& settings) {
  if (settings.mode != CoattentionMode::dense && plans.plans.size() != plans.batches.size())
    throw StateError("forward_case: plan count does not match batch count");
  Tape tape;
  tape.params = &params;
  tape.params_version = params.version;
  tape.mode = settings.mode;
  tape.record = cs.record;
  tape.genomic = encode_genomic_matrix(cs.genomic, params, &tape.encoders);
  tape.h_g = attention_pool_forward(params.aggregator_g, tape.genomic, &tape.aggregator_g);
  const double n_total = static_cast<double>(cs.pathology.size());
  const double scale = std::sqrt(static_cast<double>(params.config.dim));
  for (std::size_t k = 0; k < plans.batches.size(); ++k) {
    const auto& idx = plans.batches.batch_indices[k];
    BatchRecord b;
    b.raw = gather_rows(cs.pathology.features, idx);
    b.projected = project_pathology(b.raw, params);
    Matrix selected;
    if (settings.mode == CoattentionMode::dense) {
      auto att = dense_coattention(tape.genomic, b.projected, b.projected, scale);
      selected = std::move(att.output);
      b.dense_weights = std::move(att.weights);
    } else {
      const auto sel = coattend(plans.plans[k], b.projected, settings.normalize_mass);
      selected = sel.features;
      b.coupling = plans.plans[k]->coupling;
      if (settings.normalize_mass)
        for (Index j = 0; j < b.coupling.cols(); ++j)
          if (sel.mass_per_row[j] > 0.0) b.coupling.col(j) /= sel.mass_per_row[j];
    }
    const Vector h_p = attention_pool_forward(params.aggregator_p, selected, &b.aggregator);
    b.concat.resize(1, 2 * params.config.dim);
    b.concat << h_p.transpose(), tape.h_g.transpose();
    const Vector h = hazard_forward(h_p, tape.h_g, params);
    b.curve = survival::survival_from_hazard(h);
    b.weight = static_cast<double>(idx.size()) / n_total;
    b.loss = survival::nll_loss(b.curve, cs.record, b.weight);
    tape.loss += b.loss;
    tape.batches.push_back(std::move(b));
  }
  return tape;
}

inline ModelParams backward(Tape& tape) {
  if (tape.consumed) throw StateError("backward: tape has already been consumed");
  if (!tape.params) throw StateError("backward: tape was never recorded");
  if (tape.params->version != tape.params_version) throw StateError("backward: parameters changed since the forward pass");
  tape.consumed = true;
  const ModelParams& p = *tape.params;
  ModelParams g = p.zeros_like();
  const Index d = p.config.dim;
  Vector dh_g = Vector::Zero(d);
  Matrix dgenomic = Matrix::Zero(tape.genomic.rows(), tape.genomic.cols());
  const double scale = std::sqrt(static_cast<double>(d));

  for (const auto& b : tape.batches) {
    const Vector dh = survival::nll_loss_grad(b.curve, tape.record, b.weight);
    const Vector& h = b.curve.hazards;
    Matrix dlogit(1, h.size());
    for (Index t = 0; t < h.size(); ++t) {
      const bool clipped = h[t] <= survival::kProbFloor || h[t] >= 1.0 - survival::kProbFloor;
      dlogit(0, t) = clipped ? 0.0 : dh[t] * h[t] * (1.0 - h[t]);
    }
    const Matrix dconcat = linear_backward(p.hazard_head, b.concat, dlogit, g.hazard_head);
    const Vector dh_p = dconcat.leftCols(d).transpose();
    dh_g += dconcat.rightCols(d).transpose();
    const Matrix dselected = attention_pool_backward(p.aggregator_p, b.aggregator, dh_p, g.aggregator_p);
    Matrix dz;
    if (tape.mode == CoattentionMode::dense) {
      const Matrix& w = b.dense_weights;
      const Matrix dw = dselected * b.projected.transpose();
      dz = w.transpose() * dselected;
      const Vector row_dot = w.cwiseProduct(dw).rowwise().sum();
      const Matrix ds = w.cwiseProduct(dw.colwise() - row_dot) / scale;
      dgenomic += ds * b.projected;
      dz += ds.transpose() * tape.genomic;
    } else {
      dz = b.coupling * dselected;
    }
    // Raw features are frozen: only the projection receives gradient.
    linear_backward(p.pathology_proj, b.raw, dz, g.pathology_proj);
  }

  dgenomic += attention_pool_backward(p.aggregator_g, tape.aggregator_g, dh_g, g.aggregator_g);
  for (std::size_t j = 0; j < tape.encoders.size(); ++j) {
    const auto& c = tape.encoders[j];
    const auto& net = p.genomic_encoders[j];
    auto& gnet = g.genomic_encoders[j];
    Matrix dz2 = dgenomic.row(static_cast<Index>(j));
    for (Index k = 0; k < dz2.cols(); ++k) dz2(0, k) *= selu_grad(c.z2(0, k));
    Matrix dz1 = linear_backward(net.second, c.a1, dz2, gnet.second);
    for (Index k = 0; k < dz1.cols(); ++k) dz1(0, k) *= selu_grad(c.z1(0, k));
    linear_backward(net.first, c.x, dz1, gnet.first);
  }
  return g;
}

struct CasePrediction {
  Vector survival;  // batch-size weighted mean of per-batch survival curves
  double risk = 0.0;
  std::vector<Vector> batch_survival;
};

// Averages S(t) across micro-batches (weights m_k / M_p), then scores risk.
inline CasePrediction predict_from_plans(const ModelParams& params, const CaseData& cs, const CasePlans& plans,
                                         const OtSettings& settings) {
  CaseData tmp = cs;
  tmp.record.bin = 0;
  tmp.record.censor = 1;
  const Tape tape = forward_case(params, tmp, plans, settings);
  CasePrediction out;
  out.survival = Vector::Zero(params.config.bins);
  for (const auto& b : tape.batches) {
    out.survival += b.weight * b.curve.survival;
    out.batch_survival.push_back(b.curve.survival);
  }
  out.risk = survival::risk_score(out.survival);
  return out;
}

inline CasePrediction predict_case(const ModelParams& params, const CaseData& cs, int m, const OtSettings& settings,
                                   std::uint64_t seed) {
  return predict_from_plans(params, cs, prepare_case(params, cs, m, settings, seed), settings);
}

// ---- optimizer -----------------------------------------------------------------

struct AdamOptions {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 1e-5;
};

struct AdamState {
  ModelParams first_moment;
  ModelParams second_moment;
  long step = 0;

  static AdamState for_params(const ModelParams& p) { return {p.zeros_like(), p.zeros_like(), 0}; }
};

// Adam with L2 weight decay folded into the gradient.
inline void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state, const AdamOptions& opt) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.step));
  std::vector<Matrix*> ps, ms, vs;
  std::vector<const Matrix*> gs;
  params.for_each([&](const std::string&, Matrix& t) { ps.push_back(&t); });
  state.first_moment.for_each([&](const std::string&, Matrix& t) { ms.push_back(&t); });
  state.second_moment.for_each([&](const std::string&, Matrix& t) { vs.push_back(&t); });
  grads.for_each([&](const std::string&, const Matrix& t) { gs.push_back(&t); });
  if (gs.size() != ps.size() || ms.size() != ps.size()) throw ShapeError("adam_step: parameter/gradient structure mismatch");
  for (std::size_t i = 0; i < ps.size(); ++i) {
    Matrix& w = *ps[i];
    if (gs[i]->rows() != w.rows() || gs[i]->cols() != w.cols()) throw ShapeError("adam_step: gradient shape mismatch");
    const Matrix g = *gs[i] + opt.weight_decay * w;
    *ms[i] = opt.beta1 * *ms[i] + (1.0 - opt.beta1) * g;
    *vs[i] = opt.beta2 * *vs[i] + (1.0 - opt.beta2) * g.cwiseProduct(g);
    for (Index k = 0; k < w.size(); ++k) {
      const double mhat = ms[i]->data()[k] / bc1;
      const double vhat = vs[i]->data()[k] / bc2;
      w.data()[k] -= opt.lr * mhat / (std::sqrt(vhat) + opt.eps);
    }
  }
  ++params.version;
}

inline void add_scaled(ModelParams& acc, const ModelParams& g, double scale) {
  std::vector<const Matrix*> src;
  g.for_each([&](const std::string&, const Matrix& t) { src.push_back(&t); });
  std::size_t i = 0;
  acc.for_each([&](const std::string&, Matrix& t) { t += scale * *src[i++]; });
}

inline bool all_finite(const ModelParams& p) {
  bool ok = true;
  p.for_each([&](const std::string&, const Matrix& t) { ok = ok && t.allFinite(); });
  return ok;
}

// ---- checkpoints -----------------------------------------------------------------
// checkpoint.json lists shapes, seed and step; each tensor is a "DBAG" blob:
// the FBAG layout with float64 payload, so reloads are bit-exact.

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
  return {{"raw_dim", c.raw_dim}, {"dim", c.dim}, {"heads", c.heads}, {"bins", c.bins}, {"genomic_dims", c.genomic_dims}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.raw_dim = j.at("raw_dim").get<int>();
  c.dim = j.at("dim").get<int>();
  c.heads = j.at("heads").get<int>();
  c.bins = j.at("bins").get<int>();
  c.genomic_dims = j.at("genomic_dims").get<std::vector<int>>();
  return c;
}

inline void save_checkpoint(const ModelParams& params, const std::filesystem::path& dir, std::uint64_t seed, long step) {
  nlohmann::json j;
  j["model"] = model_config_to_json(params.config);
  j["seed"] = seed;
  j["step"] = step;
  j["parameter_count"] = params.parameter_count();
  j["tensors"] = nlohmann::json::array();
  params.for_each([&](const std::string& name, const Matrix& t) {
    const std::string file = "tensors/" + name + ".dbag";
    detail::write_file(dir / file, detail::encode_matrix<double>(t, "DBAG"));
    j["tensors"].push_back({{"name", name}, {"file", file}, {"shape", {t.rows(), t.cols()}}});
  });
  detail::write_file(dir / "checkpoint.json", j.dump(2) + "\n");
}

struct Checkpoint {
  ModelParams params;
  std::uint64_t seed = 0;
  long step = 0;
};

inline Checkpoint load_checkpoint(const std::filesystem::path& dir) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_file(dir / "checkpoint.json"));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("checkpoint.json: " + std::string(e.what()));
  }
  Checkpoint ck;
  ck.params = init_params(model_config_from_json(j.at("model")), 0);
  ck.seed = j.at("seed").get<std::uint64_t>();
  ck.step = j.at("step").get<long>();
  std::map<std::string, std::pair<std::string, std::vector<Index>>> entries;
  for (const auto& t : j.at("tensors"))
    entries[t.at("name").get<std::string>()] = {t.at("file").get<std::string>(), t.at("shape").get<std::vector<Index>>()};
  ck.params.for_each([&](const std::string& name, Matrix& t) {
    const auto it = entries.find(name);
    if (it == entries.end()) throw FormatError("checkpoint is missing tensor '" + name + "'");
    const auto& file = it->second.first;
    Matrix loaded = detail::decode_matrix<double>(detail::read_file(dir / file), "DBAG", file);
    if (loaded.rows() != t.rows() || loaded.cols() != t.cols())
      throw FormatError("checkpoint tensor '" + name + "' has shape " + shape_str(loaded.rows(), loaded.cols()));
    t = std::move(loaded);
  });
  return ck;
}

}  // namespace motcat::nn
