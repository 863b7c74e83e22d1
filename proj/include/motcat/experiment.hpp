#pragma once

// Experiment harness: configuration, k-fold cross-validation training,
// ablation sweeps, Kaplan-Meier/log-rank reports and solver benchmarks.

#include "motcat/bagdata.hpp"
#include "motcat/core.hpp"
#include "motcat/microbatch.hpp"
#include "motcat/neural.hpp"
#include "motcat/ot.hpp"
#include "motcat/survival.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace motcat::exp {

namespace fs = std::filesystem;
using nlohmann::json;

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int folds = 5;
  int micro_batch = 256;
  double epsilon = 0.05;
  double tau = 0.5;
  int epochs = 20;
  double lr = 2e-4;
  double weight_decay = 1e-5;
  int grad_accum_steps = 32;
  int bins = 4;
  CoattentionMode attention_mode = CoattentionMode::umbot;
  ot::Metric cost_metric = ot::Metric::l2;
  bool normalize_cost = true;
  bool normalize_mass = false;
  int ot_max_iters = 1000;
  double ot_tolerance = 1e-6;
  int model_dim = 16;
  int heads = 4;

  void validate() const {
    if (folds < 2) throw ParameterError("folds must be >= 2");
    if (micro_batch < 1) throw ParameterError("micro-batch size must be >= 1");
    if (!(epsilon > 0.0)) throw ParameterError("epsilon must be > 0");
    if (!(tau >= 0.0)) throw ParameterError("tau must be >= 0");
    if (epochs < 0) throw ParameterError("epochs must be >= 0");
    if (!(lr > 0.0) || !(weight_decay >= 0.0)) throw ParameterError("lr must be > 0 and weight_decay >= 0");
    if (grad_accum_steps < 1) throw ParameterError("grad_accum_steps must be >= 1");
    if (bins < 2) throw ParameterError("bins must be >= 2");
    if (ot_max_iters < 1 || !(ot_tolerance > 0.0)) throw ParameterError("invalid transport solver limits");
    if (model_dim < 1 || heads < 1 || model_dim % heads != 0) throw ParameterError("model.dim must be divisible by model.heads");
  }

  OtSettings ot_settings() const {
    OtSettings s;
    s.mode = attention_mode;
    s.metric = cost_metric;
    s.normalize_cost = normalize_cost;
    s.epsilon = epsilon;
    s.tau = tau;
    s.max_iters = ot_max_iters;
    s.tolerance = ot_tolerance;
    s.normalize_mass = normalize_mass;
    return s;
  }

  nn::AdamOptions adam() const {
    nn::AdamOptions o;
    o.lr = lr;
    o.weight_decay = weight_decay;
    return o;
  }
};

inline json config_to_json(const ExperimentConfig& c) {
  return {{"seed", c.seed},
          {"cv", {{"folds", c.folds}}},
          {"train", {{"epochs", c.epochs}, {"lr", c.lr}, {"weight_decay", c.weight_decay}, {"grad_accum_steps", c.grad_accum_steps}}},
          {"microbatch", {{"size", c.micro_batch}}},
          {"ot",
           {{"epsilon", c.epsilon},
            {"tau", c.tau},
            {"cost_metric", ot::to_string(c.cost_metric)},
            {"normalize_cost", c.normalize_cost},
            {"normalize_mass", c.normalize_mass},
            {"max_iters", c.ot_max_iters},
            {"tolerance", c.ot_tolerance}}},
          {"model", {{"dim", c.model_dim}, {"heads", c.heads}, {"bins", c.bins}, {"attention_mode", to_string(c.attention_mode)}}}};
}

// Applies the keys present in `j` on top of `base`. Unknown keys are rejected
// with their dotted path.
inline ExperimentConfig config_from_json(const json& j, ExperimentConfig base = {}) {
  if (!j.is_object()) throw FormatError("config: top level must be an object");
  auto section = [&](const std::string& name, const std::set<std::string>& keys, auto&& apply) {
    if (!j.contains(name)) return;
    const auto& s = j.at(name);
    if (!s.is_object()) throw FormatError("config: '" + name + "' must be an object");
    for (const auto& [k, v] : s.items()) {
      if (!keys.count(k)) throw FormatError("config: unknown key '" + name + "." + k + "'");
      try {
        apply(k, v);
      } catch (const json::exception& e) {
        throw FormatError("config: bad value for '" + name + "." + k + "': " + e.what());
      }
    }
  };
  for (const auto& [k, v] : j.items()) {
    static const std::set<std::string> top = {"seed", "cv", "train", "microbatch", "ot", "model"};
    if (!top.count(k)) throw FormatError("config: unknown key '" + k + "'");
  }
  ExperimentConfig c = base;
  if (j.contains("seed")) {
    try {
      c.seed = j.at("seed").get<std::uint64_t>();
    } catch (const json::exception& e) {
      throw FormatError(std::string("config: bad value for 'seed': ") + e.what());
    }
  }
  section("cv", {"folds"}, [&](const std::string&, const json& v) { c.folds = v.get<int>(); });
  section("train", {"epochs", "lr", "weight_decay", "grad_accum_steps"}, [&](const std::string& k, const json& v) {
    if (k == "epochs") c.epochs = v.get<int>();
    else if (k == "lr") c.lr = v.get<double>();
    else if (k == "weight_decay") c.weight_decay = v.get<double>();
    else c.grad_accum_steps = v.get<int>();
  });
  section("microbatch", {"size"}, [&](const std::string&, const json& v) { c.micro_batch = v.get<int>(); });
  section("ot", {"epsilon", "tau", "cost_metric", "normalize_cost", "normalize_mass", "max_iters", "tolerance"},
          [&](const std::string& k, const json& v) {
            if (k == "epsilon") c.epsilon = v.get<double>();
            else if (k == "tau") c.tau = v.get<double>();
            else if (k == "cost_metric") c.cost_metric = ot::metric_from_string(v.get<std::string>());
            else if (k == "normalize_cost") c.normalize_cost = v.get<bool>();
            else if (k == "normalize_mass") c.normalize_mass = v.get<bool>();
            else if (k == "max_iters") c.ot_max_iters = v.get<int>();
            else c.ot_tolerance = v.get<double>();
          });
  section("model", {"dim", "heads", "bins", "attention_mode"}, [&](const std::string& k, const json& v) {
    if (k == "dim") c.model_dim = v.get<int>();
    else if (k == "heads") c.heads = v.get<int>();
    else if (k == "bins") c.bins = v.get<int>();
    else c.attention_mode = coattention_mode_from_string(v.get<std::string>());
  });
  c.validate();
  return c;
}

inline ExperimentConfig load_config(const fs::path& path, ExperimentConfig base = {}) {
  json j;
  try {
    j = json::parse(detail::read_file(path));
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return config_from_json(j, base);
}

inline void save_config(const ExperimentConfig& c, const fs::path& path) {
  detail::write_file(path, config_to_json(c).dump(2) + "\n");
}

// ---- dataset preparation -------------------------------------------------------

struct Dataset {
  CaseManifest manifest;
  std::vector<CaseData> cases;
  std::vector<double> bin_edges;
};

inline Dataset load_dataset(const fs::path& manifest_path, int bins) {
  Dataset ds;
  ds.manifest = load_manifest(manifest_path);
  ds.cases = load_cases(ds.manifest, manifest_path.parent_path());
  std::vector<SurvivalRecord> records;
  for (const auto& c : ds.cases) records.push_back(c.record);
  auto disc = discretize_times(std::move(records), bins);
  if (disc.degenerate_edges) log_warning("time discretization produced duplicate bin edges");
  ds.bin_edges = disc.edges;
  for (std::size_t i = 0; i < ds.cases.size(); ++i) ds.cases[i].record = disc.records[i];
  return ds;
}

// Fold k gets the k-th contiguous slice of a seeded permutation; slice sizes
// differ by at most one.
inline std::vector<std::vector<std::size_t>> make_folds(std::size_t n, int folds, std::uint64_t seed) {
  if (n < static_cast<std::size_t>(folds) * 2) throw DataError("need at least 2 cases per fold");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, 0xF01D));
  rng.shuffle(order);
  std::vector<std::vector<std::size_t>> out(static_cast<std::size_t>(folds));
  for (int k = 0; k < folds; ++k) {
    const std::size_t lo = n * static_cast<std::size_t>(k) / static_cast<std::size_t>(folds);
    const std::size_t hi = n * static_cast<std::size_t>(k + 1) / static_cast<std::size_t>(folds);
    out[static_cast<std::size_t>(k)].assign(order.begin() + static_cast<std::ptrdiff_t>(lo), order.begin() + static_cast<std::ptrdiff_t>(hi));
    std::sort(out[static_cast<std::size_t>(k)].begin(), out[static_cast<std::size_t>(k)].end());
  }
  return out;
}

inline std::uint64_t fold_seed(std::uint64_t seed, int fold) { return mix_seed(seed, 0xF000 + static_cast<std::uint64_t>(fold)); }

// ---- training ------------------------------------------------------------------

struct FoldResult {
  int fold = 0;
  double c_index = 0.0;  // final epoch
  int best_epoch = -1;
  double best_c_index = 0.0;
  std::vector<std::string> val_case_ids;
  std::vector<double> val_risks;
  std::vector<double> train_loss;
  std::size_t n_train = 0;
  int non_converged_solves = 0;
};

struct CvReport {
  ExperimentConfig config;
  std::vector<FoldResult> folds;
  double c_index_mean = 0.0;
  double c_index_std = 0.0;
  survival::LogrankResult pooled_logrank;
  bool pooled_split_degenerate = false;
};

inline std::vector<double> predict_risks(const nn::ModelParams& params, const Dataset& ds,
                                         const std::vector<std::size_t>& idx, const ExperimentConfig& cfg,
                                         std::uint64_t fseed) {
  const auto settings = cfg.ot_settings();
  std::vector<double> risks;
  for (std::size_t i : idx)
    risks.push_back(nn::predict_case(params, ds.cases[i], cfg.micro_batch, settings,
                                     mix_seed(mix_seed(fseed, 0xE7A1), i)).risk);
  return risks;
}

inline std::vector<SurvivalRecord> records_of(const Dataset& ds, const std::vector<std::size_t>& idx) {
  std::vector<SurvivalRecord> r;
  for (std::size_t i : idx) r.push_back(ds.cases[i].record);
  return r;
}

inline double safe_c_index(const std::vector<double>& risks, const std::vector<SurvivalRecord>& recs) {
  try {
    return survival::c_index(risks, recs);
  } catch (const MetricError&) {
    return 0.5;
  }
}

inline nn::ModelConfig model_config(const Dataset& ds, const ExperimentConfig& cfg) {
  return nn::model_config_for(ds.manifest, cfg.model_dim, cfg.heads, cfg.bins);
}

// One fold of micro-batched training: per case, freeze couplings under the
// current parameters, run the differentiable pass, accumulate gradients over
// `grad_accum_steps` cases, then take an Adam step.
inline FoldResult train_fold(const Dataset& ds, const std::vector<std::size_t>& train_idx,
                             const std::vector<std::size_t>& val_idx, const ExperimentConfig& cfg, int fold,
                             const std::optional<fs::path>& out_dir = std::nullopt) {
  const std::uint64_t fseed = fold_seed(cfg.seed, fold);
  const auto settings = cfg.ot_settings();
  const auto opt = cfg.adam();
  nn::ModelParams params = nn::init_params(model_config(ds, cfg), fseed);
  nn::AdamState state = nn::AdamState::for_params(params);
  const auto val_records = records_of(ds, val_idx);

  FoldResult res;
  res.fold = fold;
  res.n_train = train_idx.size();
  for (std::size_t i : val_idx) res.val_case_ids.push_back(ds.cases[i].case_id);

  auto evaluate = [&](int epoch) {
    res.val_risks = predict_risks(params, ds, val_idx, cfg, fseed);
    res.c_index = safe_c_index(res.val_risks, val_records);
    if (res.best_epoch < 0 || res.c_index > res.best_c_index) {
      res.best_epoch = epoch;
      res.best_c_index = res.c_index;
      if (out_dir) nn::save_checkpoint(params, *out_dir / ("fold_" + std::to_string(fold)) / "best", fseed, state.step);
    }
  };

  if (cfg.epochs == 0) evaluate(0);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order = train_idx;
    Rng rng(mix_seed(fseed, 100 + static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);
    nn::ModelParams acc = params.zeros_like();
    int pending = 0;
    double epoch_loss = 0.0;
    for (std::size_t pos = 0; pos < order.size(); ++pos) {
      const std::size_t ci = order[pos];
      const auto& cs = ds.cases[ci];
      const std::uint64_t bseed = mix_seed(mix_seed(fseed, 1000 + static_cast<std::uint64_t>(epoch)), ci);
      const auto plans = nn::prepare_case(params, cs, cfg.micro_batch, settings, bseed);
      res.non_converged_solves += plans.non_converged;
      nn::Tape tape = nn::forward_case(params, cs, plans, settings);
      if (!std::isfinite(tape.loss)) {
        if (out_dir) {
          json diag = {{"fold", fold}, {"epoch", epoch}, {"case_id", cs.case_id}, {"loss", std::to_string(tape.loss)},
                       {"params_finite", nn::all_finite(params)}};
          detail::write_file(*out_dir / ("fold_" + std::to_string(fold)) / "diagnostic.json", diag.dump(2) + "\n");
        }
        throw NumericError("non-finite loss in fold " + std::to_string(fold) + ", epoch " + std::to_string(epoch) +
                           ", case '" + cs.case_id + "'");
      }
      epoch_loss += tape.loss;
      const nn::ModelParams g = nn::backward(tape);
      nn::add_scaled(acc, g, 1.0 / cfg.grad_accum_steps);
      ++pending;
      if (pending == cfg.grad_accum_steps || pos + 1 == order.size()) {
        nn::adam_step(params, acc, state, opt);
        acc = params.zeros_like();
        pending = 0;
      }
    }
    res.train_loss.push_back(order.empty() ? 0.0 : epoch_loss / static_cast<double>(order.size()));
    evaluate(epoch + 1);
  }
  if (out_dir) nn::save_checkpoint(params, *out_dir / ("fold_" + std::to_string(fold)) / "final", fseed, state.step);
  return res;
}

inline std::pair<double, double> mean_std(const std::vector<double>& v) {
  if (v.empty()) return {0.0, 0.0};
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

inline CvReport run_cross_validation(const Dataset& ds, const ExperimentConfig& cfg,
                                     const std::optional<fs::path>& out_dir = std::nullopt) {
  cfg.validate();
  const auto folds = make_folds(ds.cases.size(), cfg.folds, cfg.seed);
  CvReport rep;
  rep.config = cfg;
  std::vector<double> cis;
  std::vector<double> pooled_risks;
  std::vector<SurvivalRecord> pooled_records;
  for (int k = 0; k < cfg.folds; ++k) {
    const auto& val = folds[static_cast<std::size_t>(k)];
    std::vector<std::size_t> train;
    for (int j = 0; j < cfg.folds; ++j)
      if (j != k) train.insert(train.end(), folds[static_cast<std::size_t>(j)].begin(), folds[static_cast<std::size_t>(j)].end());
    std::sort(train.begin(), train.end());
    auto fr = train_fold(ds, train, val, cfg, k, out_dir);
    cis.push_back(fr.c_index);
    pooled_risks.insert(pooled_risks.end(), fr.val_risks.begin(), fr.val_risks.end());
    const auto recs = records_of(ds, val);
    pooled_records.insert(pooled_records.end(), recs.begin(), recs.end());
    rep.folds.push_back(std::move(fr));
  }
  std::tie(rep.c_index_mean, rep.c_index_std) = mean_std(cis);
  const auto split = survival::median_split(pooled_risks);
  rep.pooled_split_degenerate = split.degenerate;
  std::vector<SurvivalRecord> lo, hi;
  for (auto i : split.low) lo.push_back(pooled_records[i]);
  for (auto i : split.high) hi.push_back(pooled_records[i]);
  rep.pooled_logrank = survival::logrank(lo, hi);
  return rep;
}

inline std::string format_mean_std(double mean, double sd) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f \xC2\xB1 %.3f", mean, sd);
  return buf;
}

inline json report_to_json(const CvReport& r) {
  json j;
  j["config"] = config_to_json(r.config);
  j["attention_mode"] = to_string(r.config.attention_mode);
  j["c_index_mean"] = r.c_index_mean;
  j["c_index_std"] = r.c_index_std;
  j["c_index"] = format_mean_std(r.c_index_mean, r.c_index_std);
  j["pooled_logrank"] = {{"statistic", r.pooled_logrank.statistic},
                         {"p_value", r.pooled_logrank.p_value},
                         {"group_sizes", {r.pooled_logrank.size_a, r.pooled_logrank.size_b}},
                         {"degenerate_split", r.pooled_split_degenerate}};
  j["folds"] = json::array();
  for (const auto& f : r.folds)
    j["folds"].push_back({{"fold", f.fold},
                          {"c_index", f.c_index},
                          {"best_epoch", f.best_epoch},
                          {"best_c_index", f.best_c_index},
                          {"n_train", f.n_train},
                          {"n_val", f.val_case_ids.size()},
                          {"non_converged_solves", f.non_converged_solves},
                          {"train_loss", f.train_loss}});
  return j;
}

inline std::string risks_csv(const CvReport& r, const Dataset& ds) {
  std::map<std::string, const CaseData*> by_id;
  for (const auto& c : ds.cases) by_id[c.case_id] = &c;
  std::string out = "case_id,fold,risk,time_months,censor\n";
  for (const auto& f : r.folds)
    for (std::size_t k = 0; k < f.val_case_ids.size(); ++k) {
      const auto* c = by_id.at(f.val_case_ids[k]);
      char buf[160];
      std::snprintf(buf, sizeof buf, "%s,%d,%.17g,%.17g,%d\n", f.val_case_ids[k].c_str(), f.fold, f.val_risks[k],
                    c->record.time_months, c->record.censor);
      out += buf;
    }
  return out;
}

inline void write_report(const CvReport& r, const Dataset& ds, const fs::path& out_dir) {
  detail::write_file(out_dir / "metrics.json", report_to_json(r).dump(2) + "\n");
  detail::write_file(out_dir / "risks.csv", risks_csv(r, ds));
}

// ---- ablation --------------------------------------------------------------------

struct AblationRow {
  CoattentionMode mode;
  int m = 0;
  int fold = 0;
  double c_index = 0.0;
  std::string error;  // empty on success
};

inline std::vector<AblationRow> run_ablation(const Dataset& ds, const ExperimentConfig& base, const std::vector<int>& m_values,
                                             const std::vector<CoattentionMode>& modes) {
  std::vector<AblationRow> rows;
  for (auto mode : modes)
    for (int m : m_values) {
      ExperimentConfig cfg = base;
      cfg.attention_mode = mode;
      cfg.micro_batch = m;
      try {
        const auto rep = run_cross_validation(ds, cfg);
        for (const auto& f : rep.folds) rows.push_back({mode, m, f.fold, f.c_index, {}});
      } catch (const std::exception& e) {
        log_warning(std::string("ablation cell ") + to_string(mode) + "/m=" + std::to_string(m) + " failed: " + e.what());
        for (int k = 0; k < cfg.folds; ++k) rows.push_back({mode, m, k, std::nan(""), e.what()});
      }
    }
  return rows;
}

inline std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::string out = "mode,m,fold,c_index\n";
  for (const auto& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%.17g\n", to_string(r.mode), r.m, r.fold, r.c_index);
    out += buf;
  }
  return out;
}

// Component-ablation table: one mean +/- std per (mode, m).
inline json ablation_summary(const std::vector<AblationRow>& rows) {
  std::map<std::pair<std::string, int>, std::vector<double>> cells;
  std::map<std::pair<std::string, int>, std::vector<std::string>> errors;
  for (const auto& r : rows) {
    const auto key = std::make_pair(std::string(to_string(r.mode)), r.m);
    if (r.error.empty()) cells[key].push_back(r.c_index);
    else errors[key].push_back(r.error);
  }
  json j = json::array();
  std::set<std::pair<std::string, int>> keys;
  for (const auto& [k, _] : cells) keys.insert(k);
  for (const auto& [k, _] : errors) keys.insert(k);
  for (const auto& k : keys) {
    const auto [mean, sd] = mean_std(cells[k]);
    json row = {{"mode", k.first}, {"m", k.second}, {"c_index_mean", mean}, {"c_index_std", sd},
                {"c_index", format_mean_std(mean, sd)}, {"folds", cells[k].size()}};
    if (errors.count(k)) row["errors"] = errors[k];
    j.push_back(row);
  }
  return j;
}

// ---- Kaplan-Meier report ------------------------------------------------------------

struct KmReport {
  survival::RiskSplit split;
  survival::KMCurve low, high;
  survival::LogrankResult logrank;
};

inline KmReport km_report(const std::vector<double>& risks, const std::vector<SurvivalRecord>& records) {
  if (risks.size() != records.size()) throw ShapeError("km_report: risks and records differ in length");
  KmReport r;
  r.split = survival::median_split(risks);
  if (r.split.degenerate) log_warning("all risks tied at the median; falling back to an index split");
  std::vector<SurvivalRecord> lo, hi;
  for (auto i : r.split.low) lo.push_back(records[i]);
  for (auto i : r.split.high) hi.push_back(records[i]);
  r.low = survival::km_estimate(lo);
  r.high = survival::km_estimate(hi);
  r.logrank = survival::logrank(lo, hi);
  return r;
}

inline std::string km_csv(const KmReport& r) {
  std::string out = "group,time,at_risk,events,survival,greenwood_variance\n";
  auto emit = [&](const char* g, const survival::KMCurve& km) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%s,0,%d,0,1,0\n", g, km.at_risk.empty() ? 0 : km.at_risk.front());
    out += buf;
    for (std::size_t k = 0; k < km.event_times.size(); ++k) {
      std::snprintf(buf, sizeof buf, "%s,%.17g,%d,%d,%.17g,%.17g\n", g, km.event_times[k], km.at_risk[k], km.events[k],
                    km.survival[k], km.greenwood_variance[k]);
      out += buf;
    }
  };
  emit("low", r.low);
  emit("high", r.high);
  return out;
}

inline json km_json(const KmReport& r) {
  return {{"statistic", r.logrank.statistic},
          {"p_value", r.logrank.p_value},
          {"group_sizes", {r.logrank.size_a, r.logrank.size_b}},
          {"threshold", r.split.threshold},
          {"degenerate_split", r.split.degenerate}};
}

// ---- benchmark ----------------------------------------------------------------------

struct BenchRow {
  int n_instances = 0;
  double seconds = 0.0;
  double instances_per_second = 0.0;
};

// Wall-clock of micro-batched unbalanced solves (cost build + scaling) over a
// random bag of M instances against a 6-instance genomic bag. Best of
// `repeats` runs.
inline BenchRow bench_microbatched(int n_instances, int m, int d, std::uint64_t seed, int repeats = 3,
                                   int n_genomic = 6) {
  if (n_instances < 1 || m < 1 || d < 1) throw ParameterError("bench: sizes must be positive");
  Rng rng(mix_seed(seed, static_cast<std::uint64_t>(n_instances)));
  InstanceBag path, gen;
  path.features.resize(n_instances, d);
  gen.features.resize(n_genomic, d);
  for (Index i = 0; i < path.features.size(); ++i) path.features.data()[i] = rng.normal();
  for (Index i = 0; i < gen.features.size(); ++i) gen.features.data()[i] = rng.normal();
  OtSettings s;
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto sel = run_case_microbatched(path, gen, std::min(m, n_instances), s, mix_seed(seed, 77));
    const auto t1 = std::chrono::steady_clock::now();
    if (sel.selected.empty()) throw SolverError("bench: no batches");
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return {n_instances, best, static_cast<double>(n_instances) / best};
}

inline std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "M,seconds,instances_per_second\n";
  for (const auto& r : rows) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%d,%.9g,%.9g\n", r.n_instances, r.seconds, r.instances_per_second);
    out += buf;
  }
  return out;
}

}  // namespace motcat::exp
