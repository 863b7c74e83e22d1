#include "motcat/experiment.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <set>

using namespace motcat;
using namespace motcat::exp;
using testing_support::ScratchDir;

namespace {

struct SmallData {
  ScratchDir dir{"exp"};
  Dataset ds;

  SmallData() {
    SyntheticSpec spec;
    spec.n_cases = 20;
    spec.n_pathology = 24;
    spec.n_genomic = 3;
    spec.feature_dim = 6;
    spec.seed = 5;
    const auto syn = generate_synthetic_dataset(spec, dir.path());
    ds = load_dataset(syn.manifest_path, 4);
  }
};

ExperimentConfig tiny_config() {
  ExperimentConfig c;
  c.folds = 2;
  c.epochs = 1;
  c.micro_batch = 10;
  c.grad_accum_steps = 4;
  c.model_dim = 8;
  c.heads = 2;
  c.ot_max_iters = 200;
  return c;
}

}  // namespace

TEST(Config, JsonRoundTrip) {
  ExperimentConfig c;
  c.seed = 99;
  c.folds = 3;
  c.epsilon = 0.2;
  c.tau = 0.0;
  c.attention_mode = CoattentionMode::dense;
  c.cost_metric = ot::Metric::cosine_distance;
  c.normalize_mass = true;
  const auto back = config_from_json(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
}

TEST(Config, UnknownKeysRejectedWithPath) {
  try {
    config_from_json(json{{"ot", {{"epsilonn", 0.1}}}});
    FAIL() << "expected FormatError";
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("ot.epsilonn"), std::string::npos);
  }
  EXPECT_THROW(config_from_json(json{{"bogus", 1}}), FormatError);
  EXPECT_THROW(config_from_json(json{{"cv", {{"folds", "five"}}}}), FormatError);
}

TEST(Config, PartialOverridesKeepBase) {
  ExperimentConfig base;
  base.epochs = 7;
  const auto c = config_from_json(json{{"ot", {{"tau", 1.5}}}}, base);
  EXPECT_EQ(c.epochs, 7);
  EXPECT_EQ(c.tau, 1.5);
}

TEST(Config, InvalidValuesAreParameterErrors) {
  EXPECT_THROW(config_from_json(json{{"cv", {{"folds", 1}}}}), ParameterError);
  EXPECT_THROW(config_from_json(json{{"ot", {{"epsilon", 0.0}}}}), ParameterError);
  EXPECT_THROW(config_from_json(json{{"model", {{"dim", 10}, {"heads", 4}}}}), ParameterError);
}

TEST(Config, FileRoundTrip) {
  ScratchDir dir("cfg");
  ExperimentConfig c;
  c.lr = 3e-4;
  save_config(c, dir / "c.json");
  EXPECT_EQ(load_config(dir / "c.json").lr, 3e-4);
  EXPECT_THROW(load_config(dir / "missing.json"), IoError);
}

TEST(Folds, PartitionIsDisjointAndBalanced) {
  const auto folds = make_folds(23, 5, 7);
  std::set<std::size_t> all;
  for (const auto& f : folds) {
    EXPECT_GE(f.size(), 4u);
    EXPECT_LE(f.size(), 5u);
    for (auto i : f) EXPECT_TRUE(all.insert(i).second);
  }
  EXPECT_EQ(all.size(), 23u);
  EXPECT_EQ(make_folds(23, 5, 7), folds);
  EXPECT_NE(make_folds(23, 5, 8), folds);
  EXPECT_THROW(make_folds(5, 5, 1), DataError);
}

TEST(CrossValidation, DeterministicAndComplete) {
  SmallData d;
  const auto cfg = tiny_config();
  const auto a = run_cross_validation(d.ds, cfg);
  const auto b = run_cross_validation(d.ds, cfg);
  ASSERT_EQ(a.folds.size(), 2u);
  std::size_t n_val = 0;
  for (std::size_t k = 0; k < a.folds.size(); ++k) {
    EXPECT_EQ(a.folds[k].val_risks, b.folds[k].val_risks);
    n_val += a.folds[k].val_risks.size();
    EXPECT_GE(a.folds[k].c_index, 0.0);
    EXPECT_LE(a.folds[k].c_index, 1.0);
  }
  EXPECT_EQ(n_val, d.ds.cases.size());
  EXPECT_EQ(a.c_index_mean, b.c_index_mean);
}

TEST(CrossValidation, UntrainedModelScoresAllCasesEqually) {
  SmallData d;
  auto cfg = tiny_config();
  cfg.epochs = 0;
  const auto rep = run_cross_validation(d.ds, cfg);
  for (const auto& f : rep.folds) {
    EXPECT_DOUBLE_EQ(f.c_index, 0.5);
    for (double r : f.val_risks) EXPECT_EQ(r, f.val_risks.front());
  }
}

TEST(CrossValidation, WritesReportAndCheckpoints) {
  SmallData d;
  ScratchDir out("cv_out");
  const auto rep = run_cross_validation(d.ds, tiny_config(), out.path());
  write_report(rep, d.ds, out.path());
  EXPECT_TRUE(std::filesystem::exists(out / "metrics.json"));
  EXPECT_TRUE(std::filesystem::exists(out / "fold_0/final/checkpoint.json"));
  const auto csv = detail::read_file(out / "risks.csv");
  EXPECT_EQ(csv.rfind("case_id,fold,risk,time_months,censor\n", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 21);
  const auto j = json::parse(detail::read_file(out / "metrics.json"));
  EXPECT_TRUE(j.contains("c_index_mean"));
  EXPECT_EQ(j.at("folds").size(), 2u);
}

TEST(Ablation, OneRowPerFoldPerCell) {
  SmallData d;
  const auto rows = run_ablation(d.ds, tiny_config(), {8, 24}, {CoattentionMode::umbot, CoattentionMode::dense});
  EXPECT_EQ(rows.size(), 2u * 2u * 2u);
  const auto csv = ablation_csv(rows);
  EXPECT_EQ(csv.rfind("mode,m,fold,c_index\n", 0), 0u);
  const auto summary = ablation_summary(rows);
  EXPECT_EQ(summary.size(), 4u);
}

TEST(KmReport, SplitsAndTests) {
  std::vector<SurvivalRecord> recs;
  std::vector<double> risks;
  for (int i = 0; i < 20; ++i) {
    recs.push_back({static_cast<double>(i + 1), i % 4 == 3 ? 1 : 0, 0});
    risks.push_back(-static_cast<double>(i));
  }
  const auto r = km_report(risks, recs);
  EXPECT_EQ(r.split.low.size(), 10u);
  EXPECT_LT(r.logrank.p_value, 0.05);
  const auto csv = km_csv(r);
  EXPECT_EQ(csv.rfind("group,time,at_risk,events,survival,greenwood_variance\n", 0), 0u);
  EXPECT_TRUE(km_json(r).contains("p_value") || km_json(r).contains("logrank"));
}

TEST(Bench, ProducesPositiveTimings) {
  const auto row = bench_microbatched(512, 128, 8, 1, 1);
  EXPECT_EQ(row.n_instances, 512);
  EXPECT_GT(row.seconds, 0.0);
  EXPECT_GT(row.instances_per_second, 0.0);
  EXPECT_EQ(bench_csv({row}).rfind("M,seconds,instances_per_second\n", 0), 0u);
  EXPECT_THROW(bench_microbatched(0, 1, 1, 1), ParameterError);
}
