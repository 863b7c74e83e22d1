// motcat: synthetic data, transport solves, cross-validated training,
// ablation sweeps, Kaplan-Meier reports and solver benchmarks.

#include "motcat/bagdata.hpp"
#include "motcat/cli.hpp"
#include "motcat/experiment.hpp"
#include "motcat/ot.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace motcat;
namespace fs = std::filesystem;
using nlohmann::json;

// Flag values that override the config file when given.
struct TrainOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> folds, micro_batch, epochs, grad_accum_steps, bins, max_iters;
  std::optional<double> epsilon, tau, lr, weight_decay;
  std::optional<std::string> mode, metric;
  std::optional<bool> normalize_cost, normalize_mass;
};

void add_train_flags(CLI::App* cmd, std::string& config_path, TrainOverrides& o) {
  cmd->add_option("--config", config_path, "JSON config file; flags given here override it");
  cmd->add_option("--seed", o.seed, "Global seed");
  cmd->add_option("--folds", o.folds, "Cross-validation folds");
  cmd->add_option("--micro-batch", o.micro_batch, "Micro-batch size m (capped at the bag size)");
  cmd->add_option("--epochs", o.epochs, "Training epochs");
  cmd->add_option("--grad-accum", o.grad_accum_steps, "Gradient accumulation steps");
  cmd->add_option("--bins", o.bins, "Survival time bins");
  cmd->add_option("--max-iters", o.max_iters, "Transport solver iteration cap");
  cmd->add_option("--epsilon", o.epsilon, "Entropic regularization");
  cmd->add_option("--tau", o.tau, "Marginal relaxation");
  cmd->add_option("--lr", o.lr, "Adam learning rate");
  cmd->add_option("--weight-decay", o.weight_decay, "L2 weight decay");
  cmd->add_option("--mode", o.mode, "Co-attention: umbot, emd or dense");
  cmd->add_option("--metric", o.metric, "Cost metric: l2, squared_l2 or cosine_distance");
  cmd->add_option("--normalize-cost", o.normalize_cost, "Divide costs by their max entry (true/false)");
  cmd->add_option("--normalize-mass", o.normalize_mass, "Rescale selected rows by transported mass (true/false)");
}

exp::ExperimentConfig build_config(const std::string& config_path, const TrainOverrides& o) {
  exp::ExperimentConfig c = config_path.empty() ? exp::ExperimentConfig{} : exp::load_config(config_path);
  if (o.seed) c.seed = *o.seed;
  if (o.folds) c.folds = *o.folds;
  if (o.micro_batch) c.micro_batch = *o.micro_batch;
  if (o.epochs) c.epochs = *o.epochs;
  if (o.grad_accum_steps) c.grad_accum_steps = *o.grad_accum_steps;
  if (o.bins) c.bins = *o.bins;
  if (o.max_iters) c.ot_max_iters = *o.max_iters;
  if (o.epsilon) c.epsilon = *o.epsilon;
  if (o.tau) c.tau = *o.tau;
  if (o.lr) c.lr = *o.lr;
  if (o.weight_decay) c.weight_decay = *o.weight_decay;
  if (o.mode) c.attention_mode = coattention_mode_from_string(*o.mode);
  if (o.metric) c.cost_metric = ot::metric_from_string(*o.metric);
  if (o.normalize_cost) c.normalize_cost = *o.normalize_cost;
  if (o.normalize_mass) c.normalize_mass = *o.normalize_mass;
  c.validate();
  return c;
}

void write_text(const fs::path& path, const std::string& text) { detail::write_file(path, text); }

struct SynthArgs {
  std::string out = "synthetic";
  SyntheticSpec spec;
};

int cmd_gen_synth(const SynthArgs& a) {
  const fs::path out = cli::resolve_output(a.out);
  const auto ds = generate_synthetic_dataset(a.spec, out);
  std::cout << ds.manifest_path.string() << '\n';
  return cli::exit_ok;
}

struct SolveArgs {
  std::string source, target, solver = "uot", metric = "l2", out = "plan";
  double epsilon = 0.05, tau = 0.5, tolerance = 1e-6;
  int max_iters = 1000;
  bool normalize_cost = false;
};

int cmd_solve(const SolveArgs& a) {
  const auto src = load_bag(a.source, BagFormat::csv, Modality::pathology);
  const auto tgt = load_bag(a.target, BagFormat::csv, Modality::genomic);
  auto cost = ot::build_cost(src, tgt, ot::metric_from_string(a.metric));
  if (a.normalize_cost) cost = ot::normalized(std::move(cost));
  const auto marg = ot::Marginals::uniform(src.size(), tgt.size());
  ot::TransportPlan plan;
  if (a.solver == "emd") plan = ot::solve_exact_emd(cost, marg);
  else if (a.solver == "sinkhorn") plan = ot::sinkhorn(cost, marg, a.epsilon, a.max_iters, a.tolerance);
  else if (a.solver == "uot") plan = ot::unbalanced_sinkhorn(cost, marg, a.epsilon, a.tau, a.max_iters, a.tolerance);
  else throw ParameterError("unknown solver '" + a.solver + "' (expected emd, sinkhorn or uot)");
  const fs::path prefix = cli::resolve_output(a.out);
  write_text(prefix.string() + "_coupling.csv", matrix_to_csv(plan.coupling, "t"));
  json j = ot::plan_to_json(plan);
  j["metric"] = a.metric;
  j["normalize_cost"] = a.normalize_cost;
  write_text(prefix.string() + ".json", j.dump(2) + "\n");
  if (!plan.converged) log_warning("solver did not converge in " + std::to_string(plan.iterations) + " iterations");
  std::cout << j.dump() << '\n';
  return cli::exit_ok;
}

struct TrainArgs {
  std::string manifest, config, out = "run";
  TrainOverrides o;
};

int cmd_train(const TrainArgs& a) {
  const auto cfg = build_config(a.config, a.o);
  const auto ds = exp::load_dataset(a.manifest, cfg.bins);
  const fs::path out = cli::resolve_output(a.out);
  exp::save_config(cfg, out / "config.json");
  const auto rep = exp::run_cross_validation(ds, cfg, out);
  exp::write_report(rep, ds, out);
  std::cout << "c_index " << exp::format_mean_std(rep.c_index_mean, rep.c_index_std) << "  logrank_p "
            << rep.pooled_logrank.p_value << "\n"
            << (out / "metrics.json").string() << '\n';
  return cli::exit_ok;
}

struct AblateArgs {
  std::string manifest, config, out = "ablation";
  std::vector<int> m_values = {64, 128, 256};
  std::vector<std::string> modes = {"umbot", "emd", "dense"};
  TrainOverrides o;
};

int cmd_ablate(const AblateArgs& a) {
  const auto cfg = build_config(a.config, a.o);
  std::vector<CoattentionMode> modes;
  for (const auto& m : a.modes) modes.push_back(coattention_mode_from_string(m));
  const auto ds = exp::load_dataset(a.manifest, cfg.bins);
  const auto rows = exp::run_ablation(ds, cfg, a.m_values, modes);
  const fs::path out = cli::resolve_output(a.out);
  write_text(out / "ablation.csv", exp::ablation_csv(rows));
  write_text(out / "ablation_summary.json", exp::ablation_summary(rows).dump(2) + "\n");
  std::cout << (out / "ablation.csv").string() << '\n';
  return cli::exit_ok;
}

struct KmArgs {
  std::string risks, manifest, out = "km";
};

int cmd_km(const KmArgs& a) {
  const auto manifest = load_manifest(a.manifest);
  const auto risks = cli::align_risks(cli::read_risks(a.risks), manifest);
  std::vector<SurvivalRecord> records;
  for (const auto& c : manifest.cases) records.push_back({c.time_months, c.censor, -1});
  const auto rep = exp::km_report(risks, records);
  const fs::path prefix = cli::resolve_output(a.out);
  write_text(prefix.string() + "_km.csv", exp::km_csv(rep));
  const json j = exp::km_json(rep);
  write_text(prefix.string() + "_logrank.json", j.dump(2) + "\n");
  std::cout << j.dump() << '\n';
  return cli::exit_ok;
}

struct BenchArgs {
  std::vector<int> sizes = {2048, 4096, 8192};
  int m = 256, d = 16, repeats = 3;
  std::uint64_t seed = 1;
  std::string out = "bench.csv";
};

int cmd_bench(const BenchArgs& a) {
  std::vector<exp::BenchRow> rows;
  for (int n : a.sizes) rows.push_back(exp::bench_microbatched(n, a.m, a.d, a.seed, a.repeats));
  const std::string csv = exp::bench_csv(rows);
  write_text(cli::resolve_output(a.out), csv);
  std::cout << csv;
  return cli::exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Optimal-transport co-attention for multimodal survival prediction"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* gen = app.add_subcommand("gen-synth", "Write a planted-signal synthetic dataset");
  gen->add_option("--out", synth.out, "Output directory");
  gen->add_option("--cases", synth.spec.n_cases, "Number of cases");
  gen->add_option("--instances", synth.spec.n_pathology, "Pathology instances per case (M_p)");
  gen->add_option("--genomic", synth.spec.n_genomic, "Genomic categories per case (M_g)");
  gen->add_option("--dim", synth.spec.feature_dim, "Pathology feature dimension");
  gen->add_option("--signal-fraction", synth.spec.signal_fraction, "Fraction of signal instances");
  gen->add_option("--noise", synth.spec.noise_scale, "Noise scale");
  gen->add_option("--censor-rate", synth.spec.censor_rate, "Probability a case is censored");
  gen->add_option("--seed", synth.spec.seed, "Seed");

  SolveArgs solve;
  auto* sol = app.add_subcommand("solve", "Solve a transport problem between two CSV bags");
  sol->add_option("--source", solve.source, "Source bag CSV")->required();
  sol->add_option("--target", solve.target, "Target bag CSV")->required();
  sol->add_option("--solver", solve.solver, "emd, sinkhorn or uot");
  sol->add_option("--epsilon", solve.epsilon, "Entropic regularization");
  sol->add_option("--tau", solve.tau, "Marginal relaxation (uot)");
  sol->add_option("--metric", solve.metric, "l2, squared_l2 or cosine_distance");
  sol->add_option("--max-iters", solve.max_iters, "Iteration cap");
  sol->add_option("--tol", solve.tolerance, "Convergence tolerance");
  sol->add_flag("--normalize-cost", solve.normalize_cost, "Divide costs by their max entry");
  sol->add_option("--out", solve.out, "Output prefix");

  TrainArgs train;
  auto* tr = app.add_subcommand("train", "Cross-validated training and evaluation");
  tr->add_option("--manifest", train.manifest, "Dataset manifest")->required();
  tr->add_option("--out", train.out, "Output directory");
  add_train_flags(tr, train.config, train.o);

  AblateArgs ablate;
  auto* ab = app.add_subcommand("ablate", "Sweep micro-batch sizes and co-attention modes");
  ab->add_option("--manifest", ablate.manifest, "Dataset manifest")->required();
  ab->add_option("--out", ablate.out, "Output directory");
  ab->add_option("--m", ablate.m_values, "Micro-batch sizes")->delimiter(',');
  ab->add_option("--modes", ablate.modes, "Co-attention modes")->delimiter(',');
  add_train_flags(ab, ablate.config, ablate.o);

  KmArgs km;
  auto* kmc = app.add_subcommand("km", "Median-split Kaplan-Meier curves and log-rank test");
  kmc->add_option("--risks", km.risks, "CSV with case_id and risk columns")->required();
  kmc->add_option("--manifest", km.manifest, "Dataset manifest")->required();
  kmc->add_option("--out", km.out, "Output prefix");

  BenchArgs bench;
  auto* be = app.add_subcommand("bench", "Time micro-batched unbalanced solves");
  be->add_option("--M", bench.sizes, "Bag sizes")->delimiter(',');
  be->add_option("--m", bench.m, "Micro-batch size");
  be->add_option("--d", bench.d, "Feature dimension");
  be->add_option("--repeats", bench.repeats, "Repeats per size (best is kept)");
  be->add_option("--seed", bench.seed, "Seed");
  be->add_option("--out", bench.out, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? cli::exit_ok : cli::exit_parse;
  }

  try {
    if (*gen) return cmd_gen_synth(synth);
    if (*sol) return cmd_solve(solve);
    if (*tr) return cmd_train(train);
    if (*ab) return cmd_ablate(ablate);
    if (*kmc) return cmd_km(km);
    if (*be) return cmd_bench(bench);
  } catch (const Error& e) {
    std::cerr << cli::error_json(to_string(e.kind()), e.what()) << '\n';
    return cli::exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << cli::error_json("internal", e.what()) << '\n';
    return cli::exit_other;
  }
  return cli::exit_other;
}
