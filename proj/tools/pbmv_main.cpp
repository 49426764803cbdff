// pbmv: train and evaluate multiview majority-vote ensembles and report
// their PAC-Bayes certificates. See README.md for the file formats.

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pbmv/boost.hpp"
#include "pbmv/dataset.hpp"
#include "pbmv/eval.hpp"
#include "pbmv/measures.hpp"
#include "pbmv/model_io.hpp"

namespace fs = std::filesystem;
using namespace pbmv;

namespace {

// All outputs go through a temp path plus rename, so failures never leave a
// partial file behind.
void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  const fs::path tmp = path.string() + ".tmp" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary);
    out << content;
    if (!out) {
      std::error_code ec;
      fs::remove(tmp, ec);
      throw InputError("cannot write " + path.string());
    }
  }
  fs::rename(tmp, path);
}

void write_dataset_atomic(const MultiviewDataset& ds, const fs::path& dir) {
  if (fs::exists(dir)) throw InputError("output directory already exists: " + dir.string());
  const fs::path tmp = dir.string() + ".part" + std::to_string(::getpid());
  write_manifest(ds, tmp);
  fs::rename(tmp, dir);
}

struct TrainOptions {
  std::string manifest;
  std::string test_manifest;
  std::string algorithm = "pb-mvboost";
  std::size_t iterations = 100;
  int depth = 2;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out = "model.json";
  std::string trace = "trace.csv";
};

int run_train(const TrainOptions& opt) {
  const Algorithm alg = parse_algorithm(opt.algorithm);
  const MultiviewDataset train = load_manifest(opt.manifest);
  std::optional<MultiviewDataset> test;
  if (!opt.test_manifest.empty()) test = load_manifest(opt.test_manifest);

  TrainConfig config;
  config.iterations = opt.iterations;
  config.max_depth = opt.depth;
  config.seed = opt.seed;
  config.jobs = opt.jobs;

  const TrainResult result =
      train_algorithm_traced(alg, train, config, test ? &*test : nullptr);
  write_file_atomic(opt.out, model_to_json(result.model));
  write_file_atomic(opt.trace, trace_csv_string(result.trace, train.num_views()));

  const IterationRecord& last = result.trace.back();
  std::cout << "trained " << opt.algorithm << ": T=" << result.model.iterations
            << " train_err=" << last.train_error << "\nmodel: " << opt.out
            << "\ntrace: " << opt.trace << "\n";
  return 0;
}

struct EvalOptions {
  std::string manifest, test_manifest;
  std::string images, labels, test_images, test_labels, mode = "quarters";
  std::string algorithm = "pb-mvboost";
  std::size_t iterations = 100;
  int depth = 2;
  std::uint64_t seed = 0;
  std::size_t n_per_run = 500;
  std::size_t runs = 20;
  int jobs = 1;
  std::vector<int> classes;
  std::string out = "report";
};

MulticlassMultiview multiclass_from_manifest(const std::string& path) {
  const MultiviewDataset ds = load_manifest(path);
  MulticlassMultiview mc;
  mc.views = ds.views;
  mc.view_names = ds.view_names;
  mc.class_ids = ds.labels;
  return mc;
}

MulticlassMultiview multiclass_from_idx(const std::string& images, const std::string& labels,
                                        SplitMode mode) {
  const IdxData idx = load_idx(images, labels);
  MulticlassMultiview mc;
  auto [views, names] = split_image_features(idx.images, mode);
  mc.views = std::move(views);
  mc.view_names = std::move(names);
  mc.class_ids = idx.labels;
  return mc;
}

int run_eval(const EvalOptions& opt) {
  MulticlassMultiview train, test;
  if (!opt.manifest.empty()) {
    if (opt.test_manifest.empty())
      throw InputError("--test-manifest is required with --manifest");
    train = multiclass_from_manifest(opt.manifest);
    test = multiclass_from_manifest(opt.test_manifest);
  } else if (!opt.images.empty()) {
    if (opt.labels.empty() || opt.test_images.empty() || opt.test_labels.empty())
      throw InputError("--labels, --test-images and --test-labels are required with --images");
    const SplitMode mode = parse_split_mode(opt.mode);
    train = multiclass_from_idx(opt.images, opt.labels, mode);
    test = multiclass_from_idx(opt.test_images, opt.test_labels, mode);
  } else {
    throw InputError("eval needs either --manifest/--test-manifest or IDX inputs");
  }

  ProtocolConfig config;
  config.n_per_run = opt.n_per_run;
  config.runs = opt.runs;
  config.algorithm = parse_algorithm(opt.algorithm);
  config.iterations = opt.iterations;
  config.max_depth = opt.depth;
  config.seed = opt.seed;
  config.jobs = opt.jobs;

  const std::vector<int> classes = opt.classes.empty() ? distinct_classes(train) : opt.classes;
  const RunReport report = one_vs_all_protocol(train, test, classes, config);

  write_file_atomic(opt.out + ".json", report_to_json(report));
  write_file_atomic(opt.out + ".csv", report_to_csv(report));
  std::cout << "accuracy " << report.aggregate.accuracy_mean << " +- "
            << report.aggregate.accuracy_std << ", f1 " << report.aggregate.f1_mean << " +- "
            << report.aggregate.f1_std << " over " << report.runs << " runs\nreport: " << opt.out
            << ".json, " << opt.out << ".csv\n";
  return 0;
}

struct BoundsOptions {
  std::string model;
  std::string manifest;
  double delta = 0.05;
  double capital_c = 1.0;
  std::string out;
};

int run_bounds(const BoundsOptions& opt) {
  if (!(opt.delta > 0.0 && opt.delta <= 1.0))
    throw InputError("--delta must lie in (0,1]");
  if (!(opt.capital_c > 0.0)) throw InputError("--capital-c must be positive");

  const MVMajorityVote model = load_model(opt.model);
  const MultiviewDataset ds = load_manifest(opt.manifest);
  if (ds.num_views() != model.num_views())
    throw InputError("model has " + std::to_string(model.num_views()) + " views, dataset has " +
                     std::to_string(ds.num_views()));
  const ExampleDistribution uniform = ExampleDistribution::uniform(ds.n());
  const VoterWeighting weighting = model.config.voter_weighting;

  VoteStats view_stats;
  view_stats.r.resize(ds.num_views());
  view_stats.d.resize(ds.num_views());
  view_stats.rho = model.rho.rho;
  std::vector<PerViewStats> stats(ds.num_views());
  double kl_views = 0.0;
  for (std::size_t v = 0; v < ds.num_views(); ++v) {
    view_stats.r[v] = view_gibbs_risk(model.per_view[v], ds.views[v], ds.labels, uniform, weighting);
    view_stats.d[v] = view_disagreement(model.per_view[v], ds.views[v], uniform, weighting);
    const double kl_v = kl_to_uniform(model.per_view[v].normalized_weights());
    stats[v] = PerViewStats{view_stats.r[v], view_stats.d[v], kl_v};
    kl_views += model.rho.rho[v] * kl_v;
  }
  view_stats.validate();
  const std::vector<double>& r = view_stats.r;
  const std::vector<double>& d = view_stats.d;
  const double kl_hyper = kl_to_uniform(model.rho.rho);

  const double gibbs = rho_gibbs_risk(model.per_view, model.rho.rho, ds, uniform, weighting);
  const double dis = global_disagreement(model.per_view, model.rho.rho, ds, uniform, weighting);
  const double mv_err = majority_vote_error(model.per_view, model.rho.rho, ds, uniform, weighting);
  const auto cbound_views = mv_cbound(model.rho.rho, r, d);
  const auto cbound_global = cbound_from(gibbs, dis);
  const double catoni = catoni_bound(gibbs, kl_views, kl_hyper, ds.n(), opt.capital_c, opt.delta);
  const double theorem = theorem_cbound_bound(stats, model.rho.rho, ds.n(), opt.delta);

  nlohmann::json doc;
  doc["n"] = ds.n();
  doc["delta"] = opt.delta;
  doc["C"] = opt.capital_c;
  doc["empirical"] = {
      {"gibbs_risk", gibbs},
      {"disagreement", dis},
      {"majority_vote_error", mv_err},
      {"cbound", cbound_views ? nlohmann::json(*cbound_views) : nlohmann::json()},
      {"cbound_global", cbound_global ? nlohmann::json(*cbound_global) : nlohmann::json()}};
  doc["kl"] = {{"views_expected", kl_views}, {"hyper", kl_hyper}};
  doc["bounds"] = {{"factor_two_gibbs", 2.0 * gibbs},
                   {"catoni_gibbs", catoni},
                   {"catoni_majority_vote", std::min(1.0, 2.0 * catoni)},
                   {"cbound_theorem", theorem}};
  const std::string text = doc.dump(2) + "\n";
  std::cout << text;
  if (!opt.out.empty()) write_file_atomic(opt.out, text);
  return 0;
}

struct SynthOptions {
  std::size_t n = 1000;
  std::size_t views = 0;  // 0: inferred from noise list
  std::vector<double> noise;
  std::uint64_t seed = 0;
  std::string out;
};

int run_synth(const SynthOptions& opt) {
  std::size_t num_views = opt.views ? opt.views : opt.noise.size();
  if (num_views == 0) throw InputError("synth: give --views or --noise");
  std::vector<double> noise = opt.noise;
  if (noise.empty()) noise.assign(num_views, 0.0);
  const MultiviewDataset ds = synth_multiview(opt.n, num_views, noise, opt.seed);
  write_dataset_atomic(ds, opt.out);
  std::cout << "wrote " << ds.n() << " examples, " << ds.num_views() << " views to " << opt.out
            << "\n";
  return 0;
}

struct SplitMnistOptions {
  std::string images, labels;
  std::string mode = "quarters";
  int positive_class = 0;
  std::size_t limit = 0;  // 0: keep all
  std::string out;
};

int run_split_mnist(const SplitMnistOptions& opt) {
  const SplitMode mode = parse_split_mode(opt.mode);
  IdxData idx = load_idx(opt.images, opt.labels);
  if (opt.limit > 0 && opt.limit < idx.images.count) {
    idx.images.count = opt.limit;
    idx.images.pixels.resize(opt.limit * idx.images.rows * idx.images.cols);
    idx.labels.resize(opt.limit);
  }
  const MultiviewDataset ds = split_image_views(idx.images, idx.labels, opt.positive_class, mode);
  write_dataset_atomic(ds, opt.out);
  std::cout << "wrote " << ds.n() << " examples, " << ds.num_views() << " views to " << opt.out
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multiview boosting with PAC-Bayes certificates"};
  app.require_subcommand(1);

  TrainOptions train_opt;
  CLI::App* train_cmd = app.add_subcommand("train", "train a model and write model + trace");
  train_cmd->add_option("--manifest", train_opt.manifest, "dataset manifest JSON")->required();
  train_cmd->add_option("--test-manifest", train_opt.test_manifest,
                        "optional held-out manifest for per-iteration test metrics");
  train_cmd->add_option("--algorithm", train_opt.algorithm,
                        "pb-mvboost | mvboost | mv-adaboost | mv-mv");
  train_cmd->add_option("--iterations", train_opt.iterations, "boosting rounds T")
      ->check(CLI::Range(std::size_t(1), std::size_t(1000000)));
  train_cmd->add_option("--depth", train_opt.depth, "weak tree depth")->check(CLI::Range(1, 64));
  train_cmd->add_option("--seed", train_opt.seed, "RNG seed recorded in the model");
  train_cmd->add_option("--jobs", train_opt.jobs, "worker cap")->check(CLI::Range(1, 1024));
  train_cmd->add_option("--out", train_opt.out, "model JSON path");
  train_cmd->add_option("--trace", train_opt.trace, "per-iteration trace CSV path");

  EvalOptions eval_opt;
  CLI::App* eval_cmd = app.add_subcommand("eval", "one-vs-all protocol over repeated subsamples");
  eval_cmd->add_option("--manifest", eval_opt.manifest, "training manifest (binary labels)");
  eval_cmd->add_option("--test-manifest", eval_opt.test_manifest, "test manifest");
  eval_cmd->add_option("--images", eval_opt.images, "training IDX image file");
  eval_cmd->add_option("--labels", eval_opt.labels, "training IDX label file");
  eval_cmd->add_option("--test-images", eval_opt.test_images, "test IDX image file");
  eval_cmd->add_option("--test-labels", eval_opt.test_labels, "test IDX label file");
  eval_cmd->add_option("--mode", eval_opt.mode, "quarters | center-overlap (IDX inputs)");
  eval_cmd->add_option("--classes", eval_opt.classes, "classes to evaluate one-vs-all")
      ->delimiter(',');
  eval_cmd->add_option("--algorithm", eval_opt.algorithm,
                       "pb-mvboost | mvboost | mv-adaboost | mv-mv");
  eval_cmd->add_option("--iterations", eval_opt.iterations, "boosting rounds T")
      ->check(CLI::Range(std::size_t(1), std::size_t(1000000)));
  eval_cmd->add_option("--depth", eval_opt.depth, "weak tree depth")->check(CLI::Range(1, 64));
  eval_cmd->add_option("--seed", eval_opt.seed, "subsampling seed");
  eval_cmd->add_option("--n", eval_opt.n_per_run, "training examples per run")
      ->check(CLI::Range(std::size_t(1), std::size_t(100000000)));
  eval_cmd->add_option("--runs", eval_opt.runs, "number of random runs")
      ->check(CLI::Range(std::size_t(1), std::size_t(1000000)));
  eval_cmd->add_option("--jobs", eval_opt.jobs, "parallel (class x run) jobs")
      ->check(CLI::Range(1, 1024));
  eval_cmd->add_option("--out", eval_opt.out, "report path prefix (.json/.csv appended)");

  BoundsOptions bounds_opt;
  CLI::App* bounds_cmd =
      app.add_subcommand("bounds", "empirical C-Bound and generalization bounds for a model");
  bounds_cmd->add_option("--model", bounds_opt.model, "model JSON")->required();
  bounds_cmd->add_option("--manifest", bounds_opt.manifest, "dataset manifest")->required();
  bounds_cmd->add_option("--delta", bounds_opt.delta, "confidence parameter in (0,1]");
  bounds_cmd->add_option("--capital-c", bounds_opt.capital_c, "Catoni C > 0");
  bounds_cmd->add_option("--out", bounds_opt.out, "also write the JSON here");

  SynthOptions synth_opt;
  CLI::App* synth_cmd = app.add_subcommand("synth", "generate a synthetic multiview dataset");
  synth_cmd->add_option("--n", synth_opt.n, "number of examples")
      ->check(CLI::Range(std::size_t(1), std::size_t(100000000)));
  synth_cmd->add_option("--views", synth_opt.views, "number of views");
  synth_cmd->add_option("--noise", synth_opt.noise, "per-view flip probability in [0,0.5)")
      ->delimiter(',');
  synth_cmd->add_option("--seed", synth_opt.seed, "generator seed");
  synth_cmd->add_option("--out", synth_opt.out, "output dataset directory")->required();

  SplitMnistOptions split_opt;
  CLI::App* split_cmd =
      app.add_subcommand("split-mnist", "split IDX images into a 4-view manifest dataset");
  split_cmd->add_option("--images", split_opt.images, "IDX image file")->required();
  split_cmd->add_option("--labels", split_opt.labels, "IDX label file")->required();
  split_cmd->add_option("--mode", split_opt.mode, "quarters | center-overlap");
  split_cmd->add_option("--positive-class", split_opt.positive_class, "class mapped to +1");
  split_cmd->add_option("--limit", split_opt.limit, "keep only the first N images");
  split_cmd->add_option("--out", split_opt.out, "output dataset directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (app.got_subcommand(train_cmd)) return run_train(train_opt);
    if (app.got_subcommand(eval_cmd)) return run_eval(eval_opt);
    if (app.got_subcommand(bounds_cmd)) return run_bounds(bounds_opt);
    if (app.got_subcommand(synth_cmd)) return run_synth(synth_opt);
    if (app.got_subcommand(split_cmd)) return run_split_mnist(split_opt);
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
