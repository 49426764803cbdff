#include "pbmv/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>
#include <set>

#include <json.hpp>

#include "pbmv/rng.hpp"

namespace pbmv {

double accuracy(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size() || preds.empty())
    throw InputError("accuracy: length mismatch or empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i)
    if (preds[i] == labels[i]) ++correct;
  return double(correct) / double(preds.size());
}

F1Result f1_detail(std::span<const int> preds, std::span<const int> labels) {
  if (preds.size() != labels.size() || preds.empty())
    throw InputError("f1: length mismatch or empty input");
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] > 0 && labels[i] > 0) ++tp;
    if (preds[i] > 0 && labels[i] < 0) ++fp;
    if (preds[i] < 0 && labels[i] > 0) ++fn;
  }
  if (tp + fp + fn == 0) return F1Result{0.0, true};  // no positives anywhere
  if (tp == 0) return F1Result{0.0, false};
  const double precision = double(tp) / double(tp + fp);
  const double recall = double(tp) / double(tp + fn);
  return F1Result{2.0 * precision * recall / (precision + recall), false};
}

double f1(std::span<const int> preds, std::span<const int> labels) {
  return f1_detail(preds, labels).value;
}

Algorithm parse_algorithm(const std::string& name) {
  if (name == "pb-mvboost") return Algorithm::pb_mvboost;
  if (name == "mvboost") return Algorithm::mvboost;
  if (name == "mv-adaboost") return Algorithm::mv_adaboost;
  if (name == "mv-mv") return Algorithm::mv_mv;
  throw InputError("unknown algorithm '" + name +
                   "' (expected pb-mvboost, mvboost, mv-adaboost or mv-mv)");
}

std::string algorithm_name(Algorithm alg) {
  switch (alg) {
    case Algorithm::pb_mvboost: return "pb-mvboost";
    case Algorithm::mvboost: return "mvboost";
    case Algorithm::mv_adaboost: return "mv-adaboost";
    case Algorithm::mv_mv: return "mv-mv";
  }
  throw InputError("unknown algorithm enum value");
}

MVMajorityVote train_algorithm(Algorithm alg, const MultiviewDataset& train,
                               const TrainConfig& config) {
  switch (alg) {
    case Algorithm::pb_mvboost: return pb_mvboost(train, config).model;
    case Algorithm::mvboost: return mvboost_uniform_rho(train, config).model;
    case Algorithm::mv_adaboost: return mv_adaboost(train, config).model;
    case Algorithm::mv_mv: return mv_uniform_vote(train, config.max_depth);
  }
  throw InputError("unknown algorithm enum value");
}

TrainResult train_algorithm_traced(Algorithm alg, const MultiviewDataset& train,
                                   const TrainConfig& config, const MultiviewDataset* eval_set) {
  switch (alg) {
    case Algorithm::pb_mvboost: return pb_mvboost(train, config, eval_set);
    case Algorithm::mvboost: return mvboost_uniform_rho(train, config, eval_set);
    case Algorithm::mv_adaboost: return mv_adaboost(train, config, eval_set);
    case Algorithm::mv_mv: break;
  }

  MVMajorityVote model = mv_uniform_vote(train, config.max_depth);
  const ExampleDistribution uniform = ExampleDistribution::uniform(train.n());
  IterationRecord rec;
  rec.t = 1;
  rec.rho = model.rho.rho;
  for (std::size_t v = 0; v < train.num_views(); ++v) {
    const double eps =
        weighted_error(model.per_view[v].voters()[0], train.views[v], train.labels, uniform);
    rec.eps.push_back(eps);
    rec.q.push_back(1.0);
    rec.r.push_back(eps);   // single voter: Gibbs risk is its own error
    rec.d.push_back(0.0);   // and it never disagrees with itself
  }
  rec.cbound = mv_cbound(rec.rho, rec.r, rec.d);
  {
    const std::vector<int> preds = model.predict_all(train);
    rec.train_error = 1.0 - accuracy(preds, train.labels);
    rec.train_f1 = f1(preds, train.labels);
  }
  if (eval_set) {
    const std::vector<int> preds = model.predict_all(*eval_set);
    rec.test_error = 1.0 - accuracy(preds, eval_set->labels);
    rec.test_f1 = f1(preds, eval_set->labels);
  }
  return TrainResult{std::move(model), BoostTrace{std::move(rec)}, {}};
}

void MulticlassMultiview::validate() const {
  if (views.empty()) throw InputError("dataset: no views");
  if (class_ids.empty()) throw InputError("dataset: no examples");
  if (view_names.size() != views.size()) throw InputError("dataset: view name count mismatch");
  for (const Matrix& view : views)
    if (view.rows() != class_ids.size()) throw InputError("dataset: row-count mismatch");
}

MultiviewDataset to_binary(const MulticlassMultiview& mc, int positive_class) {
  MultiviewDataset ds;
  ds.views = mc.views;
  ds.view_names = mc.view_names;
  ds.labels.reserve(mc.n());
  for (int c : mc.class_ids) ds.labels.push_back(c == positive_class ? +1 : -1);
  return ds;
}

MulticlassMultiview take_rows(const MulticlassMultiview& mc, const std::vector<std::size_t>& rows) {
  MulticlassMultiview out;
  out.view_names = mc.view_names;
  out.class_ids.reserve(rows.size());
  for (std::size_t i : rows) out.class_ids.push_back(mc.class_ids[i]);
  for (const Matrix& view : mc.views) {
    Matrix m(rows.size(), view.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
      auto src = view.row(rows[k]);
      std::copy(src.begin(), src.end(), &m(k, 0));
    }
    out.views.push_back(std::move(m));
  }
  return out;
}

std::vector<int> distinct_classes(const MulticlassMultiview& mc) {
  std::set<int> s(mc.class_ids.begin(), mc.class_ids.end());
  return std::vector<int>(s.begin(), s.end());
}

namespace {

struct Stats {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

Stats mean_std(std::span<const double> xs) {
  Stats s;
  if (xs.empty()) return s;
  for (double x : xs) s.mean += x;
  s.mean /= double(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - s.mean) * (x - s.mean);
  s.stddev = std::sqrt(var / double(xs.size()));
  return s;
}

void append_double(std::string& out, double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  out.append(buf, res.ptr);
}

}  // namespace

RunReport one_vs_all_protocol(const MulticlassMultiview& full_train,
                              const MulticlassMultiview& full_test,
                              const std::vector<int>& classes, const ProtocolConfig& config) {
  full_train.validate();
  full_test.validate();
  if (full_test.views.size() != full_train.views.size())
    throw InputError("protocol: train/test view count mismatch");
  if (classes.empty()) throw InputError("protocol: no classes given");
  if (config.runs == 0) throw InputError("protocol: runs must be >= 1");
  if (config.n_per_run == 0 || config.n_per_run > full_train.n())
    throw InputError("protocol: n_per_run must lie in [1, train size]");

  // one subsample per run, shared by all classes of that run
  std::vector<MulticlassMultiview> subsamples;
  subsamples.reserve(config.runs);
  for (std::size_t run = 0; run < config.runs; ++run) {
    Rng rng(derive_seed(config.seed, run));
    subsamples.push_back(
        take_rows(full_train, rng.sample_without_replacement(full_train.n(), config.n_per_run)));
  }

  struct Job {
    std::size_t class_index;
    std::size_t run;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < classes.size(); ++c)
    for (std::size_t run = 0; run < config.runs; ++run) jobs.push_back({c, run});

  std::vector<RunRecord> records(jobs.size());
  auto work = [&](std::size_t j) {
    const Job& job = jobs[j];
    const int cls = classes[job.class_index];
    const MultiviewDataset train = to_binary(subsamples[job.run], cls);
    const MultiviewDataset test = to_binary(full_test, cls);

    TrainConfig tc;
    tc.iterations = config.iterations;
    tc.max_depth = config.max_depth;
    tc.seed = derive_seed(config.seed, job.run * classes.size() + job.class_index);
    const MVMajorityVote model = train_algorithm(config.algorithm, train, tc);

    const std::vector<int> preds = model.predict_all(test);
    const F1Result f1r = f1_detail(preds, test.labels);
    records[j] = RunRecord{cls, job.run, accuracy(preds, test.labels), f1r.value, f1r.degenerate};
  };

  if (config.jobs <= 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) work(j);
  } else {
    std::size_t j = 0;
    while (j < jobs.size()) {
      std::vector<std::future<void>> wave;
      for (int k = 0; k < config.jobs && j < jobs.size(); ++k, ++j)
        wave.push_back(std::async(std::launch::async, work, j));
      for (auto& fut : wave) fut.get();
    }
  }

  RunReport report;
  report.classes = classes;
  report.runs = config.runs;
  report.n_per_run = config.n_per_run;
  report.algorithm = algorithm_name(config.algorithm);
  report.records = std::move(records);
  std::sort(report.records.begin(), report.records.end(), [](const RunRecord& a, const RunRecord& b) {
    return a.class_id != b.class_id ? a.class_id < b.class_id : a.run < b.run;
  });

  // macro-average over classes within each run, then mean/std over runs
  std::vector<double> run_acc(config.runs, 0.0), run_f1(config.runs, 0.0);
  for (const RunRecord& rec : report.records) {
    run_acc[rec.run] += rec.accuracy / double(classes.size());
    run_f1[rec.run] += rec.f1 / double(classes.size());
  }
  const Stats acc = mean_std(run_acc);
  const Stats f1s = mean_std(run_f1);
  report.aggregate = Aggregate{acc.mean, acc.stddev, f1s.mean, f1s.stddev};

  for (int cls : classes) {
    std::vector<double> accs, f1s_c;
    for (const RunRecord& rec : report.records)
      if (rec.class_id == cls) {
        accs.push_back(rec.accuracy);
        f1s_c.push_back(rec.f1);
      }
    const Stats a = mean_std(accs);
    const Stats f = mean_std(f1s_c);
    PerClassAggregate pc;
    pc.class_id = cls;
    pc.accuracy_mean = a.mean;
    pc.accuracy_std = a.stddev;
    pc.f1_mean = f.mean;
    pc.f1_std = f.stddev;
    report.per_class.push_back(pc);
  }
  return report;
}

std::string report_to_json(const RunReport& report) {
  nlohmann::json doc;
  doc["algorithm"] = report.algorithm;
  doc["runs"] = report.runs;
  doc["n_per_run"] = report.n_per_run;
  doc["classes"] = report.classes;
  doc["aggregate"] = {{"accuracy_mean", report.aggregate.accuracy_mean},
                      {"accuracy_std", report.aggregate.accuracy_std},
                      {"f1_mean", report.aggregate.f1_mean},
                      {"f1_std", report.aggregate.f1_std}};
  nlohmann::json per_class = nlohmann::json::array();
  for (const PerClassAggregate& pc : report.per_class)
    per_class.push_back({{"class", pc.class_id},
                         {"accuracy_mean", pc.accuracy_mean},
                         {"accuracy_std", pc.accuracy_std},
                         {"f1_mean", pc.f1_mean},
                         {"f1_std", pc.f1_std}});
  doc["per_class"] = std::move(per_class);
  nlohmann::json records = nlohmann::json::array();
  for (const RunRecord& rec : report.records)
    records.push_back({{"class", rec.class_id},
                       {"run", rec.run},
                       {"accuracy", rec.accuracy},
                       {"f1", rec.f1},
                       {"degenerate_f1", rec.degenerate_f1}});
  doc["records"] = std::move(records);
  return doc.dump(2) + "\n";
}

std::string report_to_csv(const RunReport& report) {
  std::string out = "class,run,accuracy,f1,degenerate_f1\n";
  for (const RunRecord& rec : report.records) {
    out += std::to_string(rec.class_id);
    out.push_back(',');
    out += std::to_string(rec.run);
    out.push_back(',');
    append_double(out, rec.accuracy);
    out.push_back(',');
    append_double(out, rec.f1);
    out.push_back(',');
    out += rec.degenerate_f1 ? "1" : "0";
    out.push_back('\n');
  }
  return out;
}

}  // namespace pbmv
