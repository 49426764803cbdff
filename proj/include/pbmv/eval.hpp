#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pbmv/boost.hpp"
#include "pbmv/dataset.hpp"

namespace pbmv {

double accuracy(std::span<const int> preds, std::span<const int> labels);

// F1 on the +1 class: 2PR/(P+R). degenerate is set when there are no
// predicted and no actual positives (TP = FP = FN = 0); the score is then 0.
struct F1Result {
  double value = 0.0;
  bool degenerate = false;
};
F1Result f1_detail(std::span<const int> preds, std::span<const int> labels);
double f1(std::span<const int> preds, std::span<const int> labels);

enum class Algorithm { pb_mvboost, mvboost, mv_adaboost, mv_mv };
Algorithm parse_algorithm(const std::string& name);  // throws InputError on unknown
std::string algorithm_name(Algorithm alg);

// Trains the named variant; for mv_mv only max_depth is honored.
MVMajorityVote train_algorithm(Algorithm alg, const MultiviewDataset& train,
                               const TrainConfig& config);

// Same, with a per-iteration trace (a single synthesized record for mv_mv).
TrainResult train_algorithm_traced(Algorithm alg, const MultiviewDataset& train,
                                   const TrainConfig& config,
                                   const MultiviewDataset* eval_set = nullptr);

// Multiview features with raw integer class ids, as consumed by the
// one-vs-all protocol.
struct MulticlassMultiview {
  std::vector<Matrix> views;
  std::vector<int> class_ids;
  std::vector<std::string> view_names;

  std::size_t n() const { return class_ids.size(); }
  void validate() const;
};

// Relabels to +1 iff class_ids[i] == positive_class.
MultiviewDataset to_binary(const MulticlassMultiview& mc, int positive_class);
MulticlassMultiview take_rows(const MulticlassMultiview& mc, const std::vector<std::size_t>& rows);
std::vector<int> distinct_classes(const MulticlassMultiview& mc);  // sorted

struct ProtocolConfig {
  std::size_t n_per_run = 500;
  std::size_t runs = 20;
  Algorithm algorithm = Algorithm::pb_mvboost;
  std::size_t iterations = 100;
  int max_depth = 2;
  std::uint64_t seed = 0;
  int jobs = 1;
};

struct RunRecord {
  int class_id = 0;
  std::size_t run = 0;
  double accuracy = 0.0;
  double f1 = 0.0;
  bool degenerate_f1 = false;
};

struct Aggregate {
  double accuracy_mean = 0.0;
  double accuracy_std = 0.0;  // population std over runs
  double f1_mean = 0.0;
  double f1_std = 0.0;
};

struct PerClassAggregate : Aggregate {
  int class_id = 0;
};

struct RunReport {
  std::vector<int> classes;
  std::size_t runs = 0;
  std::size_t n_per_run = 0;
  std::string algorithm;
  std::vector<RunRecord> records;           // one per (class, run), sorted
  Aggregate aggregate;                      // macro over classes, then over runs
  std::vector<PerClassAggregate> per_class;
};

// For each run, draws n_per_run training rows without replacement (seeded by
// run index); for each class, relabels one-vs-all, trains the algorithm and
// scores it on the full test set. (class x run) jobs execute independently,
// capped at config.jobs workers; the report is deterministic given the seed
// regardless of scheduling.
RunReport one_vs_all_protocol(const MulticlassMultiview& full_train,
                              const MulticlassMultiview& full_test,
                              const std::vector<int>& classes,
                              const ProtocolConfig& config);

std::string report_to_json(const RunReport& report);
std::string report_to_csv(const RunReport& report);  // one row per class x run

}  // namespace pbmv
