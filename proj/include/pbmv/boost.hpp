#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pbmv/cbound_opt.hpp"
#include "pbmv/dataset.hpp"
#include "pbmv/measures.hpp"

namespace pbmv {

// How the per-iteration view weights are learned.
//
// margin_global maximizes the squared-margin ratio mu1^2/mu2 of the current
// aggregated vote on the training sample (the margin form of the C-Bound,
// whose maximizer is generally interior to the simplex). cbound_simplex runs
// the linear view-averaged program (1-2<rho,r>)^2/(1-2<rho,d>) on the
// distribution-weighted view statistics; that objective is convex in rho, so
// its exact maximizer is an extreme point of the feasible region and the
// learned weights concentrate on single views. margin_global is the default:
// it keeps the vote genuinely multiview and is the variant that reproduces
// the decreasing empirical C-Bound and the accuracy gains over the uniform
// vote.
enum class RhoUpdate { margin_global, cbound_simplex };

struct TrainConfig {
  std::size_t iterations = 100;
  int max_depth = 2;
  std::uint64_t seed = 0;
  VoterWeighting voter_weighting = VoterWeighting::posterior;
  RhoUpdate rho_update = RhoUpdate::margin_global;
  int jobs = 1;  // worker cap for the per-view trainings inside one iteration
  bool record_distributions = false;  // keep each D_t in the result (diagnostic)
};

// The learned multiview majority vote: per-view voter lists with raw weights
// Q_v^t, plus simplex weights over views.
struct MVMajorityVote {
  std::vector<ViewPosterior> per_view;
  SimplexWeights rho;
  std::size_t iterations = 0;  // T; every per-view list has exactly T voters
  TrainConfig config;
  std::string algorithm;       // "pb-mvboost", "mvboost", "mv-adaboost", "mv-mv"
  std::vector<std::string> view_names;

  std::size_t num_views() const { return per_view.size(); }

  // margin = sum_v rho_v sum_t Q_v^t h_v^t(x^v); label = sign(margin),
  // sign(0) = +1.
  double predict_margin(const std::vector<std::vector<double>>& x) const;
  int predict(const std::vector<std::vector<double>>& x) const;

  double margin_for_row(const MultiviewDataset& ds, std::size_t row) const;
  int predict_row(const MultiviewDataset& ds, std::size_t row) const;
  std::vector<int> predict_all(const MultiviewDataset& ds) const;

  void validate() const;
};

// One record per completed boosting iteration (the quantities behind the
// per-iteration trace plots).
struct IterationRecord {
  std::size_t t = 0;                     // 1-based
  std::vector<double> eps;               // weighted error per view
  std::vector<double> q;                 // voter weight per view at this iteration
  std::vector<double> r;                 // view Gibbs risk under the algorithm's distribution
  std::vector<double> d;                 // view disagreement under the algorithm's distribution
  std::vector<double> rho;               // view weights after this iteration
  std::optional<double> cbound;          // empirical C-Bound of the current model
                                         // (uniform example weights); nullopt = infeasible
  double train_error = 0.0;
  double train_f1 = 0.0;
  std::optional<double> test_error;
  std::optional<double> test_f1;
};

using BoostTrace = std::vector<IterationRecord>;

struct TrainResult {
  MVMajorityVote model;
  BoostTrace trace;
  // D_t at the start of each iteration; filled only when
  // config.record_distributions is set (pb_mvboost and mvboost_uniform_rho).
  std::vector<std::vector<double>> distributions;
};

// The two-level boosting loop: per iteration, trains one voter per view under
// the shared distribution D_t, weights it by 1/2 ln((1-eps)/eps) (eps clamped
// to [1e-10, 1-1e-10]), learns view weights by maximizing the C-Bound
// objective warm-started from the previous rho, and reweights examples by
// exp(-y_i sum_v rho_v Q_v^t h_v^t(x_i^v)) normalized over the sample.
// The returned model carries rho from the final iteration.
TrainResult pb_mvboost(const MultiviewDataset& train, const TrainConfig& config,
                       const MultiviewDataset* eval_set = nullptr);

// pb_mvboost with rho fixed to uniform at every iteration.
TrainResult mvboost_uniform_rho(const MultiviewDataset& train, const TrainConfig& config,
                                const MultiviewDataset* eval_set = nullptr);

// V independent single-view boosting runs, each with its own example
// distribution; the final vote combines the per-view ensembles with uniform
// rho. Trace r/d columns are computed under each view's own distribution.
TrainResult mv_adaboost(const MultiviewDataset& train, const TrainConfig& config,
                        const MultiviewDataset* eval_set = nullptr);

// One voter per view trained on the uniform distribution, Q = 1 each,
// uniform rho.
MVMajorityVote mv_uniform_vote(const MultiviewDataset& train, int max_depth);

// Trace CSV: header
//   t,eps_0..,q_0..,r_0..,d_0..,rho_0..,cbound,train_err,train_f1[,test_err,test_f1]
// with shortest round-trip float formatting; an infeasible cbound prints as
// "inf". Deterministic byte-for-byte given the same trace.
void write_trace_csv(const BoostTrace& trace, std::size_t num_views, std::ostream& out);
std::string trace_csv_string(const BoostTrace& trace, std::size_t num_views);

}  // namespace pbmv
