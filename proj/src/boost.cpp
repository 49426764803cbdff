#include "pbmv/boost.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <future>

#include "pbmv/eval.hpp"

namespace pbmv {

namespace {

constexpr double kEpsClamp = 1e-10;

double voter_weight(double eps) {
  const double clamped = std::clamp(eps, kEpsClamp, 1.0 - kEpsClamp);
  return 0.5 * std::log((1.0 - clamped) / clamped);
}

// Runs f(v) for every view, in waves of at most `jobs` concurrent workers.
template <class F>
void for_each_view(std::size_t num_views, int jobs, F&& f) {
  if (jobs <= 1 || num_views <= 1) {
    for (std::size_t v = 0; v < num_views; ++v) f(v);
    return;
  }
  std::size_t v = 0;
  while (v < num_views) {
    std::vector<std::future<void>> wave;
    for (int k = 0; k < jobs && v < num_views; ++k, ++v)
      wave.push_back(std::async(std::launch::async, f, v));
    for (auto& fut : wave) fut.get();
  }
}

// Cumulative per-example vote sums for one view, updated as voters arrive.
struct ViewSums {
  std::vector<double> raw;   // sum_t Q_t h_t(x_i)      (prediction margin)
  std::vector<double> abs;   // sum_t |Q_t| h_t(x_i)    (posterior weighting)
  std::vector<double> cnt;   // sum_t h_t(x_i)          (uniform weighting)
  double abs_total = 0.0;

  explicit ViewSums(std::size_t n) : raw(n, 0.0), abs(n, 0.0), cnt(n, 0.0) {}

  void add(const std::vector<std::int8_t>& votes, double q) {
    for (std::size_t i = 0; i < votes.size(); ++i) {
      raw[i] += q * votes[i];
      abs[i] += std::abs(q) * votes[i];
      cnt[i] += votes[i];
    }
    abs_total += std::abs(q);
  }

  // mean vote per example under the voter weighting, after t voters
  std::vector<double> means(std::size_t t, VoterWeighting weighting) const {
    std::vector<double> m(raw.size());
    if (weighting == VoterWeighting::posterior && abs_total > 0.0) {
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = abs[i] / abs_total;
    } else {
      for (std::size_t i = 0; i < m.size(); ++i) m[i] = cnt[i] / double(t);
    }
    return m;
  }
};

struct Metrics {
  double error = 0.0;
  double f1 = 0.0;
};

Metrics vote_metrics(const std::vector<ViewSums>& sums, std::span<const double> rho,
                     std::span<const int> labels, bool test_side = false,
                     const std::vector<ViewSums>* test_sums = nullptr) {
  const std::vector<ViewSums>& s = test_side ? *test_sums : sums;
  std::vector<int> preds(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double margin = 0.0;
    for (std::size_t v = 0; v < s.size(); ++v) margin += rho[v] * s[v].raw[i];
    preds[i] = margin >= 0.0 ? +1 : -1;
  }
  return Metrics{1.0 - accuracy(preds, labels), f1(preds, labels)};
}

void validate_train_inputs(const MultiviewDataset& train, const TrainConfig& config,
                           const MultiviewDataset* eval_set) {
  train.validate();
  if (config.iterations == 0) throw InputError("train: iterations must be >= 1");
  if (config.max_depth < 1) throw InputError("train: depth must be >= 1");
  if (eval_set) {
    eval_set->validate();
    if (eval_set->num_views() != train.num_views())
      throw InputError("train: eval set view count mismatch");
    for (std::size_t v = 0; v < train.num_views(); ++v)
      if (eval_set->views[v].cols() != train.views[v].cols())
        throw InputError("train: eval set feature count mismatch on view " + std::to_string(v));
  }
}

TrainResult run_boost(const MultiviewDataset& train, const TrainConfig& config,
                      const MultiviewDataset* eval_set, bool learn_rho,
                      const std::string& algorithm) {
  validate_train_inputs(train, config, eval_set);
  const std::size_t num_views = train.num_views();
  const std::size_t n = train.n();
  const std::size_t T = config.iterations;

  std::vector<double> dist(n, 1.0 / double(n));
  SimplexWeights rho = SimplexWeights::uniform(num_views);

  std::vector<ViewPosterior> per_view(num_views);
  std::vector<ViewSums> sums(num_views, ViewSums(n));
  std::vector<ViewSums> test_sums;
  if (eval_set) test_sums.assign(num_views, ViewSums(eval_set->n()));

  const ExampleDistribution uniform_dist = ExampleDistribution::uniform(n);
  BoostTrace trace;
  trace.reserve(T);

  std::vector<WeakVoter> voters;
  std::vector<std::vector<std::int8_t>> votes(num_views);
  std::vector<std::vector<std::int8_t>> test_votes(num_views);
  std::vector<std::vector<double>> recorded;

  for (std::size_t t = 1; t <= T; ++t) {
    if (config.record_distributions) recorded.push_back(dist);
    voters.assign(num_views, WeakVoter(0, 1, {TreeNode{-1, 0.0, -1, -1, +1}}));
    const ExampleDistribution d_t{std::vector<double>(dist)};
    for_each_view(num_views, config.jobs, [&](std::size_t v) {
      voters[v] = train_tree(train.views[v], train.labels, d_t, config.max_depth, v);
      votes[v] = voters[v].predict_rows(train.views[v]);
      if (eval_set) test_votes[v] = voters[v].predict_rows(eval_set->views[v]);
    });

    IterationRecord rec;
    rec.t = t;
    rec.eps.resize(num_views);
    rec.q.resize(num_views);
    rec.r.resize(num_views);
    rec.d.resize(num_views);

    for (std::size_t v = 0; v < num_views; ++v) {
      double eps = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (int(votes[v][i]) != train.labels[i]) eps += dist[i];
      rec.eps[v] = eps;
      rec.q[v] = voter_weight(eps);
      if (per_view[v].size() == 0)
        per_view[v] = ViewPosterior({voters[v]}, {rec.q[v]});
      else
        per_view[v].add_voter(voters[v], rec.q[v]);
      sums[v].add(votes[v], rec.q[v]);
      if (eval_set) test_sums[v].add(test_votes[v], rec.q[v]);
    }

    // view Gibbs risk and disagreement over the voters trained so far,
    // under the current example distribution
    std::vector<double> r_emp(num_views), d_emp(num_views);
    std::vector<std::vector<double>> view_means(num_views);
    for (std::size_t v = 0; v < num_views; ++v) {
      view_means[v] = sums[v].means(t, config.voter_weighting);
      rec.r[v] = gibbs_from_vote_means(view_means[v], train.labels, d_t);
      rec.d[v] = disagreement_from_vote_means(view_means[v], d_t);
      r_emp[v] = gibbs_from_vote_means(view_means[v], train.labels, uniform_dist);
      d_emp[v] = disagreement_from_vote_means(view_means[v], uniform_dist);
    }

    if (learn_rho) {
      const OptimizeResult opt =
          config.rho_update == RhoUpdate::margin_global
              ? optimize_view_weights_margin(view_means, train.labels,
                                             uniform_dist.weights(), rho)
              : optimize_view_weights(rec.r, rec.d, rho);
      if (opt.feasible) rho = opt.rho;  // otherwise keep the previous weights
    }
    rec.rho = rho.rho;

    const auto cbound = mv_cbound(rho.rho, r_emp, d_emp);
    rec.cbound = cbound;

    const Metrics train_metrics = vote_metrics(sums, rho.rho, train.labels);
    rec.train_error = train_metrics.error;
    rec.train_f1 = train_metrics.f1;
    if (eval_set) {
      const Metrics test_metrics = vote_metrics(sums, rho.rho, eval_set->labels, true, &test_sums);
      rec.test_error = test_metrics.error;
      rec.test_f1 = test_metrics.f1;
    }

    // example reweighting toward the examples the current round misclassifies
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double vote = 0.0;
      for (std::size_t v = 0; v < num_views; ++v) vote += rho.rho[v] * rec.q[v] * votes[v][i];
      dist[i] *= std::exp(-train.labels[i] * vote);
      z += dist[i];
    }
    for (double& w : dist) w /= z;

    trace.push_back(std::move(rec));
  }

  MVMajorityVote model;
  model.per_view = std::move(per_view);
  model.rho = rho;
  model.iterations = T;
  model.config = config;
  model.algorithm = algorithm;
  model.view_names = train.view_names;
  return TrainResult{std::move(model), std::move(trace), std::move(recorded)};
}

}  // namespace

TrainResult pb_mvboost(const MultiviewDataset& train, const TrainConfig& config,
                       const MultiviewDataset* eval_set) {
  return run_boost(train, config, eval_set, true, "pb-mvboost");
}

TrainResult mvboost_uniform_rho(const MultiviewDataset& train, const TrainConfig& config,
                                const MultiviewDataset* eval_set) {
  return run_boost(train, config, eval_set, false, "mvboost");
}

TrainResult mv_adaboost(const MultiviewDataset& train, const TrainConfig& config,
                        const MultiviewDataset* eval_set) {
  validate_train_inputs(train, config, eval_set);
  const std::size_t num_views = train.num_views();
  const std::size_t n = train.n();
  const std::size_t T = config.iterations;

  // one independent distribution per view
  std::vector<std::vector<double>> dists(num_views, std::vector<double>(n, 1.0 / double(n)));
  const SimplexWeights rho = SimplexWeights::uniform(num_views);

  std::vector<ViewPosterior> per_view(num_views);
  std::vector<ViewSums> sums(num_views, ViewSums(n));
  std::vector<ViewSums> test_sums;
  if (eval_set) test_sums.assign(num_views, ViewSums(eval_set->n()));

  const ExampleDistribution uniform_dist = ExampleDistribution::uniform(n);
  BoostTrace trace;
  trace.reserve(T);

  for (std::size_t t = 1; t <= T; ++t) {
    IterationRecord rec;
    rec.t = t;
    rec.eps.resize(num_views);
    rec.q.resize(num_views);
    rec.r.resize(num_views);
    rec.d.resize(num_views);
    rec.rho = rho.rho;

    std::vector<double> r_emp(num_views), d_emp(num_views);
    for_each_view(num_views, config.jobs, [&](std::size_t v) {
      const ExampleDistribution d_v{std::vector<double>(dists[v])};
      WeakVoter voter = train_tree(train.views[v], train.labels, d_v, config.max_depth, v);
      const std::vector<std::int8_t> votes = voter.predict_rows(train.views[v]);

      double eps = 0.0;
      for (std::size_t i = 0; i < n; ++i)
        if (int(votes[i]) != train.labels[i]) eps += dists[v][i];
      const double q = voter_weight(eps);
      rec.eps[v] = eps;
      rec.q[v] = q;

      if (eval_set) test_sums[v].add(voter.predict_rows(eval_set->views[v]), q);
      if (per_view[v].size() == 0)
        per_view[v] = ViewPosterior({voter}, {q});
      else
        per_view[v].add_voter(std::move(voter), q);
      sums[v].add(votes, q);

      const std::vector<double> means = sums[v].means(t, config.voter_weighting);
      rec.r[v] = gibbs_from_vote_means(means, train.labels, d_v);
      rec.d[v] = disagreement_from_vote_means(means, d_v);
      r_emp[v] = gibbs_from_vote_means(means, train.labels, uniform_dist);
      d_emp[v] = disagreement_from_vote_means(means, uniform_dist);

      double z = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        dists[v][i] *= std::exp(-train.labels[i] * q * votes[i]);
        z += dists[v][i];
      }
      for (double& w : dists[v]) w /= z;
    });

    rec.cbound = mv_cbound(rho.rho, r_emp, d_emp);
    const Metrics train_metrics = vote_metrics(sums, rho.rho, train.labels);
    rec.train_error = train_metrics.error;
    rec.train_f1 = train_metrics.f1;
    if (eval_set) {
      const Metrics test_metrics = vote_metrics(sums, rho.rho, eval_set->labels, true, &test_sums);
      rec.test_error = test_metrics.error;
      rec.test_f1 = test_metrics.f1;
    }
    trace.push_back(std::move(rec));
  }

  MVMajorityVote model;
  model.per_view = std::move(per_view);
  model.rho = rho;
  model.iterations = T;
  model.config = config;
  model.algorithm = "mv-adaboost";
  model.view_names = train.view_names;
  return TrainResult{std::move(model), std::move(trace), {}};
}

MVMajorityVote mv_uniform_vote(const MultiviewDataset& train, int max_depth) {
  train.validate();
  if (max_depth < 1) throw InputError("train: depth must be >= 1");
  const ExampleDistribution uniform_dist = ExampleDistribution::uniform(train.n());

  MVMajorityVote model;
  for (std::size_t v = 0; v < train.num_views(); ++v) {
    WeakVoter voter = train_tree(train.views[v], train.labels, uniform_dist, max_depth, v);
    model.per_view.push_back(ViewPosterior({std::move(voter)}, {1.0}));
  }
  model.rho = SimplexWeights::uniform(train.num_views());
  model.iterations = 1;
  model.config.iterations = 1;
  model.config.max_depth = max_depth;
  model.algorithm = "mv-mv";
  model.view_names = train.view_names;
  return model;
}

void MVMajorityVote::validate() const {
  if (per_view.empty()) throw InputError("model: no views");
  if (iterations == 0) throw InputError("model: zero iterations");
  for (const ViewPosterior& post : per_view)
    if (post.size() != iterations)
      throw InputError("model: view has " + std::to_string(post.size()) + " voters, expected " +
                       std::to_string(iterations));
  if (rho.size() != per_view.size()) throw InputError("model: rho size mismatch");
  rho.validate();
}

double MVMajorityVote::predict_margin(const std::vector<std::vector<double>>& x) const {
  if (x.size() != per_view.size()) throw InputError("predict: expected " +
                                                    std::to_string(per_view.size()) + " views");
  double margin = 0.0;
  for (std::size_t v = 0; v < per_view.size(); ++v) {
    const auto& post = per_view[v];
    double view_sum = 0.0;
    for (std::size_t k = 0; k < post.size(); ++k) {
      if (post.voters()[k].max_feature_index() >= std::int32_t(x[v].size()))
        throw InputError("predict: view " + std::to_string(v) + " feature dimension mismatch");
      view_sum += post.q_weights()[k] * post.voters()[k].predict(x[v]);
    }
    margin += rho.rho[v] * view_sum;
  }
  return margin;
}

int MVMajorityVote::predict(const std::vector<std::vector<double>>& x) const {
  return predict_margin(x) >= 0.0 ? +1 : -1;
}

double MVMajorityVote::margin_for_row(const MultiviewDataset& ds, std::size_t row) const {
  if (ds.num_views() != per_view.size()) throw InputError("predict: view count mismatch");
  double margin = 0.0;
  for (std::size_t v = 0; v < per_view.size(); ++v) {
    const auto& post = per_view[v];
    double view_sum = 0.0;
    const auto x = ds.views[v].row(row);
    for (std::size_t k = 0; k < post.size(); ++k) {
      if (post.voters()[k].max_feature_index() >= std::int32_t(x.size()))
        throw InputError("predict: view " + std::to_string(v) + " feature dimension mismatch");
      view_sum += post.q_weights()[k] * post.voters()[k].predict(x);
    }
    margin += rho.rho[v] * view_sum;
  }
  return margin;
}

int MVMajorityVote::predict_row(const MultiviewDataset& ds, std::size_t row) const {
  return margin_for_row(ds, row) >= 0.0 ? +1 : -1;
}

std::vector<int> MVMajorityVote::predict_all(const MultiviewDataset& ds) const {
  std::vector<int> preds(ds.n());
  for (std::size_t i = 0; i < ds.n(); ++i) preds[i] = predict_row(ds, i);
  return preds;
}

namespace {

void append_double(std::string& out, double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  out.append(buf, res.ptr);
}

void append_block_header(std::string& out, const char* stem, std::size_t num_views) {
  for (std::size_t v = 0; v < num_views; ++v) {
    out.push_back(',');
    out += stem;
    out += std::to_string(v);
  }
}

}  // namespace

std::string trace_csv_string(const BoostTrace& trace, std::size_t num_views) {
  const bool has_test = !trace.empty() && trace.front().test_error.has_value();
  std::string out = "t";
  append_block_header(out, "eps_", num_views);
  append_block_header(out, "q_", num_views);
  append_block_header(out, "r_", num_views);
  append_block_header(out, "d_", num_views);
  append_block_header(out, "rho_", num_views);
  out += ",cbound,train_err,train_f1";
  if (has_test) out += ",test_err,test_f1";
  out.push_back('\n');

  for (const IterationRecord& rec : trace) {
    out += std::to_string(rec.t);
    for (const auto* block : {&rec.eps, &rec.q, &rec.r, &rec.d, &rec.rho}) {
      for (double x : *block) {
        out.push_back(',');
        append_double(out, x);
      }
    }
    out.push_back(',');
    if (rec.cbound)
      append_double(out, *rec.cbound);
    else
      out += "inf";
    out.push_back(',');
    append_double(out, rec.train_error);
    out.push_back(',');
    append_double(out, rec.train_f1);
    if (has_test) {
      out.push_back(',');
      append_double(out, rec.test_error.value());
      out.push_back(',');
      append_double(out, rec.test_f1.value());
    }
    out.push_back('\n');
  }
  return out;
}

void write_trace_csv(const BoostTrace& trace, std::size_t num_views, std::ostream& out) {
  out << trace_csv_string(trace, num_views);
}

}  // namespace pbmv
