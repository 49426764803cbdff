#include "pbmv/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace pbmv {

namespace {

constexpr double kFeasible = 0.5;

double clip01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

ViewPosterior::ViewPosterior(std::vector<WeakVoter> voters, std::vector<double> q_weights)
    : voters_(std::move(voters)), q_weights_(std::move(q_weights)) {
  if (voters_.empty()) throw InputError("posterior: no voters");
  if (voters_.size() != q_weights_.size())
    throw InputError("posterior: voter/weight count mismatch");
  renormalize();
}

void ViewPosterior::add_voter(WeakVoter voter, double q_weight) {
  voters_.push_back(std::move(voter));
  q_weights_.push_back(q_weight);
  renormalize();
}

void ViewPosterior::renormalize() {
  normalized_.resize(q_weights_.size());
  double total = 0.0;
  for (double q : q_weights_) total += std::abs(q);
  if (total > 0.0) {
    for (std::size_t k = 0; k < q_weights_.size(); ++k)
      normalized_[k] = std::abs(q_weights_[k]) / total;
  } else {
    std::fill(normalized_.begin(), normalized_.end(), 1.0 / double(normalized_.size()));
  }
}

std::vector<double> ViewPosterior::weights(VoterWeighting w) const {
  if (w == VoterWeighting::posterior) return normalized_;
  return std::vector<double>(voters_.size(), 1.0 / double(voters_.size()));
}

void VoteStats::validate() const {
  if (r.size() != rho.size() || d.size() != rho.size())
    throw InputError("vote stats: size mismatch");
  for (double x : r)
    if (!(x >= 0.0 && x <= 1.0)) throw InputError("vote stats: r outside [0,1]");
  for (double x : d)
    if (!(x >= 0.0 && x <= 0.5 + 1e-9)) throw InputError("vote stats: d outside [0,1/2]");
  double sum = 0.0;
  for (double x : rho) {
    if (!(x >= 0.0)) throw InputError("vote stats: negative rho");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InputError("vote stats: rho does not sum to 1");
}

double view_gibbs_risk(const ViewPosterior& post, const Matrix& view_matrix,
                       std::span<const int> labels, const ExampleDistribution& dist,
                       VoterWeighting weighting) {
  if (view_matrix.rows() != labels.size() || dist.size() != labels.size())
    throw InputError("view_gibbs_risk: shape mismatch");
  const std::vector<double> w = post.weights(weighting);
  std::vector<std::vector<std::int8_t>> votes;
  votes.reserve(post.size());
  for (const WeakVoter& voter : post.voters()) votes.push_back(voter.predict_rows(view_matrix));

  double risk = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    double err = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k)
      if (int(votes[k][i]) != labels[i]) err += w[k];
    risk += dist[i] * err;
  }
  return clip01(risk);
}

double view_disagreement(const ViewPosterior& post, const Matrix& view_matrix,
                         const ExampleDistribution& dist, VoterWeighting weighting) {
  if (view_matrix.rows() != dist.size()) throw InputError("view_disagreement: shape mismatch");
  const std::vector<double> w = post.weights(weighting);
  std::vector<std::vector<std::int8_t>> votes;
  votes.reserve(post.size());
  for (const WeakVoter& voter : post.voters()) votes.push_back(voter.predict_rows(view_matrix));

  // pair sum via the mean-vote identity: sum_{k,l} w_k w_l 1[h_k != h_l]
  // = (1 - (sum_k w_k h_k)^2) / 2
  double total = 0.0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    double mean = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) mean += w[k] * votes[k][i];
    total += dist[i] * 0.5 * (1.0 - mean * mean);
  }
  return clip01(total);
}

double gibbs_from_vote_means(std::span<const double> vote_means, std::span<const int> labels,
                             const ExampleDistribution& dist) {
  double risk = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    risk += dist[i] * 0.5 * (1.0 - labels[i] * vote_means[i]);
  return clip01(risk);  // rounding can overshoot [0,1] by one ulp
}

double disagreement_from_vote_means(std::span<const double> vote_means,
                                    const ExampleDistribution& dist) {
  double total = 0.0;
  for (std::size_t i = 0; i < vote_means.size(); ++i)
    total += dist[i] * 0.5 * (1.0 - vote_means[i] * vote_means[i]);
  return clip01(total);
}

namespace {

// per-example mean vote sum_v rho_v sum_k w_{v,k} h_{v,k}(x_i^v)
std::vector<double> model_vote_means(std::span<const ViewPosterior> per_view,
                                     std::span<const double> rho, const MultiviewDataset& ds,
                                     VoterWeighting weighting) {
  if (per_view.size() != rho.size() || per_view.size() != ds.num_views())
    throw InputError("vote means: view count mismatch");
  std::vector<double> means(ds.n(), 0.0);
  for (std::size_t v = 0; v < per_view.size(); ++v) {
    const std::vector<double> w = per_view[v].weights(weighting);
    for (std::size_t k = 0; k < per_view[v].size(); ++k) {
      const std::vector<std::int8_t> votes = per_view[v].voters()[k].predict_rows(ds.views[v]);
      const double coeff = rho[v] * w[k];
      for (std::size_t i = 0; i < means.size(); ++i) means[i] += coeff * votes[i];
    }
  }
  return means;
}

}  // namespace

double rho_gibbs_risk(std::span<const ViewPosterior> per_view, std::span<const double> rho,
                      const MultiviewDataset& ds, const ExampleDistribution& dist,
                      VoterWeighting weighting) {
  if (per_view.size() != rho.size() || per_view.size() != ds.num_views())
    throw InputError("rho_gibbs_risk: view count mismatch");
  double risk = 0.0;
  for (std::size_t v = 0; v < per_view.size(); ++v)
    risk += rho[v] * view_gibbs_risk(per_view[v], ds.views[v], ds.labels, dist, weighting);
  return clip01(risk);
}

double global_disagreement(std::span<const ViewPosterior> per_view, std::span<const double> rho,
                           const MultiviewDataset& ds, const ExampleDistribution& dist,
                           VoterWeighting weighting) {
  const std::vector<double> means = model_vote_means(per_view, rho, ds, weighting);
  return disagreement_from_vote_means(means, dist);
}

double majority_vote_error(std::span<const ViewPosterior> per_view, std::span<const double> rho,
                           const MultiviewDataset& ds, const ExampleDistribution& dist,
                           VoterWeighting weighting) {
  const std::vector<double> means = model_vote_means(per_view, rho, ds, weighting);
  double err = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    const int pred = means[i] >= 0.0 ? +1 : -1;
    if (pred != ds.labels[i]) err += dist[i];
  }
  return err;
}

MarginMoments margin_moments(std::span<const ViewPosterior> per_view, std::span<const double> rho,
                             const MultiviewDataset& ds, const ExampleDistribution& dist,
                             VoterWeighting weighting) {
  const std::vector<double> means = model_vote_means(per_view, rho, ds, weighting);
  MarginMoments m;
  for (std::size_t i = 0; i < means.size(); ++i) {
    const double margin = ds.labels[i] * means[i];
    m.mu1 += dist[i] * margin;
    m.mu2 += dist[i] * margin * margin;
  }
  return m;
}

std::optional<double> cbound_from(double gibbs, double disagreement) {
  if (!(gibbs < kFeasible) || !(disagreement < kFeasible)) return std::nullopt;
  const double a = 1.0 - 2.0 * gibbs;
  const double b = 1.0 - 2.0 * disagreement;
  return clip01(1.0 - a * a / b);
}

std::optional<double> mv_cbound(std::span<const double> rho, std::span<const double> r,
                                std::span<const double> d) {
  if (rho.size() != r.size() || rho.size() != d.size())
    throw InputError("mv_cbound: size mismatch");
  double rbar = 0.0, dbar = 0.0;
  for (std::size_t v = 0; v < rho.size(); ++v) {
    rbar += rho[v] * r[v];
    dbar += rho[v] * d[v];
  }
  return cbound_from(rbar, dbar);
}

double binary_kl(double q, double p) {
  if (!(q >= 0.0 && q <= 1.0)) throw InputError("binary_kl: q outside [0,1]");
  if (!(p >= 0.0 && p <= 1.0)) throw InputError("binary_kl: p outside [0,1]");
  // 0 ln 0 = 0; q/p with p = 0 propagates to +infinity as required
  double kl = 0.0;
  if (q > 0.0) kl += q * std::log(q / p);
  if (q < 1.0) kl += (1.0 - q) * std::log((1.0 - q) / (1.0 - p));
  return kl;
}

std::optional<double> kl_sup_inverse(double q, double budget, double cap) {
  if (!(q >= 0.0 && q <= 1.0)) throw InputError("kl_sup_inverse: q outside [0,1]");
  if (!(budget >= 0.0)) throw InputError("kl_sup_inverse: negative budget");
  if (!(cap > 0.0 && cap <= 1.0)) throw InputError("kl_sup_inverse: cap outside (0,1]");

  if (binary_kl(q, cap) <= budget) return cap;
  if (q >= cap) return std::nullopt;  // kl only grows as r moves below cap

  // kl(q||r) increases in r on [q, cap]; keep lo on the feasible side
  double lo = q, hi = cap;
  while (hi - lo > 1e-9) {
    const double mid = lo + (hi - lo) / 2.0;
    if (binary_kl(q, mid) <= budget)
      lo = mid;
    else
      hi = mid;
  }
  return lo;
}

double kl_inf_inverse(double q, double budget) {
  if (!(q >= 0.0 && q <= 1.0)) throw InputError("kl_inf_inverse: q outside [0,1]");
  if (!(budget >= 0.0)) throw InputError("kl_inf_inverse: negative budget");
  if (q == 0.0) return 0.0;
  if (binary_kl(q, 0.0) <= budget) return 0.0;

  // kl(q||d) decreases in d on (0, q]; keep hi on the feasible side
  double lo = 0.0, hi = q;
  while (hi - lo > 1e-9) {
    const double mid = lo + (hi - lo) / 2.0;
    if (binary_kl(q, mid) <= budget)
      hi = mid;
    else
      lo = mid;
  }
  return hi;
}

double kl_to_uniform(std::span<const double> weights) {
  const double m = double(weights.size());
  double kl = 0.0;
  for (double w : weights)
    if (w > 0.0) kl += w * std::log(w * m);
  return std::max(kl, 0.0);
}

double catoni_bound(double gibbs_empirical, double kl_views_expected, double kl_hyper,
                    std::size_t n, double C, double delta) {
  if (!(C > 0.0)) throw InputError("catoni_bound: C must be positive");
  if (!(delta > 0.0 && delta <= 1.0)) throw InputError("catoni_bound: delta outside (0,1]");
  if (!(gibbs_empirical >= 0.0 && gibbs_empirical <= 1.0))
    throw InputError("catoni_bound: empirical risk outside [0,1]");
  if (!(kl_views_expected >= 0.0) || !(kl_hyper >= 0.0))
    throw InputError("catoni_bound: negative KL term");
  if (n == 0) throw InputError("catoni_bound: n must be >= 1");

  const double complexity =
      (kl_views_expected + kl_hyper + std::log(1.0 / delta)) / double(n);
  const double inner = 1.0 - std::exp(-(C * gibbs_empirical + complexity));
  return clip01(inner / (1.0 - std::exp(-C)));
}

double theorem_cbound_bound(std::span<const PerViewStats> per_view, std::span<const double> rho,
                            std::size_t n, double delta) {
  if (per_view.size() != rho.size()) throw InputError("theorem bound: size mismatch");
  if (!(delta > 0.0 && delta <= 1.0)) throw InputError("theorem bound: delta outside (0,1]");
  if (n == 0) throw InputError("theorem bound: n must be >= 1");

  const double log_term = std::log(4.0 * std::sqrt(double(n)) / delta);
  double sup_risk = 0.0;
  double inf_dis = 0.0;
  for (std::size_t v = 0; v < per_view.size(); ++v) {
    const double r_budget = (per_view[v].kl + log_term) / double(n);
    const double d_budget = (2.0 * per_view[v].kl + log_term) / double(n);
    // An empty risk interval can only happen with empirical risk above the
    // 1/2 cap; treat its sup as the cap, which drives the bound vacuous.
    const double sup_r = kl_sup_inverse(per_view[v].gibbs, r_budget, 0.5).value_or(0.5);
    sup_risk += rho[v] * sup_r;
    inf_dis += rho[v] * kl_inf_inverse(per_view[v].disagreement, d_budget);
  }
  if (!(sup_risk < 0.5) || !(inf_dis < 0.5)) return 1.0;
  const double a = 1.0 - 2.0 * sup_risk;
  const double b = 1.0 - 2.0 * inf_dis;
  return clip01(1.0 - a * a / b);
}

}  // namespace pbmv
