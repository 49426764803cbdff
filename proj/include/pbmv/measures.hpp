#pragma once

#include <optional>
#include <span>
#include <vector>

#include "pbmv/dataset.hpp"
#include "pbmv/weak.hpp"

namespace pbmv {

// How the expectation over a view's trained voters is taken when computing
// Gibbs risk, disagreement and margins. `posterior` weights voter k by
// |q_k| / sum_j |q_j| (uniform when all q are zero); `uniform` ignores the
// q weights entirely.
enum class VoterWeighting { posterior, uniform };

// The voters trained for one view together with their raw boosting weights.
class ViewPosterior {
 public:
  ViewPosterior() = default;
  ViewPosterior(std::vector<WeakVoter> voters, std::vector<double> q_weights);

  void add_voter(WeakVoter voter, double q_weight);

  std::size_t size() const { return voters_.size(); }
  const std::vector<WeakVoter>& voters() const { return voters_; }
  std::span<const double> q_weights() const { return q_weights_; }

  // |q|-normalized, nonnegative, sums to 1; uniform when all q are zero.
  std::span<const double> normalized_weights() const { return normalized_; }

  std::vector<double> weights(VoterWeighting w) const;

 private:
  void renormalize();

  std::vector<WeakVoter> voters_;
  std::vector<double> q_weights_;
  std::vector<double> normalized_;
};

// Per-view Gibbs risks and disagreements together with the view weights.
struct VoteStats {
  std::vector<double> r;
  std::vector<double> d;
  std::vector<double> rho;

  // r_v, d_v in [0,1], d_v <= 1/2 + 1e-9, rho on the simplex.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Empirical PAC-Bayes quantities. All expectations over examples use the
// given distribution; expectations over voters use the posterior weights.
// ---------------------------------------------------------------------------

// sum_i dist_i * sum_k w_k * 1[h_k(x_i) != y_i]
double view_gibbs_risk(const ViewPosterior& post, const Matrix& view_matrix,
                       std::span<const int> labels, const ExampleDistribution& dist,
                       VoterWeighting weighting = VoterWeighting::posterior);

// sum_i dist_i * sum_{k,l} w_k w_l * 1[h_k(x_i) != h_l(x_i)]; label-free.
// Never exceeds 1/2.
double view_disagreement(const ViewPosterior& post, const Matrix& view_matrix,
                         const ExampleDistribution& dist,
                         VoterWeighting weighting = VoterWeighting::posterior);

// Same quantities from a precomputed per-example mean vote
// m_i = sum_k w_k h_k(x_i) in [-1,1]:
//   gibbs        = sum_i dist_i (1 - y_i m_i) / 2
//   disagreement = sum_i dist_i (1 - m_i^2) / 2
double gibbs_from_vote_means(std::span<const double> vote_means,
                             std::span<const int> labels,
                             const ExampleDistribution& dist);
double disagreement_from_vote_means(std::span<const double> vote_means,
                                    const ExampleDistribution& dist);

// rho-average of view_gibbs_risk over views.
double rho_gibbs_risk(std::span<const ViewPosterior> per_view, std::span<const double> rho,
                      const MultiviewDataset& ds, const ExampleDistribution& dist,
                      VoterWeighting weighting = VoterWeighting::posterior);

// Disagreement between voter pairs drawn across all views:
// sum_i dist_i (1 - m_i^2)/2 with m_i = sum_v rho_v sum_k w_{v,k} h_{v,k}(x_i^v).
double global_disagreement(std::span<const ViewPosterior> per_view, std::span<const double> rho,
                           const MultiviewDataset& ds, const ExampleDistribution& dist,
                           VoterWeighting weighting = VoterWeighting::posterior);

// Distribution-weighted 0-1 error of the deterministic vote
// sign(sum_v rho_v sum_k w_{v,k} h_{v,k}(x^v)), sign(0) = +1. This vote uses
// the normalized posterior weights, i.e. the vote whose margin moments feed
// the C-Bound below.
double majority_vote_error(std::span<const ViewPosterior> per_view, std::span<const double> rho,
                           const MultiviewDataset& ds, const ExampleDistribution& dist,
                           VoterWeighting weighting = VoterWeighting::posterior);

// First and second moments of the margin
// M(x,y) = sum_v rho_v sum_k w_{v,k} * y * h_{v,k}(x^v):
//   mu1 = sum_i dist_i M(x_i,y_i)      (Gibbs risk = (1 - mu1)/2)
//   mu2 = sum_i dist_i M(x_i,y_i)^2    (disagreement = (1 - mu2)/2)
struct MarginMoments {
  double mu1 = 0.0;
  double mu2 = 0.0;
};
MarginMoments margin_moments(std::span<const ViewPosterior> per_view,
                             std::span<const double> rho, const MultiviewDataset& ds,
                             const ExampleDistribution& dist,
                             VoterWeighting weighting = VoterWeighting::posterior);

// ---------------------------------------------------------------------------
// C-Bound forms. Feasible when the averaged Gibbs risk and disagreement are
// both below 1/2; infeasible inputs yield nullopt.
// ---------------------------------------------------------------------------

// View-averaged form: 1 - (1 - 2 sum_v rho_v r_v)^2 / (1 - 2 sum_v rho_v d_v),
// clipped to [0,1].
std::optional<double> mv_cbound(std::span<const double> rho, std::span<const double> r,
                                std::span<const double> d);

// Global form: 1 - (1 - 2*gibbs)^2 / (1 - 2*disagreement), clipped to [0,1].
std::optional<double> cbound_from(double gibbs, double disagreement);

// ---------------------------------------------------------------------------
// Binary KL and its numeric inversion.
// ---------------------------------------------------------------------------

// kl(q||p) = q ln(q/p) + (1-q) ln((1-q)/(1-p)) with 0 ln 0 = 0. Returns
// +infinity when p is 0 or 1 and q does not match it.
double binary_kl(double q, double p);

// Largest r <= cap with kl(q||r) <= budget, by bisection to absolute
// tolerance 1e-9; nullopt when no such r exists (q > cap with
// kl(q||cap) > budget). cap in (0,1].
std::optional<double> kl_sup_inverse(double q, double budget, double cap);

// Smallest d >= 0 with kl(q||d) <= budget, by bisection to 1e-9.
double kl_inf_inverse(double q, double budget);

// KL(w || uniform over w.size() items) = ln(m) - H(w), nonnegative.
double kl_to_uniform(std::span<const double> weights);

// ---------------------------------------------------------------------------
// Computable generalization bounds.
// ---------------------------------------------------------------------------

// Catoni-style bound on the true Gibbs risk:
//   1/(1-e^-C) * (1 - exp(-(C*gibbs_empirical
//        + (kl_views_expected + kl_hyper + ln(1/delta)) / n))),
// clipped to [0,1]. kl_views_expected is the rho-average of KL(Q_v||P_v) and
// kl_hyper is KL(rho||pi).
double catoni_bound(double gibbs_empirical, double kl_views_expected, double kl_hyper,
                    std::size_t n, double C, double delta);

struct PerViewStats {
  double gibbs = 0.0;         // empirical view Gibbs risk
  double disagreement = 0.0;  // empirical view disagreement
  double kl = 0.0;            // KL(Q_v || P_v)
};

// C-Bound generalization bound with kl-intervals. Per view the risk interval
// budget is (kl_v + ln(4*sqrt(n)/delta))/n with the sup capped at 1/2, and
// the disagreement interval budget is (2*kl_v + ln(4*sqrt(n)/delta))/n.
// Returns 1 (vacuous) when the averaged sup-risk or inf-disagreement reaches
// 1/2.
double theorem_cbound_bound(std::span<const PerViewStats> per_view,
                            std::span<const double> rho, std::size_t n, double delta);

}  // namespace pbmv
