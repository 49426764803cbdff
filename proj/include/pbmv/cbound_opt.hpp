#pragma once

#include <span>
#include <vector>

namespace pbmv {

// Nonnegative weights over views summing to 1.
struct SimplexWeights {
  std::vector<double> rho;

  static SimplexWeights uniform(std::size_t num_views);
  std::size_t size() const { return rho.size(); }
  void validate() const;  // throws InputError off the simplex
};

// Euclidean projection onto the probability simplex.
std::vector<double> project_to_simplex(std::span<const double> v);

// (1 - 2<rho,r>)^2 / (1 - 2<rho,d>)
double cbound_objective(std::span<const double> rho, std::span<const double> r,
                        std::span<const double> d);

struct OptimizeResult {
  SimplexWeights rho;
  bool feasible = true;
  double objective = 0.0;  // meaningful when feasible
};

// Maximizes cbound_objective over the simplex restricted to
// <rho,r> <= 1/2 - 1e-9 and <rho,d> <= 1/2 - 1e-9.
//
// The objective is convex in rho (squared affine over positive affine), so
// its maximum sits at an extreme point of that polytope. All extreme points
// are enumerated in closed form (simplex vertices, simplex edges meeting one
// constraint plane, two-dimensional faces meeting both planes), which makes
// the search exact; projected-gradient ascent with backtracking, multi-started
// from the uniform point, rho_init and each vertex, runs on top as a polish
// pass. Among candidates within 1e-12 of the best objective the earliest
// wins, with the uniform point ordered first, so symmetric inputs return the
// uniform point. If the restricted region is empty, returns rho_init
// unchanged with feasible = false.
OptimizeResult optimize_view_weights(std::span<const double> r, std::span<const double> d,
                                     const SimplexWeights& rho_init);

// Maximizes the squared-margin ratio mu1(rho)^2 / mu2(rho) over the simplex,
// where, for per-view mean votes m_v(i) = view_margins[v][i] in [-1,1],
//   mu1(rho) = sum_i dist_i y_i sum_v rho_v m_v(i)        (linear in rho)
//   mu2(rho) = sum_i dist_i (sum_v rho_v m_v(i))^2        (quadratic in rho).
// This is the margin form of the majority-vote bound: maximizing the ratio
// minimizes 1 - mu1^2/mu2, trading view accuracy against cross-view
// diversity, and its maximizer is generally interior to the simplex.
//
// Solved exactly for small V by enumerating supports of the equivalent
// quadratic program (minimize rho' S rho subject to <a,rho> = 1, rho >= 0,
// using the scale invariance of the ratio), plus the same multi-start
// projected-gradient polish. Candidates with mu1 <= 0 are rejected; if none
// remains (no mixture does better than chance), returns rho_init with
// feasible = false.
OptimizeResult optimize_view_weights_margin(std::span<const std::vector<double>> view_margins,
                                            std::span<const int> labels,
                                            std::span<const double> dist,
                                            const SimplexWeights& rho_init);

}  // namespace pbmv
