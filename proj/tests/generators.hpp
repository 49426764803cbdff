// Seeded random inputs shared by the unit and acceptance suites.
#pragma once

#include <vector>

#include "pbmv/boost.hpp"
#include "pbmv/dataset.hpp"
#include "pbmv/measures.hpp"
#include "pbmv/rng.hpp"
#include "pbmv/weak.hpp"

namespace generators {

inline pbmv::Matrix random_matrix(pbmv::Rng& rng, std::size_t rows, std::size_t cols,
                                  double lo = -1.0, double hi = 1.0) {
  pbmv::Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = rng.uniform(lo, hi);
  return m;
}

inline std::vector<int> random_labels(pbmv::Rng& rng, std::size_t n) {
  std::vector<int> labels(n);
  for (int& y : labels) y = rng.sign();
  return labels;
}

inline pbmv::ExampleDistribution random_distribution(pbmv::Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  double sum = 0.0;
  for (double& x : w) {
    x = rng.uniform(0.0, 1.0) + 1e-6;
    sum += x;
  }
  for (double& x : w) x /= sum;
  return pbmv::ExampleDistribution(std::move(w));
}

inline std::vector<double> random_simplex(pbmv::Rng& rng, std::size_t n) {
  std::vector<double> w(n);
  double sum = 0.0;
  for (double& x : w) {
    x = rng.uniform(0.0, 1.0) + 1e-6;
    sum += x;
  }
  for (double& x : w) x /= sum;
  return w;
}

// A random depth-1 stump over `cols` features with values in [-1,1].
inline pbmv::WeakVoter random_stump(pbmv::Rng& rng, std::size_t view_index, std::size_t cols) {
  using pbmv::TreeNode;
  const std::int32_t feature = std::int32_t(rng.index(cols));
  const double threshold = rng.uniform(-0.9, 0.9);
  const int left = rng.sign();
  std::vector<TreeNode> nodes;
  nodes.push_back(TreeNode{feature, threshold, 1, 2, 0});
  nodes.push_back(TreeNode{-1, 0.0, -1, -1, left});
  nodes.push_back(TreeNode{-1, 0.0, -1, -1, -left});
  return pbmv::WeakVoter(view_index, 1, std::move(nodes));
}

struct RandomTriple {
  pbmv::MultiviewDataset dataset;
  std::vector<pbmv::ViewPosterior> per_view;
  std::vector<double> rho;
  pbmv::ExampleDistribution dist;
};

// Random (model, dataset, distribution) triple. Voters are random stumps with
// leaves flipped toward the labels when they do worse than chance under the
// drawn distribution, which keeps Gibbs risks mostly below 1/2; q weights mix
// signs. require_gibbs_below_half redraws until the rho-weighted Gibbs risk
// is feasible.
inline RandomTriple random_triple(pbmv::Rng& rng, bool require_gibbs_below_half) {
  for (;;) {
    RandomTriple triple{.dataset = {}, .per_view = {}, .rho = {}, .dist = pbmv::ExampleDistribution::uniform(1)};
    const std::size_t num_views = 1 + rng.index(3);
    const std::size_t n = 20 + rng.index(30);
    triple.dataset.labels = random_labels(rng, n);
    for (std::size_t v = 0; v < num_views; ++v) {
      triple.dataset.views.push_back(random_matrix(rng, n, 1 + rng.index(3)));
      triple.dataset.view_names.push_back("view" + std::to_string(v));
    }
    triple.dist = random_distribution(rng, n);
    triple.rho = random_simplex(rng, num_views);

    for (std::size_t v = 0; v < num_views; ++v) {
      const std::size_t num_voters = 1 + rng.index(4);
      std::vector<pbmv::WeakVoter> voters;
      std::vector<double> q;
      for (std::size_t k = 0; k < num_voters; ++k) {
        pbmv::WeakVoter voter = random_stump(rng, v, triple.dataset.views[v].cols());
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i)
          if (voter.predict(triple.dataset.views[v].row(i)) != triple.dataset.labels[i])
            err += triple.dist[i];
        if (err > 0.5) {
          auto nodes = voter.nodes();
          for (auto& node : nodes)
            if (node.is_leaf()) node.label = -node.label;
          voter = pbmv::WeakVoter(v, 1, std::move(nodes));
        }
        voters.push_back(std::move(voter));
        // mostly positive weights, occasionally negative or zero-ish
        const double magnitude = rng.uniform(0.05, 1.5);
        q.push_back(rng.uniform() < 0.15 ? -magnitude : magnitude);
      }
      triple.per_view.emplace_back(std::move(voters), std::move(q));
    }

    if (!require_gibbs_below_half) return triple;
    const double gibbs = pbmv::rho_gibbs_risk(triple.per_view, triple.rho, triple.dataset,
                                              triple.dist);
    if (gibbs < 0.5) return triple;
  }
}

}  // namespace generators
