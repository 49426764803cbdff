#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pbmv/matrix.hpp"

namespace pbmv {

// Nonnegative weights over n examples summing to 1 (the boosting distribution).
class ExampleDistribution {
 public:
  explicit ExampleDistribution(std::vector<double> weights);
  static ExampleDistribution uniform(std::size_t n);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }
  std::span<const double> weights() const { return weights_; }

 private:
  std::vector<double> weights_;
};

struct TreeNode {
  std::int32_t feature = -1;
  double threshold = 0.0;
  std::int32_t left = -1;   // < 0 for leaves
  std::int32_t right = -1;
  int label = 0;            // -1 or +1, meaningful for leaves only

  bool is_leaf() const { return left < 0; }
  bool operator==(const TreeNode&) const = default;
};

// Depth-limited binary decision tree over a single view, predicting {-1,+1}.
// Descends left iff feature value <= threshold.
class WeakVoter {
 public:
  WeakVoter(std::size_t view_index, int max_depth, std::vector<TreeNode> nodes);

  int predict(std::span<const double> x) const;
  std::vector<std::int8_t> predict_rows(const Matrix& view_matrix) const;

  std::size_t view_index() const { return view_index_; }
  int max_depth() const { return max_depth_; }
  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::int32_t max_feature_index() const { return max_feature_; }

  bool operator==(const WeakVoter&) const = default;

 private:
  std::size_t view_index_ = 0;
  int max_depth_ = 1;
  std::int32_t max_feature_ = -1;
  std::vector<TreeNode> nodes_;  // root at index 0
};

// Trains a tree minimizing distribution-weighted impurity on one view.
//
// max_depth == 1: exact minimizer of the weighted 0-1 error over all
// candidate stumps. Candidates are scanned in a fixed order and a later
// candidate replaces the incumbent only when strictly better, which pins the
// tie-break (lowest feature index, then lowest threshold):
//   1. the constant +1 predictor, then the constant -1 predictor;
//   2. for each feature in increasing order, each threshold in increasing
//      order, the (left=-1,right=+1) stump and then the (left=+1,right=-1)
//      stump.
// Thresholds sit at midpoints of consecutive distinct sorted feature values;
// if the midpoint rounds up to the larger value it falls back to the smaller
// one, so the predicate split always matches the scanned split. Candidate
// errors are compared after summation in ascending example order, which keeps
// the selected voter reproducible by any scanner that follows the same
// candidate order.
//
// max_depth >= 2: greedy top-down with distribution-weighted Gini impurity,
// same threshold candidates and tie-break per node, leaves labeled by
// weighted majority sign with ties resolved to +1.
WeakVoter train_tree(const Matrix& view_matrix, std::span<const int> labels,
                     const ExampleDistribution& dist, int max_depth,
                     std::size_t view_index = 0);

// Distribution-weighted 0-1 error of the voter on its view.
double weighted_error(const WeakVoter& voter, const Matrix& view_matrix,
                      std::span<const int> labels, const ExampleDistribution& dist);

}  // namespace pbmv
