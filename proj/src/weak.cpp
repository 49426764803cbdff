#include "pbmv/weak.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pbmv {

ExampleDistribution::ExampleDistribution(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) throw InputError("distribution: empty");
  double sum = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) throw InputError("distribution: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InputError("distribution: weights sum to " + std::to_string(sum) + ", expected 1");
}

ExampleDistribution ExampleDistribution::uniform(std::size_t n) {
  if (n == 0) throw InputError("distribution: empty");
  return ExampleDistribution(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

WeakVoter::WeakVoter(std::size_t view_index, int max_depth, std::vector<TreeNode> nodes)
    : view_index_(view_index), max_depth_(max_depth), nodes_(std::move(nodes)) {
  if (nodes_.empty()) throw InputError("voter: empty tree");
  if (max_depth_ < 1) throw InputError("voter: depth must be >= 1");
  for (const TreeNode& node : nodes_) {
    if (node.is_leaf()) {
      if (node.label != -1 && node.label != 1) throw InputError("voter: leaf label not in {-1,+1}");
    } else {
      if (node.feature < 0) throw InputError("voter: split node without feature");
      if (node.left < 0 || node.right < 0 || node.left >= std::int32_t(nodes_.size()) ||
          node.right >= std::int32_t(nodes_.size()))
        throw InputError("voter: child index out of range");
      max_feature_ = std::max(max_feature_, node.feature);
    }
  }
}

int WeakVoter::predict(std::span<const double> x) const {
  std::int32_t at = 0;
  for (;;) {
    const TreeNode& node = nodes_[at];
    if (node.is_leaf()) return node.label;
    at = x[node.feature] <= node.threshold ? node.left : node.right;
  }
}

std::vector<std::int8_t> WeakVoter::predict_rows(const Matrix& view_matrix) const {
  if (max_feature_ >= std::int32_t(view_matrix.cols()))
    throw InputError("voter: view has " + std::to_string(view_matrix.cols()) +
                     " features, tree uses index " + std::to_string(max_feature_));
  std::vector<std::int8_t> out(view_matrix.rows());
  for (std::size_t i = 0; i < view_matrix.rows(); ++i)
    out[i] = static_cast<std::int8_t>(predict(view_matrix.row(i)));
  return out;
}

namespace {

struct BestStump {
  double error;
  bool is_constant = true;
  int constant_label = +1;
  std::int32_t feature = -1;
  double threshold = 0.0;
  int left_label = 0;
  int right_label = 0;
};

// Midpoint between consecutive distinct values a < b; falls back to a when
// rounding would put the midpoint at or beyond b, so that "x <= threshold"
// separates exactly at the scanned position.
double split_threshold(double a, double b) {
  double mid = a + (b - a) / 2.0;
  if (!(mid < b)) mid = a;
  return mid;
}

// Error of a stump candidate summed in ascending example order. Candidate
// comparisons use this canonical summation, so any implementation that scans
// the same candidate order lands on the same voter even when two candidates
// tie up to rounding (prefix sums over sorted data round differently).
double canonical_error(const Matrix& view, std::span<const int> labels,
                       std::span<const double> dist, std::int32_t feature, double threshold,
                       int left_label) {
  double err = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int pred = view(i, feature) <= threshold ? left_label : -left_label;
    if (pred != labels[i]) err += dist[i];
  }
  return err;
}

// Exact weighted 0-1 stump search; see the candidate order contract in weak.hpp.
BestStump search_best_stump(const Matrix& view, std::span<const int> labels,
                            std::span<const double> dist) {
  const std::size_t n = view.rows();
  double pos_total = 0.0, neg_total = 0.0;
  for (std::size_t i = 0; i < n; ++i) (labels[i] > 0 ? pos_total : neg_total) += dist[i];

  BestStump best;
  best.error = neg_total;  // constant +1 errs on negatives
  best.constant_label = +1;
  if (pos_total < best.error) {
    best.error = pos_total;
    best.constant_label = -1;
  }

  // prefix sums give candidate errors up to rounding; any candidate close to
  // the incumbent is re-scored canonically before it may replace it
  constexpr double kRescore = 1e-9;
  auto consider = [&](std::int32_t f, double theta, int left_label, double sweep_error) {
    if (sweep_error >= best.error + kRescore) return;
    const double exact = canonical_error(view, labels, dist, f, theta, left_label);
    if (exact < best.error) {
      best = {exact, false, 0, f, theta, left_label, -left_label};
    }
  };

  std::vector<std::size_t> order(n);
  for (std::size_t f = 0; f < view.cols(); ++f) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return view(a, f) < view(b, f); });
    double left_pos = 0.0, left_neg = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const std::size_t i = order[k];
      (labels[i] > 0 ? left_pos : left_neg) += dist[i];
      const double a = view(i, f);
      const double b = view(order[k + 1], f);
      if (!(b > a)) continue;
      const double theta = split_threshold(a, b);
      // left = -1: errs on left positives and right negatives
      consider(std::int32_t(f), theta, -1, left_pos + (neg_total - left_neg));
      // left = +1: errs on left negatives and right positives
      consider(std::int32_t(f), theta, +1, left_neg + (pos_total - left_pos));
    }
  }
  return best;
}

struct GiniSplit {
  bool found = false;
  std::int32_t feature = -1;
  double threshold = 0.0;
  double cost = 0.0;
};

double gini_part(double pos, double neg) {
  const double w = pos + neg;
  if (w <= 0.0) return 0.0;
  const double p = pos / w;
  const double q = neg / w;
  return w * (1.0 - p * p - q * q);
}

class GiniBuilder {
 public:
  GiniBuilder(const Matrix& view, std::span<const int> labels, std::span<const double> dist)
      : view_(view), labels_(labels), dist_(dist) {}

  std::vector<TreeNode> build(int max_depth) {
    std::vector<std::size_t> all(view_.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    grow(all, max_depth);
    return std::move(nodes_);
  }

 private:
  std::int32_t grow(std::vector<std::size_t>& idx, int depth_left) {
    double pos = 0.0, neg = 0.0;
    for (std::size_t i : idx) (labels_[i] > 0 ? pos : neg) += dist_[i];

    const int majority = pos >= neg ? +1 : -1;
    if (depth_left == 0 || pos == 0.0 || neg == 0.0) return make_leaf(majority);

    const GiniSplit split = best_split(idx);
    if (!split.found) return make_leaf(majority);

    std::vector<std::size_t> left, right;
    for (std::size_t i : idx) {
      (view_(i, split.feature) <= split.threshold ? left : right).push_back(i);
    }
    idx.clear();
    idx.shrink_to_fit();

    const std::int32_t node = std::int32_t(nodes_.size());
    nodes_.push_back(TreeNode{split.feature, split.threshold, -1, -1, 0});
    const std::int32_t l = grow(left, depth_left - 1);
    const std::int32_t r = grow(right, depth_left - 1);
    nodes_[node].left = l;
    nodes_[node].right = r;
    return node;
  }

  std::int32_t make_leaf(int label) {
    nodes_.push_back(TreeNode{-1, 0.0, -1, -1, label});
    return std::int32_t(nodes_.size() - 1);
  }

  GiniSplit best_split(const std::vector<std::size_t>& idx) {
    GiniSplit best;
    double pos_total = 0.0, neg_total = 0.0;
    for (std::size_t i : idx) (labels_[i] > 0 ? pos_total : neg_total) += dist_[i];

    std::vector<std::size_t> order(idx);
    for (std::size_t f = 0; f < view_.cols(); ++f) {
      std::sort(order.begin(), order.end(),
                [&](std::size_t a, std::size_t b) { return view_(a, f) < view_(b, f); });
      double left_pos = 0.0, left_neg = 0.0;
      for (std::size_t k = 0; k + 1 < order.size(); ++k) {
        const std::size_t i = order[k];
        (labels_[i] > 0 ? left_pos : left_neg) += dist_[i];
        const double a = view_(i, f);
        const double b = view_(order[k + 1], f);
        if (!(b > a)) continue;
        const double cost =
            gini_part(left_pos, left_neg) + gini_part(pos_total - left_pos, neg_total - left_neg);
        if (!best.found || cost < best.cost) {
          best = {true, std::int32_t(f), split_threshold(a, b), cost};
        }
      }
    }
    return best;
  }

  const Matrix& view_;
  std::span<const int> labels_;
  std::span<const double> dist_;
  std::vector<TreeNode> nodes_;
};

}  // namespace

WeakVoter train_tree(const Matrix& view_matrix, std::span<const int> labels,
                     const ExampleDistribution& dist, int max_depth, std::size_t view_index) {
  const std::size_t n = view_matrix.rows();
  if (n == 0) throw InputError("train_tree: empty view");
  if (labels.size() != n || dist.size() != n)
    throw InputError("train_tree: labels/distribution length does not match rows");
  if (max_depth < 1) throw InputError("train_tree: max_depth must be >= 1");

  if (max_depth == 1) {
    const BestStump best = search_best_stump(view_matrix, labels, dist.weights());
    std::vector<TreeNode> nodes;
    if (best.is_constant) {
      nodes.push_back(TreeNode{-1, 0.0, -1, -1, best.constant_label});
    } else {
      nodes.push_back(TreeNode{best.feature, best.threshold, 1, 2, 0});
      nodes.push_back(TreeNode{-1, 0.0, -1, -1, best.left_label});
      nodes.push_back(TreeNode{-1, 0.0, -1, -1, best.right_label});
    }
    return WeakVoter(view_index, 1, std::move(nodes));
  }

  GiniBuilder builder(view_matrix, labels, dist.weights());
  return WeakVoter(view_index, max_depth, builder.build(max_depth));
}

double weighted_error(const WeakVoter& voter, const Matrix& view_matrix,
                      std::span<const int> labels, const ExampleDistribution& dist) {
  if (view_matrix.rows() != labels.size() || dist.size() != labels.size())
    throw InputError("weighted_error: shape mismatch");
  const std::vector<std::int8_t> preds = voter.predict_rows(view_matrix);
  double err = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (int(preds[i]) != labels[i]) err += dist[i];
  return err;
}

}  // namespace pbmv
