#include "pbmv/cbound_opt.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "pbmv/error.hpp"

namespace pbmv {

namespace {

constexpr double kMargin = 1e-9;      // slack kept from the 1/2 poles
constexpr double kTieWindow = 1e-12;  // objective window treated as a tie
constexpr int kMaxIterations = 500;
constexpr int kMaxBacktracks = 60;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

bool feasible(std::span<const double> rho, std::span<const double> r, std::span<const double> d) {
  // closed region; the 1e-13 slack absorbs rounding in constructed
  // boundary-tight candidates
  return dot(rho, r) <= 0.5 - kMargin + 1e-13 && dot(rho, d) <= 0.5 - kMargin + 1e-13;
}

// Shared multi-start projected-gradient scaffold. `objective` returns the
// value to maximize (or -inf for points it rejects); `gradient` fills g.
struct Ascent {
  std::function<double(std::span<const double>)> objective;
  std::function<std::vector<double>(std::span<const double>)> gradient;

  std::vector<double> run(std::vector<double> rho) const {
    double value = objective(rho);
    for (int it = 0; it < kMaxIterations; ++it) {
      const std::vector<double> g = gradient(rho);
      double step = 1.0;
      bool moved = false;
      for (int k = 0; k < kMaxBacktracks; ++k, step *= 0.5) {
        std::vector<double> trial(rho.size());
        for (std::size_t v = 0; v < rho.size(); ++v) trial[v] = rho[v] + step * g[v];
        trial = project_to_simplex(trial);
        const double trial_value = objective(trial);
        if (trial_value > value + 1e-14) {
          rho = std::move(trial);
          value = trial_value;
          moved = true;
          break;
        }
      }
      if (!moved) break;
    }
    return rho;
  }
};

struct CandidatePool {
  // candidate order pins the tie-break: earliest within kTieWindow wins
  std::vector<std::vector<double>> points;

  void add(std::vector<double> p) { points.push_back(std::move(p)); }

  // false when every candidate was rejected by the objective
  bool pick(const std::function<double(std::span<const double>)>& objective,
            std::vector<double>& best, double& best_value) const {
    bool have = false;
    for (const auto& p : points) {
      const double value = objective(p);
      if (value == -std::numeric_limits<double>::infinity()) continue;
      if (!have || value > best_value + kTieWindow) {
        have = true;
        best = p;
        best_value = value;
      }
    }
    return have;
  }
};

std::vector<std::vector<double>> standard_starts(std::size_t num_views,
                                                 std::span<const double> rho_init) {
  std::vector<std::vector<double>> starts;
  starts.push_back(std::vector<double>(num_views, 1.0 / double(num_views)));
  starts.emplace_back(rho_init.begin(), rho_init.end());
  for (std::size_t v = 0; v < num_views; ++v) {
    std::vector<double> vertex(num_views, 0.0);
    vertex[v] = 1.0;
    starts.push_back(std::move(vertex));
  }
  return starts;
}

// Extreme points of {simplex} \cap {<rho,r> <= c} \cap {<rho,d> <= c}:
// vertices, edge points with one plane tight, and two-dimensional face
// points with both planes tight. Support size never exceeds three.
std::vector<std::vector<double>> polytope_extreme_points(std::span<const double> r,
                                                         std::span<const double> d) {
  const std::size_t num_views = r.size();
  const double c = 0.5 - kMargin;
  std::vector<std::vector<double>> points;

  auto emit = [&](std::vector<double> p) {
    for (double x : p)
      if (!(x >= -1e-12)) return;
    for (double& x : p) x = std::max(x, 0.0);
    double sum = 0.0;
    for (double x : p) sum += x;
    for (double& x : p) x /= sum;
    if (feasible(p, r, d)) points.push_back(std::move(p));
  };

  for (std::size_t v = 0; v < num_views; ++v) {
    std::vector<double> vertex(num_views, 0.0);
    vertex[v] = 1.0;
    emit(std::move(vertex));
  }

  // one plane tight on an edge: rho_u p_u + rho_w p_w = c with rho_u + rho_w = 1
  for (std::size_t u = 0; u < num_views; ++u) {
    for (std::size_t w = u + 1; w < num_views; ++w) {
      for (std::span<const double> plane : {r, d}) {
        const double denom = plane[u] - plane[w];
        if (denom == 0.0) continue;
        const double t = (c - plane[w]) / denom;  // weight on u
        if (!(t > 0.0 && t < 1.0)) continue;
        std::vector<double> p(num_views, 0.0);
        p[u] = t;
        p[w] = 1.0 - t;
        emit(std::move(p));
      }
    }
  }

  // both planes tight on a 2-face: 3x3 linear system by Cramer's rule
  for (std::size_t u = 0; u < num_views; ++u) {
    for (std::size_t w = u + 1; w < num_views; ++w) {
      for (std::size_t z = w + 1; z < num_views; ++z) {
        const double a1 = 1.0, b1 = 1.0, c1 = 1.0, e1 = 1.0;
        const double a2 = r[u], b2 = r[w], c2 = r[z], e2 = c;
        const double a3 = d[u], b3 = d[w], c3 = d[z], e3 = c;
        const double det = a1 * (b2 * c3 - c2 * b3) - b1 * (a2 * c3 - c2 * a3) +
                           c1 * (a2 * b3 - b2 * a3);
        if (std::abs(det) < 1e-14) continue;
        const double x = (e1 * (b2 * c3 - c2 * b3) - b1 * (e2 * c3 - c2 * e3) +
                          c1 * (e2 * b3 - b2 * e3)) / det;
        const double y = (a1 * (e2 * c3 - c2 * e3) - e1 * (a2 * c3 - c2 * a3) +
                          c1 * (a2 * e3 - e2 * a3)) / det;
        const double zz = (a1 * (b2 * e3 - e2 * b3) - b1 * (a2 * e3 - e2 * a3) +
                           e1 * (a2 * b3 - b2 * a3)) / det;
        std::vector<double> p(num_views, 0.0);
        p[u] = x;
        p[w] = y;
        p[z] = zz;
        emit(std::move(p));
      }
    }
  }
  return points;
}

}  // namespace

SimplexWeights SimplexWeights::uniform(std::size_t num_views) {
  if (num_views == 0) throw InputError("simplex: need at least one view");
  return SimplexWeights{std::vector<double>(num_views, 1.0 / double(num_views))};
}

void SimplexWeights::validate() const {
  if (rho.empty()) throw InputError("simplex: empty");
  double sum = 0.0;
  for (double x : rho) {
    if (!(x >= 0.0)) throw InputError("simplex: negative weight");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw InputError("simplex: weights sum to " + std::to_string(sum));
}

std::vector<double> project_to_simplex(std::span<const double> v) {
  if (v.empty()) throw InputError("simplex projection: empty vector");
  std::vector<double> sorted(v.begin(), v.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = sorted[0] - 1.0;
  for (std::size_t j = 0; j < sorted.size(); ++j) {
    cumulative += sorted[j];
    const double candidate = (cumulative - 1.0) / double(j + 1);
    if (sorted[j] - candidate > 0.0) theta = candidate;
  }
  std::vector<double> out(v.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::max(v[i] - theta, 0.0);
    sum += out[i];
  }
  for (double& x : out) x /= sum;
  return out;
}

double cbound_objective(std::span<const double> rho, std::span<const double> r,
                        std::span<const double> d) {
  const double a = 1.0 - 2.0 * dot(rho, r);
  const double b = 1.0 - 2.0 * dot(rho, d);
  return a * a / b;
}

OptimizeResult optimize_view_weights(std::span<const double> r, std::span<const double> d,
                                     const SimplexWeights& rho_init) {
  const std::size_t num_views = r.size();
  if (d.size() != num_views || rho_init.rho.size() != num_views)
    throw InputError("optimize_view_weights: size mismatch");
  rho_init.validate();
  for (std::size_t v = 0; v < num_views; ++v)
    if (!(r[v] >= 0.0 && r[v] <= 1.0) || !(d[v] >= 0.0 && d[v] <= 1.0))
      throw InputError("optimize_view_weights: r/d outside [0,1]");

  auto objective = [&](std::span<const double> rho) {
    if (!feasible(rho, r, d)) return -std::numeric_limits<double>::infinity();
    return cbound_objective(rho, r, d);
  };
  // dF/drho_v = (2A/B^2)(d_v A - 2 r_v B) with A = 1-2<rho,r>, B = 1-2<rho,d>
  auto gradient = [&](std::span<const double> rho) {
    const double a = 1.0 - 2.0 * dot(rho, r);
    const double b = 1.0 - 2.0 * dot(rho, d);
    std::vector<double> g(rho.size());
    const double scale = 2.0 * a / (b * b);
    for (std::size_t v = 0; v < rho.size(); ++v) g[v] = scale * (d[v] * a - 2.0 * r[v] * b);
    return g;
  };
  const Ascent ascent{objective, gradient};

  CandidatePool pool;
  for (auto& start : standard_starts(num_views, rho_init.rho))
    if (feasible(start, r, d)) pool.add(ascent.run(std::move(start)));
  for (auto& point : polytope_extreme_points(r, d)) pool.add(std::move(point));

  std::vector<double> best;
  double best_value = 0.0;
  if (!pool.pick(objective, best, best_value)) {
    return OptimizeResult{rho_init, false, 0.0};
  }
  return OptimizeResult{SimplexWeights{std::move(best)}, true, best_value};
}

namespace {

// Solve S x = a for small symmetric S by Gaussian elimination with partial
// pivoting; returns false when S is effectively singular.
bool solve_small(std::vector<std::vector<double>> s, std::vector<double> a,
                 std::vector<double>& x) {
  const std::size_t n = a.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    for (std::size_t row = col + 1; row < n; ++row)
      if (std::abs(s[row][col]) > std::abs(s[pivot][col])) pivot = row;
    if (std::abs(s[pivot][col]) < 1e-14) return false;
    std::swap(s[pivot], s[col]);
    std::swap(a[pivot], a[col]);
    for (std::size_t row = col + 1; row < n; ++row) {
      const double f = s[row][col] / s[col][col];
      for (std::size_t k = col; k < n; ++k) s[row][k] -= f * s[col][k];
      a[row] -= f * a[col];
    }
  }
  x.assign(n, 0.0);
  for (std::size_t row = n; row-- > 0;) {
    double acc = a[row];
    for (std::size_t k = row + 1; k < n; ++k) acc -= s[row][k] * x[k];
    x[row] = acc / s[row][row];
  }
  return true;
}

}  // namespace

OptimizeResult optimize_view_weights_margin(std::span<const std::vector<double>> view_margins,
                                            std::span<const int> labels,
                                            std::span<const double> dist,
                                            const SimplexWeights& rho_init) {
  const std::size_t num_views = view_margins.size();
  const std::size_t n = labels.size();
  if (num_views == 0 || rho_init.rho.size() != num_views)
    throw InputError("optimize_view_weights_margin: size mismatch");
  for (const auto& m : view_margins)
    if (m.size() != n) throw InputError("optimize_view_weights_margin: margin length mismatch");
  if (dist.size() != n) throw InputError("optimize_view_weights_margin: distribution mismatch");
  rho_init.validate();

  // mu1(rho) = <a, rho>; mu2(rho) = rho' S rho
  std::vector<double> a(num_views, 0.0);
  std::vector<std::vector<double>> s(num_views, std::vector<double>(num_views, 0.0));
  for (std::size_t v = 0; v < num_views; ++v) {
    for (std::size_t i = 0; i < n; ++i) a[v] += dist[i] * labels[i] * view_margins[v][i];
    for (std::size_t w = v; w < num_views; ++w) {
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) acc += dist[i] * view_margins[v][i] * view_margins[w][i];
      s[v][w] = s[w][v] = acc;
    }
  }

  auto mu1 = [&](std::span<const double> rho) { return dot(rho, a); };
  auto mu2 = [&](std::span<const double> rho) {
    double acc = 0.0;
    for (std::size_t v = 0; v < num_views; ++v) acc += rho[v] * dot(rho, s[v]);
    return acc;
  };
  auto objective = [&](std::span<const double> rho) {
    const double m1 = mu1(rho);
    const double m2 = mu2(rho);
    if (!(m1 > 0.0) || !(m2 > 1e-15)) return -std::numeric_limits<double>::infinity();
    return m1 * m1 / m2;
  };
  // dG/drho = (2 mu1 / mu2^2)(mu2 a - mu1 S rho)
  auto gradient = [&](std::span<const double> rho) {
    const double m1 = mu1(rho);
    const double m2 = std::max(mu2(rho), 1e-15);
    std::vector<double> g(num_views);
    for (std::size_t v = 0; v < num_views; ++v)
      g[v] = 2.0 * m1 / (m2 * m2) * (m2 * a[v] - m1 * dot(rho, s[v]));
    return g;
  };
  const Ascent ascent{objective, gradient};

  CandidatePool pool;
  for (auto& start : standard_starts(num_views, rho_init.rho)) {
    if (objective(start) == -std::numeric_limits<double>::infinity()) continue;
    pool.add(ascent.run(std::move(start)));
  }

  // Exact stationary points per support: by scale invariance the constrained
  // maximizer solves S_T x = a_T on its support T with x >= 0. V stays small
  // here, so all supports are enumerable.
  if (num_views <= 12) {
    for (std::size_t mask = 1; mask < (std::size_t(1) << num_views); ++mask) {
      std::vector<std::size_t> support;
      for (std::size_t v = 0; v < num_views; ++v)
        if (mask & (std::size_t(1) << v)) support.push_back(v);
      std::vector<std::vector<double>> s_t(support.size(),
                                           std::vector<double>(support.size()));
      std::vector<double> a_t(support.size());
      for (std::size_t i = 0; i < support.size(); ++i) {
        a_t[i] = a[support[i]];
        for (std::size_t j = 0; j < support.size(); ++j) s_t[i][j] = s[support[i]][support[j]];
      }
      std::vector<double> x;
      if (!solve_small(s_t, a_t, x)) continue;
      bool nonneg = true;
      double sum = 0.0;
      for (double xi : x) {
        nonneg = nonneg && xi >= -1e-12;
        sum += std::max(xi, 0.0);
      }
      if (!nonneg || sum <= 0.0) continue;
      std::vector<double> p(num_views, 0.0);
      for (std::size_t i = 0; i < support.size(); ++i)
        p[support[i]] = std::max(x[i], 0.0) / sum;
      pool.add(std::move(p));
    }
  }

  std::vector<double> best;
  double best_value = 0.0;
  if (!pool.pick(objective, best, best_value)) {
    return OptimizeResult{rho_init, false, 0.0};
  }
  return OptimizeResult{SimplexWeights{std::move(best)}, true, best_value};
}

}  // namespace pbmv
