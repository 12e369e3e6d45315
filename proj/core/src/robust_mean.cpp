#include "heavytail/robust_mean.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace heavytail {

int mom_group_count(double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("mom_group_count: beta must be positive");
  return static_cast<int>(std::floor(3.5 * beta)) + 1;
}

namespace {

double cloud_diameter(const std::vector<Eigen::VectorXd>& points) {
  double diam = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = i + 1; j < points.size(); ++j)
      diam = std::max(diam, (points[i] - points[j]).norm());
  return diam;
}

double objective(const std::vector<Eigen::VectorXd>& points, const Eigen::VectorXd& z) {
  double s = 0.0;
  for (const auto& p : points) s += (z - p).norm();
  return s;
}

// Minimum-norm subgradient: away from the anchors this is the gradient; at an
// anchor the anchor's own unit ball absorbs up to 1 of the residual pull.
double min_subgradient_norm(const std::vector<Eigen::VectorXd>& points,
                            const Eigen::VectorXd& z, double anchor_tol) {
  Eigen::VectorXd pull = Eigen::VectorXd::Zero(z.size());
  bool at_anchor = false;
  for (const auto& p : points) {
    const Eigen::VectorXd diff = z - p;
    const double dist = diff.norm();
    if (dist <= anchor_tol)
      at_anchor = true;
    else
      pull += diff / dist;
  }
  const double n = pull.norm();
  return at_anchor ? std::max(n - 1.0, 0.0) : n;
}

}  // namespace

GeometricMedianResult geometric_median(const std::vector<Eigen::VectorXd>& points,
                                       double tol, int max_iter) {
  if (points.empty()) throw std::invalid_argument("geometric_median: empty point set");
  const Eigen::Index d = points.front().size();
  for (const auto& p : points) {
    if (p.size() != d) throw std::invalid_argument("geometric_median: mixed dimensions");
    if (!p.allFinite()) throw std::invalid_argument("geometric_median: non-finite point");
  }
  const std::size_t k = points.size();
  if (k == 1) return {points.front(), true, 0, 0.0};

  // Work in coordinates relative to the centroid; keeps the iteration (and
  // its stopping point) translation equivariant up to rounding.
  Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
  for (const auto& p : points) centroid += p;
  centroid /= static_cast<double>(k);
  std::vector<Eigen::VectorXd> centered;
  centered.reserve(k);
  for (const auto& p : points) centered.push_back(p - centroid);

  const double diam = cloud_diameter(centered);
  if (diam == 0.0) return {points.front(), true, 0, 0.0};
  const double step_tol = tol * diam;
  const double anchor_tol = 1e-12 * diam;

  Eigen::VectorXd z = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd best = z;
  double best_obj = objective(centered, z);

  for (int iter = 1; iter <= max_iter; ++iter) {
    // Distances from the current iterate; detect an anchor hit.
    std::size_t anchor = k;
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < k; ++j) {
      const double dist = (z - centered[j]).norm();
      if (dist < min_dist) {
        min_dist = dist;
        anchor = j;
      }
    }

    Eigen::VectorXd next(d);
    if (min_dist <= anchor_tol) {
      // At (or numerically at) data point x_a: the residual pull of the other
      // points is R = sum_{j != a} (x_a - x_j)/|x_a - x_j|. |R| <= 1 certifies
      // x_a as the minimizer; otherwise step off by (|R| - 1)/L.
      const Eigen::VectorXd& xa = centered[anchor];
      Eigen::VectorXd r = Eigen::VectorXd::Zero(d);
      double l = 0.0;
      for (std::size_t j = 0; j < k; ++j) {
        if (j == anchor) continue;
        const Eigen::VectorXd diff = xa - centered[j];
        const double dist = std::max(diff.norm(), anchor_tol);
        r += diff / dist;
        l += 1.0 / dist;
      }
      const double r_norm = r.norm();
      if (r_norm <= 1.0) return {xa + centroid, true, iter, 0.0};
      next = xa - ((r_norm - 1.0) / l) * (r / r_norm);
    } else {
      double wsum = 0.0;
      next = Eigen::VectorXd::Zero(d);
      for (std::size_t j = 0; j < k; ++j) {
        const double w = 1.0 / (z - centered[j]).norm();
        next += w * centered[j];
        wsum += w;
      }
      next /= wsum;
    }

    const double step = (next - z).norm();
    z = next;
    const double obj = objective(centered, z);
    if (obj < best_obj) {
      best_obj = obj;
      best = z;
    }
    if (step <= step_tol)
      return {best + centroid, true, iter,
              min_subgradient_norm(centered, best, anchor_tol)};
  }
  return {best + centroid, false, max_iter,
          min_subgradient_norm(centered, best, anchor_tol)};
}

Eigen::VectorXd median_of_means(const Eigen::MatrixXd& X, const MoMConfig& cfg) {
  const Eigen::Index m = X.rows();
  const int k = mom_group_count(cfg.beta);
  if (m < 2 * static_cast<Eigen::Index>(k))
    throw std::invalid_argument("median_of_means: needs m >= 2k samples");

  const Eigen::Index group = m / k;  // leftover rows beyond k * group are discarded
  std::vector<Eigen::VectorXd> means;
  means.reserve(static_cast<std::size_t>(k));
  for (int j = 0; j < k; ++j) {
    Eigen::VectorXd mu = Eigen::VectorXd::Zero(X.cols());
    for (Eigen::Index i = 0; i < group; ++i) mu += X.row(j * group + i).transpose();
    means.push_back(mu / static_cast<double>(group));
  }
  return geometric_median(means, cfg.weiszfeld_tol, cfg.weiszfeld_max_iter).point;
}

}  // namespace heavytail
