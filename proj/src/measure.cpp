#include "otshape/measure.hpp"

#include <cmath>
#include <utility>

namespace otshape {

DiscreteMeasure::DiscreteMeasure(std::vector<Vec2> pts, Eigen::VectorXd w)
    : points(std::move(pts)), weights(std::move(w)) {}

DiscreteMeasure DiscreteMeasure::uniform(std::vector<Vec2> pts) {
  const auto n = static_cast<Eigen::Index>(pts.size());
  return DiscreteMeasure(std::move(pts), Eigen::VectorXd::Ones(n));
}

void DiscreteMeasure::validate() const {
  if (points.empty()) {
    throw InvalidInputError("measure has no support points");
  }
  if (weights.size() != static_cast<Eigen::Index>(points.size())) {
    throw InvalidInputError("measure has " + std::to_string(points.size()) +
                            " points but " + std::to_string(weights.size()) +
                            " weights");
  }
  for (const Vec2& p : points) {
    if (!p.allFinite()) {
      throw InvalidInputError("measure contains a non-finite point");
    }
  }
  double total = 0.0;
  for (Eigen::Index i = 0; i < weights.size(); ++i) {
    const double w = weights[i];
    if (!std::isfinite(w) || w < 0.0) {
      throw InvalidInputError("measure weight " + std::to_string(i) +
                              " is negative or non-finite");
    }
    total += w;
  }
  if (total <= 0.0) {
    throw InvalidInputError("measure weights sum to zero");
  }
}

Eigen::VectorXd DiscreteMeasure::normalized_weights() const {
  return weights / weights.sum();
}

Vec2 DiscreteMeasure::mean() const {
  Vec2 m = Vec2::Zero();
  for (const Vec2& p : points) m += p;
  return m / static_cast<double>(points.size());
}

DiscreteMeasure DiscreteMeasure::centered() const {
  DiscreteMeasure out = *this;
  const Vec2 m = mean();
  for (Vec2& p : out.points) p -= m;
  return out;
}

CostMatrix build_cost_matrix(const DiscreteMeasure& source,
                             const DiscreteMeasure& target, Metric metric) {
  source.validate();
  target.validate();
  (void)metric;  // single metric for now
  return squared_distance_matrix(source.points, target.points);
}

CostMatrix squared_distance_matrix(const std::vector<Vec2>& source_points,
                                   const std::vector<Vec2>& target_points) {
  const auto n = static_cast<Eigen::Index>(source_points.size());
  const auto m = static_cast<Eigen::Index>(target_points.size());
  if (n == 0 || m == 0) {
    throw InvalidInputError("cost matrix requires non-empty point sets");
  }
  CostMatrix out;
  out.entries.resize(n, m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec2& p = source_points[i];
    if (!p.allFinite()) {
      throw InvalidInputError("non-finite source point in cost matrix");
    }
    for (Eigen::Index j = 0; j < m; ++j) {
      const Vec2& q = target_points[j];
      if (!q.allFinite()) {
        throw InvalidInputError("non-finite target point in cost matrix");
      }
      out.entries(i, j) = (p - q).squaredNorm();
    }
  }
  return out;
}

}  // namespace otshape
