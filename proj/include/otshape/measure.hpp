#pragma once

#include <Eigen/Core>
#include <vector>

#include "otshape/errors.hpp"

namespace otshape {

using Vec2 = Eigen::Vector2d;

/// Weighted 2D point cloud. Represents either a set of agents or a set of
/// reference points. Weights are nonnegative with a strictly positive total;
/// they need not be normalized (solvers normalize internally).
struct DiscreteMeasure {
  std::vector<Vec2> points;
  Eigen::VectorXd weights;

  DiscreteMeasure() = default;
  DiscreteMeasure(std::vector<Vec2> pts, Eigen::VectorXd w);

  /// Measure with weight 1 on every point.
  static DiscreteMeasure uniform(std::vector<Vec2> pts);

  int size() const { return static_cast<int>(points.size()); }

  /// Throws InvalidInputError unless non-empty, finite, weights >= 0 with
  /// positive total.
  void validate() const;

  Eigen::VectorXd normalized_weights() const;

  /// Unweighted mean of the support points.
  Vec2 mean() const;

  /// Copy with the unweighted support mean subtracted from every point.
  DiscreteMeasure centered() const;
};

/// Pairwise cost grid between a source and target measure. Entries are
/// nonnegative and finite; squared meters for the squared-Euclidean metric.
struct CostMatrix {
  Eigen::MatrixXd entries;

  int rows() const { return static_cast<int>(entries.rows()); }
  int cols() const { return static_cast<int>(entries.cols()); }
};

enum class Metric { SquaredEuclidean };

CostMatrix build_cost_matrix(const DiscreteMeasure& source,
                             const DiscreteMeasure& target,
                             Metric metric = Metric::SquaredEuclidean);

/// Squared-Euclidean cost grid over raw point lists (no weights involved).
CostMatrix squared_distance_matrix(const std::vector<Vec2>& source_points,
                                   const std::vector<Vec2>& target_points);

}  // namespace otshape
