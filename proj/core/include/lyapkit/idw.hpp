#pragma once

#include <array>
#include <cstddef>
#include <vector>

namespace lyapkit {

using Point3 = std::array<double, 3>;

/// Static 3-d tree for k-nearest-neighbour queries.
class KdTree3 {
 public:
  KdTree3() = default;
  explicit KdTree3(std::vector<Point3> points);

  struct Neighbor {
    std::size_t index;
    double distance2;
  };

  /// Up to k nearest points, closest first.
  std::vector<Neighbor> nearest(const Point3& q, std::size_t k) const;
  std::size_t size() const { return points_.size(); }
  const Point3& point(std::size_t i) const { return points_[i]; }

 private:
  struct Node {
    std::size_t point;
    int axis;
    std::ptrdiff_t left = -1, right = -1;
  };
  std::ptrdiff_t build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth);
  void search(std::ptrdiff_t node, const Point3& q, std::size_t k, std::vector<Neighbor>& heap) const;

  std::vector<Point3> points_;
  std::vector<Node> nodes_;
  std::ptrdiff_t root_ = -1;
};

/// Inverse-distance weighting over scattered 3-d samples with per-axis
/// scaling, using the k nearest samples with Franke-Little weights
/// ((R - d) / (R d))^power, R the distance of the (k+1)-th sample.
/// Exact at the nodes and continuous.
class IdwInterpolator3 {
 public:
  IdwInterpolator3() = default;
  /// scale multiplies each coordinate before distances are taken.
  IdwInterpolator3(std::vector<Point3> points, std::vector<double> values, Point3 scale, std::size_t neighbors = 8,
                   double power = 2.0);

  struct Query {
    double value;
    double nearest_distance;  // in scaled coordinates
    double nearest_value;
  };
  Query query(const Point3& p) const;
  double operator()(const Point3& p) const { return query(p).value; }

  std::size_t size() const { return values_.size(); }
  const Point3& scale() const { return scale_; }
  std::size_t neighbors() const { return neighbors_; }
  double power() const { return power_; }

 private:
  Point3 scaled(const Point3& p) const;

  std::vector<double> values_;
  Point3 scale_{1.0, 1.0, 1.0};
  std::size_t neighbors_ = 8;
  double power_ = 2.0;
  KdTree3 tree_;
};

}  // namespace lyapkit
