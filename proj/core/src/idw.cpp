#include "lyapkit/idw.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace lyapkit {

namespace {

double dist2(const Point3& a, const Point3& b) {
  double acc = 0.0;
  for (int i = 0; i < 3; ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc;
}

bool closer(const KdTree3::Neighbor& a, const KdTree3::Neighbor& b) {
  return a.distance2 < b.distance2 || (a.distance2 == b.distance2 && a.index < b.index);
}

}  // namespace

KdTree3::KdTree3(std::vector<Point3> points) : points_(std::move(points)) {
  std::vector<std::size_t> idx(points_.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  nodes_.reserve(points_.size());
  root_ = build(idx, 0, idx.size(), 0);
}

std::ptrdiff_t KdTree3::build(std::vector<std::size_t>& idx, std::size_t lo, std::size_t hi, int depth) {
  if (lo >= hi) return -1;
  const int axis = depth % 3;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(idx.begin() + static_cast<std::ptrdiff_t>(lo), idx.begin() + static_cast<std::ptrdiff_t>(mid),
                   idx.begin() + static_cast<std::ptrdiff_t>(hi), [&](std::size_t a, std::size_t b) {
                     return points_[a][axis] < points_[b][axis] || (points_[a][axis] == points_[b][axis] && a < b);
                   });
  const auto self = static_cast<std::ptrdiff_t>(nodes_.size());
  nodes_.push_back({idx[mid], axis});
  const std::ptrdiff_t left = build(idx, lo, mid, depth + 1);
  const std::ptrdiff_t right = build(idx, mid + 1, hi, depth + 1);
  nodes_[static_cast<std::size_t>(self)].left = left;
  nodes_[static_cast<std::size_t>(self)].right = right;
  return self;
}

void KdTree3::search(std::ptrdiff_t node, const Point3& q, std::size_t k, std::vector<Neighbor>& heap) const {
  if (node < 0) return;
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  const Neighbor cand{n.point, dist2(points_[n.point], q)};
  if (heap.size() < k) {
    heap.push_back(cand);
    std::push_heap(heap.begin(), heap.end(), closer);
  } else if (closer(cand, heap.front())) {
    std::pop_heap(heap.begin(), heap.end(), closer);
    heap.back() = cand;
    std::push_heap(heap.begin(), heap.end(), closer);
  }
  const double diff = q[n.axis] - points_[n.point][n.axis];
  const std::ptrdiff_t near = diff < 0.0 ? n.left : n.right;
  const std::ptrdiff_t far = diff < 0.0 ? n.right : n.left;
  search(near, q, k, heap);
  if (heap.size() < k || diff * diff <= heap.front().distance2) search(far, q, k, heap);
}

std::vector<KdTree3::Neighbor> KdTree3::nearest(const Point3& q, std::size_t k) const {
  std::vector<Neighbor> heap;
  if (k == 0 || points_.empty()) return heap;
  heap.reserve(k);
  search(root_, q, k, heap);
  std::sort_heap(heap.begin(), heap.end(), closer);
  return heap;
}

IdwInterpolator3::IdwInterpolator3(std::vector<Point3> points, std::vector<double> values, Point3 scale,
                                   std::size_t neighbors, double power)
    : values_(std::move(values)), scale_(scale), neighbors_(neighbors), power_(power) {
  if (points.size() != values_.size()) throw std::invalid_argument("IDW: points and values differ in length");
  if (points.empty()) throw std::invalid_argument("IDW: no samples");
  if (neighbors_ == 0) throw std::invalid_argument("IDW: neighbors must be positive");
  for (auto& p : points) p = scaled(p);
  tree_ = KdTree3(std::move(points));
}

Point3 IdwInterpolator3::scaled(const Point3& p) const {
  return {p[0] * scale_[0], p[1] * scale_[1], p[2] * scale_[2]};
}

IdwInterpolator3::Query IdwInterpolator3::query(const Point3& p) const {
  // One extra neighbour sets the cut-off radius R; weights ((R - d) / (R d))^power
  // fade to zero at R, so the interpolant stays continuous when the
  // neighbour set changes.
  const auto nb = tree_.nearest(scaled(p), neighbors_ + 1);
  const double nearest = std::sqrt(nb.front().distance2);
  const double nearest_value = values_[nb.front().index];
  if (nb.front().distance2 <= 1e-24) return {nearest_value, nearest, nearest_value};
  const std::size_t used = std::min(neighbors_, nb.size());
  const double radius = nb.size() > neighbors_ ? std::sqrt(nb.back().distance2) : 0.0;
  double wsum = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < used; ++i) {
    const double d = std::sqrt(nb[i].distance2);
    const double w = radius > 0.0 ? std::pow(std::max(0.0, radius - d) / (radius * d), power_) : std::pow(d, -power_);
    wsum += w;
    acc += w * values_[nb[i].index];
  }
  // All k neighbours tie with the cut-off sample.
  if (!(wsum > 0.0)) return {nearest_value, nearest, nearest_value};
  return {acc / wsum, nearest, nearest_value};
}

}  // namespace lyapkit
