#include "georf/spatial_index.hpp"

#include <algorithm>
#include <numeric>

namespace georf {

namespace {

inline double axis_coord(const Point& p, int axis) { return axis == 0 ? p.u : p.v; }

}  // namespace

SpatialIndex::SpatialIndex(std::vector<Point> points) : points_(std::move(points)) {
  if (points_.empty()) return;
  std::vector<std::int32_t> order(points_.size());
  std::iota(order.begin(), order.end(), 0);
  nodes_.reserve(points_.size());
  root_ = build(order.data(), order.data() + order.size(), 0);
}

std::int32_t SpatialIndex::build(std::int32_t* first, std::int32_t* last, int depth) {
  if (first == last) return -1;
  const int axis = depth % 2;
  auto* mid = first + (last - first) / 2;
  // Index tie-break keeps the layout independent of nth_element's
  // implementation when coordinates repeat.
  std::nth_element(first, mid, last, [&](std::int32_t a, std::int32_t b) {
    const double ca = axis_coord(points_[a], axis);
    const double cb = axis_coord(points_[b], axis);
    return ca < cb || (ca == cb && a < b);
  });
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({*mid, -1, -1});
  const auto left = build(first, mid, depth + 1);
  nodes_[id].left = left;
  const auto right = build(mid + 1, last, depth + 1);
  nodes_[id].right = right;
  return id;
}

std::vector<std::int32_t> SpatialIndex::knn(const Point& query, int k) const {
  std::vector<std::int32_t> result;
  if (k <= 0 || points_.empty()) return result;
  k = std::min<int>(k, static_cast<int>(points_.size()));

  // Max-heap on (squared distance, index); the root is the current worst
  // member, so lexicographic ordering also settles equidistant candidates.
  std::vector<std::pair<double, std::int32_t>> heap;
  heap.reserve(k + 1);
  knn_walk(root_, 0, query, k, heap);

  std::sort(heap.begin(), heap.end());
  result.reserve(heap.size());
  for (const auto& [d2, idx] : heap) result.push_back(idx);
  return result;
}

void SpatialIndex::knn_walk(std::int32_t node_id, int depth, const Point& query,
                            int k,
                            std::vector<std::pair<double, std::int32_t>>& heap) const {
  if (node_id < 0) return;
  const auto& node = nodes_[node_id];
  const auto& p = points_[node.point_index];
  const std::pair<double, std::int32_t> cand{squared_distance(query, p),
                                             node.point_index};
  if (static_cast<int>(heap.size()) < k) {
    heap.push_back(cand);
    std::push_heap(heap.begin(), heap.end());
  } else if (cand < heap.front()) {
    std::pop_heap(heap.begin(), heap.end());
    heap.back() = cand;
    std::push_heap(heap.begin(), heap.end());
  }

  const int axis = depth % 2;
  const double delta = axis_coord(query, axis) - axis_coord(p, axis);
  const auto near = delta < 0 ? node.left : node.right;
  const auto far = delta < 0 ? node.right : node.left;
  knn_walk(near, depth + 1, query, k, heap);
  // The far side can only hold an equal-distance point with a lower index if
  // delta * delta == worst distance, so prune strictly greater only.
  if (static_cast<int>(heap.size()) < k || delta * delta <= heap.front().first)
    knn_walk(far, depth + 1, query, k, heap);
}

std::vector<std::int32_t> SpatialIndex::within_radius(const Point& query,
                                                      double radius) const {
  std::vector<std::int32_t> out;
  if (points_.empty() || radius < 0.0) return out;
  radius_walk(root_, 0, query, radius * radius, out);
  std::sort(out.begin(), out.end());
  return out;
}

void SpatialIndex::radius_walk(std::int32_t node_id, int depth, const Point& query,
                               double radius_sq, std::vector<std::int32_t>& out) const {
  if (node_id < 0) return;
  const auto& node = nodes_[node_id];
  const auto& p = points_[node.point_index];
  if (squared_distance(query, p) <= radius_sq) out.push_back(node.point_index);

  const int axis = depth % 2;
  const double delta = axis_coord(query, axis) - axis_coord(p, axis);
  const auto near = delta < 0 ? node.left : node.right;
  const auto far = delta < 0 ? node.right : node.left;
  radius_walk(near, depth + 1, query, radius_sq, out);
  if (delta * delta <= radius_sq) radius_walk(far, depth + 1, query, radius_sq, out);
}

}  // namespace georf
