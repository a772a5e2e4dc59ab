#pragma once

#include <cstdint>
#include <vector>

#include "georf/dataset.hpp"

namespace georf {

// 2D k-d tree over a fixed point set. Node order and every query result are
// deterministic functions of the input points alone.
class SpatialIndex {
 public:
  SpatialIndex() = default;
  explicit SpatialIndex(std::vector<Point> points);

  std::size_t size() const { return points_.size(); }
  const Point& point(std::int32_t index) const { return points_[index]; }

  // k nearest point indices ordered by (squared distance, index) ascending.
  // Returns all points when k >= size.
  std::vector<std::int32_t> knn(const Point& query, int k) const;

  // Indices with distance <= radius (boundary inclusive), ascending by index.
  std::vector<std::int32_t> within_radius(const Point& query, double radius) const;

 private:
  struct Node {
    std::int32_t point_index = -1;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::int32_t* first, std::int32_t* last, int depth);
  void knn_walk(std::int32_t node_id, int depth, const Point& query, int k,
                std::vector<std::pair<double, std::int32_t>>& heap) const;
  void radius_walk(std::int32_t node_id, int depth, const Point& query,
                   double radius_sq, std::vector<std::int32_t>& out) const;

  std::vector<Point> points_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

}  // namespace georf
