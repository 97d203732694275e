#pragma once

// Bounding-box hierarchy over contiguous index ranges of a polyline. Consecutive vertices of a
// curve are spatially coherent, so splitting the index range in halves gives a usable tree
// without sorting.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "pinchlab/vec.hpp"

namespace pinchlab::detail {

struct Box {
  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};

  void grow(Vec2 p) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  }
  void grow(const Box& b) {
    grow(b.lo);
    grow(b.hi);
  }
  bool overlaps(const Box& b) const {
    return lo.x <= b.hi.x && b.lo.x <= hi.x && lo.y <= b.hi.y && b.lo.y <= hi.y;
  }
  /// Squared distance from p to the box (0 inside).
  double dist2(Vec2 p) const {
    const double dx = std::max({lo.x - p.x, 0.0, p.x - hi.x});
    const double dy = std::max({lo.y - p.y, 0.0, p.y - hi.y});
    return dx * dx + dy * dy;
  }
};

class RangeTree {
 public:
  struct Node {
    Box box;
    std::uint32_t lo = 0;
    std::uint32_t hi = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    bool leaf() const { return left < 0; }
  };

  static constexpr std::uint32_t kLeafSize = 8;

  RangeTree() = default;
  explicit RangeTree(std::span<const Box> items) : items_(items.begin(), items.end()) {
    if (!items_.empty()) {
      nodes_.reserve(2 * items_.size() / kLeafSize + 2);
      build(0, static_cast<std::uint32_t>(items_.size()));
    }
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  const Box& item(std::size_t i) const { return items_[i]; }
  bool empty() const { return nodes_.empty(); }

  /// Calls visit(i) for every item whose box passes accept(box). accept is re-evaluated at every
  /// node and item, so the query region may change while visiting as long as it only ever
  /// shrinks. Children are visited in increasing priority(box).
  template <class Accept, class Priority, class Visit>
  void visit_region(Accept&& accept, Priority&& priority, Visit&& visit) const {
    if (nodes_.empty()) return;
    std::int32_t stack[64];
    int top = 0;
    stack[top++] = 0;
    while (top > 0) {
      const Node& node = nodes_[stack[--top]];
      if (!accept(node.box)) continue;
      if (node.leaf()) {
        for (std::uint32_t i = node.lo; i < node.hi; ++i) {
          if (accept(items_[i])) visit(i);
        }
        continue;
      }
      if (priority(nodes_[node.left].box) <= priority(nodes_[node.right].box)) {
        stack[top++] = node.right;
        stack[top++] = node.left;
      } else {
        stack[top++] = node.left;
        stack[top++] = node.right;
      }
    }
  }

  /// Calls visit(i, j) with i < j for every pair of items whose boxes overlap.
  template <class Visit>
  void visit_overlapping_pairs(Visit&& visit) const {
    if (nodes_.empty()) return;
    std::vector<std::pair<std::int32_t, std::int32_t>> stack;
    stack.emplace_back(0, 0);
    while (!stack.empty()) {
      auto [a, b] = stack.back();
      stack.pop_back();
      const Node& na = nodes_[a];
      const Node& nb = nodes_[b];
      if (!na.box.overlaps(nb.box)) continue;
      if (na.leaf() && nb.leaf()) {
        for (std::uint32_t i = na.lo; i < na.hi; ++i) {
          for (std::uint32_t j = std::max(nb.lo, a == b ? i + 1 : nb.lo); j < nb.hi; ++j) {
            if (items_[i].overlaps(items_[j])) visit(i, j);
          }
        }
        continue;
      }
      if (a == b) {
        stack.emplace_back(na.left, na.left);
        stack.emplace_back(na.right, na.right);
        stack.emplace_back(na.left, na.right);
      } else if (na.leaf() || (!nb.leaf() && nb.hi - nb.lo > na.hi - na.lo)) {
        stack.emplace_back(a, nb.left);
        stack.emplace_back(a, nb.right);
      } else {
        stack.emplace_back(na.left, b);
        stack.emplace_back(na.right, b);
      }
    }
  }

 private:
  std::int32_t build(std::uint32_t lo, std::uint32_t hi) {
    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{{}, lo, hi, -1, -1});
    Box box;
    for (std::uint32_t i = lo; i < hi; ++i) box.grow(items_[i]);
    nodes_[index].box = box;
    if (hi - lo > kLeafSize) {
      const std::uint32_t mid = lo + (hi - lo) / 2;
      const std::int32_t left = build(lo, mid);
      const std::int32_t right = build(mid, hi);
      nodes_[index].left = left;
      nodes_[index].right = right;
    }
    return index;
  }

  std::vector<Box> items_;
  std::vector<Node> nodes_;
};

}  // namespace pinchlab::detail
