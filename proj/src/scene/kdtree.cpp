#include "mt3d/scene/kdtree.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "mt3d/core/errors.hpp"

namespace mt3d {

namespace {
constexpr std::size_t kLeafSize = 16;

bool closer(const Neighbor& a, const Neighbor& b) {
    return a.distance_sq < b.distance_sq ||
           (a.distance_sq == b.distance_sq && a.index < b.index);
}
}  // namespace

KdTree::KdTree(std::vector<Eigen::Vector3d> points) : points_(std::move(points)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    if (!points_.empty()) build(0, points_.size());
    sorted_points_.reserve(points_.size());
    for (std::size_t idx : order_) sorted_points_.push_back(points_[idx]);
}

int KdTree::build(std::size_t begin, std::size_t end) {
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector3d hi = -lo;
    for (std::size_t i = begin; i < end; ++i) {
        lo = lo.cwiseMin(points_[order_[i]]);
        hi = hi.cwiseMax(points_[order_[i]]);
    }
    nodes_[id].begin = begin;
    nodes_[id].end = end;
    nodes_[id].lo = lo;
    nodes_[id].hi = hi;
    if (end - begin <= kLeafSize) return id;

    int axis = 0;
    (hi - lo).maxCoeff(&axis);
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) {
                         const double va = points_[a][axis], vb = points_[b][axis];
                         return va < vb || (va == vb && a < b);
                     });
    const int left = build(begin, mid);
    const int right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
}

double KdTree::box_distance_sq(int node_id, const Eigen::Vector3d& q) const {
    const Node& n = nodes_[node_id];
    double d = 0.0;
    for (int k = 0; k < 3; ++k) {
        const double e = std::max({n.lo[k] - q[k], 0.0, q[k] - n.hi[k]});
        d += e * e;
    }
    return d;
}

void KdTree::search(int node_id, const Eigen::Vector3d& q, std::size_t k, std::size_t skip,
                    std::vector<Neighbor>& best) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
        for (std::size_t i = node.begin; i < node.end; ++i) {
            const std::size_t idx = order_[i];
            if (idx == skip) continue;
            const Neighbor cand{idx, (points_[idx] - q).squaredNorm()};
            if (best.size() < k) {
                best.insert(std::upper_bound(best.begin(), best.end(), cand, closer), cand);
            } else if (closer(cand, best.back())) {
                best.pop_back();
                best.insert(std::upper_bound(best.begin(), best.end(), cand, closer), cand);
            }
        }
        return;
    }
    // Children are visited nearest box first; a box is skipped only when it is
    // strictly farther than the current k-th neighbor, so index tie-breaks hold.
    double dl = box_distance_sq(node.left, q), dr = box_distance_sq(node.right, q);
    int first = node.left, second = node.right;
    if (dr < dl) {
        std::swap(first, second);
        std::swap(dl, dr);
    }
    if (best.size() < k || dl <= best.back().distance_sq) search(first, q, k, skip, best);
    if (best.size() < k || dr <= best.back().distance_sq) search(second, q, k, skip, best);
}

void KdTree::search_nearest(int node_id, const Eigen::Vector3d& q, Neighbor& best) const {
    const Node& node = nodes_[node_id];
    if (node.axis < 0) {
        for (std::size_t i = node.begin; i < node.end; ++i) {
            const double d = (sorted_points_[i] - q).squaredNorm();
            if (d < best.distance_sq || (d == best.distance_sq && order_[i] < best.index)) best = {order_[i], d};
        }
        return;
    }
    double dl = box_distance_sq(node.left, q), dr = box_distance_sq(node.right, q);
    int first = node.left, second = node.right;
    if (dr < dl) {
        std::swap(first, second);
        std::swap(dl, dr);
    }
    if (dl <= best.distance_sq) search_nearest(first, q, best);
    if (dr <= best.distance_sq) search_nearest(second, q, best);
}

Neighbor KdTree::nearest(const Eigen::Vector3d& query) const {
    if (points_.empty()) throw ContractError("kd-tree: nearest on empty tree");
    Neighbor best{static_cast<std::size_t>(-1), std::numeric_limits<double>::infinity()};
    search_nearest(0, query, best);
    return best;
}

std::vector<Neighbor> KdTree::k_nearest(const Eigen::Vector3d& query, std::size_t k,
                                        std::size_t skip) const {
    std::vector<Neighbor> best;
    if (points_.empty() || k == 0) return best;
    best.reserve(k + 1);
    search(0, query, k, skip, best);
    return best;
}

}  // namespace mt3d
