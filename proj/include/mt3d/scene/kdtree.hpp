#pragma once

#include <Eigen/Core>
#include <cstddef>
#include <vector>

namespace mt3d {

struct Neighbor {
    std::size_t index = 0;
    double distance_sq = 0.0;
};

/// Static 3-d tree over a point set. Queries break distance ties toward the
/// lower point index so results are reproducible.
class KdTree {
public:
    KdTree() = default;
    explicit KdTree(std::vector<Eigen::Vector3d> points);

    std::size_t size() const { return points_.size(); }
    const std::vector<Eigen::Vector3d>& points() const { return points_; }

    Neighbor nearest(const Eigen::Vector3d& query) const;
    /// k nearest points sorted by (distance, index); `skip` excludes one index.
    std::vector<Neighbor> k_nearest(const Eigen::Vector3d& query, std::size_t k,
                                    std::size_t skip = static_cast<std::size_t>(-1)) const;

private:
    struct Node {
        int axis = -1;  // -1 marks a leaf
        Eigen::Vector3d lo = Eigen::Vector3d::Zero();  // tight bounding box of the node's points
        Eigen::Vector3d hi = Eigen::Vector3d::Zero();
        std::size_t begin = 0, end = 0;
        int left = -1, right = -1;
    };

    int build(std::size_t begin, std::size_t end);
    void search(int node, const Eigen::Vector3d& q, std::size_t k, std::size_t skip,
                std::vector<Neighbor>& best) const;
    void search_nearest(int node, const Eigen::Vector3d& q, Neighbor& best) const;
    double box_distance_sq(int node, const Eigen::Vector3d& q) const;

    std::vector<Eigen::Vector3d> points_;
    std::vector<std::size_t> order_;
    std::vector<Eigen::Vector3d> sorted_points_;  // points_ permuted by order_
    std::vector<Node> nodes_;
};

}  // namespace mt3d
