// SPDX-License-Identifier: Apache-2.0

#ifndef FACETRACK_KMEANS_HPP
#define FACETRACK_KMEANS_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace facetrack {

using Point = std::vector<double>;

struct KMeansResult {
    std::vector<Point> centroids;
    std::vector<std::size_t> assignment;  // cluster index per input point
    double sse = 0.0;                     // within-cluster sum of squared distances
    std::vector<double> sse_history;      // SSE after every centroid update
    std::size_t iterations = 0;
};

/// Lloyd's algorithm with k-means++ seeding, refined by single-point moves.
///
/// k is clamped to the number of points. When Lloyd assignments stop
/// changing, one pass of Hartigan moves (reassigning a point whenever that
/// lowers the SSE once both means shift) is tried; if it moves anything,
/// Lloyd resumes. Iteration stops when neither step changes the assignment
/// or after max_iters centroid updates. A cluster that ends up
/// empty takes over the point farthest from its own centroid (taken only
/// from clusters with more than one member), so every cluster is non-empty
/// on return. Throws EmptyInput for no points, DimensionMismatch for ragged
/// input and InvalidConfig for k == 0.
KMeansResult kmeans(std::span<const Point> points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters = 100);

/// Sum of squared Euclidean distances from each point to its assigned centroid.
double within_cluster_sse(std::span<const Point> points, std::span<const Point> centroids,
                          std::span<const std::size_t> assignment);

/// For each centroid, the index of the nearest point (ties go to the lowest
/// index). Returned indices are ascending and unique, so the result can be
/// shorter than the centroid list.
std::vector<std::size_t> snap_to_medoids(std::span<const Point> centroids,
                                         std::span<const Point> points);

}  // namespace facetrack

#endif  // FACETRACK_KMEANS_HPP
