// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <set>

#include "facetrack/kmeans.hpp"
#include "facetrack/rng.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace facetrack;
using facetrack::test::code_of;

namespace {

std::vector<Point> random_points(Rng& rng, std::size_t n, std::size_t d) {
    std::vector<Point> pts(n, Point(d));
    for (auto& p : pts)
        for (double& x : p) x = rng.uniform(-1.0, 1.0);
    return pts;
}

}  // namespace

TEST_CASE("kmeans with k=1 returns the mean") {
    const std::vector<Point> pts{{0.0, 0.0}, {2.0, 0.0}};
    const auto r = kmeans(pts, 1, 0);
    REQUIRE(r.centroids.size() == 1);
    CHECK(r.centroids[0] == Point{1.0, 0.0});
    CHECK(r.sse == doctest::Approx(2.0));
}

TEST_CASE("kmeans with one cluster per point has zero SSE") {
    Rng rng(21);
    const auto pts = random_points(rng, 7, 3);
    const auto r = kmeans(pts, 7, 4);
    CHECK(r.sse == 0.0);
    CHECK(std::set<std::size_t>(r.assignment.begin(), r.assignment.end()).size() == 7);
    // k beyond |points| is clamped
    CHECK(kmeans(pts, 50, 4).centroids.size() == 7);
}

TEST_CASE("kmeans separates two 1-D groups like the partition oracle") {
    const std::vector<Point> pts{{0.0}, {0.1}, {10.0}, {10.1}};
    std::vector<std::size_t> groups;
    const double best = oracle::optimal_sse(pts, 2, &groups);
    CHECK(groups[0] == groups[1]);
    CHECK(groups[2] == groups[3]);
    CHECK(groups[0] != groups[2]);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto r = kmeans(pts, 2, seed);
        CHECK(r.assignment[0] == r.assignment[1]);
        CHECK(r.assignment[2] == r.assignment[3]);
        CHECK(r.assignment[0] != r.assignment[2]);
        CHECK(std::abs(r.sse - best) <= 1e-12);
    }
}

TEST_CASE("kmeans SSE never increases between iterations") {
    Rng rng(8);
    for (int trial = 0; trial < 60; ++trial) {
        const auto pts = random_points(rng, 20 + rng.index(200), 1 + rng.index(8));
        const auto r = kmeans(pts, 1 + rng.index(12), rng.next_u64());
        REQUIRE_FALSE(r.sse_history.empty());
        for (std::size_t i = 1; i < r.sse_history.size(); ++i) {
            CHECK(r.sse_history[i] <= r.sse_history[i - 1] + 1e-12 * (1.0 + r.sse_history[i - 1]));
        }
        CHECK(r.sse == doctest::Approx(within_cluster_sse(pts, r.centroids, r.assignment)).epsilon(1e-12));
    }
}

TEST_CASE("kmeans leaves no cluster empty") {
    // Many duplicates make empty clusters likely without repair.
    std::vector<Point> pts;
    for (int i = 0; i < 30; ++i) pts.push_back({static_cast<double>(i % 3), 0.0});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto r = kmeans(pts, 3, seed);
        std::set<std::size_t> used(r.assignment.begin(), r.assignment.end());
        CHECK(used.size() == 3);
        CHECK(r.sse == 0.0);
    }
}

TEST_CASE("kmeans is deterministic for a seed") {
    Rng rng(2);
    const auto pts = random_points(rng, 100, 5);
    const auto a = kmeans(pts, 6, 99);
    const auto b = kmeans(pts, 6, 99);
    CHECK(a.centroids == b.centroids);
    CHECK(a.assignment == b.assignment);
}

TEST_CASE("kmeans input errors") {
    const std::vector<Point> none;
    CHECK(code_of([&] { kmeans(none, 1, 0); }) == ErrorCode::EmptyInput);
    const std::vector<Point> ragged{{0.0, 1.0}, {1.0}};
    CHECK(code_of([&] { kmeans(ragged, 1, 0); }) == ErrorCode::DimensionMismatch);
    const std::vector<Point> one{{1.0}};
    CHECK(code_of([&] { kmeans(one, 0, 0); }) == ErrorCode::InvalidConfig);
}

TEST_CASE("snap_to_medoids") {
    const std::vector<Point> pts{{0.0, 0.0}, {2.0, 0.0}};
    CHECK(snap_to_medoids(std::vector<Point>{{2.0, 0.0}}, pts) == std::vector<std::size_t>{1});
    CHECK(snap_to_medoids(std::vector<Point>{{1.0, 0.0}}, pts) == std::vector<std::size_t>{0});
    // both centroids snap to the same point
    CHECK(snap_to_medoids(std::vector<Point>{{1.5, 0.0}, {1.9, 0.0}}, pts) == std::vector<std::size_t>{1});
}

TEST_CASE("snap_to_medoids matches a nearest scan") {
    Rng rng(31);
    for (int trial = 0; trial < 50; ++trial) {
        const auto pts = random_points(rng, 20, 3);
        const auto centroids = random_points(rng, 3, 3);
        std::set<std::size_t> expected;
        for (const auto& c : centroids) {
            std::size_t arg = 0;
            double best = INFINITY;
            for (std::size_t i = 0; i < pts.size(); ++i) {
                double d2 = 0.0;
                for (std::size_t j = 0; j < 3; ++j) d2 += (pts[i][j] - c[j]) * (pts[i][j] - c[j]);
                if (d2 < best) {
                    best = d2;
                    arg = i;
                }
            }
            expected.insert(arg);
        }
        const auto got = snap_to_medoids(centroids, pts);
        CHECK(got == std::vector<std::size_t>(expected.begin(), expected.end()));
    }
}

TEST_CASE("best of ten restarts reaches the optimal partition on small inputs") {
    Rng rng(77);
    for (int trial = 0; trial < 40; ++trial) {
        const std::size_t n = 1 + rng.index(8);
        const auto pts = random_points(rng, n, 1 + rng.index(4));
        const std::size_t k = 1 + rng.index(3);
        double best = INFINITY;
        for (std::uint64_t s = 0; s < 10; ++s) best = std::min(best, kmeans(pts, k, s).sse);
        CHECK(std::abs(best - oracle::optimal_sse(pts, k)) <= 1e-9);
    }
}
