// SPDX-License-Identifier: Apache-2.0

#include "facetrack/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "facetrack/error.hpp"
#include "facetrack/rng.hpp"

namespace facetrack {
namespace {

// Row-major copy of the input so the inner loops run over contiguous memory.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    const double* row(std::size_t i) const { return data.data() + i * cols; }
    double* row(std::size_t i) { return data.data() + i * cols; }
};

Matrix pack(std::span<const Point> points) {
    if (points.empty()) throw Error(ErrorCode::EmptyInput, "no points to cluster");
    Matrix m;
    m.rows = points.size();
    m.cols = points.front().size();
    m.data.reserve(m.rows * m.cols);
    for (const auto& p : points) {
        if (p.size() != m.cols) {
            throw Error(ErrorCode::DimensionMismatch, "points have differing dimensions");
        }
        m.data.insert(m.data.end(), p.begin(), p.end());
    }
    return m;
}

double sq_dist(const double* a, const double* b, std::size_t d) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        const double t = a[j] - b[j];
        s += t * t;
    }
    return s;
}

Matrix seed_plus_plus(const Matrix& pts, std::size_t k, Rng& rng) {
    Matrix c{k, pts.cols, std::vector<double>(k * pts.cols)};
    std::vector<bool> chosen(pts.rows, false);
    std::vector<double> d2(pts.rows, std::numeric_limits<double>::infinity());

    auto take = [&](std::size_t centre, std::size_t idx) {
        chosen[idx] = true;
        std::copy_n(pts.row(idx), pts.cols, c.row(centre));
        for (std::size_t i = 0; i < pts.rows; ++i) {
            d2[i] = std::min(d2[i], sq_dist(pts.row(i), c.row(centre), pts.cols));
        }
    };

    take(0, static_cast<std::size_t>(rng.index(pts.rows)));
    for (std::size_t centre = 1; centre < k; ++centre) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = pts.rows;
        if (total > 0.0) {
            const double r = rng.uniform() * total;
            double cum = 0.0;
            for (std::size_t i = 0; i < pts.rows; ++i) {
                cum += d2[i];
                if (cum > r) {
                    pick = i;
                    break;
                }
            }
            if (pick == pts.rows) {
                for (std::size_t i = pts.rows; i-- > 0;) {
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            // Only duplicates left: fall back to the lowest unused index.
            for (std::size_t i = 0; i < pts.rows; ++i) {
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
            }
        }
        take(centre, pick);
    }
    return c;
}

void assign(const Matrix& pts, const Matrix& c, std::vector<std::size_t>& assignment,
            std::vector<double>& dist) {
    for (std::size_t i = 0; i < pts.rows; ++i) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t j = 0; j < c.rows; ++j) {
            const double d = sq_dist(pts.row(i), c.row(j), pts.cols);
            if (d < best) {
                best = d;
                arg = j;
            }
        }
        assignment[i] = arg;
        dist[i] = best;
    }
}

void repair_empty(const Matrix& pts, Matrix& c, std::vector<std::size_t>& assignment,
                  std::vector<double>& dist) {
    std::vector<std::size_t> sizes(c.rows, 0);
    for (auto a : assignment) ++sizes[a];
    for (std::size_t empty = 0; empty < c.rows; ++empty) {
        if (sizes[empty] != 0) continue;
        std::size_t victim = pts.rows;
        double worst = -1.0;
        for (std::size_t i = 0; i < pts.rows; ++i) {
            if (sizes[assignment[i]] > 1 && dist[i] > worst) {
                worst = dist[i];
                victim = i;
            }
        }
        // k <= rows guarantees some cluster has a spare member.
        --sizes[assignment[victim]];
        assignment[victim] = empty;
        sizes[empty] = 1;
        dist[victim] = 0.0;
        std::copy_n(pts.row(victim), pts.cols, c.row(empty));
    }
}

void update_means(const Matrix& pts, const std::vector<std::size_t>& assignment, Matrix& c) {
    std::fill(c.data.begin(), c.data.end(), 0.0);
    std::vector<std::size_t> counts(c.rows, 0);
    for (std::size_t i = 0; i < pts.rows; ++i) {
        double* row = c.row(assignment[i]);
        const double* p = pts.row(i);
        for (std::size_t j = 0; j < pts.cols; ++j) row[j] += p[j];
        ++counts[assignment[i]];
    }
    for (std::size_t k = 0; k < c.rows; ++k) {
        double* row = c.row(k);
        for (std::size_t j = 0; j < c.cols; ++j) row[j] /= static_cast<double>(counts[k]);
    }
}

// One sweep of single-point moves (Hartigan). Moving x from cluster a to b
// changes the SSE by n_b/(n_b+1)*|x-c_b|^2 - n_a/(n_a-1)*|x-c_a|^2, so a
// move is made only when that is negative. Means are updated incrementally;
// the caller recomputes them exactly afterwards. Lloyd stops at points where
// no single reassignment to the *nearest* centre helps, which can still leave
// such moves available.
bool hartigan_pass(const Matrix& pts, Matrix& c, std::vector<std::size_t>& assignment) {
    std::vector<std::size_t> counts(c.rows, 0);
    for (auto a : assignment) ++counts[a];
    bool moved = false;
    for (std::size_t i = 0; i < pts.rows; ++i) {
        const std::size_t a = assignment[i];
        if (counts[a] < 2) continue;
        const double* x = pts.row(i);
        const double na = static_cast<double>(counts[a]);
        const double removal = na / (na - 1.0) * sq_dist(x, c.row(a), pts.cols);
        double best = removal;
        std::size_t target = a;
        for (std::size_t b = 0; b < c.rows; ++b) {
            if (b == a) continue;
            const double nb = static_cast<double>(counts[b]);
            const double cost = nb / (nb + 1.0) * sq_dist(x, c.row(b), pts.cols);
            if (cost < best) {
                best = cost;
                target = b;
            }
        }
        if (target == a || removal - best <= 1e-12 * (1.0 + removal)) continue;
        const double nb = static_cast<double>(counts[target]);
        double* ca = c.row(a);
        double* cb = c.row(target);
        for (std::size_t j = 0; j < pts.cols; ++j) {
            ca[j] = (ca[j] * na - x[j]) / (na - 1.0);
            cb[j] = (cb[j] * nb + x[j]) / (nb + 1.0);
        }
        --counts[a];
        ++counts[target];
        assignment[i] = target;
        moved = true;
    }
    return moved;
}

double sse_of(const Matrix& pts, const Matrix& c, const std::vector<std::size_t>& assignment) {
    double s = 0.0;
    for (std::size_t i = 0; i < pts.rows; ++i) s += sq_dist(pts.row(i), c.row(assignment[i]), pts.cols);
    return s;
}

}  // namespace

KMeansResult kmeans(std::span<const Point> points, std::size_t k, std::uint64_t seed,
                    std::size_t max_iters) {
    if (k == 0) throw Error(ErrorCode::InvalidConfig, "k must be positive");
    if (max_iters == 0) throw Error(ErrorCode::InvalidConfig, "max_iters must be positive");
    const Matrix pts = pack(points);
    k = std::min(k, pts.rows);

    Rng rng(seed);
    Matrix c = seed_plus_plus(pts, k, rng);
    std::vector<std::size_t> assignment(pts.rows);
    std::vector<double> dist(pts.rows);
    assign(pts, c, assignment, dist);
    repair_empty(pts, c, assignment, dist);

    KMeansResult out;
    auto update = [&] {
        update_means(pts, assignment, c);
        out.sse_history.push_back(sse_of(pts, c, assignment));
        ++out.iterations;
    };
    update();
    while (out.iterations < max_iters) {
        const auto previous = assignment;
        assign(pts, c, assignment, dist);
        repair_empty(pts, c, assignment, dist);
        if (assignment == previous && !hartigan_pass(pts, c, assignment)) break;
        update();
    }

    out.sse = out.sse_history.back();
    out.assignment = std::move(assignment);
    out.centroids.reserve(k);
    for (std::size_t j = 0; j < k; ++j) out.centroids.emplace_back(c.row(j), c.row(j) + c.cols);
    return out;
}

double within_cluster_sse(std::span<const Point> points, std::span<const Point> centroids,
                          std::span<const std::size_t> assignment) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& p = points[i];
        const auto& c = centroids[assignment[i]];
        s += sq_dist(p.data(), c.data(), p.size());
    }
    return s;
}

std::vector<std::size_t> snap_to_medoids(std::span<const Point> centroids,
                                         std::span<const Point> points) {
    if (centroids.empty()) throw Error(ErrorCode::EmptyInput, "no centroids");
    const Matrix pts = pack(points);
    std::vector<std::size_t> out;
    out.reserve(centroids.size());
    for (const auto& c : centroids) {
        if (c.size() != pts.cols) {
            throw Error(ErrorCode::DimensionMismatch, "centroid dimension differs from points");
        }
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t i = 0; i < pts.rows; ++i) {
            const double d = sq_dist(pts.row(i), c.data(), pts.cols);
            if (d < best) {
                best = d;
                arg = i;
            }
        }
        out.push_back(arg);
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace facetrack
