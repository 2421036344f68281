// SPDX-License-Identifier: Apache-2.0

#include "facetrack/recognizer.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "facetrack/error.hpp"

namespace facetrack {

void RecognizerConfig::validate() const {
    if (!(unknown_threshold >= 0.0 && unknown_threshold <= 2.0)) {
        throw Error(ErrorCode::InvalidConfig, "unknown_threshold must lie in [0, 2]");
    }
    if (min_area < 0.0) throw Error(ErrorCode::InvalidConfig, "min_area must be non-negative");
    if (!(min_area_fraction >= 0.0 && min_area_fraction <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "min_area_fraction must lie in [0, 1]");
    }
    if (min_area > 0.0 && min_area_fraction > 0.0) {
        throw Error(ErrorCode::InvalidConfig, "min_area and min_area_fraction are mutually exclusive");
    }
}

AreaVerdict area_filter(const Detection& d, double frame_area, const RecognizerConfig& cfg) {
    const double area = d.box.area();
    if (cfg.min_area > 0.0 && area < cfg.min_area) return AreaVerdict::Reject;
    if (cfg.min_area_fraction > 0.0 && area < cfg.min_area_fraction * frame_area) return AreaVerdict::Reject;
    return AreaVerdict::Accept;
}

Recognizer::Recognizer(const Gallery& gallery, RecognizerConfig cfg) : cfg_(cfg), dim_(gallery.dim) {
    cfg_.validate();
    rows_.reserve(gallery.total_prototypes() * dim_);
    owners_.reserve(gallery.total_prototypes());
    for (const auto& [name, protos] : gallery.entries) {
        const auto owner = static_cast<std::uint32_t>(labels_.size());
        labels_.push_back(Label::participant(name));
        for (const auto& p : protos) {
            if (p.embedding.dim() != dim_) {
                throw Error(ErrorCode::DimensionMismatch, "prototype dimension differs from gallery dimension");
            }
            rows_.insert(rows_.end(), p.embedding.values().begin(), p.embedding.values().end());
            owners_.push_back(owner);
        }
    }
}

Classification Recognizer::classify(const EmbeddingVector& e) const {
    return classify_batch(std::span<const EmbeddingVector>(&e, 1)).front();
}

std::vector<Classification> Recognizer::classify_batch(std::span<const EmbeddingVector> queries) const {
    calls_.fetch_add(queries.size(), std::memory_order_relaxed);
    std::vector<Classification> out;
    out.reserve(queries.size());
    if (owners_.empty()) {
        out.assign(queries.size(), Classification{Label::unknown(), 2.0, std::nullopt});
        return out;
    }
    for (const auto& q : queries) {
        if (q.dim() != dim_) {
            throw Error(ErrorCode::DimensionMismatch, "query dimension " + std::to_string(q.dim()) +
                                                          " differs from gallery dimension " + std::to_string(dim_));
        }
    }
    comparisons_.fetch_add(owners_.size() * queries.size(), std::memory_order_relaxed);

    const std::size_t n_labels = labels_.size();
    std::vector<double> best(queries.size() * n_labels, std::numeric_limits<double>::infinity());
    for (std::size_t r = 0; r < owners_.size(); ++r) {
        const std::span<const double> row(rows_.data() + r * dim_, dim_);
        for (std::size_t q = 0; q < queries.size(); ++q) {
            const double d = std::clamp(1.0 - dot(queries[q].values(), row), 0.0, 2.0);
            auto& slot = best[q * n_labels + owners_[r]];
            if (d < slot) slot = d;
        }
    }
    for (std::size_t q = 0; q < queries.size(); ++q) {
        out.push_back(decide(std::span<const double>(best).subspan(q * n_labels, n_labels)));
    }
    return out;
}

Classification Recognizer::decide(std::span<const double> best) const {
    // Strict comparison over sorted labels: ties go to the smallest label.
    std::size_t top = 0;
    for (std::size_t i = 1; i < best.size(); ++i) {
        if (best[i] < best[top]) top = i;
    }
    Classification c;
    c.distance = best[top];
    c.label = c.distance <= cfg_.unknown_threshold ? labels_[top] : Label::unknown();
    std::optional<std::size_t> second;
    for (std::size_t i = 0; i < best.size(); ++i) {
        if (i == top || best[i] == std::numeric_limits<double>::infinity()) continue;
        if (!second || best[i] < best[*second]) second = i;
    }
    if (second) c.runner_up = std::make_pair(labels_[*second], best[*second]);
    return c;
}

Classification classify(const EmbeddingVector& e, const Gallery& g, const RecognizerConfig& cfg) {
    if (g.empty() || g.total_prototypes() == 0) throw Error(ErrorCode::EmptyGallery, "gallery has no prototypes");
    return Recognizer(g, cfg).classify(e);
}

}  // namespace facetrack
