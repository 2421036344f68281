// SPDX-License-Identifier: Apache-2.0

#include "facetrack/gallery.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "facetrack/error.hpp"
#include "facetrack/kmeans.hpp"
#include "facetrack/parallel.hpp"
#include "facetrack/rng.hpp"

namespace facetrack {
namespace {

// Checks each track and returns the shared embedding dimension.
std::size_t check_tracks(std::span<const TrainingTrack> tracks) {
    if (tracks.empty()) throw Error(ErrorCode::EmptyInput, "no training tracks");
    std::set<std::string> labels;
    const std::size_t dim = tracks.front().samples.empty() ? 0 : tracks.front().samples.front().embedding.dim();
    for (const auto& t : tracks) {
        validate(t);
        if (!labels.insert(t.label.name()).second) {
            throw Error(ErrorCode::DuplicateLabel, "label '" + t.label.name() + "' appears in more than one track");
        }
        for (const auto& s : t.samples) {
            if (s.embedding.dim() != dim) {
                throw Error(ErrorCode::DimensionMismatch, "training embeddings have differing dimensions");
            }
        }
    }
    return dim;
}

}  // namespace

void validate(const TrainingTrack& track) {
    if (track.label.is_unknown()) throw Error(ErrorCode::InvalidConfig, "training track without a label");
    if (track.samples.empty()) {
        throw Error(ErrorCode::EmptyInput, "training track '" + track.label.name() + "' has no samples");
    }
    if (!(track.fps > 0.0)) throw Error(ErrorCode::InvalidConfig, "training track fps must be positive");
    for (std::size_t i = 1; i < track.samples.size(); ++i) {
        if (track.samples[i].frame <= track.samples[i - 1].frame) {
            throw Error(ErrorCode::OutOfOrderFrame,
                        "training track '" + track.label.name() + "' frames are not strictly increasing");
        }
    }
}

std::string_view to_string(GalleryMethod method) {
    switch (method) {
        case GalleryMethod::KMeans: return "kmeans";
        case GalleryMethod::Sampling: return "sampling";
        case GalleryMethod::Full: return "full";
    }
    return "kmeans";
}

GalleryMethod parse_gallery_method(std::string_view text) {
    if (text == "kmeans") return GalleryMethod::KMeans;
    if (text == "sampling") return GalleryMethod::Sampling;
    if (text == "full") return GalleryMethod::Full;
    throw Error(ErrorCode::InvalidConfig, "unknown gallery method '" + std::string(text) + "'");
}

std::size_t Gallery::total_prototypes() const {
    std::size_t n = 0;
    for (const auto& [_, protos] : entries) n += protos.size();
    return n;
}

Gallery build_gallery_kmeans(std::span<const TrainingTrack> tracks, const KMeansGalleryOptions& options) {
    if (options.k == 0) throw Error(ErrorCode::InvalidConfig, "k must be positive");
    const std::size_t dim = check_tracks(tracks);
    const std::size_t k_each = options.budget == KBudget::PerParticipant
                                   ? options.k
                                   : std::max<std::size_t>(1, options.k / tracks.size());

    std::vector<std::vector<Prototype>> built(tracks.size());
    parallel_for(tracks.size(), options.workers, [&](std::size_t t) {
        const auto& track = tracks[t];
        std::vector<Point> points;
        points.reserve(track.samples.size());
        for (const auto& s : track.samples) {
            points.emplace_back(s.embedding.values().begin(), s.embedding.values().end());
        }
        const auto km = kmeans(points, k_each, derive_seed(options.seed, track.label.name()), options.max_iters);
        for (std::size_t idx : snap_to_medoids(km.centroids, points)) {
            built[t].push_back({l2_normalize(points[idx]), track.samples[idx].frame});
        }
    });

    Gallery g;
    g.method = GalleryMethod::KMeans;
    g.k = options.k;
    g.seed = options.seed;
    g.dim = dim;
    for (std::size_t t = 0; t < tracks.size(); ++t) g.entries[tracks[t].label.name()] = std::move(built[t]);
    return g;
}

Gallery build_gallery_sampling(std::span<const TrainingTrack> tracks) {
    Gallery g;
    g.method = GalleryMethod::Sampling;
    g.dim = check_tracks(tracks);
    for (const auto& track : tracks) {
        auto& protos = g.entries[track.label.name()];
        const std::int64_t first = track.samples.front().frame;
        const std::int64_t last = track.samples.back().frame;
        std::size_t cursor = 0;
        for (std::int64_t j = 0;; ++j) {
            const auto boundary = first + static_cast<std::int64_t>(std::ceil(static_cast<double>(j) * track.fps));
            if (boundary > last) break;
            while (cursor < track.samples.size() && track.samples[cursor].frame < boundary) ++cursor;
            if (cursor == track.samples.size()) break;
            const auto& s = track.samples[cursor];
            if (protos.empty() || protos.back().frame != s.frame) protos.push_back({s.embedding, s.frame});
        }
    }
    return g;
}

Gallery build_gallery_full(std::span<const TrainingTrack> tracks) {
    Gallery g;
    g.method = GalleryMethod::Full;
    g.dim = check_tracks(tracks);
    for (const auto& track : tracks) {
        auto& protos = g.entries[track.label.name()];
        protos.reserve(track.samples.size());
        for (const auto& s : track.samples) protos.push_back({s.embedding, s.frame});
    }
    return g;
}

}  // namespace facetrack
