// SPDX-License-Identifier: Apache-2.0

#ifndef FACETRACK_GALLERY_HPP
#define FACETRACK_GALLERY_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facetrack/types.hpp"

namespace facetrack {

struct TrainingSample {
    std::int64_t frame = 0;
    EmbeddingVector embedding;
};

/// Labeled embeddings from one participant's training clip.
struct TrainingTrack {
    Label label;
    double fps = 30.0;
    std::vector<TrainingSample> samples;  // strictly increasing frames
};

/// Throws if the track is empty, unlabeled, has fps <= 0 or unordered frames.
void validate(const TrainingTrack& track);

enum class GalleryMethod { KMeans, Sampling, Full };

std::string_view to_string(GalleryMethod method);
GalleryMethod parse_gallery_method(std::string_view text);

struct Prototype {
    EmbeddingVector embedding;
    std::int64_t frame = 0;  // provenance: frame of the training sample it came from
};

/// Prototype lists keyed by participant name. std::map keeps labels sorted,
/// which fixes iteration order for classification and serialization.
struct Gallery {
    GalleryMethod method = GalleryMethod::KMeans;
    std::size_t k = 0;  // requested prototypes per participant (kmeans only)
    std::uint64_t seed = 0;
    std::size_t dim = 0;
    std::map<std::string, std::vector<Prototype>> entries;

    bool empty() const { return entries.empty(); }
    std::size_t total_prototypes() const;
};

enum class KBudget {
    PerParticipant,  // k prototypes for every participant
    GlobalSplit,     // k split evenly across participants (at least one each)
};

struct KMeansGalleryOptions {
    std::size_t k = 16;
    std::uint64_t seed = 0;
    std::size_t max_iters = 100;
    KBudget budget = KBudget::PerParticipant;
    unsigned workers = 1;
};

/// K-means over each participant's samples, each centroid replaced by its
/// nearest actual sample. Participants are clustered independently with a
/// seed derived from (seed, label), so the result does not depend on the
/// worker count or on which other participants are present.
Gallery build_gallery_kmeans(std::span<const TrainingTrack> tracks, const KMeansGalleryOptions& options);

/// One prototype per second of video: the first sample at or after each
/// boundary first_frame + ceil(j * fps).
Gallery build_gallery_sampling(std::span<const TrainingTrack> tracks);

/// Every training sample becomes a prototype (the exhaustive baseline).
Gallery build_gallery_full(std::span<const TrainingTrack> tracks);

}  // namespace facetrack

#endif  // FACETRACK_GALLERY_HPP
