// SPDX-License-Identifier: Apache-2.0

#ifndef FACETRACK_RECOGNIZER_HPP
#define FACETRACK_RECOGNIZER_HPP

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "facetrack/gallery.hpp"
#include "facetrack/types.hpp"

namespace facetrack {

struct RecognizerConfig {
    double unknown_threshold = 0.6;  // cosine distance
    double min_area = 0.0;           // px^2, 0 disables
    double min_area_fraction = 0.0;  // of frame area, 0 disables

    void validate() const;
};

struct Classification {
    Label label;
    double distance = 0.0;
    std::optional<std::pair<Label, double>> runner_up;
};

enum class AreaVerdict { Accept, Reject };

AreaVerdict area_filter(const Detection& d, double frame_area, const RecognizerConfig& cfg);

/// Exhaustive minimum-distance classifier over a gallery, flattened into one
/// contiguous matrix. Counts calls and prototype comparisons so callers can
/// observe when classification was skipped.
class Recognizer {
public:
    /// An empty gallery is allowed here; every query is then Unknown.
    Recognizer(const Gallery& gallery, RecognizerConfig cfg);

    Recognizer(const Recognizer&) = delete;
    Recognizer& operator=(const Recognizer&) = delete;

    Classification classify(const EmbeddingVector& e) const;

    /// Classifies several queries in one pass over the prototype matrix.
    /// Element i equals classify(queries[i]) exactly; counters advance as if
    /// classify had been called once per query.
    std::vector<Classification> classify_batch(std::span<const EmbeddingVector> queries) const;

    const RecognizerConfig& config() const { return cfg_; }
    std::size_t dim() const { return dim_; }
    std::size_t prototypes() const { return owners_.size(); }
    std::uint64_t calls() const { return calls_.load(std::memory_order_relaxed); }
    std::uint64_t comparisons() const { return comparisons_.load(std::memory_order_relaxed); }

private:
    Classification decide(std::span<const double> best) const;

    RecognizerConfig cfg_;
    std::size_t dim_ = 0;
    std::vector<Label> labels_;       // sorted participant labels
    std::vector<std::uint32_t> owners_;  // label index per prototype row
    std::vector<double> rows_;
    mutable std::atomic<std::uint64_t> calls_{0};
    mutable std::atomic<std::uint64_t> comparisons_{0};
};

/// Throws EmptyGallery or DimensionMismatch.
Classification classify(const EmbeddingVector& e, const Gallery& g, const RecognizerConfig& cfg);

}  // namespace facetrack

#endif  // FACETRACK_RECOGNIZER_HPP
