// SPDX-License-Identifier: Apache-2.0

#ifndef FACETRACK_TYPES_HPP
#define FACETRACK_TYPES_HPP

#include <array>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace facetrack {

inline constexpr std::size_t kDefaultEmbeddingDim = 512;
inline constexpr double kUnitNormTolerance = 1e-6;

struct BoundingBox {
    double x = 0.0;  // left
    double y = 0.0;  // top
    double w = 1.0;
    double h = 1.0;

    double area() const { return w * h; }
    bool valid() const { return w > 0.0 && h > 0.0; }

    bool operator==(const BoundingBox&) const = default;
};

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    bool operator==(const Point2&) const = default;
};

/// Left eye, right eye, nose, left mouth corner, right mouth corner.
using Landmarks = std::array<Point2, 5>;

/// Unit-norm feature vector. The only ways to obtain one are l2_normalize()
/// and from_unit(), so the norm invariant holds for every live instance.
class EmbeddingVector {
public:
    EmbeddingVector() = default;

    /// Wraps values already known to be unit length (checked to 1e-6).
    static EmbeddingVector from_unit(std::vector<double> values);

    std::span<const double> values() const { return values_; }
    std::size_t dim() const { return values_.size(); }
    bool empty() const { return values_.empty(); }
    double operator[](std::size_t i) const { return values_[i]; }

    bool operator==(const EmbeddingVector&) const = default;

private:
    explicit EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {}
    friend EmbeddingVector l2_normalize(std::span<const double> v);

    std::vector<double> values_;
};

/// A participant pseudonym or the distinguished Unknown label. The name
/// "Unknown" is reserved and cannot be used as a participant pseudonym.
class Label {
public:
    static constexpr std::string_view kUnknownName = "Unknown";

    Label() = default;  // Unknown
    static Label unknown() { return Label(); }
    static Label participant(std::string name);
    /// Parses the serialized form: "Unknown" maps to the Unknown label.
    static Label parse(std::string_view text);

    bool is_unknown() const { return name_.empty(); }
    const std::string& name() const { return name_; }
    std::string_view str() const { return is_unknown() ? kUnknownName : std::string_view(name_); }

    auto operator<=>(const Label&) const = default;

private:
    std::string name_;
};

struct Detection {
    std::int64_t frame = 0;
    BoundingBox box;
    std::optional<Landmarks> landmarks;
    EmbeddingVector embedding;
    std::optional<Label> gt_label;
};

/// One frame of a detection stream. `present` lists the participants that are
/// truly in the scene (visible or occluded); it is only populated for
/// ground-truth streams and is empty otherwise.
struct Frame {
    std::int64_t index = 0;
    std::vector<Detection> detections;
    std::vector<Label> present;
};

enum class EntrySource { Classified, Reused, Occluded };

std::string_view to_string(EntrySource source);
EntrySource parse_entry_source(std::string_view text);

struct FrameEntry {
    Label label;
    BoundingBox box;
    double distance = 0.0;
    EntrySource source = EntrySource::Classified;
};

struct FrameResult {
    std::int64_t frame = 0;
    std::vector<FrameEntry> entries;
};

/// Throws InvalidEmbedding for an all-zero (or non-finite) vector.
EmbeddingVector l2_normalize(std::span<const double> v);

/// 1 - dot(a, b), clamped to [0, 2]. Throws DimensionMismatch.
double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b);

/// Dot product of two equally sized spans. Accumulates in four lanes so the
/// hot classification loop gets some instruction-level parallelism while the
/// summation order stays fixed (results are reproducible run to run).
double dot(std::span<const double> a, std::span<const double> b);

double iou(const BoundingBox& a, const BoundingBox& b);

/// True when some non-Unknown label occurs more than once in the frame.
bool has_duplicate_labels(const FrameResult& result);

/// Keeps each non-Unknown label only on the entry with the smallest distance
/// (the earlier entry on a tie) and relabels the others Unknown. Returns true
/// if anything was relabeled.
bool resolve_duplicate_labels(std::span<FrameEntry> entries);

struct StreamHeader {
    int version = 1;
    double fps = 30.0;
    double frame_width = 1920.0;
    double frame_height = 1080.0;
    std::size_t embedding_dim = kDefaultEmbeddingDim;
};

}  // namespace facetrack

#endif  // FACETRACK_TYPES_HPP
