// SPDX-License-Identifier: Apache-2.0

#include "facetrack/types.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "facetrack/error.hpp"

namespace facetrack {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidEmbedding: return "InvalidEmbedding";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::DuplicateLabel: return "DuplicateLabel";
        case ErrorCode::EmptyGallery: return "EmptyGallery";
        case ErrorCode::EmptyStream: return "EmptyStream";
        case ErrorCode::OutOfOrderFrame: return "OutOfOrderFrame";
        case ErrorCode::InfeasibleSpec: return "InfeasibleSpec";
        case ErrorCode::InvalidSplit: return "InvalidSplit";
        case ErrorCode::MisalignedStreams: return "MisalignedStreams";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
        case ErrorCode::InvalidConfig: return "InvalidConfig";
        case ErrorCode::Io: return "Io";
    }
    return "Error";
}

EmbeddingVector EmbeddingVector::from_unit(std::vector<double> values) {
    double sq = 0.0;
    for (double v : values) sq += v * v;
    if (values.empty() || std::abs(std::sqrt(sq) - 1.0) > kUnitNormTolerance) {
        throw Error(ErrorCode::InvalidEmbedding, "vector is not unit length");
    }
    return EmbeddingVector(std::move(values));
}

EmbeddingVector l2_normalize(std::span<const double> v) {
    double sq = 0.0;
    for (double x : v) sq += x * x;
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0) || !std::isfinite(norm)) {
        throw Error(ErrorCode::InvalidEmbedding, "cannot normalize a zero or non-finite vector");
    }
    std::vector<double> out(v.begin(), v.end());
    for (double& x : out) x /= norm;
    return EmbeddingVector(std::move(out));
}

double dot(std::span<const double> a, std::span<const double> b) {
    const std::size_t n = a.size();
    double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) s0 += a[i] * b[i];
    return (s0 + s1) + (s2 + s3);
}

double cosine_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorCode::DimensionMismatch,
                    "embedding dimensions " + std::to_string(a.dim()) + " and " +
                        std::to_string(b.dim()));
    }
    return std::clamp(1.0 - dot(a.values(), b.values()), 0.0, 2.0);
}

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = ix * iy;
    const double uni = a.area() + b.area() - inter;
    if (inter <= 0.0 || uni <= 0.0) return 0.0;
    return std::clamp(inter / uni, 0.0, 1.0);
}

Label Label::participant(std::string name) {
    if (name.empty() || name == kUnknownName) {
        throw Error(ErrorCode::InvalidConfig, "participant label must be non-empty and not \"Unknown\"");
    }
    Label l;
    l.name_ = std::move(name);
    return l;
}

Label Label::parse(std::string_view text) {
    if (text == kUnknownName) return unknown();
    return participant(std::string(text));
}

std::string_view to_string(EntrySource source) {
    switch (source) {
        case EntrySource::Classified: return "classified";
        case EntrySource::Reused: return "reused";
        case EntrySource::Occluded: return "occluded";
    }
    return "classified";
}

EntrySource parse_entry_source(std::string_view text) {
    if (text == "classified") return EntrySource::Classified;
    if (text == "reused") return EntrySource::Reused;
    if (text == "occluded") return EntrySource::Occluded;
    throw Error(ErrorCode::ParseError, "unknown entry source '" + std::string(text) + "'");
}

bool has_duplicate_labels(const FrameResult& result) {
    std::set<std::string> seen;
    for (const auto& e : result.entries) {
        if (e.label.is_unknown()) continue;
        if (!seen.insert(e.label.name()).second) return true;
    }
    return false;
}

bool resolve_duplicate_labels(std::span<FrameEntry> entries) {
    bool conflict = false;
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].label.is_unknown()) continue;
        for (std::size_t j = i + 1; j < entries.size(); ++j) {
            if (entries[j].label != entries[i].label) continue;
            conflict = true;
            if (entries[j].distance < entries[i].distance) {
                entries[i].label = Label::unknown();
                break;
            }
            entries[j].label = Label::unknown();
        }
    }
    return conflict;
}

}  // namespace facetrack
