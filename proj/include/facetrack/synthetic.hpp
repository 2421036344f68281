// SPDX-License-Identifier: Apache-2.0

#ifndef FACETRACK_SYNTHETIC_HPP
#define FACETRACK_SYNTHETIC_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "facetrack/gallery.hpp"
#include "facetrack/types.hpp"

namespace facetrack {

enum class EventKind {
    Occlusion,       // subject stays in the scene but produces no detection
    Exit,            // subject leaves for `length` frames (0: until a reenter)
    Reenter,         // subject is back from `start`
    BackgroundFace,  // small off-group face for `length` frames; subject unused
};

std::string_view to_string(EventKind kind);
EventKind parse_event_kind(std::string_view text);

struct ScenarioEvent {
    EventKind kind = EventKind::Occlusion;
    std::string subject;  // participant label; ignored for background faces
    std::int64_t start = 0;
    std::int64_t length = 0;
};

struct ScenarioSpec {
    std::size_t participants = 4;
    std::size_t pose_clusters = 4;
    std::size_t embedding_dim = kDefaultEmbeddingDim;
    double noise_sigma = 0.05;
    double fps = 30.0;
    double duration_seconds = 60.0;
    double frame_width = 1920.0;
    double frame_height = 1080.0;
    double face_size = 120.0;
    double background_face_size = 30.0;
    double motion_sigma = 1.0;
    double pose_switch_prob = 1.0 / 60.0;  // per frame
    // Per-detection chance that a visible face is partly covered: the box is
    // still detected but the embedding is pulled towards a random direction.
    double partial_occlusion_rate = 0.0;
    double partial_occlusion_signal = 0.25;  // weight of the true pose centre
    double min_separation = 0.3;             // cosine distance between any two pose centres
    double background_separation = 0.8;      // background faces vs. every pose centre
    std::size_t train_samples = 300;         // per participant
    std::uint64_t seed = 0;
    std::vector<ScenarioEvent> events;

    void validate() const;
    std::int64_t frame_count() const;
    std::vector<std::string> labels() const;
};

struct GroundTruthStream {
    StreamHeader header;
    std::vector<Frame> frames;            // test segment, gt_label and present filled in
    std::vector<TrainingTrack> tracks;    // separate training segment
    std::vector<std::vector<EmbeddingVector>> pose_centres;  // per participant, label order
};

/// Pure function of the spec (seed included). Throws InfeasibleSpec when the
/// separation constraints cannot be met within 10^6 draws.
GroundTruthStream generate(const ScenarioSpec& spec);

/// Four participants, 60 s at 30 fps, three 5-frame occlusions each and two
/// background faces.
ScenarioSpec standard_scenario(std::uint64_t seed = 7);

struct SplitResult {
    std::vector<TrainingTrack> tracks;
    std::vector<Frame> test;
    std::vector<std::string> missing_labels;  // in the test part but never in the prefix
};

/// The first round(train_seconds * fps) frames become per-participant
/// training tracks (labeled detections only); the rest is the test stream.
SplitResult split_train_test(std::span<const Frame> frames, double fps, double train_seconds);

}  // namespace facetrack

#endif  // FACETRACK_SYNTHETIC_HPP
