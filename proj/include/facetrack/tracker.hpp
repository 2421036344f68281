// SPDX-License-Identifier: Apache-2.0

#ifndef FACETRACK_TRACKER_HPP
#define FACETRACK_TRACKER_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facetrack/gallery.hpp"
#include "facetrack/recognizer.hpp"
#include "facetrack/types.hpp"

namespace facetrack {

/// Where a face seen for the first time after the initial window goes.
enum class NewFacePolicy {
    Inactive,  // must earn promotion through the ratio test
    Active,    // trusted immediately
};

std::string_view to_string(NewFacePolicy policy);
NewFacePolicy parse_new_face_policy(std::string_view text);

struct TrackerConfig {
    double init_window_seconds = 2.0;
    double fps = 30.0;
    int cap = 10;              // ceiling of continuous_appearances
    int min_appearances = 5;   // occlusion budget
    double promote_ratio = 0.5;
    double reuse_iou = 0.5;
    NewFacePolicy new_face_policy = NewFacePolicy::Inactive;
    double frame_width = 0.0;   // used by min_area_fraction
    double frame_height = 0.0;
    RecognizerConfig recognizer;

    void validate() const;
    /// Number of frames in the initial detect-and-recognize window.
    std::int64_t window_frames() const;
};

struct TrackedFace {
    Label label;
    BoundingBox last_box;
    std::int64_t total_appearances = 0;
    std::int64_t total_frames_processed = 0;
    int continuous_appearances = 0;
    double last_distance = 0.0;
    std::int64_t last_detected_frame = -1;

    double appearance_ratio() const {
        return total_frames_processed == 0
                   ? 0.0
                   : static_cast<double>(total_appearances) / static_cast<double>(total_frames_processed);
    }
};

struct TrackerState {
    std::map<std::string, TrackedFace> active;
    std::map<std::string, TrackedFace> inactive;
    std::int64_t frame_cursor = -1;  // last processed frame
    bool initialized = false;
    std::vector<FrameResult> results;
};

/// Active/Inactive-set video recognizer.
///
/// The initial window classifies every detection and seeds the two sets by
/// appearance ratio. After that, each frame goes through: reuse of active
/// faces whose previous box overlaps a detection, classification of the
/// remaining detections (inactive updates and new faces), duplicate-label
/// resolution, then occlusion handling for active faces that went missing.
class Tracker {
public:
    Tracker(const Gallery& gallery, TrackerConfig cfg);

    /// Consumes the initial window. Frames must be consecutive. Detections are
    /// area-filtered here.
    void run_initial_window(std::span<const Frame> frames);

    /// Processes one frame after the window; frame.index must equal
    /// state().frame_cursor + 1 (OutOfOrderFrame otherwise). Detections are
    /// expected to be area-filtered already.
    void step(const Frame& frame);

    const TrackerState& state() const { return state_; }
    const Recognizer& recognizer() const { return recognizer_; }
    const TrackerConfig& config() const { return cfg_; }
    /// Frames where at least one duplicate label was resolved to Unknown.
    std::uint64_t conflicts_resolved() const { return conflicts_; }

    std::vector<Detection> filter_by_area(std::span<const Detection> detections) const;

private:
    void touch(TrackedFace& face, const FrameEntry& entry, std::int64_t frame) const;

    TrackerConfig cfg_;
    Recognizer recognizer_;
    TrackerState state_;
    std::uint64_t conflicts_ = 0;
};

struct TrackerRun {
    std::vector<FrameResult> results;
    std::uint64_t classify_calls = 0;
    std::uint64_t comparisons = 0;  // prototype distance evaluations
    std::uint64_t conflicts = 0;
};

/// run() plus the classifier counters.
TrackerRun run_detailed(std::span<const Frame> frames, const Gallery& gallery, const TrackerConfig& cfg);

/// Runs the whole stream: the initial window, then one step per frame. Gaps
/// in frame numbering are filled with empty frames, so the output holds one
/// result per frame from the first to the last index. Throws EmptyStream.
std::vector<FrameResult> run(std::span<const Frame> frames, const Gallery& gallery, const TrackerConfig& cfg);

/// Inserts empty frames where indices skip; throws OutOfOrderFrame if indices
/// are not strictly increasing.
std::vector<Frame> fill_gaps(std::span<const Frame> frames);

}  // namespace facetrack

#endif  // FACETRACK_TRACKER_HPP
