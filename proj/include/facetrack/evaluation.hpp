// SPDX-License-Identifier: Apache-2.0

#ifndef FACETRACK_EVALUATION_HPP
#define FACETRACK_EVALUATION_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "facetrack/gallery.hpp"
#include "facetrack/tracker.hpp"
#include "facetrack/types.hpp"

namespace facetrack {

struct PersonAccuracy {
    std::int64_t present_frames = 0;
    std::int64_t correct_frames = 0;

    double accuracy() const {
        return present_frames == 0 ? 0.0 : static_cast<double>(correct_frames) / static_cast<double>(present_frames);
    }
};

struct AccuracyReport {
    std::map<std::string, PersonAccuracy> per_person;
    double average = 0.0;           // unweighted over participants
    double unknown_rate = 0.0;      // Unknown entries / all entries
    double false_label_rate = 0.0;  // wrong named entries / all named entries
    std::int64_t frames = 0;
};

/// A participant counts as correct in a frame when some entry carries their
/// label and either covers their detection (best IoU match above 0.5) or is
/// an occluded placeholder while they are truly present. Throws
/// MisalignedStreams when the frame sets differ.
AccuracyReport score(std::span<const FrameResult> results, std::span<const Frame> truth);

struct TimingReport {
    double seconds_per_frame = 0.0;  // median over repetitions
    std::int64_t frames = 0;
    double speedup_factor = 1.0;     // filled in by with_speedup()
};

/// Sets ours.speedup_factor = baseline / ours and returns it.
TimingReport with_speedup(TimingReport ours, const TimingReport& baseline);

struct TimedRun {
    std::vector<FrameResult> results;
    TimingReport timing;
};

/// Per-frame exhaustive classification of every detection against all
/// training embeddings: no reuse, no area filter, no occlusion bridging.
/// Duplicate labels within a frame are still resolved so results keep the
/// one-label-per-frame invariant.
TimedRun run_baseline(std::span<const Frame> frames, std::span<const TrainingTrack> tracks,
                      const RecognizerConfig& cfg, int repetitions = 3);

/// Same frames through the Active/Inactive tracker, timed the same way.
TimedRun run_tracker_timed(std::span<const Frame> frames, const Gallery& gallery, const TrackerConfig& cfg,
                           int repetitions = 3);

enum class CostModel {
    WallClock,    // median seconds per frame
    Comparisons,  // prototype distance evaluations per frame (deterministic)
};

std::string_view to_string(CostModel model);
CostModel parse_cost_model(std::string_view text);

struct SweepPoint {
    std::size_t k = 1;
    std::size_t prototypes = 0;  // total gallery size actually built
    double accuracy = 0.0;
    double cost_per_frame = 0.0;  // seconds or comparisons, per CostModel
};

struct SweepOptions {
    std::vector<std::size_t> k_values;
    std::uint64_t seed = 0;
    KBudget budget = KBudget::PerParticipant;
    CostModel cost = CostModel::WallClock;
    int repetitions = 3;
    unsigned workers = 1;
};

/// 1, 2, 4, ..., 2048.
std::vector<std::size_t> default_k_values();

/// For each k: K-means gallery (k capped at the largest per-participant
/// sample count), tracker run, accuracy against the truth stream and cost.
/// Galleries and accuracy runs may use several workers; wall-clock timing
/// always runs sequentially afterwards.
std::vector<SweepPoint> sweep(std::span<const Frame> truth, std::span<const TrainingTrack> tracks,
                              const SweepOptions& options, const TrackerConfig& cfg);

/// Non-dominated points under (max accuracy, min cost), sorted by cost.
/// Exact duplicates keep only the smallest k.
std::vector<SweepPoint> pareto_front(std::span<const SweepPoint> points);

// Report formatting: CSV with fixed 9-significant-digit numbers.
std::string accuracy_csv(const AccuracyReport& report);
std::string comparison_csv(const AccuracyReport& ours, const AccuracyReport& baseline);
std::string timing_csv(double duration_seconds, std::size_t faces, const TimingReport& baseline,
                       const TimingReport& ours);
std::string sweep_csv(std::span<const SweepPoint> points, CostModel cost);
std::string accuracy_json(const AccuracyReport& report);

}  // namespace facetrack

#endif  // FACETRACK_EVALUATION_HPP
