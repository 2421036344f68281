// SPDX-License-Identifier: Apache-2.0

#include "facetrack/tracker.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <tuple>

#include "facetrack/error.hpp"

namespace facetrack {

std::string_view to_string(NewFacePolicy policy) {
    return policy == NewFacePolicy::Active ? "active" : "inactive";
}

NewFacePolicy parse_new_face_policy(std::string_view text) {
    if (text == "inactive") return NewFacePolicy::Inactive;
    if (text == "active") return NewFacePolicy::Active;
    throw Error(ErrorCode::InvalidConfig, "unknown new-face policy '" + std::string(text) + "'");
}

void TrackerConfig::validate() const {
    if (!(fps > 0.0)) throw Error(ErrorCode::InvalidConfig, "fps must be positive");
    if (!(init_window_seconds >= 0.0)) throw Error(ErrorCode::InvalidConfig, "init_window_seconds must be >= 0");
    if (cap <= 0) throw Error(ErrorCode::InvalidConfig, "cap must be positive");
    if (min_appearances <= 0 || min_appearances > cap) {
        throw Error(ErrorCode::InvalidConfig, "min_appearances must lie in (0, cap]");
    }
    if (!(promote_ratio > 0.0 && promote_ratio <= 1.0)) {
        throw Error(ErrorCode::InvalidConfig, "promote_ratio must lie in (0, 1]");
    }
    if (!(reuse_iou >= 0.0 && reuse_iou <= 1.0)) throw Error(ErrorCode::InvalidConfig, "reuse_iou must lie in [0, 1]");
    recognizer.validate();
}

std::int64_t TrackerConfig::window_frames() const {
    return static_cast<std::int64_t>(std::ceil(init_window_seconds * fps));
}

Tracker::Tracker(const Gallery& gallery, TrackerConfig cfg)
    : cfg_((cfg.validate(), cfg)), recognizer_(gallery, cfg.recognizer) {}

std::vector<Detection> Tracker::filter_by_area(std::span<const Detection> detections) const {
    const double frame_area = cfg_.frame_width * cfg_.frame_height;
    std::vector<Detection> kept;
    kept.reserve(detections.size());
    for (const auto& d : detections) {
        if (area_filter(d, frame_area, cfg_.recognizer) == AreaVerdict::Accept) kept.push_back(d);
    }
    return kept;
}

void Tracker::touch(TrackedFace& face, const FrameEntry& entry, std::int64_t frame) const {
    face.last_box = entry.box;
    ++face.total_appearances;
    face.continuous_appearances = std::min(cfg_.cap, face.continuous_appearances + 1);
    if (entry.source == EntrySource::Classified) face.last_distance = entry.distance;
    face.last_detected_frame = frame;
}

void Tracker::run_initial_window(std::span<const Frame> frames) {
    if (state_.initialized) throw Error(ErrorCode::InvalidConfig, "initial window already processed");
    auto& seen = state_.inactive;  // every face lives here until the window closes
    for (const auto& frame : frames) {
        if (state_.frame_cursor >= 0 && frame.index != state_.frame_cursor + 1) {
            throw Error(ErrorCode::OutOfOrderFrame, "frame " + std::to_string(frame.index) + " follows " +
                                                        std::to_string(state_.frame_cursor));
        }
        const auto dets = filter_by_area(frame.detections);
        FrameResult result{frame.index, {}};
        result.entries.reserve(dets.size());
        for (const auto& det : dets) {
            const auto c = recognizer_.classify(det.embedding);
            result.entries.push_back({c.label, det.box, c.distance, EntrySource::Classified});
        }
        if (resolve_duplicate_labels(result.entries)) ++conflicts_;

        for (auto& [_, face] : seen) ++face.total_frames_processed;
        std::set<std::string> detected;
        for (const auto& e : result.entries) {
            if (e.label.is_unknown()) continue;
            detected.insert(e.label.name());
            auto [it, fresh] = seen.try_emplace(e.label.name());
            if (fresh) {
                it->second.label = e.label;
                it->second.total_frames_processed = 1;
            }
            touch(it->second, e, frame.index);
        }
        for (auto& [name, face] : seen) {
            if (!detected.contains(name)) face.continuous_appearances = std::max(0, face.continuous_appearances - 1);
        }

        state_.results.push_back(std::move(result));
        state_.frame_cursor = frame.index;
    }

    for (auto it = seen.begin(); it != seen.end();) {
        if (it->second.appearance_ratio() >= cfg_.promote_ratio) {
            it->second.continuous_appearances = cfg_.cap;
            state_.active.insert(seen.extract(it++));
        } else {
            ++it;
        }
    }
    state_.initialized = true;
}

void Tracker::step(const Frame& frame) {
    if (state_.frame_cursor >= 0 && frame.index != state_.frame_cursor + 1) {
        throw Error(ErrorCode::OutOfOrderFrame,
                    "frame " + std::to_string(frame.index) + " follows " + std::to_string(state_.frame_cursor));
    }
    state_.initialized = true;
    const auto& dets = frame.detections;

    for (auto& [_, face] : state_.active) ++face.total_frames_processed;
    for (auto& [_, face] : state_.inactive) ++face.total_frames_processed;

    // Reuse: greedy highest-IoU matching against active faces detected in the
    // previous frame.
    std::vector<std::tuple<double, std::size_t, std::string>> pairs;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        for (const auto& [name, face] : state_.active) {
            if (face.last_detected_frame != frame.index - 1) continue;
            const double overlap = iou(dets[i].box, face.last_box);
            if (overlap > 0.0 && overlap >= cfg_.reuse_iou) pairs.emplace_back(overlap, i, name);
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) {
        if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
        if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
        return std::get<2>(a) < std::get<2>(b);
    });
    std::vector<std::optional<FrameEntry>> slots(dets.size());
    std::set<std::string> reused;
    for (const auto& [overlap, i, name] : pairs) {
        if (slots[i] || reused.contains(name)) continue;
        const auto& face = state_.active.at(name);
        slots[i] = FrameEntry{face.label, dets[i].box, face.last_distance, EntrySource::Reused};
        reused.insert(name);
    }

    // Everything not reused goes through the classifier.
    FrameResult result{frame.index, {}};
    result.entries.reserve(dets.size());
    for (std::size_t i = 0; i < dets.size(); ++i) {
        if (slots[i]) {
            result.entries.push_back(*slots[i]);
        } else {
            const auto c = recognizer_.classify(dets[i].embedding);
            result.entries.push_back({c.label, dets[i].box, c.distance, EntrySource::Classified});
        }
    }
    if (resolve_duplicate_labels(result.entries)) ++conflicts_;

    std::set<std::string> detected;
    for (const auto& e : result.entries) {
        if (e.label.is_unknown()) continue;
        const auto& name = e.label.name();
        detected.insert(name);
        if (auto it = state_.active.find(name); it != state_.active.end()) {
            touch(it->second, e, frame.index);
        } else if (auto in = state_.inactive.find(name); in != state_.inactive.end()) {
            touch(in->second, e, frame.index);
            if (in->second.appearance_ratio() >= cfg_.promote_ratio) {
                in->second.continuous_appearances = cfg_.cap;
                state_.active.insert(state_.inactive.extract(in));
            }
        } else {
            TrackedFace face;
            face.label = e.label;
            face.total_frames_processed = 1;
            touch(face, e, frame.index);
            if (cfg_.new_face_policy == NewFacePolicy::Active) {
                face.continuous_appearances = cfg_.cap;
                state_.active.emplace(name, std::move(face));
            } else {
                state_.inactive.emplace(name, std::move(face));
            }
        }
    }

    // Undetected inactive faces decay as well. Done before demotions so a face
    // dropping out of the active set this frame is decremented only once.
    for (auto& [name, face] : state_.inactive) {
        if (!detected.contains(name)) face.continuous_appearances = std::max(0, face.continuous_appearances - 1);
    }

    // Active faces with no detection this frame: occluded while the counter
    // (after the decrement for this miss) still meets the budget, otherwise
    // they drop to the inactive set.
    for (auto it = state_.active.begin(); it != state_.active.end();) {
        auto& face = it->second;
        if (detected.contains(it->first)) {
            ++it;
            continue;
        }
        face.continuous_appearances = std::max(0, face.continuous_appearances - 1);
        if (face.continuous_appearances >= cfg_.min_appearances) {
            result.entries.push_back({face.label, face.last_box, face.last_distance, EntrySource::Occluded});
            ++it;
        } else {
            state_.inactive.insert(state_.active.extract(it++));
        }
    }
    state_.results.push_back(std::move(result));
    state_.frame_cursor = frame.index;
}

std::vector<Frame> fill_gaps(std::span<const Frame> frames) {
    std::vector<Frame> out;
    out.reserve(frames.size());
    for (const auto& f : frames) {
        if (!out.empty()) {
            if (f.index <= out.back().index) {
                throw Error(ErrorCode::OutOfOrderFrame, "frame " + std::to_string(f.index) + " follows " +
                                                            std::to_string(out.back().index));
            }
            for (std::int64_t missing = out.back().index + 1; missing < f.index; ++missing) {
                out.push_back(Frame{missing, {}, {}});
            }
        }
        out.push_back(f);
    }
    return out;
}

TrackerRun run_detailed(std::span<const Frame> frames, const Gallery& gallery, const TrackerConfig& cfg) {
    if (frames.empty()) throw Error(ErrorCode::EmptyStream, "detection stream has no frames");
    const auto filled = fill_gaps(frames);
    Tracker tracker(gallery, cfg);
    const std::int64_t window_end = filled.front().index + cfg.window_frames();
    std::size_t split = 0;
    while (split < filled.size() && filled[split].index < window_end) ++split;
    tracker.run_initial_window(std::span<const Frame>(filled).first(split));
    for (std::size_t i = split; i < filled.size(); ++i) {
        Frame f{filled[i].index, tracker.filter_by_area(filled[i].detections), {}};
        tracker.step(f);
    }
    return {tracker.state().results, tracker.recognizer().calls(), tracker.recognizer().comparisons(),
            tracker.conflicts_resolved()};
}

std::vector<FrameResult> run(std::span<const Frame> frames, const Gallery& gallery, const TrackerConfig& cfg) {
    return run_detailed(frames, gallery, cfg).results;
}

}  // namespace facetrack
