// SPDX-License-Identifier: Apache-2.0

#include "facetrack/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "facetrack/error.hpp"
#include "facetrack/rng.hpp"

namespace facetrack {
namespace {

constexpr std::uint64_t kMaxDraws = 1'000'000;

std::vector<double> gaussian(Rng& rng, std::size_t dim, double sigma) {
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.normal(0.0, sigma);
    return v;
}

EmbeddingVector random_unit(Rng& rng, std::size_t dim) {
    for (;;) {
        auto v = gaussian(rng, dim, 1.0);
        double sq = 0.0;
        for (double x : v) sq += x * x;
        if (sq > 1e-12) return l2_normalize(v);
    }
}

EmbeddingVector perturb(const EmbeddingVector& centre, Rng& rng, double sigma) {
    std::vector<double> v(centre.values().begin(), centre.values().end());
    if (sigma > 0.0) {
        for (auto& x : v) x += rng.normal(0.0, sigma);
    }
    return l2_normalize(v);
}

// Partly covered face: mostly a random direction, some of the true centre.
EmbeddingVector degrade(const EmbeddingVector& centre, Rng& rng, double signal, double sigma) {
    const auto noise = random_unit(rng, centre.dim());
    std::vector<double> v(centre.dim());
    for (std::size_t j = 0; j < v.size(); ++j) {
        v[j] = signal * centre[j] + (1.0 - signal) * noise[j] + (sigma > 0.0 ? rng.normal(0.0, sigma) : 0.0);
    }
    return l2_normalize(v);
}

Landmarks landmarks_for(const BoundingBox& b) {
    static constexpr std::array<std::pair<double, double>, 5> kOffsets{
        {{0.30, 0.35}, {0.70, 0.35}, {0.50, 0.55}, {0.35, 0.75}, {0.65, 0.75}}};
    Landmarks lm;
    for (std::size_t i = 0; i < lm.size(); ++i) {
        lm[i] = {b.x + kOffsets[i].first * b.w, b.y + kOffsets[i].second * b.h};
    }
    return lm;
}

struct Walker {
    BoundingBox home;
    BoundingBox box;
    std::size_t pose = 0;
};

void walk(Walker& w, Rng& rng, const ScenarioSpec& spec) {
    constexpr double kPull = 0.05;
    w.box.x += rng.normal(0.0, spec.motion_sigma) + kPull * (w.home.x - w.box.x);
    w.box.y += rng.normal(0.0, spec.motion_sigma) + kPull * (w.home.y - w.box.y);
    w.box.x = std::clamp(w.box.x, 0.0, spec.frame_width - w.box.w);
    w.box.y = std::clamp(w.box.y, 0.0, spec.frame_height - w.box.h);
}

void switch_pose(Walker& w, Rng& rng, const ScenarioSpec& spec) {
    if (spec.pose_clusters > 1 && rng.uniform() < spec.pose_switch_prob) {
        w.pose = static_cast<std::size_t>(rng.index(spec.pose_clusters));
    }
}

}  // namespace

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Occlusion: return "occlusion";
        case EventKind::Exit: return "exit";
        case EventKind::Reenter: return "reenter";
        case EventKind::BackgroundFace: return "background_face";
    }
    return "occlusion";
}

EventKind parse_event_kind(std::string_view text) {
    if (text == "occlusion") return EventKind::Occlusion;
    if (text == "exit") return EventKind::Exit;
    if (text == "reenter") return EventKind::Reenter;
    if (text == "background_face") return EventKind::BackgroundFace;
    throw Error(ErrorCode::InvalidConfig, "unknown event kind '" + std::string(text) + "'");
}

std::int64_t ScenarioSpec::frame_count() const {
    return static_cast<std::int64_t>(std::llround(duration_seconds * fps));
}

std::vector<std::string> ScenarioSpec::labels() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < participants; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof buf, "P%02zu", i + 1);
        out.emplace_back(buf);
    }
    return out;
}

void ScenarioSpec::validate() const {
    auto fail = [](const std::string& why) { throw Error(ErrorCode::InvalidConfig, why); };
    if (participants == 0) fail("participants must be positive");
    if (pose_clusters == 0) fail("pose_clusters must be positive");
    if (embedding_dim == 0) fail("embedding_dim must be positive");
    if (!(noise_sigma >= 0.0)) fail("noise_sigma must be >= 0");
    if (!(fps > 0.0)) fail("fps must be positive");
    if (frame_count() <= 0) fail("duration must cover at least one frame");
    if (!(face_size > 0.0 && face_size <= std::min(frame_width, frame_height))) fail("face_size does not fit the frame");
    if (!(background_face_size > 0.0 && background_face_size <= face_size)) fail("background_face_size out of range");
    if (!(motion_sigma >= 0.0)) fail("motion_sigma must be >= 0");
    if (!(pose_switch_prob >= 0.0 && pose_switch_prob <= 1.0)) fail("pose_switch_prob must lie in [0, 1]");
    if (!(partial_occlusion_rate >= 0.0 && partial_occlusion_rate <= 1.0)) {
        fail("partial_occlusion_rate must lie in [0, 1]");
    }
    if (!(partial_occlusion_signal >= 0.0 && partial_occlusion_signal <= 1.0)) {
        fail("partial_occlusion_signal must lie in [0, 1]");
    }
    if (!(min_separation >= 0.0 && min_separation <= 2.0)) fail("min_separation must lie in [0, 2]");
    if (!(background_separation >= 0.0 && background_separation <= 2.0)) {
        fail("background_separation must lie in [0, 2]");
    }
    if (train_samples == 0) fail("train_samples must be positive");
    const auto names = labels();
    const std::int64_t n = frame_count();
    for (const auto& e : events) {
        if (e.start < 0 || e.start >= n) fail("event start outside the stream");
        if (e.length < 0 || e.start + e.length > n) fail("event extends past the end of the stream");
        if (e.kind != EventKind::Reenter && e.kind != EventKind::Exit && e.length == 0) {
            fail("occlusion and background_face events need a positive length");
        }
        if (e.kind != EventKind::BackgroundFace &&
            std::find(names.begin(), names.end(), e.subject) == names.end()) {
            fail("event subject '" + e.subject + "' is not a participant");
        }
    }
}

GroundTruthStream generate(const ScenarioSpec& spec) {
    spec.validate();
    const auto names = spec.labels();
    const std::size_t dim = spec.embedding_dim;
    const std::int64_t n_frames = spec.frame_count();
    Rng rng(spec.seed);

    GroundTruthStream out;
    out.header = StreamHeader{1, spec.fps, spec.frame_width, spec.frame_height, dim};

    // Pose centres, pairwise at least min_separation apart.
    std::vector<EmbeddingVector> all_centres;
    std::uint64_t draws = 0;
    out.pose_centres.resize(spec.participants);
    for (std::size_t p = 0; p < spec.participants; ++p) {
        while (out.pose_centres[p].size() < spec.pose_clusters) {
            if (++draws > kMaxDraws) throw Error(ErrorCode::InfeasibleSpec, "cannot place pose centres");
            auto c = random_unit(rng, dim);
            const bool ok = std::all_of(all_centres.begin(), all_centres.end(), [&](const auto& other) {
                return cosine_distance(c, other) >= spec.min_separation;
            });
            if (!ok) continue;
            all_centres.push_back(c);
            out.pose_centres[p].push_back(std::move(c));
        }
    }

    std::vector<const ScenarioEvent*> backgrounds;
    for (const auto& e : spec.events) {
        if (e.kind == EventKind::BackgroundFace) backgrounds.push_back(&e);
    }
    std::vector<EmbeddingVector> background_centres;
    draws = 0;
    while (background_centres.size() < backgrounds.size()) {
        if (++draws > kMaxDraws) throw Error(ErrorCode::InfeasibleSpec, "cannot place background faces");
        auto c = random_unit(rng, dim);
        const bool ok = std::all_of(all_centres.begin(), all_centres.end(), [&](const auto& other) {
            return cosine_distance(c, other) >= spec.background_separation;
        });
        if (ok) background_centres.push_back(std::move(c));
    }

    // Seats spread across the frame width at mid height.
    std::vector<Walker> walkers(spec.participants);
    const double slot = spec.frame_width / static_cast<double>(spec.participants);
    for (std::size_t p = 0; p < spec.participants; ++p) {
        BoundingBox home{std::clamp((p + 0.5) * slot - spec.face_size / 2, 0.0, spec.frame_width - spec.face_size),
                         (spec.frame_height - spec.face_size) / 2, spec.face_size, spec.face_size};
        walkers[p] = {home, home, 0};
    }

    // Training segment: its own noise draws around the same centres.
    for (std::size_t p = 0; p < spec.participants; ++p) {
        Rng train_rng(derive_seed(spec.seed, "train/" + names[p]));
        TrainingTrack track{Label::participant(names[p]), spec.fps, {}};
        track.samples.reserve(spec.train_samples);
        Walker w = walkers[p];
        w.pose = static_cast<std::size_t>(train_rng.index(spec.pose_clusters));
        for (std::size_t i = 0; i < spec.train_samples; ++i) {
            switch_pose(w, train_rng, spec);
            track.samples.push_back(
                {static_cast<std::int64_t>(i), perturb(out.pose_centres[p][w.pose], train_rng, spec.noise_sigma)});
        }
        out.tracks.push_back(std::move(track));
    }

    // Presence and visibility timelines.
    std::vector<std::vector<bool>> present(spec.participants, std::vector<bool>(n_frames, true));
    std::vector<std::vector<bool>> visible(spec.participants, std::vector<bool>(n_frames, true));
    std::vector<const ScenarioEvent*> ordered;
    for (const auto& e : spec.events) ordered.push_back(&e);
    std::stable_sort(ordered.begin(), ordered.end(), [](auto a, auto b) { return a->start < b->start; });
    auto subject_index = [&](const std::string& s) {
        return static_cast<std::size_t>(std::find(names.begin(), names.end(), s) - names.begin());
    };
    for (const auto* e : ordered) {
        if (e->kind == EventKind::BackgroundFace) continue;
        const auto p = subject_index(e->subject);
        const std::int64_t end = e->length > 0 ? e->start + e->length : n_frames;
        for (std::int64_t t = e->start; t < (e->kind == EventKind::Reenter ? n_frames : end); ++t) {
            if (e->kind == EventKind::Occlusion) visible[p][t] = false;
            else present[p][t] = e->kind == EventKind::Reenter;
        }
    }

    std::vector<Rng> test_rngs;
    for (std::size_t p = 0; p < spec.participants; ++p) {
        test_rngs.emplace_back(derive_seed(spec.seed, "test/" + names[p]));
        walkers[p].pose = static_cast<std::size_t>(test_rngs[p].index(spec.pose_clusters));
    }
    Rng background_rng(derive_seed(spec.seed, "background"));

    out.frames.reserve(n_frames);
    for (std::int64_t t = 0; t < n_frames; ++t) {
        Frame frame{t, {}, {}};
        for (std::size_t p = 0; p < spec.participants; ++p) {
            auto& w = walkers[p];
            auto& r = test_rngs[p];
            switch_pose(w, r, spec);
            walk(w, r, spec);
            if (!present[p][t]) continue;
            frame.present.push_back(Label::participant(names[p]));
            if (!visible[p][t]) continue;
            const auto& centre = out.pose_centres[p][w.pose];
            const bool covered = spec.partial_occlusion_rate > 0.0 && r.uniform() < spec.partial_occlusion_rate;
            Detection d;
            d.frame = t;
            d.box = w.box;
            d.landmarks = landmarks_for(w.box);
            d.embedding = covered ? degrade(centre, r, spec.partial_occlusion_signal, spec.noise_sigma)
                                  : perturb(centre, r, spec.noise_sigma);
            d.gt_label = Label::participant(names[p]);
            frame.detections.push_back(std::move(d));
        }
        for (std::size_t b = 0; b < backgrounds.size(); ++b) {
            const auto* e = backgrounds[b];
            if (t < e->start || t >= e->start + e->length) continue;
            const double size = spec.background_face_size;
            const double x = std::fmod(40.0 + 3.0 * size * static_cast<double>(b), spec.frame_width - size);
            Detection d;
            d.frame = t;
            d.box = {x, std::min(40.0, spec.frame_height - size), size, size};
            d.landmarks = landmarks_for(d.box);
            d.embedding = perturb(background_centres[b], background_rng, spec.noise_sigma);
            d.gt_label = Label::unknown();
            frame.detections.push_back(std::move(d));
        }
        out.frames.push_back(std::move(frame));
    }
    return out;
}

ScenarioSpec standard_scenario(std::uint64_t seed) {
    ScenarioSpec s;
    s.participants = 4;
    s.pose_clusters = 4;
    s.embedding_dim = 128;
    s.noise_sigma = 0.05;
    s.fps = 30.0;
    s.duration_seconds = 60.0;
    s.motion_sigma = 1.0;
    s.partial_occlusion_rate = 0.15;
    s.train_samples = 10'000;
    s.seed = seed;
    const auto names = s.labels();
    for (std::size_t p = 0; p < names.size(); ++p) {
        const auto i = static_cast<std::int64_t>(p);
        for (std::int64_t start : {300 + 37 * i, 900 + 41 * i, 1500 + 29 * i}) {
            s.events.push_back({EventKind::Occlusion, names[p], start, 5});
        }
    }
    s.events.push_back({EventKind::BackgroundFace, "", 200, 90});
    s.events.push_back({EventKind::BackgroundFace, "", 1100, 150});
    return s;
}

SplitResult split_train_test(std::span<const Frame> frames, double fps, double train_seconds) {
    if (!(fps > 0.0)) throw Error(ErrorCode::InvalidSplit, "fps must be positive");
    const auto train_frames = static_cast<std::int64_t>(std::llround(train_seconds * fps));
    if (frames.empty() || train_frames <= 0 || train_frames >= static_cast<std::int64_t>(frames.size())) {
        throw Error(ErrorCode::InvalidSplit, "training prefix must leave both parts non-empty");
    }
    const std::int64_t cut = frames.front().index + train_frames;

    SplitResult out;
    std::map<std::string, TrainingTrack> tracks;
    std::set<std::string> later;
    for (const auto& f : frames) {
        if (f.index < cut) {
            for (const auto& d : f.detections) {
                if (!d.gt_label || d.gt_label->is_unknown()) continue;
                auto& track = tracks[d.gt_label->name()];
                track.label = *d.gt_label;
                track.fps = fps;
                track.samples.push_back({f.index, d.embedding});
            }
        } else {
            out.test.push_back(f);
            for (const auto& d : f.detections) {
                if (d.gt_label && !d.gt_label->is_unknown()) later.insert(d.gt_label->name());
            }
        }
    }
    for (auto& [name, track] : tracks) out.tracks.push_back(std::move(track));
    for (const auto& name : later) {
        if (!tracks.contains(name)) out.missing_labels.push_back(name);
    }
    return out;
}

}  // namespace facetrack
