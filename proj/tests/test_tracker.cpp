// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <fstream>
#include <iterator>
#include <memory>
#include <sstream>

#include "facetrack/gallery.hpp"
#include "facetrack/io.hpp"
#include "facetrack/tracker.hpp"
#include "support.hpp"
#include "tracker_laws.hpp"

using namespace facetrack;
using facetrack::test::code_of;
using facetrack::test::unit;

namespace {

const BoundingBox kBoxA{100, 100, 120, 120};
const BoundingBox kBoxB{600, 100, 120, 120};

Gallery abc() {
    return test::gallery_of({{"A", {unit({1, 0, 0, 0})}}, {"B", {unit({0, 1, 0, 0})}}, {"C", {unit({0, 0, 1, 0})}}});
}

TrackerConfig config() {
    TrackerConfig cfg;
    cfg.frame_width = 1920;
    cfg.frame_height = 1080;
    return cfg;
}

Frame frame(std::int64_t t, std::vector<std::pair<BoundingBox, EmbeddingVector>> dets) {
    Frame f;
    f.index = t;
    for (auto& [b, e] : dets) f.detections.push_back(test::detection(b, std::move(e), t));
    return f;
}

Frame frame_a(std::int64_t t) { return frame(t, {{kBoxA, unit({1, 0, 0, 0})}}); }

// Runs the initial window with A in every frame; `b_frames` says in which
// window frames B is detected.
std::unique_ptr<Tracker> windowed(const Gallery& g, auto b_frames, TrackerConfig cfg = config()) {
    auto tr = std::make_unique<Tracker>(g, cfg);
    std::vector<Frame> window;
    for (std::int64_t t = 0; t < cfg.window_frames(); ++t) {
        auto f = frame_a(t);
        if (b_frames(t)) f.detections.push_back(test::detection(kBoxB, unit({0, 1, 0, 0}), t));
        window.push_back(std::move(f));
    }
    tr->run_initial_window(window);
    return tr;
}

}  // namespace

TEST_CASE("window length") {
    auto cfg = config();
    CHECK(cfg.window_frames() == 60);
    cfg.fps = 29.97;
    CHECK(cfg.window_frames() == 60);  // ceil(59.94)
    cfg.fps = 25;
    cfg.init_window_seconds = 0.5;
    CHECK(cfg.window_frames() == 13);  // ceil(12.5)
}

TEST_CASE("ratio test at the end of the window") {
    const auto g = abc();
    SUBCASE("present throughout") {
        const auto tr = windowed(g, [](std::int64_t) { return true; });
        REQUIRE(tr->state().active.count("B"));
        CHECK(tr->state().active.at("B").appearance_ratio() == 1.0);
        CHECK(tr->state().active.at("B").continuous_appearances == 10);
    }
    SUBCASE("20 of 60") {
        const auto tr = windowed(g, [](std::int64_t t) { return t < 20; });
        CHECK(tr->state().inactive.count("B"));
        CHECK_FALSE(tr->state().active.count("B"));
    }
    SUBCASE("exactly 30 of 60") {
        const auto tr = windowed(g, [](std::int64_t t) { return t % 2 == 0; });
        REQUIRE(tr->state().active.count("B"));
        CHECK(tr->state().active.at("B").appearance_ratio() == 0.5);
    }
    SUBCASE("late arrival is measured from its first appearance") {
        // detected in frames 40..59: 20 of 20 processed
        const auto tr = windowed(g, [](std::int64_t t) { return t >= 40; });
        CHECK(tr->state().active.count("B"));
    }
}

TEST_CASE("reuse skips classification") {
    const auto g = abc();
    auto tr = windowed(g, [](std::int64_t) { return false; });
    const auto calls = tr->recognizer().calls();
    tr->step(frame_a(60));
    CHECK(tr->recognizer().calls() == calls);
    REQUIRE(tr->state().results.back().entries.size() == 1);
    const auto& e = tr->state().results.back().entries[0];
    CHECK(e.label.str() == "A");
    CHECK(e.source == EntrySource::Reused);

    // a large jump forces a fresh classification
    tr->step(frame(61, {{{400, 100, 120, 120}, unit({1, 0, 0, 0})}}));
    CHECK(tr->recognizer().calls() == calls + 1);
    CHECK(tr->state().results.back().entries[0].source == EntrySource::Classified);
}

TEST_CASE("occlusion bridging and disappearance") {
    const auto g = abc();
    auto tr = windowed(g, [](std::int64_t) { return true; });
    tr->step(frame_a(60));
    std::vector<int> counters;
    for (std::int64_t t = 61; t <= 65; ++t) {
        tr->step(frame(t, {{kBoxB, unit({0, 1, 0, 0})}}));
        const auto& entries = tr->state().results.back().entries;
        REQUIRE(entries.size() == 2);
        CHECK(entries[1].label.str() == "A");
        CHECK(entries[1].source == EntrySource::Occluded);
        CHECK(entries[1].box == kBoxA);
        counters.push_back(tr->state().active.at("A").continuous_appearances);
    }
    CHECK(counters == std::vector<int>{9, 8, 7, 6, 5});
    tr->step(frame(66, {{kBoxB, unit({0, 1, 0, 0})}}));
    CHECK(tr->state().results.back().entries.size() == 1);
    CHECK_FALSE(tr->state().active.count("A"));
    REQUIRE(tr->state().inactive.count("A"));
    CHECK(tr->state().inactive.at("A").continuous_appearances == 4);
}

TEST_CASE("a returning face is reclassified and not bridged from a stale box") {
    const auto g = abc();
    auto tr = windowed(g, [](std::int64_t) { return false; });
    tr->step(frame(60, {}));
    const auto calls = tr->recognizer().calls();
    tr->step(frame_a(61));  // same box, but A was not detected at frame 60
    CHECK(tr->recognizer().calls() == calls + 1);
    CHECK(tr->state().results.back().entries[0].source == EntrySource::Classified);
    CHECK(tr->state().active.at("A").continuous_appearances == 10);
}

TEST_CASE("duplicate labels: the closer detection keeps the label") {
    const auto g = abc();
    // distances 1 - 0.8 and 1 - 0.6 to A
    const Frame f = frame(0, {{{0, 0, 100, 100}, unit({0.8, 0, 0, 0.6})}, {{500, 0, 100, 100}, unit({0.6, 0, 0, 0.8})}});
    const std::vector<Frame> frames{f};
    const auto results = run(frames, g, config());
    REQUIRE(results[0].entries.size() == 2);
    CHECK(results[0].entries[0].label.str() == "A");
    CHECK(results[0].entries[0].distance == doctest::Approx(0.2));
    CHECK(results[0].entries[1].label.is_unknown());
    CHECK(results[0].entries[1].distance == doctest::Approx(0.4));
}

TEST_CASE("duplicates after the window are resolved too") {
    const auto g = abc();
    auto tr = windowed(g, [](std::int64_t) { return false; });
    tr->step(frame(60, {{kBoxA, unit({1, 0, 0, 0})}, {{900, 100, 120, 120}, unit({0.9, 0, 0, 0.1})}}));
    const auto& entries = tr->state().results.back().entries;
    CHECK(entries[0].label.str() == "A");
    CHECK(entries[0].source == EntrySource::Reused);
    CHECK(entries[1].label.is_unknown());
    CHECK(tr->conflicts_resolved() == 1);
}

TEST_CASE("empty gallery labels everything Unknown") {
    std::vector<Frame> frames;
    for (std::int64_t t = 0; t < 80; ++t) frames.push_back(frame_a(t));
    const auto results = run(frames, Gallery{}, config());
    REQUIRE(results.size() == 80);
    for (const auto& r : results) {
        REQUIRE(r.entries.size() == 1);
        CHECK(r.entries[0].label.is_unknown());
    }
}

TEST_CASE("frame order") {
    const auto g = abc();
    auto tr = windowed(g, [](std::int64_t) { return false; });
    CHECK(code_of([&] { tr->step(frame_a(62)); }) == ErrorCode::OutOfOrderFrame);
    CHECK(code_of([&] { tr->step(frame_a(59)); }) == ErrorCode::OutOfOrderFrame);
    const std::vector<Frame> backwards{frame_a(3), frame_a(2)};
    CHECK(code_of([&] { run(backwards, g, config()); }) == ErrorCode::OutOfOrderFrame);
    CHECK(code_of([&] { run(std::vector<Frame>{}, g, config()); }) == ErrorCode::EmptyStream);
}

TEST_CASE("gaps in frame numbering become empty frames") {
    const auto g = abc();
    const std::vector<Frame> frames{frame_a(5), frame_a(9)};
    const auto results = run(frames, g, config());
    REQUIRE(results.size() == 5);
    for (std::size_t i = 0; i < results.size(); ++i) CHECK(results[i].frame == 5 + static_cast<std::int64_t>(i));
    CHECK(results[1].entries.empty());
}

TEST_CASE("new faces after the window") {
    const auto g = abc();
    SUBCASE("inactive by default") {
        auto tr = windowed(g, [](std::int64_t) { return false; });
        tr->step(frame(60, {{kBoxA, unit({1, 0, 0, 0})}, {kBoxB, unit({0, 1, 0, 0})}}));
        CHECK(tr->state().inactive.count("B"));
        // B still gets its label in the frame output
        CHECK(tr->state().results.back().entries[1].label.str() == "B");
    }
    SUBCASE("active when configured") {
        auto cfg = config();
        cfg.new_face_policy = NewFacePolicy::Active;
        auto tr = windowed(g, [](std::int64_t) { return false; }, cfg);
        tr->step(frame(60, {{kBoxA, unit({1, 0, 0, 0})}, {kBoxB, unit({0, 1, 0, 0})}}));
        REQUIRE(tr->state().active.count("B"));
        CHECK(tr->state().active.at("B").continuous_appearances == 10);
    }
}

TEST_CASE("config validation") {
    auto cfg = config();
    cfg.min_appearances = 11;
    CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::InvalidConfig);
    cfg = config();
    cfg.promote_ratio = 0.0;
    CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::InvalidConfig);
    cfg = config();
    cfg.reuse_iou = 1.5;
    CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::InvalidConfig);
    CHECK(parse_new_face_policy(to_string(NewFacePolicy::Active)) == NewFacePolicy::Active);
}

TEST_CASE("counter laws hold on random scenarios") {
    Rng rng(2024);
    std::size_t occluded = 0, disappearances = 0;
    for (std::uint64_t s = 0; s < 8; ++s) {
        const auto spec = laws::random_scenario(rng, s);
        const auto gt = generate(spec);
        const auto g = build_gallery_kmeans(gt.tracks, {.k = 4, .seed = s});
        auto cfg = config();
        cfg.recognizer.min_area = 1000;
        const auto rep = laws::check_counter_laws(gt.frames, g, cfg);
        for (const auto& v : rep.violations) FAIL_CHECK(v);
        CHECK(rep.steps > 0);
        occluded += rep.occluded;
        disappearances += rep.disappearances;
    }
    CHECK(occluded > 0);
    CHECK(disappearances > 0);
}

TEST_CASE("scripted fixture reproduces the reference simulation") {
    const std::filesystem::path dir = FACETRACK_FIXTURE_DIR;
    const auto stream = read_stream(dir / "tracker_scenario.stream.jsonl");
    const auto g = read_gallery(dir / "tracker_scenario.gallery.json");
    TrackerConfig cfg;
    cfg.fps = stream.header.fps;
    cfg.frame_width = stream.header.frame_width;
    cfg.frame_height = stream.header.frame_height;
    cfg.recognizer.min_area = 1000;
    std::ostringstream got;
    write_results(got, run(stream.frames, g, cfg));
    std::ifstream in(dir / "tracker_scenario.expected.jsonl", std::ios::binary);
    const std::string want((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE_FALSE(want.empty());
    CHECK(got.str() == want);
}

TEST_CASE("reuse gives the same labels as classifying every frame") {
    // Clean streams where every detection classifies to its own face.
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        ScenarioSpec spec;
        spec.participants = 3;
        spec.pose_clusters = 1;
        spec.embedding_dim = 16;
        spec.noise_sigma = 0.02;
        spec.duration_seconds = 10;
        spec.train_samples = 50;
        spec.seed = seed;
        spec.events = {{EventKind::Occlusion, "P01", 100, 4}, {EventKind::Occlusion, "P02", 150, 8}};
        const auto gt = generate(spec);
        const auto g = build_gallery_full(gt.tracks);
        auto with = config();
        auto without = config();
        without.reuse_iou = 1.0;
        // boxes move every frame, so IoU 1 never happens
        const auto a = run(gt.frames, g, with);
        const auto b = run(gt.frames, g, without);
        REQUIRE(a.size() == b.size());
        std::size_t reused = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            REQUIRE(a[i].entries.size() == b[i].entries.size());
            for (std::size_t j = 0; j < a[i].entries.size(); ++j) {
                CHECK(a[i].entries[j].label == b[i].entries[j].label);
                CHECK(b[i].entries[j].source != EntrySource::Reused);
                reused += a[i].entries[j].source == EntrySource::Reused;
            }
        }
        CHECK(reused > 0);
    }
}

TEST_CASE("a clean single-participant stream is fully labeled") {
    ScenarioSpec spec;
    spec.participants = 1;
    spec.pose_clusters = 1;
    spec.embedding_dim = 16;
    spec.noise_sigma = 0.0;
    spec.duration_seconds = 10;
    spec.train_samples = 30;
    spec.seed = 3;
    const auto gt = generate(spec);
    const auto results = run(gt.frames, build_gallery_full(gt.tracks), config());
    for (const auto& r : results) {
        REQUIRE(r.entries.size() == 1);
        CHECK(r.entries[0].label.str() == "P01");
    }
}
