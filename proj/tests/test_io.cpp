// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "facetrack/io.hpp"
#include "facetrack/synthetic.hpp"
#include "support.hpp"

using namespace facetrack;
using facetrack::test::code_of;
using facetrack::test::unit;

namespace {

const char* kHeader = "{\"version\":1,\"fps\":30,\"frame_width\":640,\"frame_height\":480,\"embedding_dim\":2}\n";

StreamData parse(const std::string& text) {
    std::istringstream is(text);
    return read_stream(is);
}

void check_close(const EmbeddingVector& a, const EmbeddingVector& b, double tol) {
    REQUIRE(a.dim() == b.dim());
    for (std::size_t i = 0; i < a.dim(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol);
}

}  // namespace

TEST_CASE("stream header and empty frames") {
    const auto s = parse(std::string(kHeader) + "{\"frame\":0,\"detections\":[]}\n{\"frame\":1,\"detections\":[]}\n");
    CHECK(s.header.fps == 30.0);
    CHECK(s.header.frame_width == 640.0);
    CHECK(s.header.embedding_dim == 2);
    REQUIRE(s.frames.size() == 2);
    CHECK(s.frames[1].index == 1);
    CHECK(s.frames[0].detections.empty());
}

TEST_CASE("stream parse errors carry the line number") {
    const std::string bad_dim =
        std::string(kHeader) + "{\"frame\":0,\"detections\":[{\"box\":[0,0,1,1],\"embedding\":[1,0,0]}]}\n";
    try {
        parse(bad_dim);
        FAIL("expected ParseError");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::ParseError);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
    CHECK(code_of([] { parse(std::string(kHeader) + "{\"frame\":0,\"detections\":[}\n"); }) == ErrorCode::ParseError);
    CHECK(code_of([] { parse(std::string(kHeader) + "{\"frame\":0,\"detections\":[{\"box\":[0,0,1],\"embedding\":[1,0]}]}\n"); }) ==
          ErrorCode::ParseError);
    CHECK(code_of([] { parse(std::string(kHeader) + "{\"frame\":0,\"detections\":[{\"box\":[0,0,1,1],\"embedding\":[0,0]}]}\n"); }) ==
          ErrorCode::ParseError);
    CHECK(code_of([] { parse(std::string(kHeader) + "{\"frame\":3,\"detections\":[]}\n{\"frame\":2,\"detections\":[]}\n"); }) ==
          ErrorCode::OutOfOrderFrame);
    CHECK(code_of([] { parse("{\"version\":2,\"fps\":30,\"frame_width\":1,\"frame_height\":1,\"embedding_dim\":2}\n"); }) ==
          ErrorCode::UnsupportedVersion);
}

TEST_CASE("a truncated final line ends the stream cleanly") {
    std::istringstream is(std::string(kHeader) + "{\"frame\":0,\"detections\":[]}\n{\"frame\":1,\"detec");
    StreamReader r(is);
    CHECK(r.next().has_value());
    CHECK_FALSE(r.next().has_value());
    CHECK(r.stopped_at_truncated_line());
    // the same garbage followed by a newline is an error
    CHECK(code_of([] { parse(std::string(kHeader) + "{\"frame\":1,\"detec\n"); }) == ErrorCode::ParseError);
}

TEST_CASE("embeddings are renormalized and drift is counted") {
    const auto text = std::string(kHeader) +
                      "{\"frame\":0,\"detections\":[{\"box\":[0,0,1,1],\"embedding\":[3,4]},"
                      "{\"box\":[0,0,1,1],\"embedding\":[0.6,0.8]}]}\n";
    std::istringstream is(text);
    StreamReader r(is);
    const auto f = r.next();
    REQUIRE(f);
    CHECK(f->detections[0].embedding[0] == doctest::Approx(0.6));
    CHECK(r.drift_warnings() == 1);
}

TEST_CASE("stream round trip") {
    ScenarioSpec spec;
    spec.participants = 3;
    spec.embedding_dim = 24;
    spec.duration_seconds = 3;
    spec.train_samples = 10;
    spec.seed = 5;
    spec.events = {{EventKind::BackgroundFace, "", 4, 30}, {EventKind::Occlusion, "P02", 10, 3}};
    const auto gt = generate(spec);
    std::stringstream ss;
    write_stream(ss, gt.header, gt.frames);
    const auto back = read_stream(ss);
    REQUIRE(back.frames.size() == gt.frames.size());
    for (std::size_t i = 0; i < back.frames.size(); ++i) {
        const auto& a = gt.frames[i];
        const auto& b = back.frames[i];
        CHECK(a.index == b.index);
        CHECK(a.present == b.present);
        REQUIRE(a.detections.size() == b.detections.size());
        for (std::size_t j = 0; j < a.detections.size(); ++j) {
            CHECK(a.detections[j].gt_label == b.detections[j].gt_label);
            CHECK(std::abs(a.detections[j].box.x - b.detections[j].box.x) <= 1e-4);
            check_close(a.detections[j].embedding, b.detections[j].embedding, 1e-6);
        }
    }
}

TEST_CASE("gallery round trip") {
    Rng rng(8);
    Gallery g;
    g.method = GalleryMethod::KMeans;
    g.k = 4;
    g.seed = 77;
    g.dim = 10;
    for (const char* name : {"B", "A", "C"})
        for (int i = 0; i < 4; ++i) g.entries[name].push_back({test::random_unit(rng, 10), i * 3});
    std::stringstream ss;
    write_gallery(ss, g);
    const auto back = read_gallery(ss);
    CHECK(back.method == g.method);
    CHECK(back.k == 4);
    CHECK(back.seed == 77);
    CHECK(back.dim == 10);
    REQUIRE(back.entries.size() == 3);
    for (const auto& [name, protos] : g.entries) {
        const auto& other = back.entries.at(name);
        REQUIRE(other.size() == protos.size());
        for (std::size_t i = 0; i < protos.size(); ++i) {
            CHECK(other[i].frame == protos[i].frame);
            check_close(other[i].embedding, protos[i].embedding, 1e-6);
        }
    }
}

TEST_CASE("gallery errors") {
    std::ostringstream os;
    CHECK(code_of([&] { write_gallery(os, Gallery{}); }) == ErrorCode::EmptyGallery);
    std::istringstream v2("{\"version\":2,\"method\":\"kmeans\",\"k\":1,\"seed\":0,\"dim\":2,\"entries\":[]}");
    CHECK(code_of([&] { read_gallery(v2); }) == ErrorCode::UnsupportedVersion);
    std::istringstream junk("not json");
    CHECK(code_of([&] { read_gallery(junk); }) == ErrorCode::ParseError);
    CHECK(code_of([] { read_gallery(std::filesystem::path("/nonexistent/gallery.json")); }) == ErrorCode::Io);
}

TEST_CASE("tracks round trip") {
    Rng rng(4);
    std::vector<TrainingTrack> tracks(2);
    tracks[0].label = Label::participant("P01");
    tracks[1].label = Label::participant("P02");
    tracks[1].fps = 29.97;
    for (auto& t : tracks)
        for (std::int64_t f = 0; f < 5; ++f) t.samples.push_back({f * 2, test::random_unit(rng, 6)});
    std::stringstream ss;
    write_tracks(ss, tracks, 6);
    const auto back = read_tracks(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[1].fps == 29.97);
    CHECK(back[1].samples[4].frame == 8);
    check_close(back[0].samples[2].embedding, tracks[0].samples[2].embedding, 1e-6);
}

TEST_CASE("results round trip") {
    std::vector<FrameResult> rs{{0, {{Label::participant("P01"), {1.5, 2, 30, 40}, 0.125, EntrySource::Reused},
                                     {Label(), {100, 2, 30, 40}, 0.75, EntrySource::Classified}}},
                                {1, {}}};
    std::stringstream ss;
    write_results(ss, rs);
    CHECK(result_line(rs[0]) ==
          "{\"frame\":0,\"entries\":[{\"label\":\"P01\",\"box\":[1.5,2,30,40],\"distance\":0.125,\"source\":\"reused\"},"
          "{\"label\":\"Unknown\",\"box\":[100,2,30,40],\"distance\":0.75,\"source\":\"classified\"}]}");
    const auto back = read_results(ss);
    REQUIRE(back.size() == 2);
    CHECK(back[0].entries[0].label.str() == "P01");
    CHECK(back[0].entries[0].source == EntrySource::Reused);
    CHECK(back[0].entries[1].label.is_unknown());
    CHECK(back[0].entries[1].distance == 0.75);
    CHECK(back[1].entries.empty());
}

TEST_CASE("scenario files") {
    std::istringstream is(
        "# two people\n"
        "participants = 2\n"
        "embedding_dim = 8   # small\n"
        "duration_seconds = 5\n"
        "seed = 12\n"
        "event = occlusion P01 10 4\n"
        "event = background_face - 20 30\n");
    const auto spec = parse_scenario(is);
    CHECK(spec.participants == 2);
    CHECK(spec.embedding_dim == 8);
    CHECK(spec.seed == 12);
    REQUIRE(spec.events.size() == 2);
    CHECK(spec.events[0].subject == "P01");
    CHECK(spec.events[1].kind == EventKind::BackgroundFace);

    std::istringstream again(format_scenario(spec));
    const auto spec2 = parse_scenario(again);
    CHECK(format_scenario(spec2) == format_scenario(spec));

    std::istringstream unknown_key("colour = blue\n");
    CHECK(code_of([&] { parse_scenario(unknown_key); }) == ErrorCode::ParseError);
    std::istringstream bad_value("participants = many\n");
    CHECK(code_of([&] { parse_scenario(bad_value); }) == ErrorCode::ParseError);
}
