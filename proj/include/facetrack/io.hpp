// SPDX-License-Identifier: Apache-2.0

#ifndef FACETRACK_IO_HPP
#define FACETRACK_IO_HPP

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "facetrack/gallery.hpp"
#include "facetrack/synthetic.hpp"
#include "facetrack/types.hpp"

namespace facetrack {

inline constexpr int kFormatVersion = 1;
/// Embeddings whose stored norm is further than this from 1 trigger a warning.
inline constexpr double kDriftWarning = 1e-3;

// Detection stream (JSONL). Line 1 is the header object; every later line is
// one frame record:
//   {"frame":N,"detections":[{"box":[x,y,w,h],"landmarks":[[x,y]x5],
//     "embedding":[...],"gt_label":"P01"}],"present":["P01"]}
// landmarks, gt_label and present are optional. Values are stored at 32-bit
// precision and widened on load; embeddings are re-normalized on load.

std::string stream_header_line(const StreamHeader& header);
std::string frame_line(const Frame& frame);

void write_stream(std::ostream& os, const StreamHeader& header, std::span<const Frame> frames);
void write_stream(const std::filesystem::path& path, const StreamHeader& header, std::span<const Frame> frames);

/// Sequential frame iterator over a JSONL stream. A final line without a
/// trailing newline that fails to parse is treated as a write in progress:
/// iteration stops there without an error.
class StreamReader {
public:
    explicit StreamReader(const std::filesystem::path& path);
    explicit StreamReader(std::istream& is);  // caller keeps `is` alive

    const StreamHeader& header() const { return header_; }
    std::optional<Frame> next();

    std::size_t drift_warnings() const { return drift_warnings_; }
    bool stopped_at_truncated_line() const { return truncated_; }

private:
    void read_header();

    std::ifstream file_;
    std::istream* in_ = nullptr;
    StreamHeader header_;
    std::size_t line_no_ = 0;
    std::int64_t last_frame_ = -1;
    bool have_frame_ = false;
    std::size_t drift_warnings_ = 0;
    bool truncated_ = false;
};

struct StreamData {
    StreamHeader header;
    std::vector<Frame> frames;
};

StreamData read_stream(const std::filesystem::path& path);
StreamData read_stream(std::istream& is);

// Training tracks (JSONL): {"version":1,"embedding_dim":d} then one object per
// track: {"label":"P01","fps":30,"frames":[...],"embeddings":[[...],...]}.
void write_tracks(std::ostream& os, std::span<const TrainingTrack> tracks, std::size_t dim);
void write_tracks(const std::filesystem::path& path, std::span<const TrainingTrack> tracks, std::size_t dim);
std::vector<TrainingTrack> read_tracks(std::istream& is);
std::vector<TrainingTrack> read_tracks(const std::filesystem::path& path);

// Gallery (single JSON document):
//   {"version":1,"method":"kmeans","k":16,"seed":7,"dim":128,
//    "entries":[{"label":"P01","frames":[...],"prototypes":[[...],...]}]}
// Throws EmptyGallery on write and UnsupportedVersion on read.
void write_gallery(std::ostream& os, const Gallery& g);
void write_gallery(const std::filesystem::path& path, const Gallery& g);
Gallery read_gallery(std::istream& is);
Gallery read_gallery(const std::filesystem::path& path);

// Tracker results (JSONL), one line per frame:
//   {"frame":N,"entries":[{"label":"P01","box":[x,y,w,h],"distance":d,"source":"reused"}]}
std::string result_line(const FrameResult& result);
void write_results(std::ostream& os, std::span<const FrameResult> results);
void write_results(const std::filesystem::path& path, std::span<const FrameResult> results);
std::vector<FrameResult> read_results(std::istream& is);
std::vector<FrameResult> read_results(const std::filesystem::path& path);

// Scenario files: "key = value" lines, '#' starts a comment. Events are
// repeated "event = <kind> <subject> <start> <length>" lines ("-" as subject
// for background faces). Unknown keys are rejected.
ScenarioSpec parse_scenario(std::istream& is);
ScenarioSpec read_scenario(const std::filesystem::path& path);
std::string format_scenario(const ScenarioSpec& spec);

/// Writes `content` to `path`, throwing Io on failure.
void write_text(const std::filesystem::path& path, const std::string& content);

}  // namespace facetrack

#endif  // FACETRACK_IO_HPP
