// SPDX-License-Identifier: Apache-2.0

#include "facetrack/io.hpp"

#include <cmath>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "facetrack/error.hpp"
#include "facetrack/format.hpp"

namespace facetrack {

using nlohmann::json;

void append_json_string(std::string& out, std::string_view text) {
    out += json(std::string(text)).dump();
}

namespace {

void append_f32(std::string& out, double v) { append_number(out, static_cast<double>(static_cast<float>(v))); }

void append_box(std::string& out, const BoundingBox& b) {
    out += '[';
    append_f32(out, b.x);
    out += ',';
    append_f32(out, b.y);
    out += ',';
    append_f32(out, b.w);
    out += ',';
    append_f32(out, b.h);
    out += ']';
}

void append_vector(std::string& out, std::span<const double> values) {
    out += '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out += ',';
        append_f32(out, values[i]);
    }
    out += ']';
}

[[noreturn]] void parse_fail(std::size_t line, const std::string& why) {
    throw Error(ErrorCode::ParseError, "line " + std::to_string(line) + ": " + why);
}

json parse_json(const std::string& text, std::size_t line) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        parse_fail(line, e.what());
    }
}

template <typename T>
T field(const json& j, const char* key, std::size_t line) {
    if (!j.is_object() || !j.contains(key)) parse_fail(line, std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        parse_fail(line, std::string("field '") + key + "': " + e.what());
    }
}

double number(const json& j, std::size_t line, const char* what) {
    if (!j.is_number()) parse_fail(line, std::string(what) + " must be a number");
    return j.get<double>();
}

// Boxes and embeddings travel as 32-bit floats; narrowing recovers the stored value exactly.
double f32_number(const json& j, std::size_t line, const char* what) {
    return static_cast<double>(static_cast<float>(number(j, line, what)));
}

BoundingBox parse_box(const json& j, std::size_t line) {
    if (!j.is_array() || j.size() != 4) parse_fail(line, "box must be [x, y, w, h]");
    BoundingBox b{f32_number(j[0], line, "box"), f32_number(j[1], line, "box"), f32_number(j[2], line, "box"),
                  f32_number(j[3], line, "box")};
    if (!b.valid()) parse_fail(line, "box width and height must be positive");
    return b;
}

// Widens and renormalizes; counts vectors whose stored norm drifted.
EmbeddingVector parse_embedding(const json& j, std::size_t dim, std::size_t line, std::size_t& drift) {
    if (!j.is_array()) parse_fail(line, "embedding must be an array");
    if (j.size() != dim) {
        parse_fail(line, "embedding has " + std::to_string(j.size()) + " values, header says " + std::to_string(dim));
    }
    std::vector<double> v;
    v.reserve(dim);
    double sq = 0.0;
    for (const auto& x : j) {
        v.push_back(f32_number(x, line, "embedding value"));
        sq += v.back() * v.back();
    }
    if (std::abs(std::sqrt(sq) - 1.0) > kDriftWarning) {
        if (drift++ == 0) std::cerr << "warning: line " << line << ": embedding norm drifted, renormalizing\n";
    }
    try {
        return l2_normalize(v);
    } catch (const Error& e) {
        parse_fail(line, e.what());
    }
}

Label parse_label(const json& j, std::size_t line) {
    if (!j.is_string()) parse_fail(line, "label must be a string");
    const auto s = j.get<std::string>();
    if (s.empty()) parse_fail(line, "label must not be empty");
    return Label::parse(s);
}

void check_version(const json& j, std::size_t line) {
    const int version = field<int>(j, "version", line);
    if (version != kFormatVersion) {
        throw Error(ErrorCode::UnsupportedVersion, "format version " + std::to_string(version) + " (expected " +
                                                       std::to_string(kFormatVersion) + ")");
    }
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "' for writing");
    return os;
}

std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
    return is;
}

void finish(std::ostream& os, const std::filesystem::path& path) {
    os.flush();
    if (!os) throw Error(ErrorCode::Io, "write to '" + path.string() + "' failed");
}

// Reads one line; `complete` is false when the line had no trailing newline.
bool read_line(std::istream& is, std::string& line, bool& complete) {
    if (!std::getline(is, line)) return false;
    complete = !is.eof();
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
}

}  // namespace

std::string stream_header_line(const StreamHeader& h) {
    std::string out = "{\"version\":" + std::to_string(h.version) + ",\"fps\":";
    append_number(out, h.fps);
    out += ",\"frame_width\":";
    append_number(out, h.frame_width);
    out += ",\"frame_height\":";
    append_number(out, h.frame_height);
    out += ",\"embedding_dim\":" + std::to_string(h.embedding_dim) + "}";
    return out;
}

std::string frame_line(const Frame& f) {
    std::string out = "{\"frame\":" + std::to_string(f.index) + ",\"detections\":[";
    for (std::size_t i = 0; i < f.detections.size(); ++i) {
        const auto& d = f.detections[i];
        if (i) out += ',';
        out += "{\"box\":";
        append_box(out, d.box);
        if (d.landmarks) {
            out += ",\"landmarks\":[";
            for (std::size_t k = 0; k < d.landmarks->size(); ++k) {
                if (k) out += ',';
                out += '[';
                append_f32(out, (*d.landmarks)[k].x);
                out += ',';
                append_f32(out, (*d.landmarks)[k].y);
                out += ']';
            }
            out += ']';
        }
        out += ",\"embedding\":";
        append_vector(out, d.embedding.values());
        if (d.gt_label) {
            out += ",\"gt_label\":";
            append_json_string(out, d.gt_label->str());
        }
        out += '}';
    }
    out += ']';
    if (!f.present.empty()) {
        out += ",\"present\":[";
        for (std::size_t i = 0; i < f.present.size(); ++i) {
            if (i) out += ',';
            append_json_string(out, f.present[i].str());
        }
        out += ']';
    }
    out += '}';
    return out;
}

void write_stream(std::ostream& os, const StreamHeader& header, std::span<const Frame> frames) {
    os << stream_header_line(header) << '\n';
    for (const auto& f : frames) os << frame_line(f) << '\n';
}

void write_stream(const std::filesystem::path& path, const StreamHeader& header, std::span<const Frame> frames) {
    auto os = open_out(path);
    write_stream(os, header, frames);
    finish(os, path);
}

StreamReader::StreamReader(const std::filesystem::path& path) : file_(open_in(path)), in_(&file_) { read_header(); }

StreamReader::StreamReader(std::istream& is) : in_(&is) { read_header(); }

void StreamReader::read_header() {
    std::string line;
    bool complete = true;
    while (read_line(*in_, line, complete)) {
        ++line_no_;
        if (line.empty()) continue;
        const auto j = parse_json(line, line_no_);
        check_version(j, line_no_);
        header_.version = kFormatVersion;
        header_.fps = field<double>(j, "fps", line_no_);
        header_.frame_width = field<double>(j, "frame_width", line_no_);
        header_.frame_height = field<double>(j, "frame_height", line_no_);
        header_.embedding_dim = field<std::size_t>(j, "embedding_dim", line_no_);
        if (!(header_.fps > 0.0) || !(header_.frame_width > 0.0) || !(header_.frame_height > 0.0) ||
            header_.embedding_dim == 0) {
            parse_fail(line_no_, "header values must be positive");
        }
        return;
    }
    parse_fail(line_no_, "missing stream header");
}

std::optional<Frame> StreamReader::next() {
    if (truncated_) return std::nullopt;
    std::string line;
    bool complete = true;
    while (read_line(*in_, line, complete)) {
        ++line_no_;
        if (line.empty()) continue;
        try {
            const auto j = parse_json(line, line_no_);
            Frame f;
            f.index = field<std::int64_t>(j, "frame", line_no_);
            if (f.index < 0) parse_fail(line_no_, "frame index must be non-negative");
            if (have_frame_ && f.index <= last_frame_) {
                throw Error(ErrorCode::OutOfOrderFrame, "line " + std::to_string(line_no_) + ": frame " +
                                                            std::to_string(f.index) + " follows " +
                                                            std::to_string(last_frame_));
            }
            const auto& dets = j.contains("detections") ? j.at("detections") : json::array();
            if (!dets.is_array()) parse_fail(line_no_, "detections must be an array");
            for (const auto& dj : dets) {
                Detection d;
                d.frame = f.index;
                d.box = parse_box(field<json>(dj, "box", line_no_), line_no_);
                if (dj.contains("landmarks")) {
                    const auto& lj = dj.at("landmarks");
                    if (!lj.is_array() || lj.size() != 5) parse_fail(line_no_, "landmarks must hold 5 points");
                    Landmarks lm;
                    for (std::size_t k = 0; k < 5; ++k) {
                        if (!lj[k].is_array() || lj[k].size() != 2) parse_fail(line_no_, "landmark must be [x, y]");
                        lm[k] = {number(lj[k][0], line_no_, "landmark"), number(lj[k][1], line_no_, "landmark")};
                    }
                    d.landmarks = lm;
                }
                d.embedding = parse_embedding(field<json>(dj, "embedding", line_no_), header_.embedding_dim, line_no_,
                                              drift_warnings_);
                if (dj.contains("gt_label")) d.gt_label = parse_label(dj.at("gt_label"), line_no_);
                f.detections.push_back(std::move(d));
            }
            if (j.contains("present")) {
                if (!j.at("present").is_array()) parse_fail(line_no_, "present must be an array");
                for (const auto& pj : j.at("present")) f.present.push_back(parse_label(pj, line_no_));
            }
            last_frame_ = f.index;
            have_frame_ = true;
            return f;
        } catch (const Error& e) {
            if (!complete && e.code() == ErrorCode::ParseError) {
                std::cerr << "warning: line " << line_no_ << ": truncated final record ignored\n";
                truncated_ = true;
                return std::nullopt;
            }
            throw;
        }
    }
    return std::nullopt;
}

StreamData read_stream(std::istream& is) {
    StreamReader reader(is);
    StreamData data{reader.header(), {}};
    while (auto f = reader.next()) data.frames.push_back(std::move(*f));
    return data;
}

StreamData read_stream(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_stream(is);
}

void write_tracks(std::ostream& os, std::span<const TrainingTrack> tracks, std::size_t dim) {
    os << "{\"version\":" << kFormatVersion << ",\"embedding_dim\":" << dim << "}\n";
    for (const auto& t : tracks) {
        std::string out = "{\"label\":";
        append_json_string(out, t.label.str());
        out += ",\"fps\":";
        append_number(out, t.fps);
        out += ",\"frames\":[";
        for (std::size_t i = 0; i < t.samples.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(t.samples[i].frame);
        }
        out += "],\"embeddings\":[";
        for (std::size_t i = 0; i < t.samples.size(); ++i) {
            if (i) out += ',';
            append_vector(out, t.samples[i].embedding.values());
        }
        out += "]}\n";
        os << out;
    }
}

void write_tracks(const std::filesystem::path& path, std::span<const TrainingTrack> tracks, std::size_t dim) {
    auto os = open_out(path);
    write_tracks(os, tracks, dim);
    finish(os, path);
}

std::vector<TrainingTrack> read_tracks(std::istream& is) {
    std::string line;
    bool complete = true;
    std::size_t line_no = 0;
    std::optional<std::size_t> dim;
    std::size_t drift = 0;
    std::vector<TrainingTrack> tracks;
    while (read_line(is, line, complete)) {
        ++line_no;
        if (line.empty()) continue;
        const auto j = parse_json(line, line_no);
        if (!dim) {
            check_version(j, line_no);
            dim = field<std::size_t>(j, "embedding_dim", line_no);
            if (*dim == 0) parse_fail(line_no, "embedding_dim must be positive");
            continue;
        }
        TrainingTrack t;
        t.label = parse_label(field<json>(j, "label", line_no), line_no);
        if (t.label.is_unknown()) parse_fail(line_no, "training track cannot be labeled Unknown");
        t.fps = field<double>(j, "fps", line_no);
        const auto frames = field<std::vector<std::int64_t>>(j, "frames", line_no);
        const auto& embs = field<json>(j, "embeddings", line_no);
        if (!embs.is_array() || embs.size() != frames.size()) parse_fail(line_no, "frames and embeddings differ in length");
        for (std::size_t i = 0; i < frames.size(); ++i) {
            t.samples.push_back({frames[i], parse_embedding(embs[i], *dim, line_no, drift)});
        }
        try {
            validate(t);
        } catch (const Error& e) {
            parse_fail(line_no, e.what());
        }
        tracks.push_back(std::move(t));
    }
    if (!dim) parse_fail(line_no, "missing tracks header");
    return tracks;
}

std::vector<TrainingTrack> read_tracks(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_tracks(is);
}

void write_gallery(std::ostream& os, const Gallery& g) {
    if (g.empty() || g.total_prototypes() == 0) throw Error(ErrorCode::EmptyGallery, "refusing to write an empty gallery");
    std::string out = "{\"version\":" + std::to_string(kFormatVersion) + ",\"method\":\"" +
                      std::string(to_string(g.method)) + "\",\"k\":" + std::to_string(g.k) +
                      ",\"seed\":" + std::to_string(g.seed) + ",\"dim\":" + std::to_string(g.dim) + ",\"entries\":[\n";
    bool first = true;
    for (const auto& [name, protos] : g.entries) {
        if (!first) out += ",\n";
        first = false;
        out += "{\"label\":";
        append_json_string(out, name);
        out += ",\"frames\":[";
        for (std::size_t i = 0; i < protos.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(protos[i].frame);
        }
        out += "],\"prototypes\":[";
        for (std::size_t i = 0; i < protos.size(); ++i) {
            if (i) out += ',';
            append_vector(out, protos[i].embedding.values());
        }
        out += "]}";
    }
    out += "\n]}\n";
    os << out;
}

void write_gallery(const std::filesystem::path& path, const Gallery& g) {
    if (g.empty() || g.total_prototypes() == 0) throw Error(ErrorCode::EmptyGallery, "refusing to write an empty gallery");
    auto os = open_out(path);
    write_gallery(os, g);
    finish(os, path);
}

Gallery read_gallery(std::istream& is) {
    std::stringstream buffer;
    buffer << is.rdbuf();
    const auto j = parse_json(buffer.str(), 1);
    check_version(j, 1);
    Gallery g;
    g.method = parse_gallery_method(field<std::string>(j, "method", 1));
    g.k = field<std::size_t>(j, "k", 1);
    g.seed = field<std::uint64_t>(j, "seed", 1);
    g.dim = field<std::size_t>(j, "dim", 1);
    if (g.dim == 0) parse_fail(1, "dim must be positive");
    std::size_t drift = 0;
    for (const auto& ej : field<json>(j, "entries", 1)) {
        const auto label = parse_label(field<json>(ej, "label", 1), 1);
        if (label.is_unknown()) parse_fail(1, "gallery cannot hold the Unknown label");
        const auto frames = field<std::vector<std::int64_t>>(ej, "frames", 1);
        const auto& protos = field<json>(ej, "prototypes", 1);
        if (!protos.is_array() || protos.size() != frames.size() || frames.empty()) {
            parse_fail(1, "entry '" + label.name() + "' needs matching non-empty frames and prototypes");
        }
        auto [it, fresh] = g.entries.try_emplace(label.name());
        if (!fresh) throw Error(ErrorCode::DuplicateLabel, "gallery lists '" + label.name() + "' twice");
        for (std::size_t i = 0; i < frames.size(); ++i) {
            it->second.push_back({parse_embedding(protos[i], g.dim, 1, drift), frames[i]});
        }
    }
    if (g.entries.empty()) throw Error(ErrorCode::EmptyGallery, "gallery file has no entries");
    return g;
}

Gallery read_gallery(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_gallery(is);
}

std::string result_line(const FrameResult& r) {
    std::string out = "{\"frame\":" + std::to_string(r.frame) + ",\"entries\":[";
    for (std::size_t i = 0; i < r.entries.size(); ++i) {
        const auto& e = r.entries[i];
        if (i) out += ',';
        out += "{\"label\":";
        append_json_string(out, e.label.str());
        out += ",\"box\":";
        append_box(out, e.box);
        out += ",\"distance\":";
        append_number(out, e.distance);
        out += ",\"source\":\"" + std::string(to_string(e.source)) + "\"}";
    }
    out += "]}";
    return out;
}

void write_results(std::ostream& os, std::span<const FrameResult> results) {
    for (const auto& r : results) os << result_line(r) << '\n';
}

void write_results(const std::filesystem::path& path, std::span<const FrameResult> results) {
    auto os = open_out(path);
    write_results(os, results);
    finish(os, path);
}

std::vector<FrameResult> read_results(std::istream& is) {
    std::vector<FrameResult> out;
    std::string line;
    bool complete = true;
    std::size_t line_no = 0;
    while (read_line(is, line, complete)) {
        ++line_no;
        if (line.empty()) continue;
        const auto j = parse_json(line, line_no);
        FrameResult r;
        r.frame = field<std::int64_t>(j, "frame", line_no);
        if (!out.empty() && r.frame <= out.back().frame) {
            throw Error(ErrorCode::OutOfOrderFrame, "line " + std::to_string(line_no) + ": results out of order");
        }
        for (const auto& ej : field<json>(j, "entries", line_no)) {
            FrameEntry e;
            e.label = parse_label(field<json>(ej, "label", line_no), line_no);
            e.box = parse_box(field<json>(ej, "box", line_no), line_no);
            e.distance = number(field<json>(ej, "distance", line_no), line_no, "distance");
            try {
                e.source = parse_entry_source(field<std::string>(ej, "source", line_no));
            } catch (const Error& err) {
                parse_fail(line_no, err.what());
            }
            r.entries.push_back(std::move(e));
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<FrameResult> read_results(const std::filesystem::path& path) {
    auto is = open_in(path);
    return read_results(is);
}

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T convert(const std::string& value, std::size_t line, const std::string& key) {
    std::istringstream in(value);
    T out{};
    in >> out;
    if (!in || !(in >> std::ws).eof()) parse_fail(line, "bad value for '" + key + "': " + value);
    return out;
}

}  // namespace

ScenarioSpec parse_scenario(std::istream& is) {
    ScenarioSpec s;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const auto line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) parse_fail(line_no, "expected key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        auto as_size = [&] { return convert<std::size_t>(value, line_no, key); };
        auto as_real = [&] { return convert<double>(value, line_no, key); };
        if (key == "participants") s.participants = as_size();
        else if (key == "pose_clusters") s.pose_clusters = as_size();
        else if (key == "embedding_dim") s.embedding_dim = as_size();
        else if (key == "noise_sigma") s.noise_sigma = as_real();
        else if (key == "fps") s.fps = as_real();
        else if (key == "duration_seconds") s.duration_seconds = as_real();
        else if (key == "frame_width") s.frame_width = as_real();
        else if (key == "frame_height") s.frame_height = as_real();
        else if (key == "face_size") s.face_size = as_real();
        else if (key == "background_face_size") s.background_face_size = as_real();
        else if (key == "motion_sigma") s.motion_sigma = as_real();
        else if (key == "pose_switch_prob") s.pose_switch_prob = as_real();
        else if (key == "partial_occlusion_rate") s.partial_occlusion_rate = as_real();
        else if (key == "partial_occlusion_signal") s.partial_occlusion_signal = as_real();
        else if (key == "min_separation") s.min_separation = as_real();
        else if (key == "background_separation") s.background_separation = as_real();
        else if (key == "train_samples") s.train_samples = as_size();
        else if (key == "seed") s.seed = convert<std::uint64_t>(value, line_no, key);
        else if (key == "event") {
            std::istringstream in(value);
            std::string kind, subject;
            ScenarioEvent e;
            if (!(in >> kind >> subject >> e.start >> e.length) || !(in >> std::ws).eof()) {
                parse_fail(line_no, "event needs: <kind> <subject> <start> <length>");
            }
            try {
                e.kind = parse_event_kind(kind);
            } catch (const Error& err) {
                parse_fail(line_no, err.what());
            }
            e.subject = subject == "-" ? std::string() : subject;
            s.events.push_back(std::move(e));
        } else {
            parse_fail(line_no, "unknown key '" + key + "'");
        }
    }
    return s;
}

ScenarioSpec read_scenario(const std::filesystem::path& path) {
    auto is = open_in(path);
    return parse_scenario(is);
}

std::string format_scenario(const ScenarioSpec& s) {
    std::string out;
    auto real = [&](const char* key, double v) {
        out += key;
        out += " = ";
        append_number(out, v);
        out += '\n';
    };
    auto integer = [&](const char* key, std::uint64_t v) { out += std::string(key) + " = " + std::to_string(v) + '\n'; };
    integer("participants", s.participants);
    integer("pose_clusters", s.pose_clusters);
    integer("embedding_dim", s.embedding_dim);
    real("noise_sigma", s.noise_sigma);
    real("fps", s.fps);
    real("duration_seconds", s.duration_seconds);
    real("frame_width", s.frame_width);
    real("frame_height", s.frame_height);
    real("face_size", s.face_size);
    real("background_face_size", s.background_face_size);
    real("motion_sigma", s.motion_sigma);
    real("pose_switch_prob", s.pose_switch_prob);
    real("partial_occlusion_rate", s.partial_occlusion_rate);
    real("partial_occlusion_signal", s.partial_occlusion_signal);
    real("min_separation", s.min_separation);
    real("background_separation", s.background_separation);
    integer("train_samples", s.train_samples);
    integer("seed", s.seed);
    for (const auto& e : s.events) {
        out += "event = " + std::string(to_string(e.kind)) + ' ' + (e.subject.empty() ? "-" : e.subject) + ' ' +
               std::to_string(e.start) + ' ' + std::to_string(e.length) + '\n';
    }
    return out;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
    auto os = open_out(path);
    os << content;
    finish(os, path);
}

}  // namespace facetrack
