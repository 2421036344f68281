// SPDX-License-Identifier: Apache-2.0

#include "facetrack/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <set>

#include "facetrack/error.hpp"
#include "facetrack/format.hpp"
#include "facetrack/parallel.hpp"

namespace facetrack {
namespace {

constexpr double kMatchIou = 0.5;

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

template <typename Body>
TimingReport time_runs(std::int64_t frames, int repetitions, Body&& body) {
    if (repetitions <= 0) throw Error(ErrorCode::InvalidConfig, "repetitions must be positive");
    std::vector<double> per_frame;
    for (int r = 0; r < repetitions; ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        body(r);
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        per_frame.push_back(dt.count() / static_cast<double>(std::max<std::int64_t>(1, frames)));
    }
    return {median(std::move(per_frame)), frames, 1.0};
}

std::vector<std::string> present_labels(const Frame& f) {
    std::vector<std::string> out;
    if (!f.present.empty()) {
        for (const auto& l : f.present) {
            if (!l.is_unknown()) out.push_back(l.name());
        }
    } else {
        for (const auto& d : f.detections) {
            if (d.gt_label && !d.gt_label->is_unknown()) out.push_back(d.gt_label->name());
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// Ground-truth identity behind a reported box, or Unknown when nothing overlaps.
Label truth_for_box(const Frame& f, const BoundingBox& box) {
    double best = kMatchIou;
    Label who = Label::unknown();
    for (const auto& d : f.detections) {
        const double o = iou(d.box, box);
        if (o > best) {
            best = o;
            who = d.gt_label.value_or(Label::unknown());
        }
    }
    return who;
}

}  // namespace

AccuracyReport score(std::span<const FrameResult> results, std::span<const Frame> truth) {
    const auto filled = fill_gaps(truth);
    if (filled.size() != results.size()) {
        throw Error(ErrorCode::MisalignedStreams, "results cover " + std::to_string(results.size()) +
                                                      " frames, truth covers " + std::to_string(filled.size()));
    }
    AccuracyReport report;
    std::int64_t entries = 0, unknown = 0, named = 0, wrong = 0;
    for (std::size_t i = 0; i < filled.size(); ++i) {
        const auto& f = filled[i];
        const auto& r = results[i];
        if (r.frame != f.index) {
            throw Error(ErrorCode::MisalignedStreams, "result frame " + std::to_string(r.frame) +
                                                          " does not match truth frame " + std::to_string(f.index));
        }
        const auto present = present_labels(f);
        std::set<std::string> correct;
        for (const auto& e : r.entries) {
            ++entries;
            if (e.label.is_unknown()) {
                ++unknown;
                continue;
            }
            ++named;
            const bool ok = e.source == EntrySource::Occluded
                                ? std::binary_search(present.begin(), present.end(), e.label.name())
                                : truth_for_box(f, e.box) == e.label;
            if (ok) correct.insert(e.label.name());
            else ++wrong;
        }
        for (const auto& name : present) {
            auto& p = report.per_person[name];
            ++p.present_frames;
            if (correct.contains(name)) ++p.correct_frames;
        }
    }
    report.frames = static_cast<std::int64_t>(filled.size());
    if (!report.per_person.empty()) {
        double sum = 0.0;
        for (const auto& [_, p] : report.per_person) sum += p.accuracy();
        report.average = sum / static_cast<double>(report.per_person.size());
    }
    report.unknown_rate = entries == 0 ? 0.0 : static_cast<double>(unknown) / static_cast<double>(entries);
    report.false_label_rate = named == 0 ? 0.0 : static_cast<double>(wrong) / static_cast<double>(named);
    return report;
}

TimingReport with_speedup(TimingReport ours, const TimingReport& baseline) {
    ours.speedup_factor = ours.seconds_per_frame > 0.0 ? baseline.seconds_per_frame / ours.seconds_per_frame : 0.0;
    return ours;
}

TimedRun run_baseline(std::span<const Frame> frames, std::span<const TrainingTrack> tracks,
                      const RecognizerConfig& cfg, int repetitions) {
    const Gallery gallery = build_gallery_full(tracks);
    const Recognizer recognizer(gallery, cfg);
    const auto filled = fill_gaps(frames);
    TimedRun out;
    out.timing = time_runs(static_cast<std::int64_t>(filled.size()), repetitions, [&](int) {
        std::vector<FrameResult> results;
        results.reserve(filled.size());
        for (const auto& f : filled) {
            FrameResult r{f.index, {}};
            r.entries.reserve(f.detections.size());
            std::vector<EmbeddingVector> queries;
            queries.reserve(f.detections.size());
            for (const auto& d : f.detections) queries.push_back(d.embedding);
            const auto cs = recognizer.classify_batch(queries);
            for (std::size_t i = 0; i < cs.size(); ++i) {
                r.entries.push_back({cs[i].label, f.detections[i].box, cs[i].distance, EntrySource::Classified});
            }
            resolve_duplicate_labels(r.entries);
            results.push_back(std::move(r));
        }
        out.results = std::move(results);
    });
    return out;
}

TimedRun run_tracker_timed(std::span<const Frame> frames, const Gallery& gallery, const TrackerConfig& cfg,
                           int repetitions) {
    TimedRun out;
    const auto n = static_cast<std::int64_t>(fill_gaps(frames).size());
    out.timing = time_runs(n, repetitions, [&](int) { out.results = run(frames, gallery, cfg); });
    return out;
}

std::string_view to_string(CostModel model) {
    return model == CostModel::WallClock ? "wallclock" : "comparisons";
}

CostModel parse_cost_model(std::string_view text) {
    if (text == "wallclock") return CostModel::WallClock;
    if (text == "comparisons") return CostModel::Comparisons;
    throw Error(ErrorCode::InvalidConfig, "unknown cost model '" + std::string(text) + "'");
}

std::vector<std::size_t> default_k_values() {
    std::vector<std::size_t> ks;
    for (std::size_t k = 1; k <= 2048; k *= 2) ks.push_back(k);
    return ks;
}

std::vector<SweepPoint> sweep(std::span<const Frame> truth, std::span<const TrainingTrack> tracks,
                              const SweepOptions& options, const TrackerConfig& cfg) {
    if (options.k_values.empty()) throw Error(ErrorCode::InvalidConfig, "sweep needs at least one k");
    if (tracks.empty()) throw Error(ErrorCode::EmptyInput, "sweep needs training tracks");
    std::size_t largest = 0;
    for (const auto& t : tracks) largest = std::max(largest, t.samples.size());

    const std::size_t n = options.k_values.size();
    std::vector<Gallery> galleries(n);
    std::vector<SweepPoint> points(n);
    parallel_for(n, options.workers, [&](std::size_t i) {
        const std::size_t k = options.k_values[i];
        if (k == 0) throw Error(ErrorCode::InvalidConfig, "k must be positive");
        KMeansGalleryOptions g;
        g.k = std::min(k, largest);
        g.seed = options.seed;
        g.budget = options.budget;
        galleries[i] = build_gallery_kmeans(tracks, g);
        const auto detailed = run_detailed(truth, galleries[i], cfg);
        points[i].k = k;
        points[i].prototypes = galleries[i].total_prototypes();
        points[i].accuracy = score(detailed.results, truth).average;
        points[i].cost_per_frame =
            static_cast<double>(detailed.comparisons) / static_cast<double>(detailed.results.size());
    });
    if (options.cost == CostModel::WallClock) {
        for (std::size_t i = 0; i < n; ++i) {
            points[i].cost_per_frame =
                run_tracker_timed(truth, galleries[i], cfg, options.repetitions).timing.seconds_per_frame;
        }
    }
    return points;
}

std::vector<SweepPoint> pareto_front(std::span<const SweepPoint> points) {
    std::vector<SweepPoint> sorted(points.begin(), points.end());
    std::stable_sort(sorted.begin(), sorted.end(), [](const SweepPoint& a, const SweepPoint& b) {
        if (a.cost_per_frame != b.cost_per_frame) return a.cost_per_frame < b.cost_per_frame;
        if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
        return a.k < b.k;
    });
    // Scanning by increasing cost, a point survives only if it beats the best
    // accuracy seen so far; equal-cost runners-up and exact duplicates fall out.
    std::vector<SweepPoint> front;
    for (const auto& p : sorted) {
        if (front.empty() || p.accuracy > front.back().accuracy) front.push_back(p);
    }
    return front;
}

std::string accuracy_csv(const AccuracyReport& report) {
    std::string out = "label,present_frames,correct_frames,accuracy\n";
    std::int64_t present = 0, correct = 0;
    for (const auto& [name, p] : report.per_person) {
        out += name + ',' + std::to_string(p.present_frames) + ',' + std::to_string(p.correct_frames) + ',';
        append_number(out, p.accuracy());
        out += '\n';
        present += p.present_frames;
        correct += p.correct_frames;
    }
    out += "Average," + std::to_string(present) + ',' + std::to_string(correct) + ',';
    append_number(out, report.average);
    out += '\n';
    return out;
}

std::string comparison_csv(const AccuracyReport& ours, const AccuracyReport& baseline) {
    std::string out = "label,ours,baseline\n";
    std::set<std::string> names;
    for (const auto& [n, _] : ours.per_person) names.insert(n);
    for (const auto& [n, _] : baseline.per_person) names.insert(n);
    auto acc = [](const AccuracyReport& r, const std::string& n) {
        const auto it = r.per_person.find(n);
        return it == r.per_person.end() ? 0.0 : it->second.accuracy();
    };
    for (const auto& n : names) {
        out += n + ',';
        append_number(out, acc(ours, n));
        out += ',';
        append_number(out, acc(baseline, n));
        out += '\n';
    }
    out += "Average,";
    append_number(out, ours.average);
    out += ',';
    append_number(out, baseline.average);
    out += '\n';
    return out;
}

std::string timing_csv(double duration_seconds, std::size_t faces, const TimingReport& baseline,
                       const TimingReport& ours) {
    std::string out = "duration_s,gt_faces,baseline_s_per_frame,ours_s_per_frame,speedup\n";
    append_number(out, duration_seconds);
    out += ',' + std::to_string(faces) + ',';
    append_number(out, baseline.seconds_per_frame);
    out += ',';
    append_number(out, ours.seconds_per_frame);
    out += ',';
    append_number(out, with_speedup(ours, baseline).speedup_factor);
    out += '\n';
    return out;
}

std::string sweep_csv(std::span<const SweepPoint> points, CostModel cost) {
    std::string out = "k,prototypes,accuracy,";
    out += cost == CostModel::WallClock ? "seconds_per_frame\n" : "comparisons_per_frame\n";
    for (const auto& p : points) {
        out += std::to_string(p.k) + ',' + std::to_string(p.prototypes) + ',';
        append_number(out, p.accuracy);
        out += ',';
        append_number(out, p.cost_per_frame);
        out += '\n';
    }
    return out;
}

std::string accuracy_json(const AccuracyReport& report) {
    std::string out = "{\"average\":";
    append_number(out, report.average);
    out += ",\"false_label_rate\":";
    append_number(out, report.false_label_rate);
    out += ",\"frames\":" + std::to_string(report.frames) + ",\"per_person\":{";
    bool first = true;
    for (const auto& [name, p] : report.per_person) {
        if (!first) out += ',';
        first = false;
        append_json_string(out, name);
        out += ":{\"accuracy\":";
        append_number(out, p.accuracy());
        out += ",\"correct_frames\":" + std::to_string(p.correct_frames) +
               ",\"present_frames\":" + std::to_string(p.present_frames) + '}';
    }
    out += "},\"unknown_rate\":";
    append_number(out, report.unknown_rate);
    out += "}\n";
    return out;
}

}  // namespace facetrack
