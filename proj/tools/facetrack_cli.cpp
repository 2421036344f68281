// SPDX-License-Identifier: Apache-2.0

// facetrack: synthetic stream generation, gallery building, tracking,
// baseline runs, scoring and prototype-count sweeps.

#include <chrono>
#include <cstdint>
#include <optional>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "facetrack/error.hpp"
#include "facetrack/evaluation.hpp"
#include "facetrack/format.hpp"
#include "facetrack/gallery.hpp"
#include "facetrack/io.hpp"
#include "facetrack/synthetic.hpp"
#include "facetrack/tracker.hpp"

namespace fs = std::filesystem;
using namespace facetrack;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct TrackerFlags {
    double reuse_iou = 0.5;
    int min_appearances = 5;
    int cap = 10;
    double promote_ratio = 0.5;
    double init_window = 2.0;
    double unknown_threshold = 0.6;
    double min_area = 0.0;
    double min_area_fraction = 0.0;
    std::string new_face_policy = "inactive";

    void add_to(CLI::App* app) {
        app->add_option("--reuse-iou", reuse_iou, "IoU at or above which an active face is reused")->capture_default_str();
        app->add_option("--min-appearances", min_appearances, "occlusion budget")->capture_default_str();
        app->add_option("--cap", cap, "ceiling of the continuous-appearance counter")->capture_default_str();
        app->add_option("--promote-ratio", promote_ratio, "appearance ratio for the active set")->capture_default_str();
        app->add_option("--init-window", init_window, "initial window in seconds")->capture_default_str();
        app->add_option("--unknown-threshold", unknown_threshold, "cosine distance above which a face is Unknown")
            ->capture_default_str();
        app->add_option("--min-area", min_area, "minimum box area in px^2 (0 disables)")->capture_default_str();
        app->add_option("--min-area-fraction", min_area_fraction, "minimum box area as a fraction of the frame")
            ->capture_default_str();
        app->add_option("--new-face-policy", new_face_policy, "set that receives new faces")
            ->check(CLI::IsMember({"inactive", "active"}))
            ->capture_default_str();
    }

    TrackerConfig make(const StreamHeader& h) const {
        TrackerConfig c;
        c.init_window_seconds = init_window;
        c.fps = h.fps;
        c.cap = cap;
        c.min_appearances = min_appearances;
        c.promote_ratio = promote_ratio;
        c.reuse_iou = reuse_iou;
        c.new_face_policy = parse_new_face_policy(new_face_policy);
        c.frame_width = h.frame_width;
        c.frame_height = h.frame_height;
        c.recognizer = {unknown_threshold, min_area, min_area_fraction};
        c.validate();
        return c;
    }
};

std::vector<std::size_t> parse_k_list(const std::string& text) {
    std::vector<std::size_t> ks;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            const long long v = std::stoll(item, &used);
            if (used != item.size() || v <= 0) throw std::invalid_argument(item);
            ks.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw CLI::ValidationError("--k", "expected a comma-separated list of positive integers, got '" + text + "'");
        }
    }
    if (ks.empty()) throw CLI::ValidationError("--k", "empty list");
    return ks;
}

std::string summary_csv(const TrackerRun& run) {
    std::size_t entries = 0, classified = 0, reused = 0, occluded = 0, unknown = 0;
    for (const auto& r : run.results) {
        for (const auto& e : r.entries) {
            ++entries;
            if (e.label.is_unknown()) ++unknown;
            switch (e.source) {
                case EntrySource::Classified: ++classified; break;
                case EntrySource::Reused: ++reused; break;
                case EntrySource::Occluded: ++occluded; break;
            }
        }
    }
    std::ostringstream os;
    os << "frames,entries,classified,reused,occluded,unknown,classify_calls,comparisons,conflicts\n"
       << run.results.size() << ',' << entries << ',' << classified << ',' << reused << ',' << occluded << ','
       << unknown << ',' << run.classify_calls << ',' << run.comparisons << ',' << run.conflicts << '\n';
    return os.str();
}

std::size_t max_faces(const std::vector<Frame>& frames) {
    std::size_t n = 0;
    for (const auto& f : frames) n = std::max(n, f.present.empty() ? f.detections.size() : f.present.size());
    return n;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prototype-gallery video face recognition with Active/Inactive-set tracking"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a synthetic ground-truth stream and training tracks");
    std::string scenario_path, preset, gen_prefix;
    std::optional<std::uint64_t> gen_seed;
    std::optional<double> split_seconds;
    auto* scenario_opt = gen->add_option("--scenario", scenario_path, "scenario file (key = value lines)");
    gen->add_option("--preset", preset, "built-in scenario")->check(CLI::IsMember({"standard"}))->excludes(scenario_opt);
    gen->add_option("--seed", gen_seed, "override the scenario seed");
    gen->add_option("--split", split_seconds,
                    "take training tracks from the first N seconds of the stream instead of a separate segment");
    gen->add_option("--out", gen_prefix, "output prefix (<prefix>.stream.jsonl, <prefix>.tracks.jsonl)")->required();

    // gallery
    auto* gal = app.add_subcommand("gallery", "build a prototype gallery from training tracks");
    std::string gal_tracks, gal_out, gal_method = "kmeans", gal_budget = "per-participant";
    std::size_t gal_k = 16, gal_iters = 100;
    std::uint64_t gal_seed = 0;
    unsigned gal_workers = 1;
    gal->add_option("--tracks", gal_tracks, "training tracks file")->required();
    gal->add_option("--out", gal_out, "gallery file to write")->required();
    gal->add_option("--method", gal_method, "prototype selection")->check(CLI::IsMember({"kmeans", "sampling", "full"}))->capture_default_str();
    gal->add_option("--k", gal_k, "prototypes per participant (kmeans)")->check(CLI::PositiveNumber)->capture_default_str();
    gal->add_option("--seed", gal_seed, "seed for seeding and sampling")->capture_default_str();
    gal->add_option("--budget", gal_budget, "how k is interpreted")
        ->check(CLI::IsMember({"per-participant", "global"}))
        ->capture_default_str();
    gal->add_option("--max-iters", gal_iters, "k-means iteration limit")->check(CLI::PositiveNumber)->capture_default_str();
    gal->add_option("--workers", gal_workers, "participants clustered in parallel")->check(CLI::PositiveNumber)->capture_default_str();

    // track
    auto* trk = app.add_subcommand("track", "run the Active/Inactive tracker over a stream");
    std::string trk_stream, trk_gallery, trk_out, trk_summary;
    TrackerFlags trk_flags;
    trk->add_option("--stream", trk_stream, "detection stream")->required();
    trk->add_option("--gallery", trk_gallery, "gallery file")->required();
    trk->add_option("--out", trk_out, "results JSONL")->required();
    trk->add_option("--summary", trk_summary, "summary CSV");
    trk_flags.add_to(trk);

    // baseline
    auto* base = app.add_subcommand("baseline", "classify every detection against all training embeddings");
    std::string base_stream, base_tracks, base_out;
    double base_threshold = 0.6;
    int base_reps = 1;
    base->add_option("--stream", base_stream, "detection stream")->required();
    base->add_option("--tracks", base_tracks, "training tracks file")->required();
    base->add_option("--out", base_out, "results JSONL")->required();
    base->add_option("--unknown-threshold", base_threshold, "cosine distance above which a face is Unknown")->capture_default_str();
    base->add_option("--reps", base_reps, "timing repetitions")->check(CLI::PositiveNumber)->capture_default_str();

    // score
    auto* scr = app.add_subcommand("score", "per-person accuracy of results against a ground-truth stream");
    std::string scr_results, scr_truth, scr_out, scr_json;
    scr->add_option("--results", scr_results, "results JSONL")->required();
    scr->add_option("--truth", scr_truth, "ground-truth stream")->required();
    scr->add_option("--out", scr_out, "accuracy CSV")->required();
    scr->add_option("--json", scr_json, "also write the report as JSON");

    // sweep
    auto* swp = app.add_subcommand("sweep", "accuracy and cost over K-means gallery sizes, with the Pareto front");
    std::string swp_stream, swp_tracks, swp_out, swp_pareto, swp_k, swp_cost = "wallclock", swp_budget = "per-participant";
    std::uint64_t swp_seed = 0;
    int swp_reps = 3;
    unsigned swp_workers = 1;
    TrackerFlags swp_flags;
    swp->add_option("--stream", swp_stream, "ground-truth stream")->required();
    swp->add_option("--tracks", swp_tracks, "training tracks file")->required();
    swp->add_option("--k", swp_k, "comma-separated k values (default 1,2,...,2048)");
    swp->add_option("--seed", swp_seed, "gallery seed")->capture_default_str();
    swp->add_option("--cost", swp_cost, "cost axis")->check(CLI::IsMember({"wallclock", "comparisons"}))->capture_default_str();
    swp->add_option("--budget", swp_budget, "how k is interpreted")->check(CLI::IsMember({"per-participant", "global"}))->capture_default_str();
    swp->add_option("--reps", swp_reps, "timing repetitions")->check(CLI::PositiveNumber)->capture_default_str();
    swp->add_option("--workers", swp_workers, "gallery build threads")->check(CLI::PositiveNumber)->capture_default_str();
    swp->add_option("--out", swp_out, "sweep CSV")->required();
    swp->add_option("--pareto", swp_pareto, "Pareto front CSV")->required();
    swp_flags.add_to(swp);

    // bench
    auto* bench = app.add_subcommand("bench", "tracker vs. baseline accuracy and timing on one stream");
    std::string bench_stream, bench_tracks, bench_timing, bench_accuracy;
    std::size_t bench_k = 16;
    std::uint64_t bench_seed = 0;
    int bench_reps = 3;
    TrackerFlags bench_flags;
    bench->add_option("--stream", bench_stream, "ground-truth stream")->required();
    bench->add_option("--tracks", bench_tracks, "training tracks file")->required();
    bench->add_option("--k", bench_k, "prototypes per participant")->check(CLI::PositiveNumber)->capture_default_str();
    bench->add_option("--seed", bench_seed, "gallery seed")->capture_default_str();
    bench->add_option("--reps", bench_reps, "timing repetitions")->check(CLI::PositiveNumber)->capture_default_str();
    bench->add_option("--timing-out", bench_timing, "timing CSV")->required();
    bench->add_option("--accuracy-out", bench_accuracy, "accuracy comparison CSV");
    bench_flags.add_to(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (*gen) {
            ScenarioSpec spec = preset == "standard" ? standard_scenario()
                                : !scenario_path.empty() ? read_scenario(scenario_path)
                                                         : ScenarioSpec{};
            if (gen_seed) spec.seed = *gen_seed;
            auto data = generate(spec);
            std::vector<TrainingTrack> tracks = std::move(data.tracks);
            std::vector<Frame> frames = std::move(data.frames);
            if (split_seconds) {
                auto split = split_train_test(frames, spec.fps, *split_seconds);
                for (const auto& m : split.missing_labels) {
                    std::cerr << "warning: participant " << m << " has no training samples in the prefix\n";
                }
                tracks = std::move(split.tracks);
                frames = std::move(split.test);
            }
            write_stream(gen_prefix + ".stream.jsonl", data.header, frames);
            write_tracks(gen_prefix + ".tracks.jsonl", tracks, spec.embedding_dim);
            std::cout << "wrote " << frames.size() << " frames and " << tracks.size() << " training tracks\n";
        } else if (*gal) {
            const auto tracks = read_tracks(gal_tracks);
            Gallery g;
            const auto method = parse_gallery_method(gal_method);
            if (method == GalleryMethod::KMeans) {
                KMeansGalleryOptions o;
                o.k = gal_k;
                o.seed = gal_seed;
                o.max_iters = gal_iters;
                o.budget = gal_budget == "global" ? KBudget::GlobalSplit : KBudget::PerParticipant;
                o.workers = gal_workers;
                g = build_gallery_kmeans(tracks, o);
            } else if (method == GalleryMethod::Sampling) {
                g = build_gallery_sampling(tracks);
            } else {
                g = build_gallery_full(tracks);
            }
            write_gallery(gal_out, g);
            std::cout << "gallery: " << g.entries.size() << " participants, " << g.total_prototypes()
                      << " prototypes\n";
        } else if (*trk) {
            const auto gallery = read_gallery(trk_gallery);
            const auto stream = read_stream(trk_stream);
            if (stream.header.embedding_dim != gallery.dim) {
                throw Error(ErrorCode::DimensionMismatch, "stream and gallery embedding dimensions differ");
            }
            const auto cfg = trk_flags.make(stream.header);
            const auto t0 = std::chrono::steady_clock::now();
            const auto run = run_detailed(stream.frames, gallery, cfg);
            const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
            write_results(trk_out, run.results);
            if (!trk_summary.empty()) write_text(trk_summary, summary_csv(run));
            std::cout << "tracked " << run.results.size() << " frames, "
                      << format_number(dt.count() / static_cast<double>(run.results.size())) << " s/frame\n";
        } else if (*base) {
            const auto stream = read_stream(base_stream);
            const auto tracks = read_tracks(base_tracks);
            const auto run = run_baseline(stream.frames, tracks, {base_threshold, 0.0, 0.0}, base_reps);
            write_results(base_out, run.results);
            std::cout << "baseline " << run.results.size() << " frames, "
                      << format_number(run.timing.seconds_per_frame) << " s/frame\n";
        } else if (*scr) {
            const auto results = read_results(scr_results);
            const auto truth = read_stream(scr_truth);
            const auto report = score(results, truth.frames);
            write_text(scr_out, accuracy_csv(report));
            if (!scr_json.empty()) write_text(scr_json, accuracy_json(report));
            std::cout << "average accuracy " << format_number(report.average) << '\n';
        } else if (*swp) {
            const auto stream = read_stream(swp_stream);
            const auto tracks = read_tracks(swp_tracks);
            SweepOptions o;
            o.k_values = swp_k.empty() ? default_k_values() : parse_k_list(swp_k);
            o.seed = swp_seed;
            o.budget = swp_budget == "global" ? KBudget::GlobalSplit : KBudget::PerParticipant;
            o.cost = parse_cost_model(swp_cost);
            o.repetitions = swp_reps;
            o.workers = swp_workers;
            const auto points = sweep(stream.frames, tracks, o, swp_flags.make(stream.header));
            write_text(swp_out, sweep_csv(points, o.cost));
            write_text(swp_pareto, sweep_csv(pareto_front(points), o.cost));
            std::cout << "sweep: " << points.size() << " points\n";
        } else if (*bench) {
            const auto stream = read_stream(bench_stream);
            const auto tracks = read_tracks(bench_tracks);
            const auto cfg = bench_flags.make(stream.header);
            KMeansGalleryOptions o;
            o.k = bench_k;
            o.seed = bench_seed;
            const auto gallery = build_gallery_kmeans(tracks, o);
            const auto ours = run_tracker_timed(stream.frames, gallery, cfg, bench_reps);
            const auto baseline = run_baseline(stream.frames, tracks, cfg.recognizer, bench_reps);
            const double duration = static_cast<double>(stream.frames.size()) / stream.header.fps;
            const auto table = timing_csv(duration, max_faces(stream.frames), baseline.timing, ours.timing);
            write_text(bench_timing, table);
            std::cout << table;
            if (!bench_accuracy.empty()) {
                write_text(bench_accuracy,
                           comparison_csv(score(ours.results, stream.frames), score(baseline.results, stream.frames)));
            }
        }
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitData;
    }
    return 0;
}
