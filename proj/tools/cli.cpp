#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "liketrack/config.hpp"
#include "liketrack/evaluation.hpp"
#include "liketrack/sequences.hpp"

namespace liketrack {

namespace {

namespace fs = std::filesystem;

constexpr int kUsageError = 1;
constexpr int kDataError = 2;

// A directory is a sequence; a regular file is a synthetic spec.
Sequence load_input(const fs::path& input, std::uint64_t synth_seed) {
    if (fs::is_directory(input)) {
        return load_sequence(input);
    }
    if (fs::is_regular_file(input)) {
        return generate_synthetic(load_synth_spec(input), synth_seed);
    }
    throw DataError("input not found: " + input.string());
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary);
    if (!out || !(out << text)) {
        throw DataError("cannot write " + path.string());
    }
}

std::string summary_line(const OPEResult& r) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "precision_at_20 = %.4f\nauc = %.4f\nmean_center_error = %.3f\nframes = %d\n",
                  r.precision_at_20, r.auc, r.mean_center_error, r.frames);
    return buf;
}

bool is_spec_file(const fs::path& p) { return fs::is_regular_file(p) && p.extension() == ".spec"; }

std::vector<Sequence> load_suite(const fs::path& dir, std::uint64_t synth_seed) {
    if (!fs::is_directory(dir)) {
        throw DataError("not a directory: " + dir.string());
    }
    std::vector<fs::path> entries;
    for (const auto& e : fs::directory_iterator(dir)) {
        if ((e.is_directory() && fs::exists(e.path() / "groundtruth_rect.txt")) || is_spec_file(e.path())) {
            entries.push_back(e.path());
        }
    }
    std::sort(entries.begin(), entries.end());
    if (entries.empty()) {
        throw DataError("no sequences or .spec files in " + dir.string());
    }
    std::vector<Sequence> out;
    for (const auto& p : entries) {
        out.push_back(load_input(p, synth_seed));
    }
    return out;
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::uint64_t v = 0;
        auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
        if (ec != std::errc{} || ptr != item.data() + item.size()) {
            throw CLI::ValidationError("--seeds", "expected comma-separated unsigned integers, got '" + text + "'");
        }
        seeds.push_back(v);
    }
    if (seeds.empty()) {
        throw CLI::ValidationError("--seeds", "at least one seed required");
    }
    return seeds;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Particle-filter visual tracking with likelihood proposals", "liketrack"};
    app.require_subcommand(1);

    std::string input;
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_given = false;
    bool overlays = false;
    std::string results_path;
    std::string curves_path;
    std::string seeds_text;
    std::string report_path;

    auto* track = app.add_subcommand("track", "Track a sequence directory or a synthetic spec");
    track->add_option("input", input, "Sequence directory or synthetic spec file")->required();
    track->add_option("--config", config_path, "Tracker configuration file")->required();
    track->add_option("--out", out_dir, "Output directory for results.csv")->required();
    track->add_option("--seed", seed, "Random seed (overrides pf.seed)")->each([&](const std::string&) {
        seed_given = true;
    });
    track->add_flag("--overlays", overlays, "Write frames with the estimated box drawn");

    auto* eval = app.add_subcommand("eval", "One-pass evaluation against ground truth");
    eval->add_option("input", input, "Sequence directory or synthetic spec file")->required();
    eval->add_option("--config", config_path, "Tracker configuration file")->required();
    eval->add_option("--results", results_path, "Score an existing results.csv instead of tracking");
    eval->add_option("--curves", curves_path, "Write precision and success curves as CSV");
    eval->add_option("--seed", seed, "Random seed (overrides pf.seed)")->each([&](const std::string&) {
        seed_given = true;
    });

    auto* synth = app.add_subcommand("synth", "Render a synthetic sequence");
    synth->add_option("spec", input, "Synthetic spec file")->required();
    synth->add_option("--out", out_dir, "Output sequence directory")->required();
    synth->add_option("--seed", seed, "Noise seed");

    auto* compare = app.add_subcommand("compare", "Likelihood proposal against the transition baseline");
    compare->add_option("suite", input, "Directory of sequence directories and .spec files")->required();
    compare->add_option("--config", config_path, "Tracker configuration file")->required();
    compare->add_option("--seeds", seeds_text, "Comma-separated seeds, e.g. 1,2,3")->required();
    compare->add_option("--report", report_path, "Write the report rows as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n\n" << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
        return kUsageError;
    }

    try {
        if (synth->parsed()) {
            const Sequence seq = generate_synthetic(load_synth_spec(input), seed);
            save_sequence(out_dir, seq);
            out << "wrote " << seq.frames.size() << " frames to " << out_dir << '\n';
            return 0;
        }

        AppConfig cfg = load_config(config_path);
        if (seed_given) {
            cfg.tracker.pf.seed = seed;
        }

        if (track->parsed()) {
            const Sequence seq = load_input(input, 0);
            const TrackRun run = run_tracker(cfg.tracker, seq);
            fs::create_directories(out_dir);
            save_results(fs::path(out_dir) / "results.csv", run.rows());
            if (overlays) {
                save_overlays(fs::path(out_dir) / "overlays", seq, run.boxes());
            }
            out << "tracked " << run.frames.size() << " frames of " << seq.name << '\n';
            if (seq.ground_truth) {
                out << summary_line(compute_ope(run.boxes(), *seq.ground_truth, cfg.ope));
            }
            return 0;
        }

        if (eval->parsed()) {
            const Sequence seq = load_input(input, 0);
            if (!seq.ground_truth) {
                throw DataError("sequence '" + seq.name + "' has no ground truth");
            }
            OPEResult result;
            if (!results_path.empty()) {
                const auto rows = load_results(results_path);
                std::vector<BoundingBox> boxes;
                for (const auto& r : rows) {
                    boxes.push_back(r.box);
                }
                if (boxes.size() != seq.ground_truth->size()) {
                    throw DataError(results_path + ": " + std::to_string(boxes.size()) + " rows for " +
                                    std::to_string(seq.ground_truth->size()) + " frames");
                }
                result = compute_ope(boxes, *seq.ground_truth, cfg.ope);
            } else {
                result = run_ope(cfg.tracker, seq, cfg.ope);
            }
            out << summary_line(result);
            if (!curves_path.empty()) {
                write_text(curves_path, format_curves_csv(result));
            }
            return 0;
        }

        if (compare->parsed()) {
            const auto seeds = parse_seeds(seeds_text);
            const auto suite = load_suite(input, 0);
            const ComparisonReport report = compare_proposals(cfg.tracker, suite, seeds, cfg.ope);
            out << format_report_table(report);
            if (!report_path.empty()) {
                write_text(report_path, format_report_csv(report));
            }
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        err << e.what() << '\n';
        return kUsageError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kUsageError;
}

int cli_main(int argc, const char* const* argv) { return cli_main(argc, argv, std::cout, std::cerr); }

}  // namespace liketrack
