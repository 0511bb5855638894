#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "liketrack/grid.hpp"
#include "liketrack/pfilter.hpp"
#include "liketrack/sequences.hpp"

namespace liketrack {

double center_error(const BoundingBox& a, const BoundingBox& b);
// Intersection over union; disjoint boxes give 0.
double iou(const BoundingBox& a, const BoundingBox& b);

struct OPEOptions {
    bool skip_first_frame = true;  // the first box is given, not predicted
};

struct OPEResult {
    std::vector<double> precision_thresholds;  // 0..50 px, step 1
    std::vector<double> precision_curve;       // fraction with center error <= threshold
    std::vector<double> success_thresholds;    // 0..1, step 0.05
    std::vector<double> success_curve;         // fraction with IoU >= threshold
    double precision_at_20 = 0.0;
    double auc = 0.0;  // mean of the success curve
    double mean_center_error = 0.0;
    double mean_iou = 0.0;
    int frames = 0;  // frames counted
};

// Throws std::invalid_argument when the lists differ in length or leave no frame to score.
OPEResult compute_ope(std::span<const BoundingBox> estimates, std::span<const BoundingBox> ground_truth,
                      const OPEOptions& opts = {});

// Per-frame summary of one tracking run.
struct FrameRecord {
    BoundingBox box;
    bool quality_flag = false;
    bool used_fallback = false;
    int k = 0;                  // mixture components of the initial map, 0 if none
    double sigma = 0.0;         // mass-weighted mean fitted std of the mixture, pixels
    double weight_sum = 0.0;    // sum of normalized weights
};

struct TrackRun {
    std::vector<FrameRecord> frames;

    std::vector<BoundingBox> boxes() const;
    std::vector<ResultRow> rows() const;
};

// Called after every frame (index 0 is initialization) with the full outcome.
using FrameObserver = std::function<void(int frame, const FrameOutcome& outcome)>;

// Initializes from frame-1 ground truth and tracks forward once. Frame
// failures are rethrown as DataError naming the frame.
TrackRun run_tracker(const TrackerConfig& cfg, const Sequence& seq, const FrameObserver& observer = {});

// Throws DataError when the sequence has no ground truth.
OPEResult run_ope(const TrackerConfig& cfg, const Sequence& seq, const OPEOptions& opts = {},
                  TrackRun* run = nullptr);

struct ComparisonRow {
    std::string sequence;
    std::string attribute;
    std::string tracker;
    double precision_at_20 = 0.0;  // means over seeds
    double auc = 0.0;
    double mean_center_error = 0.0;
};

struct PairedDifference {
    std::string sequence;
    std::string attribute;
    double precision_at_20 = 0.0;  // first minus second tracker
    double auc = 0.0;
};

struct AttributeSummary {
    std::string attribute;
    int sequences = 0;
    double first_precision = 0.0;
    double first_auc = 0.0;
    double second_precision = 0.0;
    double second_auc = 0.0;
    double diff_precision = 0.0;
    double diff_auc = 0.0;
};

struct ComparisonReport {
    std::string first_name;
    std::string second_name;
    std::vector<ComparisonRow> rows;  // sequences x 2 trackers
    std::vector<PairedDifference> differences;
    std::vector<AttributeSummary> attributes;
};

// Runs both configurations on every sequence with the same seeds (the seed
// overrides cfg.pf.seed) and pairs the per-sequence means.
ComparisonReport compare_trackers(const TrackerConfig& first, const std::string& first_name,
                                  const TrackerConfig& second, const std::string& second_name,
                                  std::span<const Sequence> sequences, std::span<const std::uint64_t> seeds,
                                  const OPEOptions& opts = {});

// Likelihood proposal against the transition-proposal baseline at equal N.
ComparisonReport compare_proposals(const TrackerConfig& cfg, std::span<const Sequence> sequences,
                                   std::span<const std::uint64_t> seeds, const OPEOptions& opts = {});

std::string format_report_csv(const ComparisonReport& report);
std::string format_report_table(const ComparisonReport& report);
std::string format_curves_csv(const OPEResult& result);

}  // namespace liketrack
