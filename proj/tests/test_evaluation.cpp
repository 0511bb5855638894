#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "liketrack/evaluation.hpp"

namespace liketrack {
namespace {

std::vector<BoundingBox> line_path(int n, double dx) {
    std::vector<BoundingBox> out;
    for (int i = 0; i < n; ++i) {
        out.push_back({50.0 + dx * i, 40.0, 20.0, 20.0});
    }
    return out;
}

TEST(Iou, HalfShiftedSquare) {
    // Two 10x10 squares offset by 5: intersection 50, union 150.
    EXPECT_NEAR(iou({5, 5, 10, 10}, {10, 5, 10, 10}), 1.0 / 3.0, 1e-12);
    EXPECT_DOUBLE_EQ(iou({5, 5, 10, 10}, {5, 5, 10, 10}), 1.0);
    EXPECT_DOUBLE_EQ(iou({5, 5, 10, 10}, {50, 50, 10, 10}), 0.0);
    EXPECT_DOUBLE_EQ(iou({5, 5, 10, 10}, {15, 5, 10, 10}), 0.0);  // touching edges
    // Containment: 4x4 inside 8x8.
    EXPECT_NEAR(iou({10, 10, 8, 8}, {10, 10, 4, 4}), 16.0 / 64.0, 1e-12);
    EXPECT_DOUBLE_EQ(iou({1, 2, 3, 4}, {2, 1, 5, 3}), iou({2, 1, 5, 3}, {1, 2, 3, 4}));
}

TEST(CenterError, Euclidean) {
    EXPECT_DOUBLE_EQ(center_error({0, 0, 5, 5}, {3, 4, 9, 9}), 5.0);
    EXPECT_DOUBLE_EQ(center_error({7, 7, 5, 5}, {7, 7, 1, 1}), 0.0);
}

TEST(Ope, PerfectTracker) {
    const auto gt = line_path(30, 2.0);
    const auto r = compute_ope(gt, gt);
    EXPECT_EQ(r.frames, 29);
    EXPECT_DOUBLE_EQ(r.precision_at_20, 1.0);
    EXPECT_DOUBLE_EQ(r.auc, 1.0);
    EXPECT_DOUBLE_EQ(r.mean_center_error, 0.0);
    EXPECT_DOUBLE_EQ(r.mean_iou, 1.0);
}

TEST(Ope, FrozenEstimateOnMovingTarget) {
    const auto gt = line_path(30, 3.0);
    const std::vector<BoundingBox> stuck(30, gt.front());
    const auto r = compute_ope(stuck, gt);
    EXPECT_LT(r.precision_at_20, 1.0);
    EXPECT_LT(r.auc, 0.5);
    EXPECT_GT(r.mean_center_error, 20.0);
}

TEST(Ope, CountsAgainstThresholds) {
    // Center errors 0, 10 and 30 px over three scored frames.
    const std::vector<BoundingBox> gt = {{50, 50, 20, 20}, {50, 50, 20, 20}, {50, 50, 20, 20}};
    const std::vector<BoundingBox> est = {{50, 50, 20, 20}, {60, 50, 20, 20}, {50, 80, 20, 20}};
    const auto r = compute_ope(est, gt, {.skip_first_frame = false});
    EXPECT_EQ(r.frames, 3);
    EXPECT_NEAR(r.precision_at_20, 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.precision_curve[0], 1.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.precision_curve[10], 2.0 / 3.0, 1e-12);  // inclusive threshold
    EXPECT_NEAR(r.precision_curve[29], 2.0 / 3.0, 1e-12);
    EXPECT_NEAR(r.precision_curve[30], 1.0, 1e-12);
    EXPECT_NEAR(r.mean_center_error, 40.0 / 3.0, 1e-12);
    // Overlaps 1, 1/3 and 0: success above 1/3 counts one frame.
    EXPECT_NEAR(r.success_curve[0], 1.0, 1e-12);
    EXPECT_NEAR(r.success_curve[6], 2.0 / 3.0, 1e-12);   // 0.30
    EXPECT_NEAR(r.success_curve[7], 1.0 / 3.0, 1e-12);   // 0.35
    EXPECT_NEAR(r.success_curve[20], 1.0 / 3.0, 1e-12);  // exact overlap counts at 1.0

    // With the default, the first frame is not scored.
    const auto skipped = compute_ope(est, gt);
    EXPECT_EQ(skipped.frames, 2);
    EXPECT_NEAR(skipped.precision_at_20, 0.5, 1e-12);
}

TEST(Ope, CurvesStepByFrameFractionAndAreMonotone) {
    const auto gt = line_path(41, 1.0);
    std::vector<BoundingBox> est = gt;
    for (std::size_t i = 0; i < est.size(); ++i) {
        est[i].cx += 1.3 * static_cast<double>(i);
        est[i].cy -= 0.4 * static_cast<double>(i % 7);
    }
    const auto r = compute_ope(est, gt);
    const double k = r.frames;
    ASSERT_EQ(r.precision_curve.size(), 51U);
    ASSERT_EQ(r.success_curve.size(), 21U);
    auto on_grid = [k](double v) { return std::abs(v * k - std::round(v * k)) < 1e-9; };
    for (std::size_t i = 0; i < r.precision_curve.size(); ++i) {
        EXPECT_TRUE(on_grid(r.precision_curve[i]));
        if (i > 0) {
            EXPECT_GE(r.precision_curve[i], r.precision_curve[i - 1]);
        }
    }
    for (std::size_t i = 0; i < r.success_curve.size(); ++i) {
        EXPECT_TRUE(on_grid(r.success_curve[i]));
        if (i > 0) {
            EXPECT_LE(r.success_curve[i], r.success_curve[i - 1]);
        }
    }
    EXPECT_DOUBLE_EQ(r.precision_thresholds[20], 20.0);
    EXPECT_NEAR(r.success_thresholds[20], 1.0, 1e-12);
    double mean = 0.0;
    for (double s : r.success_curve) {
        mean += s / 21.0;
    }
    EXPECT_NEAR(r.auc, mean, 1e-12);
}

TEST(Ope, RejectsBadInput) {
    const auto gt = line_path(5, 1.0);
    EXPECT_THROW(compute_ope(line_path(4, 1.0), gt), std::invalid_argument);
    EXPECT_THROW(compute_ope(line_path(1, 1.0), line_path(1, 1.0)), std::invalid_argument);
}

TEST(Ope, CurvesCsv) {
    const auto gt = line_path(5, 1.0);
    const std::string csv = format_curves_csv(compute_ope(gt, gt));
    std::istringstream in(csv);
    std::string line;
    int n = 0;
    std::getline(in, line);
    EXPECT_EQ(line, "curve,threshold,value");
    while (std::getline(in, line)) {
        ++n;
    }
    EXPECT_EQ(n, 51 + 21);
    EXPECT_NE(csv.find("precision,20.0000,1.0000"), std::string::npos);
}

SynthSpec tiny_spec(const std::string& name, double dx) {
    SynthSpec s;
    s.name = name;
    s.frames = 8;
    s.canvas_width = 160;
    s.canvas_height = 120;
    s.target_width = 24;
    s.target_height = 24;
    s.waypoints = {{0, 60, 60}, {7, 60 + dx, 60}};
    return s;
}

TEST(Comparison, TrackerAgainstItselfHasNoDifference) {
    TrackerConfig cfg;
    cfg.pf.particles = 30;
    cfg.features.feature_size = 32;
    const std::vector<Sequence> seqs = {generate_synthetic(tiny_spec("a", 14), 1),
                                        generate_synthetic(tiny_spec("b", -10), 1)};
    const std::vector<std::uint64_t> seeds = {1, 2};
    const auto report = compare_trackers(cfg, "x", cfg, "y", seqs, seeds);
    ASSERT_EQ(report.rows.size(), seqs.size() * 2);
    ASSERT_EQ(report.differences.size(), seqs.size());
    for (const auto& d : report.differences) {
        EXPECT_EQ(d.precision_at_20, 0.0);
        EXPECT_EQ(d.auc, 0.0);
    }
    EXPECT_EQ(report.rows[0].tracker, "x");
    EXPECT_EQ(report.rows[1].tracker, "y");
    EXPECT_EQ(report.rows[2].sequence, "b");
    ASSERT_EQ(report.attributes.size(), 1U);
    EXPECT_EQ(report.attributes[0].attribute, "easy");
    EXPECT_EQ(report.attributes[0].sequences, 2);
    EXPECT_EQ(report.attributes[0].diff_auc, 0.0);

    const std::string csv = format_report_csv(report);
    EXPECT_EQ(csv.rfind("sequence,attribute,tracker,precision_at_20,auc,mean_center_error\n", 0), 0U);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
    EXPECT_NE(format_report_table(report).find("per attribute"), std::string::npos);

    EXPECT_THROW(compare_trackers(cfg, "x", cfg, "y", seqs, {}), std::invalid_argument);
}

TEST(Comparison, ProposalsLabelBothTrackers) {
    TrackerConfig cfg;
    cfg.pf.particles = 30;
    cfg.features.feature_size = 32;
    const std::vector<Sequence> seqs = {generate_synthetic(tiny_spec("a", 10), 1)};
    const std::vector<std::uint64_t> seeds = {3};
    const auto report = compare_proposals(cfg, seqs, seeds);
    EXPECT_EQ(report.first_name, "likelihood");
    EXPECT_EQ(report.second_name, "transition");
    ASSERT_EQ(report.rows.size(), 2U);
    EXPECT_NEAR(report.differences[0].auc, report.rows[0].auc - report.rows[1].auc, 1e-12);
}

TEST(RunTracker, RecordsEveryFrame) {
    TrackerConfig cfg;
    cfg.pf.particles = 30;
    cfg.features.feature_size = 32;
    const Sequence seq = generate_synthetic(tiny_spec("a", 10), 1);
    int calls = 0;
    const TrackRun run = run_tracker(cfg, seq, [&](int frame, const FrameOutcome&) { EXPECT_EQ(frame, calls++); });
    EXPECT_EQ(calls, 8);
    ASSERT_EQ(run.frames.size(), 8U);
    EXPECT_DOUBLE_EQ(run.frames[0].box.cx, (*seq.ground_truth)[0].cx);
    const auto rows = run.rows();
    EXPECT_EQ(rows.front().frame, 1);
    EXPECT_EQ(rows.back().frame, 8);
    for (std::size_t f = 1; f < run.frames.size(); ++f) {
        EXPECT_NEAR(run.frames[f].weight_sum, 1.0, 1e-9);
    }

    Sequence no_gt = seq;
    no_gt.ground_truth.reset();
    EXPECT_THROW(run_ope(cfg, no_gt), DataError);
}

}  // namespace
}  // namespace liketrack
