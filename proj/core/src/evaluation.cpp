#include "liketrack/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace liketrack {

double center_error(const BoundingBox& a, const BoundingBox& b) { return std::hypot(a.cx - b.cx, a.cy - b.cy); }

double iou(const BoundingBox& a, const BoundingBox& b) {
    const double ix = std::min(a.left() + a.w, b.left() + b.w) - std::max(a.left(), b.left());
    const double iy = std::min(a.top() + a.h, b.top() + b.h) - std::max(a.top(), b.top());
    if (ix <= 0.0 || iy <= 0.0) {
        return 0.0;
    }
    const double inter = ix * iy;
    return inter / (a.w * a.h + b.w * b.h - inter);
}

OPEResult compute_ope(std::span<const BoundingBox> estimates, std::span<const BoundingBox> ground_truth,
                      const OPEOptions& opts) {
    if (estimates.size() != ground_truth.size()) {
        throw std::invalid_argument("estimate and ground-truth counts differ");
    }
    const std::size_t first = opts.skip_first_frame ? 1 : 0;
    if (estimates.size() <= first) {
        throw std::invalid_argument("no frames to evaluate");
    }
    std::vector<double> errors;
    std::vector<double> overlaps;
    for (std::size_t i = first; i < estimates.size(); ++i) {
        errors.push_back(center_error(estimates[i], ground_truth[i]));
        overlaps.push_back(iou(estimates[i], ground_truth[i]));
    }
    const auto n = static_cast<double>(errors.size());

    OPEResult r;
    r.frames = static_cast<int>(errors.size());
    for (int t = 0; t <= 50; ++t) {
        const double th = t;
        r.precision_thresholds.push_back(th);
        r.precision_curve.push_back(
            static_cast<double>(std::count_if(errors.begin(), errors.end(), [th](double e) { return e <= th; })) / n);
    }
    for (int t = 0; t <= 20; ++t) {
        const double th = t * 0.05;
        r.success_thresholds.push_back(th);
        // Small slack so that threshold 1.0 counts exact overlaps despite rounding.
        r.success_curve.push_back(
            static_cast<double>(
                std::count_if(overlaps.begin(), overlaps.end(), [th](double o) { return o >= th - 1e-12; })) /
            n);
    }
    r.precision_at_20 = r.precision_curve[20];
    for (double s : r.success_curve) {
        r.auc += s;
    }
    r.auc /= static_cast<double>(r.success_curve.size());
    for (std::size_t i = 0; i < errors.size(); ++i) {
        r.mean_center_error += errors[i] / n;
        r.mean_iou += overlaps[i] / n;
    }
    return r;
}

std::vector<BoundingBox> TrackRun::boxes() const {
    std::vector<BoundingBox> out;
    out.reserve(frames.size());
    for (const auto& f : frames) {
        out.push_back(f.box);
    }
    return out;
}

std::vector<ResultRow> TrackRun::rows() const {
    std::vector<ResultRow> out;
    out.reserve(frames.size());
    for (std::size_t i = 0; i < frames.size(); ++i) {
        out.push_back({static_cast<int>(i) + 1, frames[i].box, frames[i].quality_flag});
    }
    return out;
}

namespace {

FrameRecord record(const FrameOutcome& out) {
    FrameRecord rec;
    rec.box = out.posterior.estimate.box();
    rec.quality_flag = out.quality_flag;
    rec.used_fallback = out.used_fallback;
    rec.k = static_cast<int>(out.mixture.k());
    double total = 0.0;
    for (std::size_t j = 0; j < out.mixture.k(); ++j) {
        const auto& c = out.mixture.components[j];
        const double w = out.mixture.weight(j);
        rec.sigma += w * 0.5 * (std::sqrt(c.variance.x) + std::sqrt(c.variance.y));
        total += w;
    }
    if (total > 0.0) {
        rec.sigma /= total;
    }
    for (const auto& p : out.posterior.particles) {
        rec.weight_sum += p.second;
    }
    return rec;
}

}  // namespace

TrackRun run_tracker(const TrackerConfig& cfg, const Sequence& seq, const FrameObserver& observer) {
    if (!seq.ground_truth || seq.ground_truth->empty()) {
        throw DataError("sequence '" + seq.name + "' has no ground truth to initialize from");
    }
    if (seq.frames.empty()) {
        throw DataError("sequence '" + seq.name + "' has no frames");
    }
    Tracker tracker(cfg);
    TrackRun run;
    run.frames.reserve(seq.frames.size());
    const FrameOutcome init = tracker.initialize(seq.frames[0], seq.ground_truth->front());
    if (observer) {
        observer(0, init);
    }
    run.frames.push_back(record(init));
    for (std::size_t i = 1; i < seq.frames.size(); ++i) {
        FrameOutcome out;
        try {
            out = tracker.step(seq.frames[i]);
        } catch (const std::exception& e) {
            throw DataError("frame " + std::to_string(i + 1) + " of '" + seq.name + "': " + e.what());
        }
        if (observer) {
            observer(static_cast<int>(i), out);
        }
        run.frames.push_back(record(out));
    }
    return run;
}

OPEResult run_ope(const TrackerConfig& cfg, const Sequence& seq, const OPEOptions& opts, TrackRun* run) {
    if (!seq.ground_truth) {
        throw DataError("sequence '" + seq.name + "' has no ground truth");
    }
    TrackRun local = run_tracker(cfg, seq);
    const auto boxes = local.boxes();
    OPEResult result = compute_ope(boxes, *seq.ground_truth, opts);
    if (run != nullptr) {
        *run = std::move(local);
    }
    return result;
}

ComparisonReport compare_trackers(const TrackerConfig& first, const std::string& first_name,
                                  const TrackerConfig& second, const std::string& second_name,
                                  std::span<const Sequence> sequences, std::span<const std::uint64_t> seeds,
                                  const OPEOptions& opts) {
    if (seeds.empty()) {
        throw std::invalid_argument("at least one seed is required");
    }
    ComparisonReport report;
    report.first_name = first_name;
    report.second_name = second_name;
    const auto n_seeds = static_cast<double>(seeds.size());
    for (const auto& seq : sequences) {
        ComparisonRow a{seq.name, seq.attribute, first_name};
        ComparisonRow b{seq.name, seq.attribute, second_name};
        for (const auto seed : seeds) {
            TrackerConfig ca = first;
            TrackerConfig cb = second;
            ca.pf.seed = seed;
            cb.pf.seed = seed;
            const OPEResult ra = run_ope(ca, seq, opts);
            const OPEResult rb = run_ope(cb, seq, opts);
            a.precision_at_20 += ra.precision_at_20 / n_seeds;
            a.auc += ra.auc / n_seeds;
            a.mean_center_error += ra.mean_center_error / n_seeds;
            b.precision_at_20 += rb.precision_at_20 / n_seeds;
            b.auc += rb.auc / n_seeds;
            b.mean_center_error += rb.mean_center_error / n_seeds;
        }
        report.differences.push_back(
            {seq.name, seq.attribute, a.precision_at_20 - b.precision_at_20, a.auc - b.auc});
        report.rows.push_back(std::move(a));
        report.rows.push_back(std::move(b));
    }

    std::map<std::string, AttributeSummary> by_attr;
    for (std::size_t i = 0; i < report.differences.size(); ++i) {
        const auto& a = report.rows[2 * i];
        const auto& b = report.rows[2 * i + 1];
        auto& s = by_attr[a.attribute];
        s.attribute = a.attribute;
        ++s.sequences;
        s.first_precision += a.precision_at_20;
        s.first_auc += a.auc;
        s.second_precision += b.precision_at_20;
        s.second_auc += b.auc;
    }
    for (auto& [name, s] : by_attr) {
        const auto n = static_cast<double>(s.sequences);
        s.first_precision /= n;
        s.first_auc /= n;
        s.second_precision /= n;
        s.second_auc /= n;
        s.diff_precision = s.first_precision - s.second_precision;
        s.diff_auc = s.first_auc - s.second_auc;
        report.attributes.push_back(s);
    }
    return report;
}

ComparisonReport compare_proposals(const TrackerConfig& cfg, std::span<const Sequence> sequences,
                                   std::span<const std::uint64_t> seeds, const OPEOptions& opts) {
    TrackerConfig likelihood = cfg;
    likelihood.pf.proposal = Proposal::Likelihood;
    TrackerConfig transition = cfg;
    transition.pf.proposal = Proposal::Transition;
    return compare_trackers(likelihood, "likelihood", transition, "transition", sequences, seeds, opts);
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string signed_fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%+.4f", v);
    return buf;
}

}  // namespace

std::string format_report_csv(const ComparisonReport& report) {
    std::string out = "sequence,attribute,tracker,precision_at_20,auc,mean_center_error\n";
    for (const auto& r : report.rows) {
        out += r.sequence + ',' + r.attribute + ',' + r.tracker + ',' + fmt(r.precision_at_20) + ',' + fmt(r.auc) +
               ',' + fmt(r.mean_center_error) + '\n';
    }
    return out;
}

std::string format_report_table(const ComparisonReport& report) {
    std::string out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-24s %-10s %10s %10s %10s %10s %10s\n", "sequence", "attribute", "P@20 A",
                  "P@20 B", "AUC A", "AUC B", "dAUC");
    out += "A = " + report.first_name + ", B = " + report.second_name + "\n";
    out += buf;
    for (std::size_t i = 0; i < report.differences.size(); ++i) {
        const auto& a = report.rows[2 * i];
        const auto& b = report.rows[2 * i + 1];
        std::snprintf(buf, sizeof(buf), "%-24s %-10s %10.4f %10.4f %10.4f %10.4f %+10.4f\n", a.sequence.c_str(),
                      a.attribute.c_str(), a.precision_at_20, b.precision_at_20, a.auc, b.auc,
                      report.differences[i].auc);
        out += buf;
    }
    out += "\nper attribute\n";
    for (const auto& s : report.attributes) {
        std::snprintf(buf, sizeof(buf), "%-10s n=%-3d P@20 %.4f vs %.4f (%s)  AUC %.4f vs %.4f (%s)\n",
                      s.attribute.c_str(), s.sequences, s.first_precision, s.second_precision,
                      signed_fmt(s.diff_precision).c_str(), s.first_auc, s.second_auc, signed_fmt(s.diff_auc).c_str());
        out += buf;
    }
    return out;
}

std::string format_curves_csv(const OPEResult& result) {
    std::string out = "curve,threshold,value\n";
    for (std::size_t i = 0; i < result.precision_curve.size(); ++i) {
        out += "precision," + fmt(result.precision_thresholds[i]) + ',' + fmt(result.precision_curve[i]) + '\n';
    }
    for (std::size_t i = 0; i < result.success_curve.size(); ++i) {
        out += "success," + fmt(result.success_thresholds[i]) + ',' + fmt(result.success_curve[i]) + '\n';
    }
    return out;
}

}  // namespace liketrack
