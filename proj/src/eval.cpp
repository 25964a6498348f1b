#include "sliceprop/eval.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "sliceprop/errors.hpp"

namespace sliceprop {

double dice(const BinaryMask& a, const BinaryMask& b, bool* both_empty) {
    if (!a.same_shape(b)) throw InvalidInput("dice: dimension mismatch");
    std::size_t inter = 0, ca = 0, cb = 0;
    for (std::size_t i = 0; i < a.bits.size(); ++i) {
        inter += a.bits[i] & b.bits[i];
        ca += a.bits[i];
        cb += b.bits[i];
    }
    if (both_empty) *both_empty = (ca + cb == 0);
    if (ca + cb == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(ca + cb);
}

namespace {

double pooled_dice(const std::vector<BinaryMask>& pred,
                   const std::vector<BinaryMask>& gt) {
    std::size_t inter = 0, cp = 0, cg = 0;
    for (std::size_t k = 0; k < pred.size(); ++k) {
        for (std::size_t i = 0; i < pred[k].bits.size(); ++i) {
            inter += pred[k].bits[i] & gt[k].bits[i];
            cp += pred[k].bits[i];
            cg += gt[k].bits[i];
        }
    }
    if (cp + cg == 0) return 1.0;
    return 2.0 * static_cast<double>(inter) / static_cast<double>(cp + cg);
}

MeanSd mean_sd(const std::vector<double>& xs) {
    MeanSd out;
    out.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.sd = std::sqrt(ss / xs.size());
    return out;
}

}  // namespace

SegmentationReport make_report(const std::vector<int>& slice_indices,
                               const std::vector<BinaryMask>& combined,
                               const std::vector<BinaryMask>& mf,
                               const std::vector<BinaryMask>& rf,
                               const std::vector<BinaryMask>& ground_truth,
                               const ReportConfig& config) {
    const std::size_t n = combined.size();
    if (n == 0) throw InvalidInput("make_report: no slices to evaluate");
    if (slice_indices.size() != n || ground_truth.size() != n)
        throw InvalidInput("make_report: list lengths disagree");
    if (!mf.empty() && mf.size() != n)
        throw InvalidInput("make_report: per-model list lengths disagree");
    if (!rf.empty() && rf.size() != n)
        throw InvalidInput("make_report: per-model list lengths disagree");

    SegmentationReport rep;
    rep.config = config;
    double sum_c = 0.0, sum_m = 0.0, sum_r = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        SliceDice row;
        row.slice = slice_indices[k];
        bool be = false;
        row.dice_combined = dice(combined[k], ground_truth[k], &be);
        if (be)
            rep.warnings.push_back("slice " + std::to_string(row.slice) +
                                   ": both prediction and ground truth empty");
        sum_c += row.dice_combined;
        if (!mf.empty()) {
            row.dice_mf = dice(mf[k], ground_truth[k]);
            sum_m += *row.dice_mf;
        }
        if (!rf.empty()) {
            row.dice_rf = dice(rf[k], ground_truth[k]);
            sum_r += *row.dice_rf;
        }
        rep.per_slice.push_back(row);
    }
    rep.overall_mean.combined = sum_c / n;
    rep.overall_pooled.combined = pooled_dice(combined, ground_truth);
    if (!mf.empty()) {
        rep.overall_mean.mf = sum_m / n;
        rep.overall_pooled.mf = pooled_dice(mf, ground_truth);
    }
    if (!rf.empty()) {
        rep.overall_mean.rf = sum_r / n;
        rep.overall_pooled.rf = pooled_dice(rf, ground_truth);
    }
    return rep;
}

std::string MeanSd::format() const {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3f ± %.3f", mean, sd);
    return buf;
}

std::vector<CohortRow> aggregate(const std::vector<SegmentationReport>& reports) {
    if (reports.empty()) throw InvalidInput("aggregate: no reports");
    // Group patient-level overall means by mode, preserving first-seen order.
    std::vector<std::string> order;
    std::map<std::string, std::vector<const SegmentationReport*>> groups;
    for (const auto& r : reports) {
        if (!groups.count(r.config.mode)) order.push_back(r.config.mode);
        groups[r.config.mode].push_back(&r);
    }
    std::vector<CohortRow> out;
    for (const std::string& mode : order) {
        const auto& members = groups[mode];
        CohortRow row;
        row.mode = mode;
        row.n = static_cast<int>(members.size());
        std::vector<double> c, m, f;
        for (const SegmentationReport* r : members) {
            c.push_back(r->overall_mean.combined);
            if (r->overall_mean.mf) m.push_back(*r->overall_mean.mf);
            if (r->overall_mean.rf) f.push_back(*r->overall_mean.rf);
        }
        row.combined = mean_sd(c);
        if (m.size() == members.size()) row.mf = mean_sd(m);
        if (f.size() == members.size()) row.rf = mean_sd(f);
        out.push_back(row);
    }
    return out;
}

}  // namespace sliceprop
