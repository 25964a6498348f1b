#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sliceprop/core.hpp"

namespace sliceprop {

/// 2|a n b| / (|a| + |b|). Both-empty pairs score 1.0 (vacuous agreement);
/// pass `both_empty` to learn when that convention fired.
double dice(const BinaryMask& a, const BinaryMask& b, bool* both_empty = nullptr);

/// Dice values for one inferred slice. Per-model entries are absent when
/// only a combined mask is available (standalone evaluation).
struct SliceDice {
    int slice = 0;  // 1-based slice index
    std::optional<double> dice_mf;
    std::optional<double> dice_rf;
    double dice_combined = 0.0;
};

/// Per-model summary over slices 2..N.
struct ModelSummary {
    std::optional<double> mf;
    std::optional<double> rf;
    double combined = 0.0;
};

struct ReportConfig {
    std::string mode;  // "basic", "post", "full", or "eval"
    int trees = 50;
    int min_leaf = 2;
    std::uint64_t seed = 0;
};

struct SegmentationReport {
    ReportConfig config;
    std::vector<SliceDice> per_slice;           // slices 2..N
    ModelSummary overall_mean;                  // mean of per-slice Dice
    ModelSummary overall_pooled;                // Dice of pixel-pooled masks
    std::vector<std::string> warnings;
    double elapsed_seconds = 0.0;
};

/// Builds a report from aligned mask lists. All vectors run over slices
/// 2..N; `slice_indices` carries the 1-based slice numbers. Per-model
/// vectors may be empty when only combined masks exist.
SegmentationReport make_report(const std::vector<int>& slice_indices,
                               const std::vector<BinaryMask>& combined,
                               const std::vector<BinaryMask>& mf,
                               const std::vector<BinaryMask>& rf,
                               const std::vector<BinaryMask>& ground_truth,
                               const ReportConfig& config);

/// mean +- population standard deviation of one statistic over reports.
struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
    std::string format() const;
};

/// Per-mode, per-model aggregation of patient-level overall_mean values.
struct CohortRow {
    std::string mode;
    std::optional<MeanSd> mf;
    std::optional<MeanSd> rf;
    MeanSd combined;
    int n = 0;
};

std::vector<CohortRow> aggregate(const std::vector<SegmentationReport>& reports);

}  // namespace sliceprop
