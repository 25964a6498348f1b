#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "sliceprop/core.hpp"
#include "sliceprop/rng.hpp"

namespace sliceprop {

struct MFParams {
    int n_trees = 50;
    double lifetime = std::numeric_limits<double>::infinity();
    int min_samples_leaf = 2;
    double smoothing_alpha = 1.0;
    std::uint64_t seed = 0;
};

/// A training point retained by the model; paused leaves keep their points
/// so a later extension can resume splitting them.
struct LabeledPoint {
    std::array<double, 3> features{};
    std::uint8_t label = 0;
};

/// Mondrian tree node. split_dim < 0 marks a leaf. box_low/box_high bound
/// the training data that reached the node; split_time is the node's tau
/// (equal to the lifetime for leaves).
struct MondrianNode {
    double split_time = 0.0;
    std::array<double, 3> box_low{};
    std::array<double, 3> box_high{};
    int split_dim = -1;
    double split_loc = 0.0;
    int left = -1;
    int right = -1;
    std::array<std::uint32_t, 2> class_counts{0, 0};
    std::vector<std::uint32_t> leaf_rows;  // indices into the model's points

    bool is_leaf() const { return split_dim < 0; }
};

struct MondrianTree {
    std::vector<MondrianNode> nodes;
    int root = 0;
    Rng rng;  // stream consumed by extension draws
};

struct MondrianForestModel {
    MFParams params;
    std::vector<MondrianTree> trees;
    std::vector<LabeledPoint> points;
};

/// Grows n_trees independent Mondrian trees over the full data. At each
/// node the split time advance is Exponential in the box perimeter sum,
/// the split dimension is sampled proportionally to box side lengths and
/// the location uniformly inside that side. Nodes pause into leaves when
/// pure or holding fewer than 2*min_samples_leaf rows. Deterministic
/// given params.seed.
MondrianForestModel mf_fit(const FeatureMatrix& data, const MFParams& params);

/// Standard Mondrian extension, one point at a time: a new split may be
/// introduced above any node whose box the point escapes, otherwise boxes
/// grow to absorb it. Paused leaves re-evaluate the pause after absorbing.
void mf_extend(MondrianForestModel& model, const FeatureMatrix& data);

/// Predictive posterior P(LV) per row (mean over trees).
std::vector<double> mf_predict_proba(const MondrianForestModel& model,
                                     const FeatureMatrix& features);

/// Both class probabilities per row ({P(Bg), P(LV)}).
std::vector<std::array<double, 2>> mf_predict_class_proba(
    const MondrianForestModel& model, const FeatureMatrix& features);

/// Checks every structural invariant (tau strictly increasing, split
/// locations strictly inside boxes, count consistency, points inside all
/// ancestor boxes and on the correct split sides). Returns a description
/// of the first violation, or nullopt when the model is sound.
std::optional<std::string> structural_audit(const MondrianForestModel& model);

}  // namespace sliceprop
