#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "sliceprop/core.hpp"

namespace sliceprop {

struct RFParams {
    int n_trees = 50;
    int min_samples_leaf = 2;
    int mtry = 1;  // max(1, floor(sqrt(d))) with d = 3
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

/// One node of a CART tree. feature < 0 marks a leaf; leaves carry the
/// class-count pair of the training rows they hold.
struct RFNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::array<std::uint32_t, 2> class_counts{0, 0};

    bool is_leaf() const { return feature < 0; }
};

struct RFTree {
    std::vector<RFNode> nodes;  // nodes[0] is the root

    /// Index of the leaf a sample falls into.
    int leaf_for(const PixelSample& row) const;
    /// Class-1 frequency of that leaf.
    double predict_one(const PixelSample& row) const;
};

struct RandomForestModel {
    RFParams params;
    std::vector<RFTree> trees;
};

/// Grows `n_trees` bagged CART trees with Gini splits. Thresholds are
/// midpoints between consecutive sorted unique feature values; ties break
/// to the lowest feature index, then the lowest threshold. Deterministic
/// given params.seed (tree t draws from a stream derived from (seed, t)).
RandomForestModel rf_fit(const FeatureMatrix& data, const RFParams& params);

/// Mean over trees of the leaf class-1 frequency, one value per row.
std::vector<double> rf_predict_proba(const RandomForestModel& model,
                                     const FeatureMatrix& features);

/// Both class probabilities per row ({P(Bg), P(LV)}).
std::vector<std::array<double, 2>> rf_predict_class_proba(
    const RandomForestModel& model, const FeatureMatrix& features);

}  // namespace sliceprop
