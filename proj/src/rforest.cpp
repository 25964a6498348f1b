#include "sliceprop/rforest.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <numeric>

#include "sliceprop/errors.hpp"
#include "sliceprop/rng.hpp"

namespace sliceprop {

namespace {

double gini(std::uint32_t c0, std::uint32_t c1) {
    const double n = static_cast<double>(c0) + c1;
    const double p0 = c0 / n, p1 = c1 / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

struct SplitChoice {
    bool found = false;
    int feature = 0;
    double threshold = 0.0;
    double decrease = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const FeatureMatrix& data, const RFParams& params, Rng& rng)
        : data_(data), params_(params), rng_(rng) {}

    RFTree build(std::vector<std::uint32_t> rows) {
        RFTree tree;
        grow(tree, std::move(rows));
        return tree;
    }

private:
    int grow(RFTree& tree, std::vector<std::uint32_t> rows) {
        std::array<std::uint32_t, 2> counts{0, 0};
        for (std::uint32_t i : rows) counts[*data_.rows[i].label]++;

        const int node_index = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();

        const bool pure = counts[0] == 0 || counts[1] == 0;
        const bool too_small =
            rows.size() < 2 * static_cast<std::size_t>(params_.min_samples_leaf);
        SplitChoice split;
        if (!pure && !too_small) split = best_split(rows, counts);

        if (!split.found) {
            tree.nodes[node_index].class_counts = counts;
            return node_index;
        }
        assert(split.decrease > 0.0);

        std::vector<std::uint32_t> left, right;
        for (std::uint32_t i : rows) {
            if (data_.rows[i].features[split.feature] <= split.threshold)
                left.push_back(i);
            else
                right.push_back(i);
        }
        rows.clear();
        rows.shrink_to_fit();

        const int l = grow(tree, std::move(left));
        const int r = grow(tree, std::move(right));
        RFNode& node = tree.nodes[node_index];
        node.feature = split.feature;
        node.threshold = split.threshold;
        node.left = l;
        node.right = r;
        return node_index;
    }

    SplitChoice best_split(const std::vector<std::uint32_t>& rows,
                           const std::array<std::uint32_t, 2>& counts) {
        // Per-node uniform mtry-subset, examined in ascending feature order
        // so equal-gain ties resolve to the lowest feature index.
        std::array<int, FeatureMatrix::kDim> feats{0, 1, 2};
        for (int i = 0; i < params_.mtry; ++i) {
            const std::size_t j = i + rng_.uniform_index(FeatureMatrix::kDim - i);
            std::swap(feats[i], feats[j]);
        }
        std::sort(feats.begin(), feats.begin() + params_.mtry);

        const double node_impurity = gini(counts[0], counts[1]);
        const double n = static_cast<double>(rows.size());
        const std::uint32_t min_leaf =
            static_cast<std::uint32_t>(params_.min_samples_leaf);

        SplitChoice best;
        std::vector<std::pair<double, std::uint8_t>> vals(rows.size());
        for (int fi = 0; fi < params_.mtry; ++fi) {
            const int f = feats[fi];
            for (std::size_t k = 0; k < rows.size(); ++k)
                vals[k] = {data_.rows[rows[k]].features[f], *data_.rows[rows[k]].label};
            std::sort(vals.begin(), vals.end());

            std::uint32_t l0 = 0, l1 = 0;
            for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
                l0 += vals[k].second == 0;
                l1 += vals[k].second == 1;
                if (vals[k].first == vals[k + 1].first) continue;
                const std::uint32_t nl = l0 + l1;
                const std::uint32_t nr = static_cast<std::uint32_t>(rows.size()) - nl;
                if (nl < min_leaf || nr < min_leaf) continue;
                const double thr = (vals[k].first + vals[k + 1].first) / 2.0;
                // Guard against the midpoint rounding up onto the next
                // value, which would shift the partition under the <= rule.
                if (!(thr < vals[k + 1].first)) continue;
                const double weighted =
                    (nl * gini(l0, l1) + nr * gini(counts[0] - l0, counts[1] - l1)) / n;
                const double decrease = node_impurity - weighted;
                if (decrease > best.decrease && decrease > 0.0) {
                    best.found = true;
                    best.feature = f;
                    best.threshold = thr;
                    best.decrease = decrease;
                }
            }
        }
        return best;
    }

    const FeatureMatrix& data_;
    const RFParams& params_;
    Rng& rng_;
};

}  // namespace

int RFTree::leaf_for(const PixelSample& row) const {
    int i = 0;
    while (!nodes[i].is_leaf())
        i = row.features[nodes[i].feature] <= nodes[i].threshold ? nodes[i].left
                                                                 : nodes[i].right;
    return i;
}

double RFTree::predict_one(const PixelSample& row) const {
    const RFNode& leaf = nodes[leaf_for(row)];
    return static_cast<double>(leaf.class_counts[1]) /
           (leaf.class_counts[0] + leaf.class_counts[1]);
}

RandomForestModel rf_fit(const FeatureMatrix& data, const RFParams& params) {
    if (data.rows.empty()) throw InvalidInput("rf_fit: empty training data");
    if (data.rows.size() < 2) throw InvalidInput("rf_fit: need at least 2 rows");
    if (!data.fully_labeled()) throw InvalidInput("rf_fit: unlabeled rows");
    if (params.n_trees < 1) throw InvalidInput("rf_fit: n_trees must be >= 1");
    if (params.mtry < 1 || params.mtry > FeatureMatrix::kDim)
        throw InvalidInput("rf_fit: mtry out of range");
    if (params.min_samples_leaf < 1)
        throw InvalidInput("rf_fit: min_samples_leaf must be >= 1");

    RandomForestModel model;
    model.params = params;
    model.trees.reserve(params.n_trees);
    const std::size_t n = data.rows.size();
    for (int t = 0; t < params.n_trees; ++t) {
        Rng rng(mix64(params.seed, static_cast<std::uint64_t>(t)));
        std::vector<std::uint32_t> rows(n);
        if (params.bootstrap) {
            for (std::size_t i = 0; i < n; ++i)
                rows[i] = static_cast<std::uint32_t>(rng.uniform_index(n));
        } else {
            std::iota(rows.begin(), rows.end(), 0u);
        }
        model.trees.push_back(TreeBuilder(data, params, rng).build(std::move(rows)));
    }
    return model;
}

std::vector<std::array<double, 2>> rf_predict_class_proba(
    const RandomForestModel& model, const FeatureMatrix& features) {
    std::vector<std::array<double, 2>> out(features.size(), {0.0, 0.0});
    for (const RFTree& tree : model.trees) {
        for (std::size_t i = 0; i < features.size(); ++i) {
            const RFNode& leaf = tree.nodes[tree.leaf_for(features.rows[i])];
            const double total = leaf.class_counts[0] + leaf.class_counts[1];
            out[i][0] += leaf.class_counts[0] / total;
            out[i][1] += leaf.class_counts[1] / total;
        }
    }
    const double n_trees = static_cast<double>(model.trees.size());
    for (auto& p : out) {
        p[0] /= n_trees;
        p[1] /= n_trees;
    }
    return out;
}

std::vector<double> rf_predict_proba(const RandomForestModel& model,
                                     const FeatureMatrix& features) {
    std::vector<double> out(features.size(), 0.0);
    for (const RFTree& tree : model.trees)
        for (std::size_t i = 0; i < features.size(); ++i)
            out[i] += tree.predict_one(features.rows[i]);
    const double n_trees = static_cast<double>(model.trees.size());
    for (double& p : out) p = std::clamp(p / n_trees, 0.0, 1.0);
    return out;
}

}  // namespace sliceprop
